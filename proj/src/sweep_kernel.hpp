/// @file sweep_kernel.hpp
/// @brief Shared inner kernel of the 6-neighbor SOR update.
///
/// The hard solver and the differentiable soft solver must produce identical
/// arithmetic for the same voxel (the one-hot consistency tests compare them
/// bitwise), so both build their sweep lists and evaluate the update through
/// these helpers. Neighbor accumulation order is fixed: -x, +x, -y, +y, -z, +z.

#pragma once

#include <cstdint>
#include <vector>

#include "lamina/volume.hpp"

namespace lamina::detail {

// Direction bits in canonical order.
enum : std::uint8_t {
    kXm = 1,
    kXp = 2,
    kYm = 4,
    kYp = 8,
    kZm = 16,
    kZp = 32,
};

struct SweepVoxel {
    std::int32_t idx;
    std::uint8_t mask;  // effective-neighbor direction bits
    std::uint8_t k;     // popcount(mask)
};

inline double neighbor_sum(const double* f, const SweepVoxel& v, int nx,
                           std::size_t nxny) {
    double sum = 0.0;
    const std::uint8_t m = v.mask;
    const std::size_t i = static_cast<std::size_t>(v.idx);
    if (m & kXm) sum += f[i - 1];
    if (m & kXp) sum += f[i + 1];
    if (m & kYm) sum += f[i - static_cast<std::size_t>(nx)];
    if (m & kYp) sum += f[i + static_cast<std::size_t>(nx)];
    if (m & kZm) sum += f[i - nxny];
    if (m & kZp) sum += f[i + nxny];
    return sum;
}

inline double sor_update(double old_value, double sum, std::uint8_t k,
                         double omega) {
    if (k == 0) return old_value;
    return (1.0 - omega) * old_value + (omega / static_cast<double>(k)) * sum;
}

/// Direction-presence mask for in-grid neighbors of (x,y,z).
inline std::uint8_t grid_mask(const GridDims& d, int x, int y, int z) {
    std::uint8_t m = 0;
    if (x > 0) m |= kXm;
    if (x + 1 < d.nx) m |= kXp;
    if (y > 0) m |= kYm;
    if (y + 1 < d.ny) m |= kYp;
    if (z > 0) m |= kZm;
    if (z + 1 < d.nz) m |= kZp;
    return m;
}

inline std::uint8_t popcount6(std::uint8_t m) {
    std::uint8_t k = 0;
    for (std::uint8_t b = 1; b <= 32; b <<= 1) k += (m & b) ? 1 : 0;
    return k;
}

/// Per-z-slice sweep lists for one checkerboard color.
/// color_bit: 1 for black (x+y+z odd), 0 for red.
using SliceLists = std::vector<std::vector<SweepVoxel>>;

}  // namespace lamina::detail
