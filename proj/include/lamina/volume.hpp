/// @file volume.hpp
/// @brief Core 3D grid types: dimensions, scalar/label/probability fields,
///        voxel masks and the red-black checkerboard decomposition.
///
/// Storage convention for every volume type: x-fastest linear order, i.e.
/// voxel (x,y,z) lives at index x + nx*(y + ny*z). Multi-channel data is
/// channel-major (channel c is a full contiguous volume). Values are float32
/// in memory so that file round-trips are bit-exact.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lamina/errors.hpp"

namespace lamina {

/// Tissue label codes used throughout. Code 0 doubles as the ignore label.
enum TissueLabel : std::uint8_t {
    kUnlabeled = 0,
    kGm = 1,
    kWm = 2,
    kBg = 3,
    kSrlm = 4,
};

/// Grid extents plus physical voxel spacing in mm.
struct GridDims {
    int nx = 0, ny = 0, nz = 0;
    double sx = 1.0, sy = 1.0, sz = 1.0;

    GridDims() = default;
    GridDims(int nx_, int ny_, int nz_, double sx_ = 1.0, double sy_ = 1.0,
             double sz_ = 1.0);

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(nx) *
                   (static_cast<std::size_t>(y) +
                    static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
    }
    bool inside(int x, int y, int z) const {
        return x >= 0 && x < nx && y >= 0 && y < ny && z >= 0 && z < nz;
    }
    bool same_shape(const GridDims& o) const {
        return nx == o.nx && ny == o.ny && nz == o.nz;
    }
    bool same_spacing(const GridDims& o) const {
        return sx == o.sx && sy == o.sy && sz == o.sz;
    }
};

/// One real value per voxel. Finite after any public operation.
struct ScalarField3D {
    GridDims dims;
    std::vector<float> values;

    ScalarField3D() = default;
    explicit ScalarField3D(const GridDims& d, float fill = 0.0f)
        : dims(d), values(d.voxel_count(), fill) {}

    float& at(int x, int y, int z) { return values[dims.index(x, y, z)]; }
    float at(int x, int y, int z) const { return values[dims.index(x, y, z)]; }

    /// Throws InvalidArgument if any stored value is NaN or infinite.
    void require_finite() const;
};

/// One small-integer class code per voxel (tissue or laminar labels).
struct LabelField3D {
    GridDims dims;
    std::vector<std::uint8_t> labels;

    LabelField3D() = default;
    explicit LabelField3D(const GridDims& d, std::uint8_t fill = 0)
        : dims(d), labels(d.voxel_count(), fill) {}

    std::uint8_t& at(int x, int y, int z) { return labels[dims.index(x, y, z)]; }
    std::uint8_t at(int x, int y, int z) const {
        return labels[dims.index(x, y, z)];
    }
    bool contains(std::uint8_t code) const;
};

/// Raw C-channel float volume, channel-major. Used for band-filter stacks,
/// file transport and anything else that is per-voxel multi-channel but not
/// necessarily a probability distribution.
struct ChannelStack {
    GridDims dims;
    int channels = 1;
    std::vector<float> values;

    ChannelStack() = default;
    ChannelStack(const GridDims& d, int c, float fill = 0.0f)
        : dims(d), channels(c), values(d.voxel_count() * c, fill) {}

    std::size_t index(int c, int x, int y, int z) const {
        return static_cast<std::size_t>(c) * dims.voxel_count() +
               dims.index(x, y, z);
    }
    float& at(int c, int x, int y, int z) { return values[index(c, x, y, z)]; }
    float at(int c, int x, int y, int z) const {
        return values[index(c, x, y, z)];
    }
};

/// Per-voxel class probabilities: every value in [0,1], channel sums within
/// 1e-5 of one. Channel index coincides with the tissue label code.
struct SoftSegmentation {
    GridDims dims;
    int channels = 0;
    std::vector<float> probs;  // channel-major

    SoftSegmentation() = default;
    SoftSegmentation(const GridDims& d, int c, float fill = 0.0f)
        : dims(d), channels(c), probs(d.voxel_count() * c, fill) {}

    std::size_t index(int c, int x, int y, int z) const {
        return static_cast<std::size_t>(c) * dims.voxel_count() +
               dims.index(x, y, z);
    }
    float& at(int c, int x, int y, int z) { return probs[index(c, x, y, z)]; }
    float at(int c, int x, int y, int z) const {
        return probs[index(c, x, y, z)];
    }

    /// Throws InvalidArgument unless the probability invariant holds.
    void validate() const;

    /// Validates `stack` as a probability field and adopts its storage.
    static SoftSegmentation from_stack(ChannelStack stack);
};

/// Boolean voxel set with grid geometry attached.
struct Mask3D {
    GridDims dims;
    std::vector<std::uint8_t> on;

    Mask3D() = default;
    explicit Mask3D(const GridDims& d, bool fill = false)
        : dims(d), on(d.voxel_count(), fill ? 1 : 0) {}

    bool at(int x, int y, int z) const { return on[dims.index(x, y, z)] != 0; }
    void set(int x, int y, int z, bool v) {
        on[dims.index(x, y, z)] = v ? 1 : 0;
    }
    std::size_t count() const;

    static Mask3D from_label(const LabelField3D& f, std::uint8_t code);
};

enum class Parity { Red, Black };

/// Checkerboard voxel 2-coloring. Red selects (x+y+z) even, black the
/// complement; the two colors partition the grid.
struct CheckerboardMask {
    GridDims dims;
    Parity parity = Parity::Red;

    bool selected(int x, int y, int z) const {
        const bool even = ((x + y + z) & 1) == 0;
        return parity == Parity::Red ? even : !even;
    }
    std::size_t count_selected() const;
};

CheckerboardMask make_checkerboard(const GridDims& dims, Parity parity);

}  // namespace lamina
