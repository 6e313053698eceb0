#include "lamina/volume.hpp"

#include <cmath>
#include <limits>

namespace lamina {

GridDims::GridDims(int nx_, int ny_, int nz_, double sx_, double sy_, double sz_)
    : nx(nx_), ny(ny_), nz(nz_), sx(sx_), sy(sy_), sz(sz_) {
    if (nx < 1 || ny < 1 || nz < 1) {
        throw InvalidArgument("grid dimensions must be >= 1");
    }
    if (!(sx > 0.0) || !(sy > 0.0) || !(sz > 0.0)) {
        throw InvalidArgument("voxel spacing must be > 0");
    }
    // Guard the total voxel count against overflow of size_t arithmetic,
    // with headroom for multi-channel payloads.
    const auto limit = std::numeric_limits<std::size_t>::max() / 64;
    std::size_t n = static_cast<std::size_t>(nx);
    if (n > limit / static_cast<std::size_t>(ny)) {
        throw InvalidArgument("grid voxel count overflows addressable range");
    }
    n *= static_cast<std::size_t>(ny);
    if (n > limit / static_cast<std::size_t>(nz)) {
        throw InvalidArgument("grid voxel count overflows addressable range");
    }
}

void ScalarField3D::require_finite() const {
    for (float v : values) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("scalar field contains non-finite values");
        }
    }
}

bool LabelField3D::contains(std::uint8_t code) const {
    for (std::uint8_t l : labels) {
        if (l == code) return true;
    }
    return false;
}

void SoftSegmentation::validate() const {
    if (channels < 1) {
        throw InvalidArgument("soft segmentation needs at least one channel");
    }
    const std::size_t vox = dims.voxel_count();
    if (probs.size() != vox * static_cast<std::size_t>(channels)) {
        throw InvalidArgument("soft segmentation storage size mismatch");
    }
    for (std::size_t v = 0; v < vox; ++v) {
        double sum = 0.0;
        for (int c = 0; c < channels; ++c) {
            const float p = probs[static_cast<std::size_t>(c) * vox + v];
            if (!(p >= 0.0f) || !(p <= 1.0f)) {
                throw InvalidArgument("probability outside [0,1]");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-5) {
            throw InvalidArgument("per-voxel channel sum deviates from 1");
        }
    }
}

SoftSegmentation SoftSegmentation::from_stack(ChannelStack stack) {
    SoftSegmentation seg;
    seg.dims = stack.dims;
    seg.channels = stack.channels;
    seg.probs = std::move(stack.values);
    seg.validate();
    return seg;
}

std::size_t Mask3D::count() const {
    std::size_t n = 0;
    for (std::uint8_t v : on) n += (v != 0);
    return n;
}

Mask3D Mask3D::from_label(const LabelField3D& f, std::uint8_t code) {
    Mask3D m(f.dims);
    for (std::size_t i = 0; i < f.labels.size(); ++i) {
        m.on[i] = (f.labels[i] == code) ? 1 : 0;
    }
    return m;
}

std::size_t CheckerboardMask::count_selected() const {
    std::size_t n = 0;
    for (int z = 0; z < dims.nz; ++z) {
        for (int y = 0; y < dims.ny; ++y) {
            for (int x = 0; x < dims.nx; ++x) {
                n += selected(x, y, z) ? 1 : 0;
            }
        }
    }
    return n;
}

CheckerboardMask make_checkerboard(const GridDims& dims, Parity parity) {
    return CheckerboardMask{dims, parity};
}

}  // namespace lamina
