#include "lamina/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "lamina/solver.hpp"

namespace lamina {

namespace {

constexpr int kPhantomChannels = 4;  // unlabeled, GM, WM, BG

LabelField3D slab_labels(const PhantomSpec& spec) {
    const GridDims& d = spec.dims;
    const int t = spec.slab_thickness;
    const int z_lo = (d.nz - t) / 2;
    if (t < 1 || z_lo < 1 || z_lo + t > d.nz - 1) {
        throw InvalidArgument("slab does not fit: need a WM layer below and a BG layer above");
    }
    LabelField3D labels(d, kWm);
    for (int z = 0; z < d.nz; ++z) {
        const std::uint8_t code = z < z_lo ? kWm : (z < z_lo + t ? kGm : kBg);
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                labels.at(x, y, z) = code;
            }
        }
    }
    return labels;
}

LabelField3D shell_labels(const PhantomSpec& spec) {
    const GridDims& d = spec.dims;
    const double a = spec.shell_inner;
    const double b = spec.shell_outer;
    if (!(a >= 1.0) || !(a < b)) {
        throw InvalidArgument("shell radii must satisfy 1 <= a < b");
    }
    const int cx = d.nx / 2, cy = d.ny / 2, cz = d.nz / 2;
    const double reach = b - 0.5;
    if (cx - reach < 0 || cy - reach < 0 || cz - reach < 0 ||
        cx + reach > d.nx - 1 || cy + reach > d.ny - 1 || cz + reach > d.nz - 1) {
        throw InvalidArgument("shell does not fit inside the grid");
    }
    LabelField3D labels(d, kBg);
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const double dx = x - cx, dy = y - cy, dz = z - cz;
                const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                if (r < a + 0.5) {
                    labels.at(x, y, z) = kWm;
                } else if (r <= b - 0.5) {
                    labels.at(x, y, z) = kGm;
                }
            }
        }
    }
    return labels;
}

struct SulcusGeometry {
    LabelField3D truth;
    Mask3D gap;  // background wedge voxels between the two banks
};

SulcusGeometry sulcus_labels(const PhantomSpec& spec) {
    const GridDims& d = spec.dims;
    const double lambda = spec.fold_wavelength;
    const double amp = spec.fold_amplitude;
    const int t = spec.gm_thickness;
    const int g = spec.gap_width;
    if (!(lambda > 0.0) || amp < 0.0 || t < 2 || g < 0) {
        throw InvalidArgument("bad sulcus parameters");
    }
    const double z_base = (d.nz - t) / 2.0;
    if (z_base - amp < 0.0 || z_base + amp + t > d.nz - 2) {
        throw InvalidArgument("sulcus fold does not fit in z");
    }
    const auto floor_z = [&](int x) {
        return z_base + amp * std::sin(2.0 * std::numbers::pi * x / lambda);
    };
    SulcusGeometry geo{LabelField3D(d), Mask3D(d)};
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const double zw = floor_z(x);
                std::uint8_t code;
                if (z <= zw) {
                    code = kWm;
                } else if (z <= zw + t) {
                    code = kGm;
                } else {
                    code = kBg;
                }
                geo.truth.at(x, y, z) = code;
            }
        }
    }
    // Background wedge splitting the sheet into two banks, stopping one
    // voxel above the WM floor so the GM stays connected at the fundus.
    if (g > 0) {
        const int x_mid = d.nx / 2;
        const int x_lo = x_mid - (g - 1) / 2;
        const int x_hi = x_lo + g - 1;
        if (x_lo < 1 || x_hi > d.nx - 2) {
            throw InvalidArgument("sulcus gap does not fit in x");
        }
        for (int x = x_lo; x <= x_hi; ++x) {
            const double zw = floor_z(x);
            for (int z = 0; z < d.nz; ++z) {
                if (z > zw + 1.0 && z <= zw + t) {
                    for (int y = 0; y < d.ny; ++y) {
                        geo.truth.at(x, y, z) = kBg;
                        geo.gap.set(x, y, z, true);
                    }
                }
            }
        }
    }
    return geo;
}

SoftSegmentation corrupt(const LabelField3D& truth, const Mask3D& gap,
                         bool bridge, std::uint64_t seed) {
    const GridDims& d = truth.dims;
    const std::size_t vox = d.voxel_count();
    SoftSegmentation probs(d, kPhantomChannels);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 0.02);

    for (std::size_t v = 0; v < vox; ++v) {
        double p[kPhantomChannels];
        if (bridge && gap.on[v]) {
            // partial-volume fusion: the wedge looks mostly like gray matter
            p[kUnlabeled] = 0.05;
            p[kGm] = 0.70;
            p[kWm] = 0.10;
            p[kBg] = 0.15;
        } else {
            for (int c = 0; c < kPhantomChannels; ++c) {
                p[c] = 0.1 / kPhantomChannels;
            }
            p[truth.labels[v]] += 0.9;
        }
        double sum = 0.0;
        for (int c = 0; c < kPhantomChannels; ++c) {
            p[c] += jitter(rng);
            sum += p[c];
        }
        for (int c = 0; c < kPhantomChannels; ++c) {
            probs.probs[static_cast<std::size_t>(c) * vox + v] =
                static_cast<float>(p[c] / sum);
        }
    }
    probs.validate();
    return probs;
}

}  // namespace

Phantom make_phantom(const PhantomSpec& spec) {
    LabelField3D truth;
    Mask3D gap(spec.dims);
    switch (spec.kind) {
        case PhantomKind::Slab:
            truth = slab_labels(spec);
            break;
        case PhantomKind::Shell:
            truth = shell_labels(spec);
            break;
        case PhantomKind::Sulcus: {
            auto geo = sulcus_labels(spec);
            truth = std::move(geo.truth);
            gap = std::move(geo.gap);
            break;
        }
    }

    constexpr std::array<int, 1> domain_codes{kGm};
    constexpr std::array<int, 2> source_codes{kWm, kSrlm};
    constexpr std::array<int, 1> sink_codes{kBg};
    const auto problem =
        LaplaceProblem::from_labels(truth, domain_codes, source_codes, sink_codes);

    Phantom out;
    out.phi_gt = solve_reference(problem);
    out.corrupted_probs = corrupt(truth, gap, spec.bridge, spec.seed);
    out.gt_labels = std::move(truth);
    if (spec.annotated_max_x >= 0) {
        const GridDims& d = out.gt_labels.dims;
        for (int z = 0; z < d.nz; ++z) {
            for (int y = 0; y < d.ny; ++y) {
                for (int x = spec.annotated_max_x; x < d.nx; ++x) {
                    out.gt_labels.at(x, y, z) = kUnlabeled;
                }
            }
        }
    }
    return out;
}

double analytic_shell_phi(double r, double a, double b) {
    if (!(a > 0.0) || !(a < b)) {
        throw InvalidArgument("shell radii must satisfy 0 < a < b");
    }
    if (!(r >= a) || !(r <= b)) {
        throw InvalidArgument("radius outside the shell");
    }
    return (1.0 / a - 1.0 / r) / (1.0 / a - 1.0 / b);
}

}  // namespace lamina
