#include "lamina/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lamina/parallel.hpp"
#include "sweep_kernel.hpp"

namespace lamina {

using detail::SweepVoxel;

LaplaceProblem LaplaceProblem::from_masks(const GridDims& dims,
                                          const Mask3D& domain,
                                          const Mask3D& source,
                                          const Mask3D& sink) {
    if (!domain.dims.same_shape(dims) || !source.dims.same_shape(dims) ||
        !sink.dims.same_shape(dims)) {
        throw InvalidArgument("mask dimensions do not match the grid");
    }
    LaplaceProblem p;
    p.dims = dims;
    p.roles.assign(dims.voxel_count(), VoxelRole::Exterior);
    for (std::size_t i = 0; i < p.roles.size(); ++i) {
        const int hits = (domain.on[i] ? 1 : 0) + (source.on[i] ? 1 : 0) +
                         (sink.on[i] ? 1 : 0);
        if (hits > 1) {
            throw InvalidArgument("domain/source/sink masks overlap");
        }
        if (domain.on[i]) {
            p.roles[i] = VoxelRole::Domain;
        } else if (source.on[i]) {
            p.roles[i] = VoxelRole::Source;
        } else if (sink.on[i]) {
            p.roles[i] = VoxelRole::Sink;
        }
    }
    p.validate();
    return p;
}

LaplaceProblem LaplaceProblem::from_labels(const LabelField3D& labels,
                                           std::span<const int> domain_codes,
                                           std::span<const int> source_codes,
                                           std::span<const int> sink_codes) {
    std::array<VoxelRole, 256> table;
    table.fill(VoxelRole::Exterior);
    auto assign = [&](std::span<const int> codes, VoxelRole role) {
        for (int c : codes) {
            if (c < 0 || c > 255) {
                throw InvalidArgument("label code out of range");
            }
            if (table[static_cast<std::size_t>(c)] != VoxelRole::Exterior) {
                throw InvalidArgument("label code mapped to more than one role");
            }
            table[static_cast<std::size_t>(c)] = role;
        }
    };
    assign(domain_codes, VoxelRole::Domain);
    assign(source_codes, VoxelRole::Source);
    assign(sink_codes, VoxelRole::Sink);

    LaplaceProblem p;
    p.dims = labels.dims;
    p.roles.resize(labels.labels.size());
    for (std::size_t i = 0; i < p.roles.size(); ++i) {
        p.roles[i] = table[labels.labels[i]];
    }
    p.validate();
    return p;
}

std::size_t LaplaceProblem::domain_count() const {
    std::size_t n = 0;
    for (VoxelRole r : roles) n += (r == VoxelRole::Domain);
    return n;
}

void LaplaceProblem::validate() const {
    if (roles.size() != dims.voxel_count()) {
        throw InvalidArgument("role table size does not match the grid");
    }
    if (dims.nx == 1 && dims.ny == 1 && dims.nz == 1 &&
        roles[0] == VoxelRole::Domain) {
        throw InvalidArgument("domain voxel has no in-grid neighbor");
    }
}

double omega_opt(int n) {
    if (n < 1) {
        throw InvalidArgument("omega_opt requires a positive grid dimension");
    }
    return 2.0 / (1.0 + std::sin(std::numbers::pi / (n + 1.0)));
}

ScalarField3D make_init(const LaplaceProblem& problem, float domain_value,
                        float exterior_value) {
    ScalarField3D f(problem.dims);
    for (std::size_t i = 0; i < problem.roles.size(); ++i) {
        switch (problem.roles[i]) {
            case VoxelRole::Domain: f.values[i] = domain_value; break;
            case VoxelRole::Source: f.values[i] = 0.0f; break;
            case VoxelRole::Sink: f.values[i] = 1.0f; break;
            case VoxelRole::Exterior: f.values[i] = exterior_value; break;
        }
    }
    return f;
}

namespace {

double resolve_omega(const std::optional<double>& omega, const GridDims& dims) {
    const double w = omega ? *omega
                           : omega_opt(std::min({dims.nx, dims.ny, dims.nz}));
    if (!(w >= 1.0) || !(w < 2.0)) {
        throw InvalidArgument("over-relaxation factor must lie in [1,2)");
    }
    return w;
}

/// Sweep lists of domain voxels, per slice and checkerboard color.
/// index 0: black (x+y+z odd), 1: red (x+y+z even).
struct DomainSweeps {
    std::array<detail::SliceLists, 2> by_color;
};

DomainSweeps build_sweeps(const LaplaceProblem& p) {
    DomainSweeps s;
    s.by_color[0].resize(static_cast<std::size_t>(p.dims.nz));
    s.by_color[1].resize(static_cast<std::size_t>(p.dims.nz));
    const GridDims& d = p.dims;
    const std::size_t nxny =
        static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const std::size_t i = d.index(x, y, z);
                if (p.roles[i] != VoxelRole::Domain) continue;
                std::uint8_t m = detail::grid_mask(d, x, y, z);
                // Drop exterior neighbors from the average.
                if ((m & detail::kXm) && p.roles[i - 1] == VoxelRole::Exterior)
                    m &= ~detail::kXm;
                if ((m & detail::kXp) && p.roles[i + 1] == VoxelRole::Exterior)
                    m &= ~detail::kXp;
                if ((m & detail::kYm) &&
                    p.roles[i - static_cast<std::size_t>(d.nx)] == VoxelRole::Exterior)
                    m &= ~detail::kYm;
                if ((m & detail::kYp) &&
                    p.roles[i + static_cast<std::size_t>(d.nx)] == VoxelRole::Exterior)
                    m &= ~detail::kYp;
                if ((m & detail::kZm) && p.roles[i - nxny] == VoxelRole::Exterior)
                    m &= ~detail::kZm;
                if ((m & detail::kZp) && p.roles[i + nxny] == VoxelRole::Exterior)
                    m &= ~detail::kZp;
                const int color = ((x + y + z) & 1) ? 0 : 1;  // 0=black, 1=red
                s.by_color[static_cast<std::size_t>(color)][static_cast<std::size_t>(z)]
                    .push_back(SweepVoxel{static_cast<std::int32_t>(i), m,
                                          detail::popcount6(m)});
            }
        }
    }
    return s;
}

}  // namespace

std::pair<ScalarField3D, SolveReport> solve_sor(const LaplaceProblem& problem,
                                                const ScalarField3D& init,
                                                const SolverConfig& config) {
    if (!init.dims.same_shape(problem.dims)) {
        throw InvalidArgument("initial field dimensions do not match the problem");
    }
    if (config.scheme != Scheme::Sor6) {
        throw InvalidArgument("solve_sor only runs the 6-neighbor SOR scheme");
    }
    if (config.max_iters < 1) {
        throw InvalidArgument("max_iters must be positive");
    }
    if (config.tolerance < 0.0) {
        throw InvalidArgument("tolerance must be nonnegative");
    }
    init.require_finite();
    const double omega = resolve_omega(config.omega, problem.dims);

    const GridDims& d = problem.dims;
    const int nx = d.nx;
    const std::size_t nxny =
        static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);
    const DomainSweeps sweeps = build_sweeps(problem);
    const std::size_t n_domain = problem.domain_count();

    std::vector<double> f(init.values.begin(), init.values.end());
    std::vector<double> slice_change(static_cast<std::size_t>(d.nz), 0.0);

    SolveReport report;
    for (int iter = 0; iter < config.max_iters; ++iter) {
        std::fill(slice_change.begin(), slice_change.end(), 0.0);
        for (int color = 0; color < 2; ++color) {  // black first, then red
            const auto& slices = sweeps.by_color[static_cast<std::size_t>(color)];
            parallel_for_units(d.nz, config.threads, [&](int z) {
                double acc = 0.0;
                for (const SweepVoxel& v : slices[static_cast<std::size_t>(z)]) {
                    const double old = f[static_cast<std::size_t>(v.idx)];
                    const double sum = detail::neighbor_sum(f.data(), v, nx, nxny);
                    const double next = detail::sor_update(old, sum, v.k, omega);
                    f[static_cast<std::size_t>(v.idx)] = next;
                    acc += std::abs(next - old);
                }
                slice_change[static_cast<std::size_t>(z)] += acc;
            });
        }
        double total = 0.0;
        for (double c : slice_change) total += c;
        report.final_change = n_domain ? total / static_cast<double>(n_domain) : 0.0;
        report.iterations_run = iter + 1;
        if (config.tolerance > 0.0 && report.final_change < config.tolerance) {
            report.converged = true;
            break;
        }
    }

    ScalarField3D out(problem.dims);
    for (std::size_t i = 0; i < f.size(); ++i) {
        out.values[i] = static_cast<float>(f[i]);
    }
    out.require_finite();
    return {std::move(out), report};
}

ScalarField3D solve_reference(const LaplaceProblem& problem, double tolerance,
                              int threads, SolveReport* report) {
    if (!(tolerance > 0.0)) {
        throw InvalidArgument("reference solver needs a positive tolerance");
    }
    const GridDims& d = problem.dims;
    const ScalarField3D init = make_init(problem);
    std::vector<double> cur(init.values.begin(), init.values.end());
    std::vector<double> next_buf(cur);

    // Linear list of domain voxels with coordinates, grouped by slice.
    struct Vox {
        std::int32_t idx;
        std::int16_t x, y, z;
    };
    std::vector<std::vector<Vox>> slices(static_cast<std::size_t>(d.nz));
    std::size_t n_domain = 0;
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const std::size_t i = d.index(x, y, z);
                if (problem.roles[i] == VoxelRole::Domain) {
                    slices[static_cast<std::size_t>(z)].push_back(
                        Vox{static_cast<std::int32_t>(i), static_cast<std::int16_t>(x),
                            static_cast<std::int16_t>(y), static_cast<std::int16_t>(z)});
                    ++n_domain;
                }
            }
        }
    }

    std::vector<double> slice_change(static_cast<std::size_t>(d.nz), 0.0);
    SolveReport rep;
    constexpr int kMaxIters = 1000000;
    for (int iter = 0; iter < kMaxIters; ++iter) {
        parallel_for_units(d.nz, threads, [&](int z) {
            double acc = 0.0;
            for (const Vox& v : slices[static_cast<std::size_t>(z)]) {
                double sum = 0.0;
                int k = 0;
                for (int dz = -1; dz <= 1; ++dz) {
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (dx == 0 && dy == 0 && dz == 0) continue;
                            const int xx = v.x + dx, yy = v.y + dy, zz = v.z + dz;
                            if (!d.inside(xx, yy, zz)) continue;
                            const std::size_t j = d.index(xx, yy, zz);
                            if (problem.roles[j] == VoxelRole::Exterior) continue;
                            sum += cur[j];
                            ++k;
                        }
                    }
                }
                const std::size_t i = static_cast<std::size_t>(v.idx);
                const double val = k > 0 ? sum / static_cast<double>(k) : cur[i];
                next_buf[i] = val;
                acc += std::abs(val - cur[i]);
            }
            slice_change[static_cast<std::size_t>(z)] = acc;
        });
        for (const auto& sl : slices) {
            for (const Vox& v : sl) {
                cur[static_cast<std::size_t>(v.idx)] =
                    next_buf[static_cast<std::size_t>(v.idx)];
            }
        }
        double total = 0.0;
        for (double c : slice_change) total += c;
        rep.final_change = n_domain ? total / static_cast<double>(n_domain) : 0.0;
        rep.iterations_run = iter + 1;
        if (rep.final_change < tolerance) {
            rep.converged = true;
            break;
        }
    }
    if (report) *report = rep;

    ScalarField3D out(problem.dims);
    for (std::size_t i = 0; i < cur.size(); ++i) {
        out.values[i] = static_cast<float>(cur[i]);
    }
    out.require_finite();
    return out;
}

}  // namespace lamina
