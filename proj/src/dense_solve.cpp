#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <queue>
#include <vector>

#include "lamina/solver.hpp"
#include "sweep_kernel.hpp"

namespace lamina {

namespace {
constexpr std::size_t kMaxDenseDomain = 5000;
}

ScalarField3D dense_solve(const LaplaceProblem& problem) {
    const GridDims& d = problem.dims;
    const std::size_t nxny =
        static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);

    // Unknown ids for domain voxels that have at least one effective neighbor.
    std::vector<std::int32_t> unknown(d.voxel_count(), -1);
    std::vector<std::size_t> vox_of;
    std::vector<std::uint8_t> masks;
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const std::size_t i = d.index(x, y, z);
                if (problem.roles[i] != VoxelRole::Domain) continue;
                std::uint8_t m = detail::grid_mask(d, x, y, z);
                auto drop_if_exterior = [&](std::uint8_t bit, std::size_t j) {
                    if ((m & bit) && problem.roles[j] == VoxelRole::Exterior) {
                        m = static_cast<std::uint8_t>(m & ~bit);
                    }
                };
                drop_if_exterior(detail::kXm, i - 1);
                drop_if_exterior(detail::kXp, i + 1);
                drop_if_exterior(detail::kYm, i - static_cast<std::size_t>(d.nx));
                drop_if_exterior(detail::kYp, i + static_cast<std::size_t>(d.nx));
                drop_if_exterior(detail::kZm, i - nxny);
                drop_if_exterior(detail::kZp, i + nxny);
                if (detail::popcount6(m) == 0) continue;  // keeps its init value
                unknown[i] = static_cast<std::int32_t>(vox_of.size());
                vox_of.push_back(i);
                masks.push_back(m);
            }
        }
    }
    const std::size_t n = vox_of.size();
    if (n > kMaxDenseDomain) {
        throw TooLarge("dense_solve domain exceeds " +
                       std::to_string(kMaxDenseDomain) + " voxels");
    }

    // Every unknown needs a path through the domain to a source/sink, else
    // the system has a one-dimensional null space per isolated component.
    {
        std::vector<std::uint8_t> reached(n, 0);
        std::queue<std::size_t> frontier;
        auto offsets = [&](std::size_t i, std::uint8_t m,
                           auto&& visit) {
            if (m & detail::kXm) visit(i - 1);
            if (m & detail::kXp) visit(i + 1);
            if (m & detail::kYm) visit(i - static_cast<std::size_t>(d.nx));
            if (m & detail::kYp) visit(i + static_cast<std::size_t>(d.nx));
            if (m & detail::kZm) visit(i - nxny);
            if (m & detail::kZp) visit(i + nxny);
        };
        for (std::size_t u = 0; u < n; ++u) {
            bool touches_boundary = false;
            offsets(vox_of[u], masks[u], [&](std::size_t j) {
                const VoxelRole r = problem.roles[j];
                if (r == VoxelRole::Source || r == VoxelRole::Sink) {
                    touches_boundary = true;
                }
            });
            if (touches_boundary) {
                reached[u] = 1;
                frontier.push(u);
            }
        }
        while (!frontier.empty()) {
            const std::size_t u = frontier.front();
            frontier.pop();
            offsets(vox_of[u], masks[u], [&](std::size_t j) {
                const std::int32_t v = unknown[j];
                if (v >= 0 && !reached[static_cast<std::size_t>(v)]) {
                    reached[static_cast<std::size_t>(v)] = 1;
                    frontier.push(static_cast<std::size_t>(v));
                }
            });
        }
        for (std::size_t u = 0; u < n; ++u) {
            if (!reached[u]) {
                throw SingularSystem(
                    "domain voxel has no path to a source or sink");
            }
        }
    }

    Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n),
                                  static_cast<Eigen::Index>(n));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * 7);
    for (std::size_t u = 0; u < n; ++u) {
        const std::size_t i = vox_of[u];
        const std::uint8_t m = masks[u];
        trip.emplace_back(static_cast<int>(u), static_cast<int>(u),
                          static_cast<double>(detail::popcount6(m)));
        auto couple = [&](std::size_t j) {
            switch (problem.roles[j]) {
                case VoxelRole::Domain:
                    if (unknown[j] >= 0) {
                        trip.emplace_back(static_cast<int>(u), unknown[j], -1.0);
                    } else {
                        // isolated domain voxel holds its init value 0.5
                        rhs[static_cast<Eigen::Index>(u)] += 0.5;
                    }
                    break;
                case VoxelRole::Source: break;  // contributes 0
                case VoxelRole::Sink:
                    rhs[static_cast<Eigen::Index>(u)] += 1.0;
                    break;
                case VoxelRole::Exterior: break;  // masked out above
            }
        };
        if (m & detail::kXm) couple(i - 1);
        if (m & detail::kXp) couple(i + 1);
        if (m & detail::kYm) couple(i - static_cast<std::size_t>(d.nx));
        if (m & detail::kYp) couple(i + static_cast<std::size_t>(d.nx));
        if (m & detail::kZm) couple(i - nxny);
        if (m & detail::kZp) couple(i + nxny);
    }
    a.setFromTriplets(trip.begin(), trip.end());

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw SingularSystem("sparse factorization of the Laplace system failed");
    }
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success) {
        throw SingularSystem("sparse solve of the Laplace system failed");
    }

    ScalarField3D out = make_init(problem);
    for (std::size_t u = 0; u < n; ++u) {
        out.values[vox_of[u]] = static_cast<float>(sol[static_cast<Eigen::Index>(u)]);
    }
    out.require_finite();
    return out;
}

}  // namespace lamina
