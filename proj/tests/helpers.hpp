/// @file helpers.hpp
/// @brief Shared fixtures for the test suites: canonical slab problems and
///        seeded random Laplace problems that are guaranteed solvable.

#pragma once

#include <random>

#include "lamina/solver.hpp"
#include "lamina/volume.hpp"

namespace lamina::testing {

/// Full-grid slab: z=0 plane source, z=nz-1 plane sink, everything else
/// domain. The exact solution is the linear ramp z/(nz-1).
inline LaplaceProblem slab_problem(int nx, int ny, int nz) {
    const GridDims d(nx, ny, nz);
    Mask3D domain(d), source(d), sink(d);
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x) {
                if (z == 0) {
                    source.set(x, y, z, true);
                } else if (z == nz - 1) {
                    sink.set(x, y, z, true);
                } else {
                    domain.set(x, y, z, true);
                }
            }
        }
    }
    return LaplaceProblem::from_masks(d, domain, source, sink);
}

/// Random role assignment with source/sink end planes; interior domain
/// voxels that cannot reach a boundary through the domain are relabeled
/// exterior so the problem has a unique solution.
inline LaplaceProblem random_problem(std::mt19937& rng, const GridDims& d) {
    std::vector<VoxelRole> roles(d.voxel_count());
    std::discrete_distribution<int> pick({0.55, 0.2, 0.125, 0.125});
    const VoxelRole table[4] = {VoxelRole::Domain, VoxelRole::Exterior,
                                VoxelRole::Source, VoxelRole::Sink};
    for (;;) {
        for (int z = 0; z < d.nz; ++z) {
            for (int y = 0; y < d.ny; ++y) {
                for (int x = 0; x < d.nx; ++x) {
                    const std::size_t i = d.index(x, y, z);
                    if (x == 0) {
                        roles[i] = VoxelRole::Source;
                    } else if (x == d.nx - 1) {
                        roles[i] = VoxelRole::Sink;
                    } else {
                        roles[i] = table[pick(rng)];
                    }
                }
            }
        }
        // BFS through the domain from boundary-adjacent voxels.
        std::vector<std::uint8_t> reach(d.voxel_count(), 0);
        std::vector<std::size_t> stack;
        auto neighbors = [&](int x, int y, int z, auto&& fn) {
            if (x > 0) fn(x - 1, y, z);
            if (x + 1 < d.nx) fn(x + 1, y, z);
            if (y > 0) fn(x, y - 1, z);
            if (y + 1 < d.ny) fn(x, y + 1, z);
            if (z > 0) fn(x, y, z - 1);
            if (z + 1 < d.nz) fn(x, y, z + 1);
        };
        for (int z = 0; z < d.nz; ++z) {
            for (int y = 0; y < d.ny; ++y) {
                for (int x = 0; x < d.nx; ++x) {
                    const std::size_t i = d.index(x, y, z);
                    if (roles[i] != VoxelRole::Domain) continue;
                    bool adj = false;
                    neighbors(x, y, z, [&](int a, int b, int c) {
                        const VoxelRole r = roles[d.index(a, b, c)];
                        adj |= (r == VoxelRole::Source || r == VoxelRole::Sink);
                    });
                    if (adj && !reach[i]) {
                        reach[i] = 1;
                        stack.push_back(i);
                    }
                }
            }
        }
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const int z = static_cast<int>(i / (d.nx * static_cast<std::size_t>(d.ny)));
            const std::size_t rem = i % (d.nx * static_cast<std::size_t>(d.ny));
            const int y = static_cast<int>(rem / static_cast<std::size_t>(d.nx));
            const int x = static_cast<int>(rem % static_cast<std::size_t>(d.nx));
            neighbors(x, y, z, [&](int a, int b, int c) {
                const std::size_t j = d.index(a, b, c);
                if (roles[j] == VoxelRole::Domain && !reach[j]) {
                    reach[j] = 1;
                    stack.push_back(j);
                }
            });
        }
        std::size_t kept = 0;
        for (std::size_t i = 0; i < roles.size(); ++i) {
            if (roles[i] == VoxelRole::Domain) {
                if (reach[i]) {
                    ++kept;
                } else {
                    roles[i] = VoxelRole::Exterior;
                }
            }
        }
        if (kept > 0) {
            Mask3D domain(d), source(d), sink(d);
            for (std::size_t i = 0; i < roles.size(); ++i) {
                if (roles[i] == VoxelRole::Domain) domain.on[i] = 1;
                if (roles[i] == VoxelRole::Source) source.on[i] = 1;
                if (roles[i] == VoxelRole::Sink) sink.on[i] = 1;
            }
            return LaplaceProblem::from_masks(d, domain, source, sink);
        }
    }
}

inline double max_abs_diff(const ScalarField3D& a, const ScalarField3D& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a.values[i]) -
                                 static_cast<double>(b.values[i])));
    }
    return m;
}

}  // namespace lamina::testing
