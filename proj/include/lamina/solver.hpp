/// @file solver.hpp
/// @brief Hard-boundary Laplace solvers on voxel grids.
///
/// Three routes to the same discrete problem:
///  - solve_sor:      red-black successive over-relaxation with the
///                    6-neighbor stencil (the production scheme),
///  - solve_reference: Jacobi-style 26-neighbor averaging run to a relative
///                    change threshold (used to build ground-truth fields),
///  - dense_solve:    direct sparse solve of the 6-neighbor system, capped
///                    at small domains (the brute-force oracle).
///
/// Dirichlet data: source voxels are fixed at 0, sink voxels at 1. Voxels
/// outside domain/source/sink ("exterior") never update and never contribute
/// to a neighbor average; the stencil weight renormalizes over the effective
/// neighbors, which also covers voxels at the grid edge.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lamina/volume.hpp"

namespace lamina {

enum class VoxelRole : std::uint8_t {
    Exterior = 0,
    Domain = 1,
    Source = 2,
    Sink = 3,
};

struct LaplaceProblem {
    GridDims dims;
    std::vector<VoxelRole> roles;  // one per voxel, x-fastest

    static LaplaceProblem from_masks(const GridDims& dims, const Mask3D& domain,
                                     const Mask3D& source, const Mask3D& sink);

    /// Maps label codes to roles; codes absent from all three lists become
    /// exterior. A code listed twice is an error.
    static LaplaceProblem from_labels(const LabelField3D& labels,
                                      std::span<const int> domain_codes,
                                      std::span<const int> source_codes,
                                      std::span<const int> sink_codes);

    VoxelRole role(std::size_t idx) const { return roles[idx]; }
    std::size_t domain_count() const;

    /// Checks the structural invariants (grid large enough that every voxel
    /// has an in-grid 6-neighbor). Called by the factories.
    void validate() const;
};

enum class Scheme { Sor6, Reference26 };

struct SolverConfig {
    std::optional<double> omega;  // nullopt = omega_opt(min grid dimension)
    int max_iters = 60;
    double tolerance = 0.0;  // mean |delta phi| per domain voxel; 0 = fixed budget
    Scheme scheme = Scheme::Sor6;
    int threads = 1;
};

struct SolveReport {
    int iterations_run = 0;
    double final_change = 0.0;  // mean absolute change in the last iteration
    bool converged = false;
};

/// Optimal over-relaxation factor 2/(1+sin(pi/(N+1))) for minimum grid
/// dimension N. Returns 1 for N=1 (plain Gauss-Seidel) and approaches 2
/// from below as N grows.
double omega_opt(int n);

/// Builds the default initial field: source 0, sink 1, domain `domain_value`,
/// exterior `exterior_value`.
ScalarField3D make_init(const LaplaceProblem& problem, float domain_value = 0.5f,
                        float exterior_value = 0.0f);

/// Red-black SOR. One iteration = a black half-sweep (x+y+z odd) followed by
/// a red half-sweep (x+y+z even); only domain voxels are ever written.
std::pair<ScalarField3D, SolveReport> solve_sor(const LaplaceProblem& problem,
                                                const ScalarField3D& init,
                                                const SolverConfig& config);

/// 26-neighbor Jacobi reference scheme, terminating when the mean absolute
/// per-domain-voxel change drops below `tolerance`.
ScalarField3D solve_reference(const LaplaceProblem& problem,
                              double tolerance = 1e-5, int threads = 1,
                              SolveReport* report = nullptr);

/// Assembles and directly solves the 6-neighbor finite-difference system;
/// the exact fixed point of the SOR iteration. Domains above 5000 voxels are
/// rejected (TooLarge); domain regions with no path to a source or sink make
/// the system singular (SingularSystem).
ScalarField3D dense_solve(const LaplaceProblem& problem);

}  // namespace lamina
