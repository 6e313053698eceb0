/// @file gradcheck.hpp
/// @brief Finite-difference verification of the adjoint solver gradients,
///        alone and through the full logits -> loss chain.

#pragma once

#include <cstdint>

#include "lamina/volume.hpp"

namespace lamina {

struct GradCheckResult {
    /// max |analytic - fd| / max(|analytic|, |fd|) over entries where either
    /// magnitude exceeds 1e-6
    double max_rel_err = 0.0;
    /// max |analytic - fd| over the remaining (near-zero) entries
    double max_abs_err_small = 0.0;
    std::size_t entries = 0;
};

/// Adjoint of the soft solver against central differences (h = 1e-3) of the
/// scalar loss <g, phi> for a seeded random segmentation and weight field.
GradCheckResult gradcheck_solver(const GridDims& dims, int iters,
                                 std::uint64_t seed);

/// Gradient of the combined tissue + laminar loss with respect to per-voxel
/// logits (softmax -> init -> solver -> band filters -> Dice + CE) against
/// central differences of the same chain.
GradCheckResult gradcheck_full_chain(const GridDims& dims, int iters,
                                     std::uint64_t seed);

}  // namespace lamina
