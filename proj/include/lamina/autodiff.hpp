/// @file autodiff.hpp
/// @brief Differentiable soft-boundary Laplace solver.
///
/// Forward pass: the boundary field is initialized as a per-voxel weighted
/// sum of class probabilities, then a fixed number of red-black SOR
/// iterations run at every voxel. With clamping on, each half-sweep result
/// is re-blended against the Dirichlet classes,
///
///     y = (1 - sum_{c in clamped} P_c) * sor(x) + sum_{c in clamped} w_c P_c,
///
/// which softly re-imposes the boundary data each half-sweep and makes the
/// one-hot limit agree exactly with the hard solver. Channels 0 (unlabeled)
/// and 1 (gray matter) pass through; all other channels clamp toward their
/// initialization weight (defaults: WM 0, BG 1, SRLM 0, extras 0).
///
/// Backward pass: every half-sweep is affine in the field given the
/// probabilities, so the adjoint replays the recorded states in reverse,
/// propagating gradients through the stencil and accumulating the blend and
/// initialization contributions onto the class probabilities. No iterate is
/// approximated; the gradient is exact for the computation as executed.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lamina/volume.hpp"

namespace lamina {

/// Initialization weight per class channel: unlabeled 0, GM 0.5, WM 0,
/// BG 1, SRLM and anything beyond 0.
std::vector<double> default_init_weights(int channels);

struct SoftLaplaceConfig {
    std::optional<double> omega;       // nullopt = omega_opt(min grid dim)
    int iters = 60;                    // 0 = initialization only
    std::vector<double> init_weights;  // empty = default_init_weights
    bool clamp_each_iter = true;
    int threads = 1;
};

/// Recorded forward computation: the resolved configuration, the input
/// probabilities and every post-half-sweep state (2*iters+1 fields,
/// fields[0] being the initialization).
struct Tape {
    GridDims dims;
    int channels = 0;
    double omega = 0.0;
    int iters = 0;
    bool clamp = false;
    int threads = 1;
    std::vector<double> weights;
    std::vector<double> probs;                 // channel-major, C x vox
    std::vector<std::vector<double>> fields;   // 2*iters+1 states
};

/// Gradient of a scalar loss with respect to per-voxel class probabilities.
struct SoftSegGradient {
    GridDims dims;
    int channels = 0;
    std::vector<double> grad;  // channel-major, C x vox

    double at(int c, int x, int y, int z) const {
        return grad[static_cast<std::size_t>(c) * dims.voxel_count() +
                    dims.index(x, y, z)];
    }
};

/// phi0 = sum_c weight(c) * P_c per voxel.
ScalarField3D init_from_probs(const SoftSegmentation& seg,
                              std::span<const double> weights);

std::pair<ScalarField3D, Tape> soft_solve_forward(const SoftSegmentation& seg,
                                                  const SoftLaplaceConfig& config);

SoftSegGradient soft_solve_backward(const Tape& tape,
                                    const ScalarField3D& grad_out);

/// Re-runs the recorded computation from tape.fields[0]; the result must be
/// bitwise identical to tape.fields.back().
std::vector<double> replay_tape(const Tape& tape);

// Double-precision entry points used by the optimization loop and the
// gradient checks, avoiding float32 round trips inside loss chains.
std::vector<double> soft_forward_d(std::span<const double> probs,
                                   const GridDims& dims, int channels,
                                   const SoftLaplaceConfig& config, Tape* tape);
std::vector<double> soft_backward_d(const Tape& tape,
                                    std::span<const double> grad_out);

}  // namespace lamina
