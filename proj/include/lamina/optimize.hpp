/// @file optimize.hpp
/// @brief Desk-scale training surrogate: plain gradient descent on per-voxel
///        class logits under the combined tissue + laminar objective.
///
/// The descent parametrizes the prediction as softmax(logits), so the
/// iterate is always a valid probability field. With laplace_weight 0 the
/// laminar path (solver, band filters and their gradients) is skipped
/// entirely, which is the tissue-only baseline.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lamina/autodiff.hpp"
#include "lamina/labelize.hpp"
#include "lamina/loss.hpp"
#include "lamina/volume.hpp"

namespace lamina {

struct OptimizeConfig {
    int steps = 200;
    double learning_rate = 1.0;
    double laplace_weight = 1.0;
    SoftLaplaceConfig solver;
    BandSpec bands = BandSpec::defaults();
    std::uint64_t seed = 0;
    int ignore_label = 0;
};

struct DescentResult {
    SoftSegmentation final_probs;
    std::vector<LossBreakdown> trace;  // one entry per step
};

DescentResult run_descent(const SoftSegmentation& init_probs,
                          const LabelField3D& s_gt,
                          const LabelField3D& s_phi_gt,
                          const OptimizeConfig& config);

/// Per-voxel softmax over channel-major logits.
void softmax_channels(std::span<const double> logits, std::size_t vox,
                      int channels, std::span<double> probs);

/// Jacobian-vector product of the per-voxel softmax:
/// grad_logit_c = p_c * (grad_prob_c - sum_k p_k grad_prob_k).
void softmax_backward(std::span<const double> probs,
                      std::span<const double> grad_probs, std::size_t vox,
                      int channels, std::span<double> grad_logits);

/// Columns: step, dice_tissue, ce_tissue, dice_laplace, ce_laplace, total.
void write_trace_csv(const std::vector<LossBreakdown>& trace,
                     const std::filesystem::path& path);

}  // namespace lamina
