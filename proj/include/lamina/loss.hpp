/// @file loss.hpp
/// @brief Combined Dice + cross-entropy objective on tissue classes and on
///        laminar band channels, with analytic gradients.
///
/// Both Dice and cross-entropy restrict their sums to voxels whose ground
/// truth differs from the ignore label. Dice is macro-averaged over classes,
/// skipping class 0 (the unlabeled/ignore code); a class absent from both
/// prediction and ground truth scores as perfect.

#pragma once

#include <span>
#include <vector>

#include "lamina/volume.hpp"

namespace lamina {

struct LossBreakdown {
    double dice_tissue = 0.0;
    double ce_tissue = 0.0;
    double dice_laplace = 0.0;
    double ce_laplace = 0.0;
    double total = 0.0;
};

/// Channel-major double view used by the loss kernels.
struct ChannelView {
    GridDims dims;
    int channels = 0;
    std::span<const double> values;
};

/// 1 - mean_c (2*sum p_c g_c + eps) / (sum p_c + sum g_c + eps), eps = 1e-5.
/// If `grad` is non-null it receives d(loss)/d(pred), accumulated (+=).
double soft_dice(const ChannelView& pred, const LabelField3D& gt,
                 int ignore_label = 0, std::vector<double>* grad = nullptr,
                 double grad_scale = 1.0);

/// Mean over non-ignored voxels of -log(pred at the gt class), predictions
/// clipped to [1e-7, 1-1e-7] before the log.
double cross_entropy(const ChannelView& pred, const LabelField3D& gt,
                     int ignore_label = 0, std::vector<double>* grad = nullptr,
                     double grad_scale = 1.0);

struct CombinedLossResult {
    LossBreakdown breakdown;
    std::vector<double> grad_probs;         // d(total)/d(S_pred), C x vox
    std::vector<double> grad_phi_channels;  // d(total)/d(band channels), B x vox
};

/// total = DCE(s_gt, s_pred) + laplace_weight * DCE(s_phi_gt, phi_channels).
/// The breakdown stores the unweighted components.
CombinedLossResult combined_loss(const ChannelView& s_pred,
                                 const LabelField3D& s_gt,
                                 const ChannelView& phi_channels,
                                 const LabelField3D& s_phi_gt,
                                 double laplace_weight = 1.0,
                                 int ignore_label = 0);

}  // namespace lamina
