#include "lamina/loss.hpp"

#include <cmath>

namespace lamina {

namespace {

constexpr double kDiceEps = 1e-5;
constexpr double kClipLo = 1e-7;
constexpr double kClipHi = 1.0 - 1e-7;

void check_inputs(const ChannelView& pred, const LabelField3D& gt) {
    if (!pred.dims.same_shape(gt.dims)) {
        throw InvalidArgument("prediction and ground truth dimensions differ");
    }
    const std::size_t vox = pred.dims.voxel_count();
    if (pred.channels < 1 ||
        pred.values.size() != vox * static_cast<std::size_t>(pred.channels)) {
        throw InvalidArgument("channel buffer size mismatch");
    }
    for (std::uint8_t l : gt.labels) {
        if (l >= pred.channels) {
            throw InvalidArgument("ground truth label exceeds channel count");
        }
    }
}

}  // namespace

double soft_dice(const ChannelView& pred, const LabelField3D& gt,
                 int ignore_label, std::vector<double>* grad,
                 double grad_scale) {
    check_inputs(pred, gt);
    const std::size_t vox = pred.dims.voxel_count();

    std::size_t n_valid = 0;
    for (std::uint8_t l : gt.labels) n_valid += (l != ignore_label);
    if (n_valid == 0) {
        throw EmptyDomain("every voxel carries the ignore label");
    }

    // Classes entering the macro average: skip the unlabeled code 0 and the
    // ignore label itself.
    std::vector<int> classes;
    for (int c = 0; c < pred.channels; ++c) {
        if (c != 0 && c != ignore_label) classes.push_back(c);
    }
    if (classes.empty()) {
        throw InvalidArgument("no classes left to average");
    }

    if (grad && grad->size() != pred.values.size()) {
        throw InvalidArgument("gradient buffer size mismatch");
    }

    double mean_dice = 0.0;
    for (int c : classes) {
        const double* pc = pred.values.data() + static_cast<std::size_t>(c) * vox;
        double inter = 0.0, psum = 0.0, gsum = 0.0;
        for (std::size_t v = 0; v < vox; ++v) {
            if (gt.labels[v] == ignore_label) continue;
            const double p = pc[v];
            psum += p;
            if (gt.labels[v] == c) {
                inter += p;
                gsum += 1.0;
            }
        }
        const double num = 2.0 * inter + kDiceEps;
        const double den = psum + gsum + kDiceEps;
        mean_dice += num / den;
        if (grad) {
            double* gc = grad->data() + static_cast<std::size_t>(c) * vox;
            const double scale =
                -grad_scale / static_cast<double>(classes.size());
            for (std::size_t v = 0; v < vox; ++v) {
                if (gt.labels[v] == ignore_label) continue;
                const double indicator = (gt.labels[v] == c) ? 1.0 : 0.0;
                gc[v] += scale * (2.0 * indicator * den - num) / (den * den);
            }
        }
    }
    mean_dice /= static_cast<double>(classes.size());
    return 1.0 - mean_dice;
}

double cross_entropy(const ChannelView& pred, const LabelField3D& gt,
                     int ignore_label, std::vector<double>* grad,
                     double grad_scale) {
    check_inputs(pred, gt);
    const std::size_t vox = pred.dims.voxel_count();

    std::size_t n_valid = 0;
    for (std::uint8_t l : gt.labels) n_valid += (l != ignore_label);
    if (n_valid == 0) {
        throw EmptyDomain("every voxel carries the ignore label");
    }
    if (grad && grad->size() != pred.values.size()) {
        throw InvalidArgument("gradient buffer size mismatch");
    }

    const double inv_n = 1.0 / static_cast<double>(n_valid);
    double loss = 0.0;
    for (std::size_t v = 0; v < vox; ++v) {
        const std::uint8_t l = gt.labels[v];
        if (l == ignore_label) continue;
        const double raw =
            pred.values[static_cast<std::size_t>(l) * vox + v];
        const double p = std::clamp(raw, kClipLo, kClipHi);
        loss += -std::log(p);
        if (grad && raw > kClipLo && raw < kClipHi) {
            (*grad)[static_cast<std::size_t>(l) * vox + v] +=
                grad_scale * (-inv_n / p);
        }
    }
    return loss * inv_n;
}

CombinedLossResult combined_loss(const ChannelView& s_pred,
                                 const LabelField3D& s_gt,
                                 const ChannelView& phi_channels,
                                 const LabelField3D& s_phi_gt,
                                 double laplace_weight, int ignore_label) {
    CombinedLossResult r;
    r.grad_probs.assign(s_pred.values.size(), 0.0);
    r.breakdown.dice_tissue =
        soft_dice(s_pred, s_gt, ignore_label, &r.grad_probs, 1.0);
    r.breakdown.ce_tissue =
        cross_entropy(s_pred, s_gt, ignore_label, &r.grad_probs, 1.0);

    if (!phi_channels.values.empty()) {
        r.grad_phi_channels.assign(phi_channels.values.size(), 0.0);
        r.breakdown.dice_laplace =
            soft_dice(phi_channels, s_phi_gt, ignore_label,
                      &r.grad_phi_channels, laplace_weight);
        r.breakdown.ce_laplace =
            cross_entropy(phi_channels, s_phi_gt, ignore_label,
                          &r.grad_phi_channels, laplace_weight);
    }
    r.breakdown.total =
        r.breakdown.dice_tissue + r.breakdown.ce_tissue +
        laplace_weight * (r.breakdown.dice_laplace + r.breakdown.ce_laplace);
    return r;
}

}  // namespace lamina
