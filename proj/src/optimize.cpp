#include "lamina/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace lamina {

void softmax_channels(std::span<const double> logits, std::size_t vox,
                      int channels, std::span<double> probs) {
    for (std::size_t v = 0; v < vox; ++v) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < channels; ++c) {
            mx = std::max(mx, logits[static_cast<std::size_t>(c) * vox + v]);
        }
        double sum = 0.0;
        for (int c = 0; c < channels; ++c) {
            const double e =
                std::exp(logits[static_cast<std::size_t>(c) * vox + v] - mx);
            probs[static_cast<std::size_t>(c) * vox + v] = e;
            sum += e;
        }
        for (int c = 0; c < channels; ++c) {
            probs[static_cast<std::size_t>(c) * vox + v] /= sum;
        }
    }
}

void softmax_backward(std::span<const double> probs,
                      std::span<const double> grad_probs, std::size_t vox,
                      int channels, std::span<double> grad_logits) {
    for (std::size_t v = 0; v < vox; ++v) {
        double dot = 0.0;
        for (int c = 0; c < channels; ++c) {
            const std::size_t i = static_cast<std::size_t>(c) * vox + v;
            dot += probs[i] * grad_probs[i];
        }
        for (int c = 0; c < channels; ++c) {
            const std::size_t i = static_cast<std::size_t>(c) * vox + v;
            grad_logits[i] = probs[i] * (grad_probs[i] - dot);
        }
    }
}

namespace {

bool finite(const LossBreakdown& b) {
    return std::isfinite(b.dice_tissue) && std::isfinite(b.ce_tissue) &&
           std::isfinite(b.dice_laplace) && std::isfinite(b.ce_laplace) &&
           std::isfinite(b.total);
}

}  // namespace

DescentResult run_descent(const SoftSegmentation& init_probs,
                          const LabelField3D& s_gt,
                          const LabelField3D& s_phi_gt,
                          const OptimizeConfig& config) {
    init_probs.validate();
    if (!init_probs.dims.same_shape(s_gt.dims) ||
        !init_probs.dims.same_shape(s_phi_gt.dims)) {
        throw InvalidArgument("descent inputs live on different grids");
    }
    if (config.steps < 1) {
        throw InvalidArgument("step count must be positive");
    }
    if (!(config.learning_rate > 0.0)) {
        throw InvalidArgument("learning rate must be positive");
    }
    config.bands.validate();

    const GridDims dims = init_probs.dims;
    const std::size_t vox = dims.voxel_count();
    const int channels = init_probs.channels;
    const int n_bands = config.bands.count();
    const bool use_laplace = config.laplace_weight > 0.0;

    std::vector<double> logits(vox * static_cast<std::size_t>(channels));
    for (std::size_t i = 0; i < logits.size(); ++i) {
        logits[i] = std::log(static_cast<double>(init_probs.probs[i]) + 1e-6);
    }
    std::vector<double> probs(logits.size());

    DescentResult result;
    result.trace.reserve(static_cast<std::size_t>(config.steps));
    std::vector<double> grad_logits(logits.size());

    for (int step = 0; step < config.steps; ++step) {
        softmax_channels(logits, vox, channels, probs);

        Tape tape;
        std::vector<double> bands;
        if (use_laplace) {
            const auto phi =
                soft_forward_d(probs, dims, channels, config.solver, &tape);
            bands = band_stack_d(phi, config.bands);
        }
        const ChannelView pred{dims, channels, probs};
        const ChannelView phi_view{dims, n_bands, bands};
        auto r = combined_loss(pred, s_gt, phi_view, s_phi_gt,
                               config.laplace_weight, config.ignore_label);
        if (!finite(r.breakdown)) {
            throw NonFiniteLoss("non-finite loss at step " + std::to_string(step));
        }
        result.trace.push_back(r.breakdown);

        std::vector<double> grad = std::move(r.grad_probs);
        if (use_laplace) {
            const auto& phi = tape.fields.back();
            const auto grad_phi =
                band_stack_backward_d(phi, config.bands, r.grad_phi_channels);
            const auto grad_soft = soft_backward_d(tape, grad_phi);
            for (std::size_t i = 0; i < grad.size(); ++i) {
                grad[i] += grad_soft[i];
            }
        }

        // backpropagate through the per-voxel softmax and take a step
        softmax_backward(probs, grad, vox, channels, grad_logits);
        for (std::size_t i = 0; i < logits.size(); ++i) {
            logits[i] -= config.learning_rate * grad_logits[i];
        }
    }

    softmax_channels(logits, vox, channels, probs);
    result.final_probs = SoftSegmentation(dims, channels);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        result.final_probs.probs[i] = static_cast<float>(probs[i]);
    }
    result.final_probs.validate();
    return result;
}

void write_trace_csv(const std::vector<LossBreakdown>& trace,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot open '" + path.string() + "' for writing");
    }
    out << "step,dice_tissue,ce_tissue,dice_laplace,ce_laplace,total\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& b = trace[i];
        out << i << ',' << b.dice_tissue << ',' << b.ce_tissue << ','
            << b.dice_laplace << ',' << b.ce_laplace << ',' << b.total << '\n';
    }
    if (!out) {
        throw DataError("short write to '" + path.string() + "'");
    }
}

}  // namespace lamina
