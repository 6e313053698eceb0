#include "lamina/gradcheck.hpp"

#include <cmath>
#include <random>

#include "lamina/autodiff.hpp"
#include "lamina/labelize.hpp"
#include "lamina/loss.hpp"
#include "lamina/optimize.hpp"

namespace lamina {

namespace {

// Central-difference step. Small enough that O(h^2) truncation stays below
// the relative bound even for gradient entries near the magnitude cutoff;
// roundoff (eps/h) remains orders of magnitude smaller.
constexpr double kStep = 1e-4;

struct ErrorTracker {
    GradCheckResult r;
    void record(double analytic, double fd) {
        ++r.entries;
        if (std::abs(analytic) > 1e-6 || std::abs(fd) > 1e-6) {
            r.max_rel_err =
                std::max(r.max_rel_err, std::abs(analytic - fd) /
                                            std::max(std::abs(analytic),
                                                     std::abs(fd)));
        } else {
            r.max_abs_err_small =
                std::max(r.max_abs_err_small, std::abs(analytic - fd));
        }
    }
};

std::vector<double> random_probs(std::mt19937_64& rng, std::size_t vox,
                                 int channels) {
    std::uniform_real_distribution<double> uni(0.05, 1.0);
    std::vector<double> probs(vox * static_cast<std::size_t>(channels));
    for (std::size_t v = 0; v < vox; ++v) {
        double sum = 0.0;
        for (int c = 0; c < channels; ++c) {
            const double x = uni(rng);
            probs[static_cast<std::size_t>(c) * vox + v] = x;
            sum += x;
        }
        for (int c = 0; c < channels; ++c) {
            probs[static_cast<std::size_t>(c) * vox + v] /= sum;
        }
    }
    return probs;
}

}  // namespace

GradCheckResult gradcheck_solver(const GridDims& dims, int iters,
                                 std::uint64_t seed) {
    constexpr int channels = 4;
    const std::size_t vox = dims.voxel_count();
    std::mt19937_64 rng(seed);
    auto probs = random_probs(rng, vox, channels);
    std::uniform_real_distribution<double> gdist(-1.0, 1.0);
    std::vector<double> g(vox);
    for (auto& x : g) x = gdist(rng);

    SoftLaplaceConfig cfg;
    cfg.iters = iters;

    Tape tape;
    soft_forward_d(probs, dims, channels, cfg, &tape);
    const auto analytic = soft_backward_d(tape, g);

    auto loss = [&](const std::vector<double>& p) {
        const auto phi = soft_forward_d(p, dims, channels, cfg, nullptr);
        double l = 0.0;
        for (std::size_t v = 0; v < vox; ++v) l += g[v] * phi[v];
        return l;
    };

    ErrorTracker tracker;
    std::vector<double> pert = probs;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        pert[i] = probs[i] + kStep;
        const double lp = loss(pert);
        pert[i] = probs[i] - kStep;
        const double lm = loss(pert);
        pert[i] = probs[i];
        tracker.record(analytic[i], (lp - lm) / (2.0 * kStep));
    }
    return tracker.r;
}

GradCheckResult gradcheck_full_chain(const GridDims& dims, int iters,
                                     std::uint64_t seed) {
    constexpr int channels = 4;
    const std::size_t vox = dims.voxel_count();
    std::mt19937_64 rng(seed);

    std::uniform_real_distribution<double> ldist(-1.5, 1.5);
    std::vector<double> logits(vox * channels);
    for (auto& x : logits) x = ldist(rng);

    // ground truth: random tissue labels with some ignored voxels, and a
    // random laminar labeling over the default band count
    const BandSpec bands = BandSpec::defaults();
    LabelField3D s_gt(dims), s_phi_gt(dims);
    std::uniform_int_distribution<int> tissue(0, 3);
    std::uniform_int_distribution<int> lamina_lab(1, bands.count() - 1);
    for (std::size_t v = 0; v < vox; ++v) {
        s_gt.labels[v] = static_cast<std::uint8_t>(tissue(rng));
        s_phi_gt.labels[v] = static_cast<std::uint8_t>(lamina_lab(rng));
    }

    SoftLaplaceConfig cfg;
    cfg.iters = iters;

    auto forward = [&](const std::vector<double>& lg, Tape* tape,
                       std::vector<double>* probs_out,
                       std::vector<double>* bands_out) {
        std::vector<double> probs(lg.size());
        softmax_channels(lg, vox, channels, probs);
        const auto phi = soft_forward_d(probs, dims, channels, cfg, tape);
        auto stack = band_stack_d(phi, bands);
        const ChannelView pred{dims, channels, probs};
        const ChannelView phi_view{dims, bands.count(), stack};
        auto r = combined_loss(pred, s_gt, phi_view, s_phi_gt, 1.0, 0);
        if (probs_out) *probs_out = std::move(probs);
        if (bands_out) *bands_out = std::move(stack);
        return r;
    };

    Tape tape;
    std::vector<double> probs, stack;
    auto base = forward(logits, &tape, &probs, &stack);

    std::vector<double> grad_probs = std::move(base.grad_probs);
    {
        const auto& phi = tape.fields.back();
        const auto grad_phi =
            band_stack_backward_d(phi, bands, base.grad_phi_channels);
        const auto grad_soft = soft_backward_d(tape, grad_phi);
        for (std::size_t i = 0; i < grad_probs.size(); ++i) {
            grad_probs[i] += grad_soft[i];
        }
    }
    std::vector<double> analytic(logits.size());
    softmax_backward(probs, grad_probs, vox, channels, analytic);

    ErrorTracker tracker;
    std::vector<double> pert = logits;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        pert[i] = logits[i] + kStep;
        const double lp = forward(pert, nullptr, nullptr, nullptr).breakdown.total;
        pert[i] = logits[i] - kStep;
        const double lm = forward(pert, nullptr, nullptr, nullptr).breakdown.total;
        pert[i] = logits[i];
        tracker.record(analytic[i], (lp - lm) / (2.0 * kStep));
    }
    return tracker.r;
}

}  // namespace lamina
