#include <doctest.h>

#include <cmath>
#include <random>

#include "lamina/autodiff.hpp"
#include "lamina/gradcheck.hpp"
#include "lamina/labelize.hpp"
#include "lamina/loss.hpp"
#include "lamina/phantom.hpp"

using namespace lamina;

namespace {

struct Stack {
    GridDims dims;
    int channels;
    std::vector<double> values;
    ChannelView view() const { return ChannelView{dims, channels, values}; }
    double& at(int c, std::size_t v) {
        return values[static_cast<std::size_t>(c) * dims.voxel_count() + v];
    }
};

Stack one_hot_stack(const LabelField3D& labels, int channels) {
    Stack s{labels.dims, channels,
            std::vector<double>(labels.dims.voxel_count() *
                                static_cast<std::size_t>(channels))};
    for (std::size_t v = 0; v < labels.labels.size(); ++v) {
        s.at(labels.labels[v], v) = 1.0;
    }
    return s;
}

LabelField3D random_labels(std::mt19937& rng, const GridDims& d, int lo, int hi) {
    LabelField3D labels(d);
    std::uniform_int_distribution<int> pick(lo, hi);
    for (auto& l : labels.labels) l = static_cast<std::uint8_t>(pick(rng));
    return labels;
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("perfect one-hot prediction scores near zero") {
    std::mt19937 rng(1);
    const GridDims d(5, 5, 5);
    const auto gt = random_labels(rng, d, 1, 3);
    const auto pred = one_hot_stack(gt, 4);
    CHECK(soft_dice(pred.view(), gt) < 1e-4);
    CHECK(cross_entropy(pred.view(), gt) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("hand-computed dice on a partial overlap") {
    // |gt| = 4, |pred| = 4, overlap 2 -> dice 2*2/(4+4) = 0.5 for the single
    // averaged class, so the loss is 0.5
    const GridDims d(8, 1, 1);
    LabelField3D gt(d);
    for (int x = 0; x < 4; ++x) gt.at(x, 0, 0) = 1;
    Stack pred{d, 2, std::vector<double>(16, 0.0)};
    for (std::size_t v = 2; v < 6; ++v) pred.at(1, v) = 1.0;  // overlap at 2,3
    const double loss = soft_dice(pred.view(), gt, /*ignore_label=*/255);
    CHECK(loss == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("all voxels ignored raises EmptyDomain") {
    const GridDims d(3, 3, 1);
    LabelField3D gt(d);  // all zeros = ignore
    Stack pred{d, 4, std::vector<double>(d.voxel_count() * 4, 0.25)};
    CHECK_THROWS_AS(soft_dice(pred.view(), gt), EmptyDomain);
    CHECK_THROWS_AS(cross_entropy(pred.view(), gt), EmptyDomain);
}

TEST_CASE("uniform prediction gives log of the class count") {
    std::mt19937 rng(2);
    const GridDims d(4, 4, 4);
    const auto gt = random_labels(rng, d, 1, 3);
    Stack pred{d, 4, std::vector<double>(d.voxel_count() * 4, 0.25)};
    CHECK(cross_entropy(pred.view(), gt) ==
          doctest::Approx(1.38629436111989061).epsilon(1e-12));
}

TEST_CASE("cross entropy gradient is -1/p at the true class over N") {
    const GridDims d(2, 1, 1);
    LabelField3D gt(d);
    gt.labels = {1, 2};
    Stack pred{d, 3, {0.1, 0.3, 0.6, 0.2, 0.3, 0.5}};  // channel-major
    std::vector<double> grad(6, 0.0);
    cross_entropy(pred.view(), gt, 0, &grad);
    CHECK(grad[2] == doctest::Approx(-1.0 / (2.0 * 0.6)).epsilon(1e-12));
    CHECK(grad[5] == doctest::Approx(-1.0 / (2.0 * 0.5)).epsilon(1e-12));
    CHECK(grad[0] == 0.0);
    CHECK(grad[3] == 0.0);
}

TEST_CASE("dice and cross entropy gradients match finite differences") {
    std::mt19937 rng(3);
    const GridDims d(4, 3, 3);
    const std::size_t vox = d.voxel_count();
    const auto gt = random_labels(rng, d, 0, 3);  // includes ignored voxels
    Stack pred{d, 4, std::vector<double>(vox * 4)};
    std::uniform_real_distribution<double> uni(0.05, 0.95);
    for (auto& v : pred.values) v = uni(rng);

    for (int which : {0, 1}) {
        auto eval = [&](const Stack& s) {
            return which == 0 ? soft_dice(s.view(), gt)
                              : cross_entropy(s.view(), gt);
        };
        std::vector<double> grad(pred.values.size(), 0.0);
        if (which == 0) {
            soft_dice(pred.view(), gt, 0, &grad);
        } else {
            cross_entropy(pred.view(), gt, 0, &grad);
        }
        Stack pert = pred;
        const double h = 1e-6;
        for (std::size_t i = 0; i < pred.values.size(); ++i) {
            pert.values[i] = pred.values[i] + h;
            const double lp = eval(pert);
            pert.values[i] = pred.values[i] - h;
            const double lm = eval(pert);
            pert.values[i] = pred.values[i];
            const double fd = (lp - lm) / (2.0 * h);
            CHECK(std::abs(fd - grad[i]) < 1e-5);
        }
    }
}

TEST_CASE("combined loss: perfect prediction and additive structure") {
    std::mt19937 rng(4);
    const GridDims d(4, 4, 4);
    const auto gt = random_labels(rng, d, 1, 3);
    const auto pred = one_hot_stack(gt, 4);
    const auto phi_gt = random_labels(rng, d, 1, 10);
    const auto phi_pred = one_hot_stack(phi_gt, 11);

    const auto r = combined_loss(pred.view(), gt, phi_pred.view(), phi_gt);
    CHECK(r.breakdown.total < 1e-3);
    CHECK(r.breakdown.total ==
          doctest::Approx(r.breakdown.dice_tissue + r.breakdown.ce_tissue +
                          r.breakdown.dice_laplace + r.breakdown.ce_laplace));

    // detaching the laminar path reproduces the tissue-only objective
    const ChannelView empty{d, 11, {}};
    const auto tissue_only = combined_loss(pred.view(), gt, empty, phi_gt);
    CHECK(tissue_only.breakdown.dice_laplace == 0.0);
    CHECK(tissue_only.breakdown.ce_laplace == 0.0);
    CHECK(tissue_only.breakdown.total ==
          doctest::Approx(r.breakdown.dice_tissue + r.breakdown.ce_tissue)
              .epsilon(1e-12));
}

TEST_CASE("losses are nonnegative and dice bounded") {
    std::mt19937 rng(5);
    const GridDims d(5, 4, 3);
    const auto gt = random_labels(rng, d, 0, 3);
    Stack pred{d, 4, std::vector<double>(d.voxel_count() * 4)};
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        for (auto& v : pred.values) v = uni(rng);
        const double dl = soft_dice(pred.view(), gt);
        const double cl = cross_entropy(pred.view(), gt);
        CHECK(dl >= 0.0);
        CHECK(dl <= 1.0 + 1e-5);
        CHECK(cl >= 0.0);
    }
}

TEST_CASE("changing predictions at ignored voxels changes nothing") {
    std::mt19937 rng(6);
    const GridDims d(4, 4, 2);
    auto gt = random_labels(rng, d, 1, 3);
    gt.labels[0] = 0;
    gt.labels[5] = 0;
    Stack pred{d, 4, std::vector<double>(d.voxel_count() * 4)};
    std::uniform_real_distribution<double> uni(0.05, 0.95);
    for (auto& v : pred.values) v = uni(rng);

    const double d0 = soft_dice(pred.view(), gt);
    const double c0 = cross_entropy(pred.view(), gt);
    for (int c = 0; c < 4; ++c) {
        pred.at(c, 0) = uni(rng);
        pred.at(c, 5) = uni(rng);
    }
    CHECK(soft_dice(pred.view(), gt) == d0);
    CHECK(cross_entropy(pred.view(), gt) == c0);
}

TEST_CASE("consistent class relabeling leaves the losses unchanged") {
    std::mt19937 rng(7);
    const GridDims d(4, 4, 3);
    const auto gt = random_labels(rng, d, 0, 3);
    const std::size_t vox = d.voxel_count();
    Stack pred{d, 4, std::vector<double>(vox * 4)};
    std::uniform_real_distribution<double> uni(0.05, 0.95);
    for (auto& v : pred.values) v = uni(rng);

    // permutation of classes 1..3, fixing the ignore code 0
    const std::array<int, 4> perm{0, 3, 1, 2};
    LabelField3D gt_p(d);
    Stack pred_p{d, 4, std::vector<double>(vox * 4)};
    for (std::size_t v = 0; v < vox; ++v) {
        gt_p.labels[v] =
            static_cast<std::uint8_t>(perm[static_cast<std::size_t>(gt.labels[v])]);
        for (int c = 0; c < 4; ++c) {
            pred_p.at(perm[static_cast<std::size_t>(c)], v) = pred.at(c, v);
        }
    }
    CHECK(soft_dice(pred_p.view(), gt_p) ==
          doctest::Approx(soft_dice(pred.view(), gt)).epsilon(1e-12));
    CHECK(cross_entropy(pred_p.view(), gt_p) ==
          doctest::Approx(cross_entropy(pred.view(), gt)).epsilon(1e-12));
}

TEST_CASE("bridged banks raise the laminar dice loss") {
    PhantomSpec spec;
    spec.kind = PhantomKind::Sulcus;
    spec.dims = GridDims(32, 16, 20);
    spec.fold_wavelength = 16.0;
    spec.fold_amplitude = 2.0;
    spec.gm_thickness = 5;
    spec.gap_width = 1;
    spec.seed = 11;

    spec.bridge = false;
    const auto resolved = make_phantom(spec);
    spec.bridge = true;
    const auto fused = make_phantom(spec);

    // the gt laminar labeling from the reference field
    std::vector<double> phi_gt(resolved.phi_gt.values.begin(),
                               resolved.phi_gt.values.end());
    const BandSpec bands = BandSpec::defaults();
    const auto s_phi_gt =
        argmax_labels_d(band_stack_d(phi_gt, bands), spec.dims, bands.count());

    SoftLaplaceConfig cfg;
    cfg.iters = 60;
    auto laminar_dice = [&](const SoftSegmentation& probs) {
        std::vector<double> p(probs.probs.begin(), probs.probs.end());
        const auto phi = soft_forward_d(p, spec.dims, probs.channels, cfg, nullptr);
        const auto stack = band_stack_d(phi, bands);
        const ChannelView view{spec.dims, bands.count(), stack};
        return soft_dice(view, s_phi_gt);
    };
    const double resolved_loss = laminar_dice(resolved.corrupted_probs);
    const double fused_loss = laminar_dice(fused.corrupted_probs);
    CHECK(fused_loss > resolved_loss);
}

TEST_CASE("full-chain gradient against finite differences") {
    const auto r = gradcheck_full_chain(GridDims(6, 6, 6), 3, 7);
    CHECK(r.max_rel_err < 1e-3);
    CHECK(r.entries == 6 * 6 * 6 * 4);
}

}  // TEST_SUITE
