/// @file lamina_cli.cpp
/// @brief Command-line front door: phantoms, hard and soft Laplace solves,
///        band labelization, losses, evaluation metrics, thickness probes,
///        logit-descent runs and gradient checks, all file to file.
///
/// Exit codes: 0 success, 1 usage error, 2 data/computation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "lamina/autodiff.hpp"
#include "lamina/gradcheck.hpp"
#include "lamina/labelize.hpp"
#include "lamina/loss.hpp"
#include "lamina/metrics.hpp"
#include "lamina/optimize.hpp"
#include "lamina/phantom.hpp"
#include "lamina/solver.hpp"
#include "lamina/vgrid_io.hpp"

namespace {

using nlohmann::json;
using namespace lamina;

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(std::stoi(item));
    }
    return out;
}

GridDims parse_dims(const std::string& dims_text, const std::string& spacing_text) {
    const auto d = parse_int_list(dims_text);
    if (d.size() != 3) {
        throw InvalidArgument("--dims expects nx,ny,nz");
    }
    double s[3] = {1.0, 1.0, 1.0};
    if (!spacing_text.empty()) {
        std::stringstream ss(spacing_text);
        std::string item;
        int i = 0;
        while (std::getline(ss, item, ',') && i < 3) s[i++] = std::stod(item);
        if (i != 3) throw InvalidArgument("--spacing expects sx,sy,sz");
    }
    return GridDims(d[0], d[1], d[2], s[0], s[1], s[2]);
}

std::optional<double> parse_omega(const std::string& text) {
    if (text == "auto") return std::nullopt;
    return std::stod(text);
}

/// Shared flags of every command that maps label codes onto a Laplace problem.
struct ProblemFlags {
    std::string domain_labels = "1";
    std::string source_labels = "2,4";
    std::string sink_labels = "3";

    void attach(CLI::App* cmd) {
        cmd->add_option("--domain-labels", domain_labels,
                        "codes solved for (default 1 = GM)");
        cmd->add_option("--source-labels", source_labels,
                        "codes fixed at 0 (default 2,4 = WM,SRLM)");
        cmd->add_option("--sink-labels", sink_labels,
                        "codes fixed at 1 (default 3 = BG)");
    }
    LaplaceProblem build(const LabelField3D& labels) const {
        return LaplaceProblem::from_labels(labels, parse_int_list(domain_labels),
                                           parse_int_list(source_labels),
                                           parse_int_list(sink_labels));
    }
};

int cmd_phantom(const std::string& kind, const std::string& dims_text,
                const std::string& spacing_text, const std::string& out_prefix,
                std::uint64_t seed, int slab_thickness, double a, double b,
                double wavelength, double amplitude, int gm_thickness, int gap,
                bool bridge, int annotate_to_x) {
    PhantomSpec spec;
    spec.dims = parse_dims(dims_text, spacing_text);
    spec.seed = seed;
    if (kind == "slab") {
        spec.kind = PhantomKind::Slab;
        spec.slab_thickness = slab_thickness;
    } else if (kind == "shell") {
        spec.kind = PhantomKind::Shell;
        spec.shell_inner = a;
        spec.shell_outer = b;
    } else if (kind == "sulcus") {
        spec.kind = PhantomKind::Sulcus;
        spec.fold_wavelength = wavelength;
        spec.fold_amplitude = amplitude;
        spec.gm_thickness = gm_thickness;
        spec.gap_width = gap;
        spec.bridge = bridge;
        spec.annotated_max_x = annotate_to_x;
    } else {
        throw InvalidArgument("unknown phantom kind '" + kind + "'");
    }
    const auto ph = make_phantom(spec);
    const std::string labels_path = out_prefix + "_labels.vgrid";
    const std::string phi_path = out_prefix + "_phi.vgrid";
    const std::string probs_path = out_prefix + "_probs.vgrid";
    write_vgrid(ph.gt_labels, labels_path);
    write_vgrid(ph.phi_gt, phi_path);
    ChannelStack stack;
    stack.dims = ph.corrupted_probs.dims;
    stack.channels = ph.corrupted_probs.channels;
    stack.values = ph.corrupted_probs.probs;
    write_vgrid(stack, probs_path);
    json j;
    j["labels"] = labels_path;
    j["phi"] = phi_path;
    j["probs"] = probs_path;
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_solve(const std::string& labels_path, const std::string& out_path,
              const ProblemFlags& flags, int iters, const std::string& omega,
              double tolerance, const std::string& scheme, double domain_init,
              double exterior_init, int threads) {
    const auto labels = read_labels(labels_path);
    const auto problem = flags.build(labels);
    json report;
    if (scheme == "reference") {
        SolveReport rep;
        const auto phi = solve_reference(problem, 1e-5, threads, &rep);
        write_vgrid(phi, out_path);
        report["iterations_run"] = rep.iterations_run;
        report["final_change"] = rep.final_change;
        report["converged"] = rep.converged;
    } else if (scheme == "sor") {
        SolverConfig cfg;
        cfg.omega = parse_omega(omega);
        cfg.max_iters = iters;
        cfg.tolerance = tolerance;
        cfg.threads = threads;
        const auto init = make_init(problem, static_cast<float>(domain_init),
                                    static_cast<float>(exterior_init));
        const auto [phi, rep] = solve_sor(problem, init, cfg);
        write_vgrid(phi, out_path);
        report["iterations_run"] = rep.iterations_run;
        report["final_change"] = rep.final_change;
        report["converged"] = rep.converged;
    } else {
        throw InvalidArgument("unknown scheme '" + scheme + "'");
    }
    report["out"] = out_path;
    std::cout << report.dump() << '\n';
    return 0;
}

int cmd_soft_solve(const std::string& probs_path, const std::string& out_path,
                   int iters, const std::string& omega, bool no_clamp,
                   int threads) {
    const auto seg = SoftSegmentation::from_stack(read_soft(probs_path));
    SoftLaplaceConfig cfg;
    cfg.iters = iters;
    cfg.omega = parse_omega(omega);
    cfg.clamp_each_iter = !no_clamp;
    cfg.threads = threads;
    std::vector<double> probs(seg.probs.begin(), seg.probs.end());
    const auto phi_d = soft_forward_d(probs, seg.dims, seg.channels, cfg, nullptr);
    ScalarField3D phi(seg.dims);
    for (std::size_t v = 0; v < phi_d.size(); ++v) {
        phi.values[v] = static_cast<float>(phi_d[v]);
    }
    phi.require_finite();
    write_vgrid(phi, out_path);
    json j;
    j["out"] = out_path;
    j["iters"] = iters;
    std::cout << j.dump() << '\n';
    return 0;
}

BandSpec bands_from_flags(const std::string& bands_text, double beta) {
    if (bands_text.empty()) {
        BandSpec spec = BandSpec::defaults();
        spec.beta = beta;
        return spec;
    }
    return parse_bands(bands_text, beta);
}

int cmd_labelize(const std::string& phi_path, const std::string& bands_text,
                 double beta, const std::string& soft_out,
                 const std::string& argmax_out, int bins,
                 const std::string& labels_path, const ProblemFlags& flags,
                 const std::string& bins_out) {
    const auto phi = read_scalar(phi_path);
    const BandSpec spec = bands_from_flags(bands_text, beta);
    json j;
    if (!soft_out.empty() || !argmax_out.empty()) {
        const auto stack = soft_one_hot(phi, spec);
        if (!soft_out.empty()) {
            write_vgrid(stack, soft_out);
            j["soft"] = soft_out;
        }
        if (!argmax_out.empty()) {
            write_vgrid(argmax_labels(stack), argmax_out);
            j["argmax"] = argmax_out;
        }
    }
    if (!bins_out.empty()) {
        if (labels_path.empty()) {
            throw InvalidArgument("--bins-out needs --labels to define the domain");
        }
        const auto labels = read_labels(labels_path);
        Mask3D domain(labels.dims);
        for (int code : parse_int_list(flags.domain_labels)) {
            for (std::size_t i = 0; i < labels.labels.size(); ++i) {
                if (labels.labels[i] == code) domain.on[i] = 1;
            }
        }
        write_vgrid(laminar_bins(phi, domain, bins), bins_out);
        j["bins"] = bins_out;
    }
    if (j.empty()) {
        throw InvalidArgument("labelize: no output requested");
    }
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_loss(const std::string& probs_path, const std::string& gt_labels_path,
             const std::string& gt_phi_path, int iters, const std::string& omega,
             const std::string& bands_text, double beta, double laplace_weight,
             int ignore_label, int threads) {
    const auto seg = SoftSegmentation::from_stack(read_soft(probs_path));
    const auto s_gt = read_labels(gt_labels_path);
    const BandSpec bands = bands_from_flags(bands_text, beta);

    std::vector<double> probs(seg.probs.begin(), seg.probs.end());
    const ChannelView pred{seg.dims, seg.channels, probs};

    std::vector<double> band_values;
    LabelField3D s_phi_gt(seg.dims);
    if (laplace_weight > 0.0) {
        if (gt_phi_path.empty()) {
            throw InvalidArgument("loss: --gt-phi is required unless --laplace-weight 0");
        }
        const auto gt_phi = read_scalar(gt_phi_path);
        std::vector<double> phi_gt(gt_phi.values.begin(), gt_phi.values.end());
        s_phi_gt = argmax_labels_d(band_stack_d(phi_gt, bands), seg.dims,
                                   bands.count());
        SoftLaplaceConfig cfg;
        cfg.iters = iters;
        cfg.omega = parse_omega(omega);
        cfg.threads = threads;
        const auto phi =
            soft_forward_d(probs, seg.dims, seg.channels, cfg, nullptr);
        band_values = band_stack_d(phi, bands);
    }
    const ChannelView phi_view{seg.dims, bands.count(), band_values};
    const auto r =
        combined_loss(pred, s_gt, phi_view, s_phi_gt, laplace_weight, ignore_label);
    json j;
    j["dice_tissue"] = r.breakdown.dice_tissue;
    j["ce_tissue"] = r.breakdown.ce_tissue;
    j["dice_laplace"] = r.breakdown.dice_laplace;
    j["ce_laplace"] = r.breakdown.ce_laplace;
    j["total"] = r.breakdown.total;
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_metrics(const std::string& pred_path, const std::string& gt_path,
                const std::string& labels_text, int hd95_label, bool laplace,
                int layers, int eval_iters, int threads) {
    const auto pred = read_labels(pred_path);
    const auto gt = read_labels(gt_path);
    MetricReport report;
    for (int code : parse_int_list(labels_text)) {
        report.dsc_per_label[code] = dsc(pred, gt, code);
    }
    report.hd95_mm =
        hd95(Mask3D::from_label(pred, static_cast<std::uint8_t>(hd95_label)),
             Mask3D::from_label(gt, static_cast<std::uint8_t>(hd95_label)));
    if (laplace) {
        report.laplace_layer_dsc = laplace_eval(pred, gt, layers, eval_iters, threads);
    }
    json j;
    json dsc_map;
    for (const auto& [code, value] : report.dsc_per_label) {
        dsc_map[std::to_string(code)] = value;
    }
    j["dsc"] = dsc_map;
    j["hd95_mm"] = report.hd95_mm;
    if (report.laplace_layer_dsc) {
        j["laplace_layer_dsc"] = *report.laplace_layer_dsc;
    }
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_thickness(const std::string& gm_labels_path, int gm_label,
                  const std::string& landmarks_path, double search_radius_mm) {
    const auto labels = read_labels(gm_labels_path);
    const auto gm = Mask3D::from_label(labels, static_cast<std::uint8_t>(gm_label));
    std::ifstream in(landmarks_path);
    if (!in) {
        throw DataError("cannot open '" + landmarks_path + "'");
    }
    json landmarks;
    try {
        in >> landmarks;
    } catch (const json::exception&) {
        throw DataError("'" + landmarks_path + "' is not a JSON landmark list");
    }
    if (!landmarks.is_array()) {
        throw DataError("landmark file must hold an array of [x,y,z] coordinates");
    }
    json out = json::array();
    for (const auto& lm : landmarks) {
        if (!lm.is_array() || lm.size() != 3) {
            throw DataError("each landmark must be an [x,y,z] triple");
        }
        const std::array<int, 3> p{lm[0].get<int>(), lm[1].get<int>(),
                                   lm[2].get<int>()};
        json entry;
        entry["landmark"] = lm;
        entry["thickness_mm"] = thickness_at(gm, p, search_radius_mm);
        out.push_back(entry);
    }
    std::cout << out.dump() << '\n';
    return 0;
}

int cmd_optimize(const std::string& probs_path, const std::string& gt_labels_path,
                 const std::string& gt_phi_path, const std::string& out_probs,
                 const std::string& trace_path, int steps, double lr,
                 double laplace_weight, int iters, const std::string& omega,
                 const std::string& bands_text, double beta, std::uint64_t seed,
                 int ignore_label, int threads) {
    const auto init = SoftSegmentation::from_stack(read_soft(probs_path));
    const auto s_gt = read_labels(gt_labels_path);
    const auto gt_phi = read_scalar(gt_phi_path);

    OptimizeConfig cfg;
    cfg.steps = steps;
    cfg.learning_rate = lr;
    cfg.laplace_weight = laplace_weight;
    cfg.solver.iters = iters;
    cfg.solver.omega = parse_omega(omega);
    cfg.solver.threads = threads;
    cfg.bands = bands_from_flags(bands_text, beta);
    cfg.seed = seed;
    cfg.ignore_label = ignore_label;

    std::vector<double> phi_gt(gt_phi.values.begin(), gt_phi.values.end());
    const auto s_phi_gt = argmax_labels_d(band_stack_d(phi_gt, cfg.bands),
                                          init.dims, cfg.bands.count());

    const auto res = run_descent(init, s_gt, s_phi_gt, cfg);
    ChannelStack out;
    out.dims = res.final_probs.dims;
    out.channels = res.final_probs.channels;
    out.values = res.final_probs.probs;
    write_vgrid(out, out_probs);
    if (!trace_path.empty()) {
        write_trace_csv(res.trace, trace_path);
    }
    json j;
    j["out_probs"] = out_probs;
    if (!trace_path.empty()) j["trace"] = trace_path;
    j["steps"] = steps;
    j["final_total"] = res.trace.back().total;
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_gradcheck(const std::string& dims_text, int iters, std::uint64_t seed,
                  int instances, bool full_chain) {
    const GridDims dims = parse_dims(dims_text, "");
    const double threshold = full_chain ? 1e-3 : 1e-4;
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
        const auto r = full_chain ? gradcheck_full_chain(dims, iters, s)
                                  : gradcheck_solver(dims, iters, s);
        worst = std::max(worst, r.max_rel_err);
        json j;
        j["seed"] = s;
        j["max_rel_err"] = r.max_rel_err;
        j["max_abs_err_small"] = r.max_abs_err_small;
        j["entries"] = r.entries;
        std::cout << j.dump() << '\n';
    }
    if (!(worst < threshold)) {
        std::cerr << "gradcheck: max relative error " << worst << " exceeds "
                  << threshold << '\n';
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Laplace-field tools for laminar segmentation"};
    app.require_subcommand(1);

    // phantom
    auto* phantom = app.add_subcommand("phantom", "generate a synthetic ground-truth triple");
    std::string ph_kind, ph_dims, ph_spacing, ph_out;
    std::uint64_t ph_seed = 0;
    int ph_thickness = 10, ph_gm_thickness = 6, ph_gap = 1, ph_annotate = -1;
    double ph_a = 6.0, ph_b = 14.0, ph_wavelength = 24.0, ph_amplitude = 3.0;
    bool ph_bridge = false;
    phantom->add_option("--kind", ph_kind, "slab | shell | sulcus")->required();
    phantom->add_option("--dims", ph_dims, "nx,ny,nz")->required();
    phantom->add_option("--spacing", ph_spacing, "sx,sy,sz in mm (default 1,1,1)");
    phantom->add_option("--out", ph_out, "output prefix")->required();
    phantom->add_option("--seed", ph_seed, "jitter seed");
    phantom->add_option("--thickness", ph_thickness, "slab: GM layers");
    phantom->add_option("--a", ph_a, "shell: inner radius in voxels");
    phantom->add_option("--b", ph_b, "shell: outer radius in voxels");
    phantom->add_option("--wavelength", ph_wavelength, "sulcus: fold wavelength");
    phantom->add_option("--amplitude", ph_amplitude, "sulcus: fold amplitude");
    phantom->add_option("--gm-thickness", ph_gm_thickness, "sulcus: GM layers");
    phantom->add_option("--gap", ph_gap, "sulcus: gap width in columns");
    phantom->add_flag("--bridge", ph_bridge, "sulcus: fuse the banks in the probabilities");
    phantom->add_option("--annotate-to-x", ph_annotate,
                        "sulcus: clear labels at x >= this column (-1 = keep all)");

    // solve
    auto* solve = app.add_subcommand("solve", "hard-boundary Laplace solve from a label field");
    std::string so_labels, so_out, so_omega = "auto", so_scheme = "sor";
    ProblemFlags so_flags;
    int so_iters = 120, so_threads = 1;
    double so_tolerance = 0.0, so_domain_init = 0.5, so_exterior_init = 0.0;
    solve->add_option("--labels", so_labels, "label .vgrid")->required();
    solve->add_option("--out", so_out, "output scalar .vgrid")->required();
    solve->add_option("--iters", so_iters, "iteration budget (sor)");
    solve->add_option("--omega", so_omega, "relaxation factor or 'auto'");
    solve->add_option("--tolerance", so_tolerance, "early-stop mean change (0 = off)");
    solve->add_option("--scheme", so_scheme, "sor | reference");
    solve->add_option("--domain-init", so_domain_init, "initial domain value");
    solve->add_option("--exterior-init", so_exterior_init, "value at exterior voxels");
    solve->add_option("--threads", so_threads, "worker threads");
    so_flags.attach(solve);

    // soft-solve
    auto* soft = app.add_subcommand("soft-solve", "differentiable solve from probability maps");
    std::string sf_probs, sf_out, sf_omega = "auto";
    int sf_iters = 60, sf_threads = 1;
    bool sf_no_clamp = false;
    soft->add_option("--probs", sf_probs, "soft .vgrid of class probabilities")->required();
    soft->add_option("--out", sf_out, "output scalar .vgrid")->required();
    soft->add_option("--iters", sf_iters, "iteration budget");
    soft->add_option("--omega", sf_omega, "relaxation factor or 'auto'");
    soft->add_flag("--no-clamp", sf_no_clamp, "skip per-half-sweep boundary re-blending");
    soft->add_option("--threads", sf_threads, "worker threads");

    // labelize
    auto* labelize = app.add_subcommand("labelize", "band channels / laminar labels from a field");
    std::string lz_phi, lz_bands, lz_soft_out, lz_argmax_out, lz_labels, lz_bins_out;
    double lz_beta = 10.0;
    int lz_bins = 5;
    ProblemFlags lz_flags;
    labelize->add_option("--phi", lz_phi, "scalar .vgrid")->required();
    labelize->add_option("--bands", lz_bands, "band list lo:hi,lo:hi,...");
    labelize->add_option("--beta", lz_beta, "band steepness");
    labelize->add_option("--soft-out", lz_soft_out, "write the band channel stack");
    labelize->add_option("--argmax-out", lz_argmax_out, "write argmax labels");
    labelize->add_option("--bins", lz_bins, "equal-width layer count");
    labelize->add_option("--labels", lz_labels, "label .vgrid defining the bin domain");
    labelize->add_option("--bins-out", lz_bins_out, "write laminar bin labels");
    lz_flags.attach(labelize);

    // loss
    auto* loss_cmd = app.add_subcommand("loss", "combined tissue + laminar objective");
    std::string lo_probs, lo_gt, lo_phi, lo_bands, lo_omega = "auto";
    int lo_iters = 60, lo_ignore = 0, lo_threads = 1;
    double lo_beta = 10.0, lo_weight = 1.0;
    loss_cmd->add_option("--probs", lo_probs, "predicted probabilities .vgrid")->required();
    loss_cmd->add_option("--gt-labels", lo_gt, "ground truth labels .vgrid")->required();
    loss_cmd->add_option("--gt-phi", lo_phi, "ground truth field .vgrid");
    loss_cmd->add_option("--iters", lo_iters, "solver iterations");
    loss_cmd->add_option("--omega", lo_omega, "relaxation factor or 'auto'");
    loss_cmd->add_option("--bands", lo_bands, "band list");
    loss_cmd->add_option("--beta", lo_beta, "band steepness");
    loss_cmd->add_option("--laplace-weight", lo_weight, "weight of the laminar term");
    loss_cmd->add_option("--ignore-label", lo_ignore, "ignored gt code");
    loss_cmd->add_option("--threads", lo_threads, "worker threads");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "per-label DSC, HD95 and the laminar protocol");
    std::string me_pred, me_gt, me_labels = "1,2,3,4";
    int me_hd95_label = 1, me_layers = 5, me_iters = 120, me_threads = 1;
    bool me_laplace = false;
    metrics->add_option("--pred", me_pred, "predicted labels .vgrid")->required();
    metrics->add_option("--gt", me_gt, "ground truth labels .vgrid")->required();
    metrics->add_option("--labels", me_labels, "codes to report DSC for");
    metrics->add_option("--hd95-label", me_hd95_label, "code for the HD95 surface");
    metrics->add_flag("--laplace", me_laplace, "run the laminar re-segmentation protocol");
    metrics->add_option("--layers", me_layers, "laminar layers");
    metrics->add_option("--eval-iters", me_iters, "solver budget for the protocol");
    metrics->add_option("--threads", me_threads, "worker threads");

    // thickness
    auto* thickness = app.add_subcommand("thickness", "inscribed-sphere thickness at landmarks");
    std::string th_labels, th_landmarks;
    int th_gm_label = 1;
    double th_radius = 2.0;
    thickness->add_option("--gm-labels", th_labels, "label .vgrid")->required();
    thickness->add_option("--gm-label", th_gm_label, "GM code");
    thickness->add_option("--landmarks", th_landmarks, "JSON array of [x,y,z]")->required();
    thickness->add_option("--search-radius-mm", th_radius, "center search radius");

    // optimize
    auto* optimize = app.add_subcommand("optimize", "gradient descent on per-voxel logits");
    std::string op_probs, op_gt, op_phi, op_out, op_trace, op_bands, op_omega = "auto";
    int op_steps = 200, op_iters = 60, op_ignore = 0, op_threads = 1;
    double op_lr = 2000.0, op_weight = 1.0, op_beta = 10.0;
    std::uint64_t op_seed = 0;
    optimize->add_option("--probs", op_probs, "initial probabilities .vgrid")->required();
    optimize->add_option("--gt-labels", op_gt, "ground truth labels .vgrid")->required();
    optimize->add_option("--gt-phi", op_phi, "ground truth field .vgrid")->required();
    optimize->add_option("--out-probs", op_out, "final probabilities .vgrid")->required();
    optimize->add_option("--trace", op_trace, "per-step loss CSV");
    optimize->add_option("--steps", op_steps, "descent steps");
    optimize->add_option("--lr", op_lr, "learning rate");
    optimize->add_option("--laplace-weight", op_weight, "weight of the laminar term");
    optimize->add_option("--iters", op_iters, "solver iterations");
    optimize->add_option("--omega", op_omega, "relaxation factor or 'auto'");
    optimize->add_option("--bands", op_bands, "band list");
    optimize->add_option("--beta", op_beta, "band steepness");
    optimize->add_option("--seed", op_seed, "seed recorded with the run");
    optimize->add_option("--ignore-label", op_ignore, "ignored gt code");
    optimize->add_option("--threads", op_threads, "worker threads");

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "adjoint vs central finite differences");
    std::string gc_dims = "6,6,6";
    int gc_iters = 3, gc_instances = 1;
    std::uint64_t gc_seed = 7;
    bool gc_full = false;
    gradcheck->add_option("--dims", gc_dims, "grid extents");
    gradcheck->add_option("--iters", gc_iters, "solver iterations");
    gradcheck->add_option("--seed", gc_seed, "first instance seed");
    gradcheck->add_option("--instances", gc_instances, "number of seeded instances");
    gradcheck->add_flag("--full-chain", gc_full, "check logits -> loss instead of <g,phi>");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // help exits 0, any usage error exits 1
    }

    try {
        if (phantom->parsed()) {
            return cmd_phantom(ph_kind, ph_dims, ph_spacing, ph_out, ph_seed,
                               ph_thickness, ph_a, ph_b, ph_wavelength,
                               ph_amplitude, ph_gm_thickness, ph_gap, ph_bridge,
                               ph_annotate);
        }
        if (solve->parsed()) {
            return cmd_solve(so_labels, so_out, so_flags, so_iters, so_omega,
                             so_tolerance, so_scheme, so_domain_init,
                             so_exterior_init, so_threads);
        }
        if (soft->parsed()) {
            return cmd_soft_solve(sf_probs, sf_out, sf_iters, sf_omega,
                                  sf_no_clamp, sf_threads);
        }
        if (labelize->parsed()) {
            return cmd_labelize(lz_phi, lz_bands, lz_beta, lz_soft_out,
                                lz_argmax_out, lz_bins, lz_labels, lz_flags,
                                lz_bins_out);
        }
        if (loss_cmd->parsed()) {
            return cmd_loss(lo_probs, lo_gt, lo_phi, lo_iters, lo_omega, lo_bands,
                            lo_beta, lo_weight, lo_ignore, lo_threads);
        }
        if (metrics->parsed()) {
            return cmd_metrics(me_pred, me_gt, me_labels, me_hd95_label,
                               me_laplace, me_layers, me_iters, me_threads);
        }
        if (thickness->parsed()) {
            return cmd_thickness(th_labels, th_gm_label, th_landmarks, th_radius);
        }
        if (optimize->parsed()) {
            return cmd_optimize(op_probs, op_gt, op_phi, op_out, op_trace,
                                op_steps, op_lr, op_weight, op_iters, op_omega,
                                op_bands, op_beta, op_seed, op_ignore, op_threads);
        }
        if (gradcheck->parsed()) {
            return cmd_gradcheck(gc_dims, gc_iters, gc_seed, gc_instances, gc_full);
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
