#include "lamina/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "lamina/parallel.hpp"
#include "lamina/solver.hpp"
#include "sweep_kernel.hpp"

namespace lamina {

using detail::SweepVoxel;

std::vector<double> default_init_weights(int channels) {
    std::vector<double> w(static_cast<std::size_t>(channels), 0.0);
    if (channels > kGm) w[kGm] = 0.5;
    if (channels > kBg) w[kBg] = 1.0;
    return w;
}

namespace {

bool is_passthrough(int channel) { return channel == kUnlabeled || channel == kGm; }

struct Prepared {
    double omega = 0.0;
    std::vector<double> weights;
    std::vector<double> pass;    // per voxel: 1 - sum of clamped-class probs
    std::vector<double> target;  // per voxel: sum of w_c * P_c over clamped c
    std::array<detail::SliceLists, 2> sweeps;  // 0=black, 1=red (all voxels)
};

Prepared prepare(std::span<const double> probs, const GridDims& dims,
                 int channels, const SoftLaplaceConfig& config) {
    if (channels < 1) {
        throw InvalidArgument("soft solve needs at least one channel");
    }
    if (config.iters < 0) {
        throw InvalidArgument("iteration count must be nonnegative");
    }
    const std::size_t vox = dims.voxel_count();
    if (probs.size() != vox * static_cast<std::size_t>(channels)) {
        throw InvalidArgument("probability buffer size mismatch");
    }
    Prepared p;
    p.omega = config.omega ? *config.omega
                           : omega_opt(std::min({dims.nx, dims.ny, dims.nz}));
    if (!(p.omega >= 1.0) || !(p.omega < 2.0)) {
        throw InvalidArgument("over-relaxation factor must lie in [1,2)");
    }
    p.weights = config.init_weights.empty() ? default_init_weights(channels)
                                            : config.init_weights;
    if (p.weights.size() != static_cast<std::size_t>(channels)) {
        throw InvalidArgument("initialization weights do not match channel count");
    }
    for (double w : p.weights) {
        if (!std::isfinite(w)) {
            throw InvalidArgument("initialization weights must be finite");
        }
    }

    p.pass.assign(vox, 1.0);
    p.target.assign(vox, 0.0);
    for (int c = 0; c < channels; ++c) {
        if (is_passthrough(c)) continue;
        const double* pc = probs.data() + static_cast<std::size_t>(c) * vox;
        const double w = p.weights[static_cast<std::size_t>(c)];
        for (std::size_t v = 0; v < vox; ++v) {
            p.pass[v] -= pc[v];
            p.target[v] += w * pc[v];
        }
    }

    p.sweeps[0].resize(static_cast<std::size_t>(dims.nz));
    p.sweeps[1].resize(static_cast<std::size_t>(dims.nz));
    for (int z = 0; z < dims.nz; ++z) {
        for (int y = 0; y < dims.ny; ++y) {
            for (int x = 0; x < dims.nx; ++x) {
                const std::uint8_t m = detail::grid_mask(dims, x, y, z);
                const int color = ((x + y + z) & 1) ? 0 : 1;
                p.sweeps[static_cast<std::size_t>(color)][static_cast<std::size_t>(z)]
                    .push_back(SweepVoxel{
                        static_cast<std::int32_t>(dims.index(x, y, z)), m,
                        detail::popcount6(m)});
            }
        }
    }
    return p;
}

std::vector<double> initial_field(std::span<const double> probs,
                                  std::size_t vox, int channels,
                                  std::span<const double> weights) {
    std::vector<double> f(vox, 0.0);
    for (int c = 0; c < channels; ++c) {
        const double* pc = probs.data() + static_cast<std::size_t>(c) * vox;
        const double w = weights[static_cast<std::size_t>(c)];
        for (std::size_t v = 0; v < vox; ++v) f[v] += w * pc[v];
    }
    return f;
}

void half_sweep(std::vector<double>& f, const detail::SliceLists& slices,
                const Prepared& p, bool clamp, int nx, std::size_t nxny,
                int threads) {
    parallel_for_units(static_cast<int>(slices.size()), threads, [&](int z) {
        for (const SweepVoxel& v : slices[static_cast<std::size_t>(z)]) {
            const std::size_t i = static_cast<std::size_t>(v.idx);
            const double sum = detail::neighbor_sum(f.data(), v, nx, nxny);
            const double upd = detail::sor_update(f[i], sum, v.k, p.omega);
            f[i] = clamp ? p.pass[i] * upd + p.target[i] : upd;
        }
    });
}

}  // namespace

ScalarField3D init_from_probs(const SoftSegmentation& seg,
                              std::span<const double> weights) {
    seg.validate();
    if (weights.size() != static_cast<std::size_t>(seg.channels)) {
        throw InvalidArgument("weight table does not cover the segmentation channels");
    }
    const std::size_t vox = seg.dims.voxel_count();
    std::vector<double> probs(seg.probs.begin(), seg.probs.end());
    const auto f = initial_field(probs, vox, seg.channels, weights);
    ScalarField3D out(seg.dims);
    for (std::size_t v = 0; v < vox; ++v) out.values[v] = static_cast<float>(f[v]);
    out.require_finite();
    return out;
}

std::vector<double> soft_forward_d(std::span<const double> probs,
                                   const GridDims& dims, int channels,
                                   const SoftLaplaceConfig& config, Tape* tape) {
    const Prepared p = prepare(probs, dims, channels, config);
    const std::size_t vox = dims.voxel_count();
    const std::size_t nxny =
        static_cast<std::size_t>(dims.nx) * static_cast<std::size_t>(dims.ny);

    std::vector<double> f = initial_field(probs, vox, channels, p.weights);
    if (tape) {
        tape->dims = dims;
        tape->channels = channels;
        tape->omega = p.omega;
        tape->iters = config.iters;
        tape->clamp = config.clamp_each_iter;
        tape->threads = config.threads;
        tape->weights = p.weights;
        tape->probs.assign(probs.begin(), probs.end());
        tape->fields.clear();
        tape->fields.reserve(2 * static_cast<std::size_t>(config.iters) + 1);
        tape->fields.push_back(f);
    }
    for (int it = 0; it < config.iters; ++it) {
        for (int color = 0; color < 2; ++color) {  // black, then red
            half_sweep(f, p.sweeps[static_cast<std::size_t>(color)], p,
                       config.clamp_each_iter, dims.nx, nxny, config.threads);
            if (tape) tape->fields.push_back(f);
        }
    }
    return f;
}

std::pair<ScalarField3D, Tape> soft_solve_forward(const SoftSegmentation& seg,
                                                  const SoftLaplaceConfig& config) {
    seg.validate();
    std::vector<double> probs(seg.probs.begin(), seg.probs.end());
    Tape tape;
    const auto f = soft_forward_d(probs, seg.dims, seg.channels, config, &tape);
    ScalarField3D out(seg.dims);
    for (std::size_t v = 0; v < f.size(); ++v) {
        out.values[v] = static_cast<float>(f[v]);
    }
    out.require_finite();
    return {std::move(out), std::move(tape)};
}

std::vector<double> replay_tape(const Tape& tape) {
    SoftLaplaceConfig config;
    config.omega = tape.omega;
    config.iters = tape.iters;
    config.init_weights = tape.weights;
    config.clamp_each_iter = tape.clamp;
    config.threads = tape.threads;
    return soft_forward_d(tape.probs, tape.dims, tape.channels, config, nullptr);
}

std::vector<double> soft_backward_d(const Tape& tape,
                                    std::span<const double> grad_out) {
    const GridDims& dims = tape.dims;
    const std::size_t vox = dims.voxel_count();
    if (grad_out.size() != vox) {
        throw InvalidArgument("output gradient does not match the tape grid");
    }
    if (tape.fields.size() != 2 * static_cast<std::size_t>(tape.iters) + 1 ||
        tape.probs.size() != vox * static_cast<std::size_t>(tape.channels)) {
        throw InvalidArgument("tape is incomplete or inconsistent");
    }
    const std::size_t nxny =
        static_cast<std::size_t>(dims.nx) * static_cast<std::size_t>(dims.ny);
    const int nx = dims.nx;

    // Per-voxel stencil data and blend coefficients, reusing the forward
    // preparation so arithmetic matches the recorded computation.
    SoftLaplaceConfig config;
    config.omega = tape.omega;
    config.iters = tape.iters;
    config.init_weights = tape.weights;
    config.clamp_each_iter = tape.clamp;
    config.threads = tape.threads;
    const Prepared p = prepare(tape.probs, dims, tape.channels, config);

    // Flat per-voxel k and parity for the gather pass.
    std::vector<std::uint8_t> k_of(vox), mask_of(vox), color_of(vox);
    for (int color = 0; color < 2; ++color) {
        for (const auto& slice : p.sweeps[static_cast<std::size_t>(color)]) {
            for (const SweepVoxel& v : slice) {
                k_of[static_cast<std::size_t>(v.idx)] = v.k;
                mask_of[static_cast<std::size_t>(v.idx)] = v.mask;
                color_of[static_cast<std::size_t>(v.idx)] =
                    static_cast<std::uint8_t>(color);
            }
        }
    }

    std::vector<double> g(grad_out.begin(), grad_out.end());
    std::vector<double> g_next(vox, 0.0);
    std::vector<double> scaled(vox, 0.0);  // gx~ for active voxels
    std::vector<double> grad_pass(vox, 0.0), grad_target(vox, 0.0);

    for (int step = 2 * tape.iters - 1; step >= 0; --step) {
        const int color = (step % 2 == 0) ? 0 : 1;  // matches forward order
        const std::vector<double>& x = tape.fields[static_cast<std::size_t>(step)];
        const auto& slices = p.sweeps[static_cast<std::size_t>(color)];

        // Active voxels: gradient through the blend onto pass/target and the
        // pre-blend update value.
        parallel_for_units(dims.nz, tape.threads, [&](int z) {
            for (const SweepVoxel& v : slices[static_cast<std::size_t>(z)]) {
                const std::size_t i = static_cast<std::size_t>(v.idx);
                const double gy = g[i];
                if (tape.clamp) {
                    const double sum = detail::neighbor_sum(x.data(), v, nx, nxny);
                    const double upd = detail::sor_update(x[i], sum, v.k, p.omega);
                    grad_pass[i] += gy * upd;
                    grad_target[i] += gy;
                    scaled[i] = gy * p.pass[i];
                } else {
                    scaled[i] = gy;
                }
            }
        });

        // Gather pass: every voxel collects its new gradient. Active voxels
        // keep only the self term; inactive voxels add contributions from
        // their active neighbors in canonical direction order.
        const double one_minus_w = 1.0 - p.omega;
        const std::uint8_t active = static_cast<std::uint8_t>(color);
        parallel_for_units(dims.nz, tape.threads, [&](int z) {
            for (int y = 0; y < dims.ny; ++y) {
                for (int xq = 0; xq < dims.nx; ++xq) {
                    const std::size_t i = dims.index(xq, y, z);
                    if (color_of[i] == active) {
                        const double gv =
                            k_of[i] == 0 ? scaled[i] : scaled[i] * one_minus_w;
                        g_next[i] = gv;
                        continue;
                    }
                    double acc = g[i];
                    const std::uint8_t m = mask_of[i];
                    auto pull = [&](std::size_t j) {
                        // neighbor j is active-color here
                        if (k_of[j] > 0) {
                            acc += scaled[j] * (p.omega / static_cast<double>(k_of[j]));
                        }
                    };
                    if (m & detail::kXm) pull(i - 1);
                    if (m & detail::kXp) pull(i + 1);
                    if (m & detail::kYm) pull(i - static_cast<std::size_t>(nx));
                    if (m & detail::kYp) pull(i + static_cast<std::size_t>(nx));
                    if (m & detail::kZm) pull(i - nxny);
                    if (m & detail::kZp) pull(i + nxny);
                    g_next[i] = acc;
                }
            }
        });
        std::swap(g, g_next);
    }

    // g now holds the gradient with respect to the initialization field.
    std::vector<double> grad(vox * static_cast<std::size_t>(tape.channels), 0.0);
    for (int c = 0; c < tape.channels; ++c) {
        double* gc = grad.data() + static_cast<std::size_t>(c) * vox;
        const double w = p.weights[static_cast<std::size_t>(c)];
        for (std::size_t v = 0; v < vox; ++v) gc[v] = w * g[v];
        if (!is_passthrough(c) && tape.clamp) {
            for (std::size_t v = 0; v < vox; ++v) {
                gc[v] += w * grad_target[v] - grad_pass[v];
            }
        }
    }
    return grad;
}

SoftSegGradient soft_solve_backward(const Tape& tape,
                                    const ScalarField3D& grad_out) {
    if (!grad_out.dims.same_shape(tape.dims)) {
        throw InvalidArgument("output gradient dimensions do not match the tape");
    }
    std::vector<double> g(grad_out.values.begin(), grad_out.values.end());
    SoftSegGradient out;
    out.dims = tape.dims;
    out.channels = tape.channels;
    out.grad = soft_backward_d(tape, g);
    return out;
}

}  // namespace lamina
