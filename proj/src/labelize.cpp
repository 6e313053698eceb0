#include "lamina/labelize.hpp"

#include <cmath>
#include <sstream>

namespace lamina {

BandSpec BandSpec::defaults() {
    BandSpec s;
    s.beta = 10.0;
    s.bands = {{-0.3, -0.2}, {0.0, 0.1},  {0.1, 0.2},  {0.2, 0.3},
               {0.3, 0.4},   {0.4, 0.5},  {0.5, 0.6},  {0.6, 0.7},
               {0.7, 0.8},   {0.8, 0.95}, {0.95, 1.05}};
    return s;
}

void BandSpec::validate() const {
    if (!(beta > 0.0)) {
        throw InvalidArgument("band steepness must be positive");
    }
    if (bands.empty()) {
        throw InvalidArgument("band list must not be empty");
    }
    double prev_lo = -std::numeric_limits<double>::infinity();
    for (const auto& [lo, hi] : bands) {
        if (!(lo < hi)) {
            throw InvalidArgument("band lower threshold must be below upper");
        }
        if (!(lo >= prev_lo)) {
            throw InvalidArgument("bands must be sorted by lower threshold");
        }
        prev_lo = lo;
    }
}

BandSpec parse_bands(const std::string& text, double beta) {
    BandSpec s;
    s.beta = beta;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw InvalidArgument("band '" + item + "' is not of the form lo:hi");
        }
        try {
            const double lo = std::stod(item.substr(0, colon));
            const double hi = std::stod(item.substr(colon + 1));
            s.bands.emplace_back(lo, hi);
        } catch (const std::exception&) {
            throw InvalidArgument("cannot parse band '" + item + "'");
        }
    }
    s.validate();
    return s;
}

namespace {
inline double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
}  // namespace

double band_filter_value(double x, double beta, double lo, double hi) {
    return logistic(beta * (x - lo)) * logistic(-beta * (x - hi));
}

double band_filter_derivative(double x, double beta, double lo, double hi) {
    const double s1 = logistic(beta * (x - lo));
    const double s2 = logistic(-beta * (x - hi));
    // d/dx [s1*s2] = beta*s1*(1-s1)*s2 - beta*s1*s2*(1-s2)
    return beta * s1 * s2 * (s2 - s1);
}

ScalarField3D band_filter(const ScalarField3D& phi, double beta, double lo,
                          double hi) {
    if (!(lo < hi)) {
        throw InvalidArgument("band lower threshold must be below upper");
    }
    ScalarField3D out(phi.dims);
    for (std::size_t v = 0; v < phi.values.size(); ++v) {
        out.values[v] =
            static_cast<float>(band_filter_value(phi.values[v], beta, lo, hi));
    }
    return out;
}

ChannelStack soft_one_hot(const ScalarField3D& phi, const BandSpec& spec) {
    spec.validate();
    const std::size_t vox = phi.dims.voxel_count();
    ChannelStack out(phi.dims, spec.count());
    for (int c = 0; c < spec.count(); ++c) {
        const auto [lo, hi] = spec.bands[static_cast<std::size_t>(c)];
        float* oc = out.values.data() + static_cast<std::size_t>(c) * vox;
        for (std::size_t v = 0; v < vox; ++v) {
            oc[v] = static_cast<float>(
                band_filter_value(phi.values[v], spec.beta, lo, hi));
        }
    }
    return out;
}

std::vector<double> band_stack_d(std::span<const double> phi,
                                 const BandSpec& spec) {
    spec.validate();
    const std::size_t vox = phi.size();
    std::vector<double> out(vox * static_cast<std::size_t>(spec.count()));
    for (int c = 0; c < spec.count(); ++c) {
        const auto [lo, hi] = spec.bands[static_cast<std::size_t>(c)];
        double* oc = out.data() + static_cast<std::size_t>(c) * vox;
        for (std::size_t v = 0; v < vox; ++v) {
            oc[v] = band_filter_value(phi[v], spec.beta, lo, hi);
        }
    }
    return out;
}

std::vector<double> band_stack_backward_d(std::span<const double> phi,
                                          const BandSpec& spec,
                                          std::span<const double> grad_channels) {
    const std::size_t vox = phi.size();
    if (grad_channels.size() != vox * static_cast<std::size_t>(spec.count())) {
        throw InvalidArgument("band gradient buffer size mismatch");
    }
    std::vector<double> grad_phi(vox, 0.0);
    for (int c = 0; c < spec.count(); ++c) {
        const auto [lo, hi] = spec.bands[static_cast<std::size_t>(c)];
        const double* gc = grad_channels.data() + static_cast<std::size_t>(c) * vox;
        for (std::size_t v = 0; v < vox; ++v) {
            grad_phi[v] += gc[v] * band_filter_derivative(phi[v], spec.beta, lo, hi);
        }
    }
    return grad_phi;
}

LabelField3D argmax_labels(const ChannelStack& channels) {
    if (channels.channels < 1) {
        throw InvalidArgument("argmax needs at least one channel");
    }
    const std::size_t vox = channels.dims.voxel_count();
    LabelField3D out(channels.dims);
    for (std::size_t v = 0; v < vox; ++v) {
        int best = 0;
        float best_val = channels.values[v];
        for (int c = 1; c < channels.channels; ++c) {
            const float val = channels.values[static_cast<std::size_t>(c) * vox + v];
            if (val > best_val) {
                best_val = val;
                best = c;
            }
        }
        out.labels[v] = static_cast<std::uint8_t>(best);
    }
    return out;
}

LabelField3D argmax_labels_d(std::span<const double> channels,
                             const GridDims& dims, int count) {
    const std::size_t vox = dims.voxel_count();
    if (count < 1 || channels.size() != vox * static_cast<std::size_t>(count)) {
        throw InvalidArgument("argmax channel buffer size mismatch");
    }
    LabelField3D out(dims);
    for (std::size_t v = 0; v < vox; ++v) {
        int best = 0;
        double best_val = channels[v];
        for (int c = 1; c < count; ++c) {
            const double val = channels[static_cast<std::size_t>(c) * vox + v];
            if (val > best_val) {
                best_val = val;
                best = c;
            }
        }
        out.labels[v] = static_cast<std::uint8_t>(best);
    }
    return out;
}

LabelField3D laminar_bins(const ScalarField3D& phi, const Mask3D& domain,
                          int n_layers) {
    if (n_layers < 1) {
        throw InvalidArgument("layer count must be positive");
    }
    if (n_layers > 255) {
        throw InvalidArgument("layer count exceeds the label range");
    }
    if (!domain.dims.same_shape(phi.dims)) {
        throw InvalidArgument("domain mask does not match the field");
    }
    LabelField3D out(phi.dims);
    for (std::size_t v = 0; v < phi.values.size(); ++v) {
        if (!domain.on[v]) continue;
        const double x = phi.values[v];
        int k = static_cast<int>(std::floor(x * n_layers));
        k = std::clamp(k, 0, n_layers - 1);
        out.labels[v] = static_cast<std::uint8_t>(k + 1);
    }
    return out;
}

}  // namespace lamina
