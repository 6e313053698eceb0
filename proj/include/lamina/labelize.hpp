/// @file labelize.hpp
/// @brief Band-pass sigmoid filters turning a Laplace field into laminar
///        channels, plus hard labelings via argmax or equal-width binning.

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lamina/volume.hpp"

namespace lamina {

/// Steepness and ordered (t_lower, t_upper) threshold pairs.
struct BandSpec {
    double beta = 10.0;
    std::vector<std::pair<double, double>> bands;

    /// beta 10 and the 11 evenly spread bands covering [0,1] with one band
    /// below 0 and one straddling 1.
    static BandSpec defaults();

    void validate() const;
    int count() const { return static_cast<int>(bands.size()); }
};

/// Parses "lo:hi,lo:hi,..." into a band list.
BandSpec parse_bands(const std::string& text, double beta = 10.0);

/// sigma(beta*(x-lo)) * sigma(-beta*(x-hi)); smooth band selector in (0,1).
double band_filter_value(double x, double beta, double lo, double hi);

/// Closed-form derivative of band_filter_value with respect to x.
double band_filter_derivative(double x, double beta, double lo, double hi);

ScalarField3D band_filter(const ScalarField3D& phi, double beta, double lo,
                          double hi);

/// One channel per band; channels are intentionally unnormalized (this raw
/// stack feeds the laminar loss, the hard labels below are for metrics only).
ChannelStack soft_one_hot(const ScalarField3D& phi, const BandSpec& spec);

/// Per-voxel index of the maximal channel, ties broken toward the lowest.
LabelField3D argmax_labels(const ChannelStack& channels);

/// Equal-width binning of phi over [0,1] restricted to `domain`: label k+1
/// for phi in [k/n, (k+1)/n) with phi = 1 joining the last layer; voxels
/// outside the domain get label 0.
LabelField3D laminar_bins(const ScalarField3D& phi, const Mask3D& domain,
                          int n_layers);

// Double-precision helpers for loss chains.
std::vector<double> band_stack_d(std::span<const double> phi, const BandSpec& spec);
std::vector<double> band_stack_backward_d(std::span<const double> phi,
                                          const BandSpec& spec,
                                          std::span<const double> grad_channels);
LabelField3D argmax_labels_d(std::span<const double> channels, const GridDims& dims,
                             int count);

}  // namespace lamina
