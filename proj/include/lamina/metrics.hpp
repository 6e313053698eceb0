/// @file metrics.hpp
/// @brief Evaluation measures: per-label Dice, symmetric HD95, the
///        fixed-budget laminar re-segmentation protocol, inscribed-sphere
///        thickness, Pearson correlation and average fixed-raters ICC.

#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lamina/volume.hpp"

namespace lamina {

struct MetricReport {
    std::map<int, double> dsc_per_label;
    double hd95_mm = 0.0;
    std::optional<std::vector<double>> laplace_layer_dsc;
};

/// 2|A∩B| / (|A|+|B|) over voxels carrying `label`; 1 when both sets are empty.
double dsc(const LabelField3D& a, const LabelField3D& b, int label);

/// Exact squared Euclidean distance (mm^2) from every voxel to the nearest
/// set voxel of `feature`. Throws EmptyMask when the feature set is empty.
std::vector<double> edt_sq_mm(const Mask3D& feature);

/// Voxels of the mask with at least one face neighbor outside the mask or
/// outside the grid.
Mask3D boundary_voxels(const Mask3D& mask);

/// 95th percentile (linear interpolation between order statistics) of the
/// pooled boundary-to-nearest-boundary distances in both directions, in mm.
double hd95(const Mask3D& a, const Mask3D& b);

/// Builds a Laplace problem from each segmentation (GM domain, WM+SRLM
/// source, BG sink), runs 120 red-black SOR iterations at the automatic
/// relaxation factor, bins both fields into `layers` laminar layers and
/// returns the per-layer Dice between them (index 0 = pial-side layer 1).
std::vector<double> laplace_eval(const LabelField3D& pred,
                                 const LabelField3D& gt, int layers = 5,
                                 int iters = 120, int threads = 1);

/// Diameter (mm) of the largest sphere inscribed in the mask that contains
/// the landmark, searching centers within `search_radius_mm` of it.
double thickness_at(const Mask3D& gm, const std::array<int, 3>& landmark,
                    double search_radius_mm = 2.0);

double pearson_r(std::span<const double> x, std::span<const double> y);

/// Two-way mixed, average-measures, consistency ICC(3,k) from the ANOVA
/// decomposition: (BMS - EMS) / BMS for an n-subjects x k-raters matrix.
double icc_fixed_raters(const std::vector<std::vector<double>>& ratings);

}  // namespace lamina
