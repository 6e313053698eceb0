/// @file phantom.hpp
/// @brief Synthetic ground-truth generators: a flat slab and a spherical
///        shell with known harmonic solutions, and a folded-cortex sulcus
///        phantom with an optional bridged-sulcus defect in the probability
///        maps and an optional partial annotation window.

#pragma once

#include <cstdint>

#include "lamina/volume.hpp"

namespace lamina {

enum class PhantomKind { Slab, Shell, Sulcus };

struct PhantomSpec {
    PhantomKind kind = PhantomKind::Slab;
    GridDims dims;
    std::uint64_t seed = 0;

    // slab: a GM plate of `slab_thickness` layers centered in z, WM below,
    // BG above.
    int slab_thickness = 10;

    // shell: GM between spheres of radius `shell_inner` and `shell_outer`
    // voxels, centered on the voxel (nx/2, ny/2, nz/2); a voxel joins a ball
    // when its center lies within radius + 0.5.
    double shell_inner = 6.0;
    double shell_outer = 14.0;

    // sulcus: GM sheet of `gm_thickness` layers draped over a sinusoidal WM
    // floor (wavelength/amplitude in voxels, folds along x, extruded along y),
    // cut by a `gap_width`-column background wedge that descends to one voxel
    // above the floor. With `bridge` the wedge voxels get GM-majority
    // probabilities, fusing the two banks in the corrupted prediction.
    double fold_wavelength = 24.0;
    double fold_amplitude = 3.0;
    int gm_thickness = 6;
    int gap_width = 1;
    bool bridge = false;

    // Columns with x >= annotated_max_x have their labels (not their
    // probabilities) cleared to the unlabeled code, mimicking a ground truth
    // that covers only part of the volume. Negative = fully annotated.
    int annotated_max_x = -1;
};

struct Phantom {
    LabelField3D gt_labels;
    ScalarField3D phi_gt;
    SoftSegmentation corrupted_probs;
};

/// Labels and the reference-solver field come from the full true geometry;
/// corrupted_probs is 0.9*one-hot + 0.1*uniform with a small seeded jitter
/// (argmax-preserving), plus the bridge defect when requested.
Phantom make_phantom(const PhantomSpec& spec);

/// Harmonic potential between concentric spheres: (1/a - 1/r)/(1/a - 1/b).
double analytic_shell_phi(double r, double a, double b);

}  // namespace lamina
