#include "lamina/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lamina/labelize.hpp"
#include "lamina/solver.hpp"

namespace lamina {

double dsc(const LabelField3D& a, const LabelField3D& b, int label) {
    if (!a.dims.same_shape(b.dims)) {
        throw InvalidArgument("label fields have different dimensions");
    }
    std::size_t na = 0, nb = 0, inter = 0;
    for (std::size_t v = 0; v < a.labels.size(); ++v) {
        const bool in_a = a.labels[v] == label;
        const bool in_b = b.labels[v] == label;
        na += in_a;
        nb += in_b;
        inter += (in_a && in_b);
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// One pass of the lower-envelope distance transform along a line of n
/// samples spaced `sp` apart. f holds squared distances and is overwritten.
/// Sites at infinity (no feature yet) are skipped.
void dt_line(std::vector<double>& f, std::vector<double>& scratch,
             std::vector<int>& sites, std::vector<double>& breaks, int n,
             double sp) {
    const auto intersect = [&](int q, int p) {
        const double uq = q * sp, up = p * sp;
        return ((f[static_cast<std::size_t>(q)] + uq * uq) -
                (f[static_cast<std::size_t>(p)] + up * up)) /
               (2.0 * uq - 2.0 * up);
    };
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[static_cast<std::size_t>(q)] == kInf) continue;
        for (;;) {
            if (k < 0) {
                k = 0;
                sites[0] = q;
                breaks[0] = -kInf;
                breaks[1] = kInf;
                break;
            }
            const double s = intersect(q, sites[static_cast<std::size_t>(k)]);
            if (s <= breaks[static_cast<std::size_t>(k)]) {
                --k;
                continue;
            }
            ++k;
            sites[static_cast<std::size_t>(k)] = q;
            breaks[static_cast<std::size_t>(k)] = s;
            breaks[static_cast<std::size_t>(k) + 1] = kInf;
            break;
        }
    }
    if (k < 0) return;  // no finite site on this line
    int j = 0;
    for (int q = 0; q < n; ++q) {
        const double uq = q * sp;
        while (breaks[static_cast<std::size_t>(j) + 1] < uq) ++j;
        const int p = sites[static_cast<std::size_t>(j)];
        const double diff = uq - p * sp;
        scratch[static_cast<std::size_t>(q)] =
            diff * diff + f[static_cast<std::size_t>(p)];
    }
    std::copy(scratch.begin(), scratch.begin() + n, f.begin());
}

}  // namespace

std::vector<double> edt_sq_mm(const Mask3D& feature) {
    const GridDims& d = feature.dims;
    const std::size_t vox = d.voxel_count();
    if (feature.count() == 0) {
        throw EmptyMask("distance transform of an empty voxel set");
    }
    std::vector<double> dist(vox);
    for (std::size_t v = 0; v < vox; ++v) {
        dist[v] = feature.on[v] ? 0.0 : kInf;
    }
    const int nmax = std::max({d.nx, d.ny, d.nz});
    std::vector<double> line(static_cast<std::size_t>(nmax));
    std::vector<double> scratch(static_cast<std::size_t>(nmax));
    std::vector<int> sites(static_cast<std::size_t>(nmax));
    std::vector<double> breaks(static_cast<std::size_t>(nmax) + 1);

    // x pass
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            const std::size_t base = d.index(0, y, z);
            for (int x = 0; x < d.nx; ++x) {
                line[static_cast<std::size_t>(x)] =
                    dist[base + static_cast<std::size_t>(x)];
            }
            dt_line(line, scratch, sites, breaks, d.nx, d.sx);
            for (int x = 0; x < d.nx; ++x) {
                dist[base + static_cast<std::size_t>(x)] =
                    line[static_cast<std::size_t>(x)];
            }
        }
    }
    // y pass
    for (int z = 0; z < d.nz; ++z) {
        for (int x = 0; x < d.nx; ++x) {
            for (int y = 0; y < d.ny; ++y) {
                line[static_cast<std::size_t>(y)] = dist[d.index(x, y, z)];
            }
            dt_line(line, scratch, sites, breaks, d.ny, d.sy);
            for (int y = 0; y < d.ny; ++y) {
                dist[d.index(x, y, z)] = line[static_cast<std::size_t>(y)];
            }
        }
    }
    // z pass
    for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
            for (int z = 0; z < d.nz; ++z) {
                line[static_cast<std::size_t>(z)] = dist[d.index(x, y, z)];
            }
            dt_line(line, scratch, sites, breaks, d.nz, d.sz);
            for (int z = 0; z < d.nz; ++z) {
                dist[d.index(x, y, z)] = line[static_cast<std::size_t>(z)];
            }
        }
    }
    return dist;
}

Mask3D boundary_voxels(const Mask3D& mask) {
    const GridDims& d = mask.dims;
    Mask3D out(d);
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                if (!mask.at(x, y, z)) continue;
                bool edge = x == 0 || x + 1 == d.nx || y == 0 || y + 1 == d.ny ||
                            z == 0 || z + 1 == d.nz;
                if (!edge) {
                    edge = !mask.at(x - 1, y, z) || !mask.at(x + 1, y, z) ||
                           !mask.at(x, y - 1, z) || !mask.at(x, y + 1, z) ||
                           !mask.at(x, y, z - 1) || !mask.at(x, y, z + 1);
                }
                if (edge) out.set(x, y, z, true);
            }
        }
    }
    return out;
}

namespace {

double percentile_linear(std::vector<double>& values, double p) {
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    if (m == 1) return values[0];
    const double rank = p * static_cast<double>(m - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= m) return values[m - 1];
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace

double hd95(const Mask3D& a, const Mask3D& b) {
    if (!a.dims.same_shape(b.dims) || !a.dims.same_spacing(b.dims)) {
        throw InvalidArgument("masks live on different grids");
    }
    if (a.count() == 0 || b.count() == 0) {
        throw EmptyMask("hd95 requires two nonempty masks");
    }
    const Mask3D ba = boundary_voxels(a);
    const Mask3D bb = boundary_voxels(b);
    const auto dist_to_a = edt_sq_mm(ba);
    const auto dist_to_b = edt_sq_mm(bb);

    std::vector<double> pooled;
    pooled.reserve(ba.count() + bb.count());
    for (std::size_t v = 0; v < ba.on.size(); ++v) {
        if (ba.on[v]) pooled.push_back(std::sqrt(dist_to_b[v]));
        if (bb.on[v]) pooled.push_back(std::sqrt(dist_to_a[v]));
    }
    return percentile_linear(pooled, 0.95);
}

std::vector<double> laplace_eval(const LabelField3D& pred,
                                 const LabelField3D& gt, int layers, int iters,
                                 int threads) {
    for (const LabelField3D* f : {&pred, &gt}) {
        if (!f->contains(kGm) || !f->contains(kWm) || !f->contains(kBg)) {
            throw InvalidSegmentation(
                "segmentation must contain GM, WM and BG labels");
        }
    }
    if (!pred.dims.same_shape(gt.dims)) {
        throw InvalidArgument("segmentations have different dimensions");
    }
    constexpr std::array<int, 1> domain_codes{kGm};
    constexpr std::array<int, 2> source_codes{kWm, kSrlm};
    constexpr std::array<int, 1> sink_codes{kBg};

    auto laminar = [&](const LabelField3D& seg) {
        const auto problem =
            LaplaceProblem::from_labels(seg, domain_codes, source_codes, sink_codes);
        SolverConfig cfg;
        cfg.max_iters = iters;
        cfg.tolerance = 0.0;
        cfg.threads = threads;
        auto [phi, report] = solve_sor(problem, make_init(problem), cfg);
        return laminar_bins(phi, Mask3D::from_label(seg, kGm), layers);
    };
    const LabelField3D lp = laminar(pred);
    const LabelField3D lg = laminar(gt);

    std::vector<double> out(static_cast<std::size_t>(layers));
    for (int k = 1; k <= layers; ++k) {
        out[static_cast<std::size_t>(k - 1)] = dsc(lp, lg, k);
    }
    return out;
}

double thickness_at(const Mask3D& gm, const std::array<int, 3>& landmark,
                    double search_radius_mm) {
    const GridDims& d = gm.dims;
    if (!d.inside(landmark[0], landmark[1], landmark[2])) {
        throw InvalidArgument("landmark lies outside the grid");
    }
    if (!(search_radius_mm >= 0.0)) {
        throw InvalidArgument("search radius must be nonnegative");
    }
    Mask3D background(d);
    bool any_bg = false;
    for (std::size_t v = 0; v < gm.on.size(); ++v) {
        background.on[v] = gm.on[v] ? 0 : 1;
        any_bg |= !gm.on[v];
    }
    if (!any_bg) {
        throw EmptyMask("mask covers the whole grid; inscribed sphere unbounded");
    }
    const auto dist_sq = edt_sq_mm(background);

    // Candidate centers: mask voxels within the search radius whose sphere
    // contains the landmark.
    const double lx = landmark[0] * d.sx;
    const double ly = landmark[1] * d.sy;
    const double lz = landmark[2] * d.sz;
    const int rx = static_cast<int>(std::ceil(search_radius_mm / d.sx));
    const int ry = static_cast<int>(std::ceil(search_radius_mm / d.sy));
    const int rz = static_cast<int>(std::ceil(search_radius_mm / d.sz));
    double best = -1.0;
    for (int z = std::max(0, landmark[2] - rz);
         z <= std::min(d.nz - 1, landmark[2] + rz); ++z) {
        for (int y = std::max(0, landmark[1] - ry);
             y <= std::min(d.ny - 1, landmark[1] + ry); ++y) {
            for (int x = std::max(0, landmark[0] - rx);
                 x <= std::min(d.nx - 1, landmark[0] + rx); ++x) {
                if (!gm.at(x, y, z)) continue;
                const double dx = x * d.sx - lx;
                const double dy = y * d.sy - ly;
                const double dz = z * d.sz - lz;
                const double to_center_sq = dx * dx + dy * dy + dz * dz;
                if (to_center_sq > search_radius_mm * search_radius_mm) continue;
                const double r_sq = dist_sq[d.index(x, y, z)];
                if (to_center_sq <= r_sq) {
                    best = std::max(best, r_sq);
                }
            }
        }
    }
    if (best < 0.0) {
        throw LandmarkOutsideMask(
            "no inscribed sphere around the landmark within the search radius");
    }
    return 2.0 * std::sqrt(best);
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InvalidArgument("series lengths differ");
    }
    const std::size_t n = x.size();
    if (n < 3) {
        throw InvalidArgument("correlation needs at least 3 samples");
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw DegenerateInput("zero variance in correlation input");
    }
    return sxy / std::sqrt(sxx * syy);
}

double icc_fixed_raters(const std::vector<std::vector<double>>& ratings) {
    const std::size_t n = ratings.size();
    if (n < 3) {
        throw InvalidArgument("ICC needs at least 3 subjects");
    }
    const std::size_t k = ratings[0].size();
    if (k < 2) {
        throw InvalidArgument("ICC needs at least 2 raters");
    }
    for (const auto& row : ratings) {
        if (row.size() != k) {
            throw InvalidArgument("ragged rating matrix");
        }
    }
    double grand = 0.0;
    for (const auto& row : ratings) {
        for (double v : row) grand += v;
    }
    grand /= static_cast<double>(n * k);

    double ss_subj = 0.0, ss_rater = 0.0, ss_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (double v : ratings[i]) m += v;
        m /= static_cast<double>(k);
        ss_subj += (m - grand) * (m - grand);
    }
    ss_subj *= static_cast<double>(k);
    for (std::size_t j = 0; j < k; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += ratings[i][j];
        m /= static_cast<double>(n);
        ss_rater += (m - grand) * (m - grand);
    }
    ss_rater *= static_cast<double>(n);
    for (const auto& row : ratings) {
        for (double v : row) ss_total += (v - grand) * (v - grand);
    }
    const double ss_err = ss_total - ss_subj - ss_rater;
    const double bms = ss_subj / static_cast<double>(n - 1);
    const double ems = ss_err / static_cast<double>((n - 1) * (k - 1));
    if (bms == 0.0) {
        throw DegenerateInput("no between-subject variance");
    }
    return (bms - ems) / bms;
}

}  // namespace lamina
