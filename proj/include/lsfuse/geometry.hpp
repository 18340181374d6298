#pragma once

// Sample silhouette and light-sheet incident points: Otsu threshold, despeckled
// foreground mask, alpha-shape bounding polygon, per-column entry/exit rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "delaunay.hpp"
#include "errors.hpp"
#include "image.hpp"

namespace lsfuse::geometry {

// Per-column first (p_u, view a side) and last (p_l, view b side) sample row.
struct IncidentProfile {
    std::vector<int> p_u;
    std::vector<int> p_l;
    std::vector<bool> valid;

    int cols() const noexcept { return static_cast<int>(valid.size()); }
    int valid_count() const noexcept { return static_cast<int>(std::count(valid.begin(), valid.end(), true)); }

    friend bool operator==(const IncidentProfile&, const IncidentProfile&) = default;
};

inline void validate_profile(const IncidentProfile& p, int rows) {
    require(p.p_u.size() == p.valid.size() && p.p_l.size() == p.valid.size(), "incident profile arrays differ in length");
    for (std::size_t i = 0; i < p.valid.size(); ++i)
        if (p.valid[i] && !(0 <= p.p_u[i] && p.p_u[i] <= p.p_l[i] && p.p_l[i] < rows))
            fail(ErrorKind::validation, "incident profile column " + std::to_string(i) + " violates 0 <= p_u <= p_l < rows");
}

inline int histogram_bin(double v, int bins) {
    const int b = static_cast<int>(std::floor(v * bins));
    return std::clamp(b, 0, bins - 1);
}

// Between-class variance criterion in bin-index units, up to a constant factor:
// (n0*S1 - n1*S0)^2 / (n0*n1). Identical integer inputs give identical doubles,
// so plateaus of equal criterion are exact ties.
inline double otsu_criterion(std::int64_t n0, std::int64_t s0, std::int64_t n1, std::int64_t s1) {
    const double a = static_cast<double>(n0 * s1 - n1 * s0);
    return a * a / (static_cast<double>(n0) * static_cast<double>(n1));
}

// Threshold = lowest bin edge k/bins maximizing the between-class variance,
// where class 0 holds bins < k. Throws no_sample when no edge separates two
// nonempty classes (e.g. a constant image).
inline double otsu_threshold(const Slice& slice, int bins = 256) {
    require(bins >= 2, "otsu bins must be >= 2");
    std::vector<std::int64_t> hist(static_cast<std::size_t>(bins), 0);
    for (float v : slice.pixels()) ++hist[static_cast<std::size_t>(histogram_bin(v, bins))];

    std::int64_t total_n = 0, total_s = 0;
    for (int b = 0; b < bins; ++b) {
        total_n += hist[static_cast<std::size_t>(b)];
        total_s += hist[static_cast<std::size_t>(b)] * b;
    }
    std::int64_t n0 = 0, s0 = 0;
    int best_k = -1;
    double best = -1.0;
    for (int k = 1; k < bins; ++k) {
        n0 += hist[static_cast<std::size_t>(k - 1)];
        s0 += hist[static_cast<std::size_t>(k - 1)] * (k - 1);
        const std::int64_t n1 = total_n - n0, s1 = total_s - s0;
        if (n0 == 0 || n1 == 0) continue;
        const double crit = otsu_criterion(n0, s0, n1, s1);
        if (crit > best) {
            best = crit;
            best_k = k;
        }
    }
    if (best_k < 0 || best <= 0.0) fail(ErrorKind::no_sample, "no foreground separation (constant image)");
    return static_cast<double>(best_k) / bins;
}

namespace detail {

// 4-connected component labels of pixels where `member(value)` holds; -1 elsewhere.
template <typename Pred>
std::vector<int> label_components(const Mask& mask, Pred member, std::vector<int>& sizes) {
    const int rows = mask.rows(), cols = mask.cols();
    std::vector<int> label(mask.size(), -1);
    sizes.clear();
    std::vector<int> stack;
    for (int start = 0; start < static_cast<int>(mask.size()); ++start) {
        if (label[static_cast<std::size_t>(start)] >= 0 || !member(mask.pixels()[static_cast<std::size_t>(start)]))
            continue;
        const int id = static_cast<int>(sizes.size());
        int count = 0;
        stack.push_back(start);
        label[static_cast<std::size_t>(start)] = id;
        while (!stack.empty()) {
            const int k = stack.back();
            stack.pop_back();
            ++count;
            const int r = k / cols, c = k % cols;
            const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
            for (const auto& n : nbr) {
                if (n[0] < 0 || n[0] >= rows || n[1] < 0 || n[1] >= cols) continue;
                const int q = n[0] * cols + n[1];
                if (label[static_cast<std::size_t>(q)] < 0 && member(mask.pixels()[static_cast<std::size_t>(q)])) {
                    label[static_cast<std::size_t>(q)] = id;
                    stack.push_back(q);
                }
            }
        }
        sizes.push_back(count);
    }
    return label;
}

}  // namespace detail

// slice >= threshold, minus 4-connected components smaller than min_component_px.
inline Mask foreground_mask(const Slice& slice, double threshold, int min_component_px) {
    Mask mask(slice.rows(), slice.cols(), 0);
    for (std::size_t k = 0; k < slice.size(); ++k)
        mask.pixels()[k] = static_cast<double>(slice.pixels()[k]) >= threshold ? 1 : 0;
    if (min_component_px > 1) {
        std::vector<int> sizes;
        const auto label = detail::label_components(mask, [](std::uint8_t v) { return v != 0; }, sizes);
        for (std::size_t k = 0; k < mask.size(); ++k)
            if (label[k] >= 0 && sizes[static_cast<std::size_t>(label[k])] < min_component_px) mask.pixels()[k] = 0;
    }
    return mask;
}

// Sets background regions that do not touch the image border.
inline Mask fill_holes(const Mask& mask) {
    std::vector<int> sizes;
    const auto label = detail::label_components(mask, [](std::uint8_t v) { return v == 0; }, sizes);
    std::vector<bool> touches(sizes.size(), false);
    const int rows = mask.rows(), cols = mask.cols();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (r == 0 || c == 0 || r == rows - 1 || c == cols - 1) {
                const int l = label[static_cast<std::size_t>(r) * cols + c];
                if (l >= 0) touches[static_cast<std::size_t>(l)] = true;
            }
    Mask out = mask;
    for (std::size_t k = 0; k < out.size(); ++k)
        if (label[k] >= 0 && !touches[static_cast<std::size_t>(label[k])]) out.pixels()[k] = 1;
    return out;
}

inline std::size_t count_foreground(const Mask& mask) {
    return static_cast<std::size_t>(std::count_if(mask.pixels().begin(), mask.pixels().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

// Foreground pixels with a 4-neighbour in the background or on the image border,
// as lattice points (x = column, y = row).
inline std::vector<LatticePoint> boundary_points(const Mask& mask) {
    std::vector<LatticePoint> pts;
    const int rows = mask.rows(), cols = mask.cols();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (!mask(r, c)) continue;
            const bool edge = r == 0 || c == 0 || r == rows - 1 || c == cols - 1 || !mask(r - 1, c) ||
                              !mask(r + 1, c) || !mask(r, c - 1) || !mask(r, c + 1);
            if (edge) pts.push_back({c, r});
        }
    return pts;
}

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}
inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

// Sets every pixel centre inside or on the closed triangle (scanline fill, exact).
inline void fill_triangle(Mask& mask, const LatticePoint& a, const LatticePoint& b, const LatticePoint& c) {
    const std::int64_t y0 = std::max<std::int64_t>(0, std::min({a.y, b.y, c.y}));
    const std::int64_t y1 = std::min<std::int64_t>(mask.rows() - 1, std::max({a.y, b.y, c.y}));
    const LatticePoint v[3] = {a, b, c};
    for (std::int64_t y = y0; y <= y1; ++y) {
        std::int64_t lo = std::numeric_limits<std::int64_t>::max();
        std::int64_t hi = std::numeric_limits<std::int64_t>::min();
        for (int e = 0; e < 3; ++e) {
            const LatticePoint& p = v[e];
            const LatticePoint& q = v[(e + 1) % 3];
            if (y < std::min(p.y, q.y) || y > std::max(p.y, q.y)) continue;
            if (p.y == q.y) {
                lo = std::min({lo, p.x, q.x});
                hi = std::max({hi, p.x, q.x});
                continue;
            }
            // x = p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y)
            std::int64_t num = (y - p.y) * (q.x - p.x);
            std::int64_t den = q.y - p.y;
            if (den < 0) {
                num = -num;
                den = -den;
            }
            lo = std::min(lo, p.x + ceil_div(num, den));
            hi = std::max(hi, p.x + floor_div(num, den));
        }
        lo = std::max<std::int64_t>(lo, 0);
        hi = std::min<std::int64_t>(hi, mask.cols() - 1);
        auto row = mask.row(static_cast<int>(y));
        for (std::int64_t x = lo; x <= hi; ++x) row[static_cast<std::size_t>(x)] = 1;
    }
}

inline double circumradius(const LatticePoint& a, const LatticePoint& b, const LatticePoint& c) {
    const double ab = std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
    const double bc = std::hypot(static_cast<double>(b.x - c.x), static_cast<double>(b.y - c.y));
    const double ca = std::hypot(static_cast<double>(c.x - a.x), static_cast<double>(c.y - a.y));
    const double area2 = std::abs(static_cast<double>(orient(a, b, c)));
    if (area2 == 0.0) return std::numeric_limits<double>::infinity();
    return ab * bc * ca / (2.0 * area2);
}

}  // namespace detail

// Filled alpha shape of the mask's boundary pixels: Delaunay triangles with
// circumradius <= alpha are kept and scanline-filled, then merged with the input.
// alpha is a radius in pixels; alpha -> infinity gives the filled convex hull.
inline Mask bounding_polygon(const Mask& mask, double alpha) {
    require(alpha > 0.0, "alpha must be positive");
    if (count_foreground(mask) < 3)
        fail(ErrorKind::no_sample, "bounding polygon needs at least 3 foreground pixels");
    const auto pts = boundary_points(mask);
    Mask out = mask;
    for (std::size_t k = 0; k < out.size(); ++k) out.pixels()[k] = out.pixels()[k] ? 1 : 0;
    for (const auto& t : delaunay(pts)) {
        const auto& a = pts[static_cast<std::size_t>(t.v[0])];
        const auto& b = pts[static_cast<std::size_t>(t.v[1])];
        const auto& c = pts[static_cast<std::size_t>(t.v[2])];
        if (detail::circumradius(a, b, c) <= alpha * (1.0 + 1e-12)) detail::fill_triangle(out, a, b, c);
    }
    return out;
}

inline IncidentProfile incident_profile(const Mask& mask) {
    const int rows = mask.rows(), cols = mask.cols();
    IncidentProfile p{std::vector<int>(static_cast<std::size_t>(cols), 0),
                      std::vector<int>(static_cast<std::size_t>(cols), 0),
                      std::vector<bool>(static_cast<std::size_t>(cols), false)};
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r)
            if (mask(r, c)) {
                if (!p.valid[static_cast<std::size_t>(c)]) p.p_u[static_cast<std::size_t>(c)] = r;
                p.p_l[static_cast<std::size_t>(c)] = r;
                p.valid[static_cast<std::size_t>(c)] = true;
            }
    }
    return p;
}

struct SegmentationConfig {
    int bins = 256;
    std::optional<double> alpha;  // default 0.05 * max(rows, cols)
    int min_component_px = 64;
};

inline double resolved_alpha(const SegmentationConfig& cfg, int rows, int cols) {
    return cfg.alpha.value_or(0.05 * std::max(rows, cols));
}

struct SampleGeometry {
    double threshold = 0.0;
    Mask foreground;
    Mask polygon;
    IncidentProfile profile;
};

// Full geometry stage on a reference slice (the fuser passes max(view a, view b)).
// Interior holes are filled before the hull so only the outer silhouette drives
// the triangulation. Throws no_sample when nothing is segmented.
inline SampleGeometry sample_geometry(const Slice& reference, const SegmentationConfig& cfg = {}) {
    SampleGeometry g;
    g.threshold = otsu_threshold(reference, cfg.bins);
    g.foreground = foreground_mask(reference, g.threshold, cfg.min_component_px);
    if (count_foreground(g.foreground) < 3) fail(ErrorKind::no_sample, "no sample found");
    g.polygon = bounding_polygon(fill_holes(g.foreground), resolved_alpha(cfg, reference.rows(), reference.cols()));
    g.profile = incident_profile(g.polygon);
    return g;
}

}  // namespace lsfuse::geometry
