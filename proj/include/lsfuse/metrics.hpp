#pragma once

// Reference metrics (EMSE, SSIM) and blind fusion-quality metrics:
// Q_mi (normalized mutual information), Q_g (gradient preservation, Q^{AB/F}
// family) and Q_s (saliency-weighted universal quality index).

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "filtering.hpp"
#include "geometry.hpp"
#include "image.hpp"

namespace lsfuse::metrics {

inline double emse(const Slice& fused, const Slice& gt) {
    require_same_shape(fused, gt, "emse");
    double sum = 0.0;
    for (std::size_t k = 0; k < fused.size(); ++k) {
        const double d = static_cast<double>(fused.pixels()[k]) - gt.pixels()[k];
        sum += d * d;
    }
    return fused.empty() ? 0.0 : sum / static_cast<double>(fused.size());
}

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

namespace detail {

// Weighted window sums over every fully contained window position.
inline Plane valid_filter(const Plane& img, const std::vector<double>& taps) {
    const int n = static_cast<int>(taps.size());
    const int rows = img.rows() - n + 1, cols = img.cols() - n + 1;
    Plane tmp(img.rows(), cols, 0.0);
    for (int r = 0; r < img.rows(); ++r) {
        auto src = img.row(r);
        auto dst = tmp.row(r);
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += taps[static_cast<std::size_t>(k)] * src[static_cast<std::size_t>(c + k)];
            dst[c] = acc;
        }
    }
    Plane out(rows, cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        auto dst = out.row(r);
        for (int k = 0; k < n; ++k) {
            auto src = tmp.row(r + k);
            const double w = taps[static_cast<std::size_t>(k)];
            for (int c = 0; c < cols; ++c) dst[c] += w * src[c];
        }
    }
    return out;
}

inline Plane product(const Plane& a, const Plane& b) {
    Plane out(a.rows(), a.cols());
    for (std::size_t k = 0; k < a.size(); ++k) out.pixels()[k] = a.pixels()[k] * b.pixels()[k];
    return out;
}

}  // namespace detail

// Mean SSIM over all window positions fully inside the image.
inline double ssim(const Slice& x, const Slice& y, const SsimParams& p = {}) {
    require_same_shape(x, y, "ssim");
    require(p.window % 2 == 1 && p.window >= 3, "ssim window must be odd and >= 3");
    if (x.rows() < p.window || x.cols() < p.window)
        fail(ErrorKind::validation, "image smaller than the " + std::to_string(p.window) + "px SSIM window");
    const auto taps = gaussian_kernel(p.sigma, p.window / 2);
    const Plane xd = convert<double>(x), yd = convert<double>(y);
    const Plane mx = detail::valid_filter(xd, taps), my = detail::valid_filter(yd, taps);
    const Plane xx = detail::valid_filter(detail::product(xd, xd), taps);
    const Plane yy = detail::valid_filter(detail::product(yd, yd), taps);
    const Plane xy = detail::valid_filter(detail::product(xd, yd), taps);
    const double c1 = std::pow(p.k1 * p.dynamic_range, 2), c2 = std::pow(p.k2 * p.dynamic_range, 2);
    double sum = 0.0;
    for (std::size_t k = 0; k < mx.size(); ++k) {
        const double ux = mx.pixels()[k], uy = my.pixels()[k];
        const double vx = xx.pixels()[k] - ux * ux, vy = yy.pixels()[k] - uy * uy;
        const double cxy = xy.pixels()[k] - ux * uy;
        sum += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    return sum / static_cast<double>(mx.size());
}

namespace detail {

inline double entropy_bits(const std::vector<std::int64_t>& counts, double total) {
    double h = 0.0;
    for (auto n : counts)
        if (n > 0) {
            const double p = static_cast<double>(n) / total;
            h -= p * std::log2(p);
        }
    return h;
}

struct InformationTerms {
    double h_x = 0.0, h_f = 0.0, mi = 0.0;
};

inline InformationTerms information(const Slice& x, const Slice& f, int bins) {
    std::vector<std::int64_t> hx(static_cast<std::size_t>(bins), 0), hf(hx), joint(static_cast<std::size_t>(bins) * bins, 0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const int bx = geometry::histogram_bin(x.pixels()[k], bins);
        const int bf = geometry::histogram_bin(f.pixels()[k], bins);
        ++hx[static_cast<std::size_t>(bx)];
        ++hf[static_cast<std::size_t>(bf)];
        ++joint[static_cast<std::size_t>(bx) * bins + bf];
    }
    const double total = static_cast<double>(x.size());
    InformationTerms t;
    t.h_x = entropy_bits(hx, total);
    t.h_f = entropy_bits(hf, total);
    t.mi = t.h_x + t.h_f - entropy_bits(joint, total);
    return t;
}

}  // namespace detail

inline double entropy(const Slice& x, int bins = 256) {
    std::vector<std::int64_t> h(static_cast<std::size_t>(bins), 0);
    for (float v : x.pixels()) ++h[static_cast<std::size_t>(geometry::histogram_bin(v, bins))];
    return detail::entropy_bits(h, static_cast<double>(x.size()));
}

// 2 * [MI(a,f)/(H(a)+H(f)) + MI(b,f)/(H(b)+H(f))], entropies in bits over
// equal-width bins on [0,1]. A term with zero denominator contributes 0.
inline double q_mi(const Slice& a, const Slice& b, const Slice& fused, int bins = 256) {
    require_same_shape(a, fused, "q_mi");
    require_same_shape(b, fused, "q_mi");
    require(bins >= 2, "q_mi bins must be >= 2");
    auto term = [&](const Slice& x) {
        const auto t = detail::information(x, fused, bins);
        const double den = t.h_x + t.h_f;
        return den > 0.0 ? t.mi / den : 0.0;
    };
    return 2.0 * (term(a) + term(b));
}

// Constants of the gradient-preservation sigmoids.
struct QgParams {
    double gamma_g = 0.9994, kappa_g = -15.0, sigma_g = 0.5;
    double gamma_a = 0.9879, kappa_a = -22.0, sigma_a = 0.8;
};

namespace detail {

struct Gradients {
    Plane magnitude;
    Plane orientation;  // folded into [-pi/2, pi/2)
};

inline Gradients sobel(const Slice& s) {
    const int rows = s.rows(), cols = s.cols();
    Gradients g{Plane(rows, cols), Plane(rows, cols)};
    auto px = [&](int r, int c) {
        return static_cast<double>(s(std::clamp(r, 0, rows - 1), std::clamp(c, 0, cols - 1)));
    };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double gx = (px(r - 1, c + 1) + 2 * px(r, c + 1) + px(r + 1, c + 1)) -
                              (px(r - 1, c - 1) + 2 * px(r, c - 1) + px(r + 1, c - 1));
            const double gy = (px(r + 1, c - 1) + 2 * px(r + 1, c) + px(r + 1, c + 1)) -
                              (px(r - 1, c - 1) + 2 * px(r - 1, c) + px(r - 1, c + 1));
            g.magnitude(r, c) = std::hypot(gx, gy);
            double theta = (gx == 0.0 && gy == 0.0) ? 0.0 : std::atan2(gy, gx);
            theta = std::remainder(theta, std::numbers::pi);
            g.orientation(r, c) = theta;
        }
    return g;
}

}  // namespace detail

inline double qg_edge_preservation(double g_src, double g_fused, double a_src, double a_fused, const QgParams& p = {}) {
    double strength = 0.0;
    if (g_src > 0.0 || g_fused > 0.0) strength = g_src > g_fused ? g_fused / g_src : g_src / g_fused;
    // orientation agreement on the half circle, 1 = parallel, 0 = perpendicular
    const double half_pi = std::numbers::pi / 2.0;
    const double agreement = std::abs(std::abs(a_src - a_fused) - half_pi) / half_pi;
    const double qg = p.gamma_g / (1.0 + std::exp(p.kappa_g * (strength - p.sigma_g)));
    const double qa = p.gamma_a / (1.0 + std::exp(p.kappa_a * (agreement - p.sigma_a)));
    return qg * qa;
}

// Gradient-weighted edge preservation of both inputs in the fused image.
// Returns 0 when neither input has any gradient.
inline double q_g(const Slice& a, const Slice& b, const Slice& fused, const QgParams& p = {}) {
    require_same_shape(a, fused, "q_g");
    require_same_shape(b, fused, "q_g");
    const auto ga = detail::sobel(a), gb = detail::sobel(b), gf = detail::sobel(fused);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double wa = ga.magnitude.pixels()[k], wb = gb.magnitude.pixels()[k];
        const double gfk = gf.magnitude.pixels()[k], af = gf.orientation.pixels()[k];
        if (wa > 0.0) num += wa * qg_edge_preservation(wa, gfk, ga.orientation.pixels()[k], af, p);
        if (wb > 0.0) num += wb * qg_edge_preservation(wb, gfk, gb.orientation.pixels()[k], af, p);
        den += wa + wb;
    }
    return den > 0.0 ? num / den : 0.0;
}

inline bool has_gradients(const Slice& s) {
    const auto g = detail::sobel(s);
    for (double v : g.magnitude.pixels())
        if (v > 0.0) return true;
    return false;
}

inline constexpr double q0_stabilizer = 1e-8;

// Universal quality index from window statistics. When both windows are flat
// only the luminance term contributes.
inline double quality_index(double mx, double my, double vx, double vy, double cxy) {
    const double c = q0_stabilizer;
    const double luminance = (2.0 * mx * my + c) / (mx * mx + my * my + c);
    const double var_sum = vx + vy;
    const double structure = var_sum <= c ? 1.0 : 2.0 * cxy / var_sum;
    return luminance * structure;
}

// Mean over all window x window positions of lambda*Q0(a,f) + (1-lambda)*Q0(b,f)
// with lambda = var(a)/(var(a)+var(b)) in that window (0.5 when both are flat).
inline double q_s(const Slice& a, const Slice& b, const Slice& fused, int window = 7) {
    require_same_shape(a, fused, "q_s");
    require_same_shape(b, fused, "q_s");
    require(window >= 1 && window % 2 == 1, "q_s window must be an odd positive integer");
    if (a.rows() < window || a.cols() < window)
        fail(ErrorKind::validation, "image smaller than the q_s window");
    const double n = static_cast<double>(window) * window;
    double total = 0.0;
    long positions = 0;
    for (int r0 = 0; r0 + window <= a.rows(); ++r0)
        for (int c0 = 0; c0 + window <= a.cols(); ++c0) {
            double ma = 0, mb = 0, mf = 0;
            for (int r = r0; r < r0 + window; ++r)
                for (int c = c0; c < c0 + window; ++c) {
                    ma += a(r, c);
                    mb += b(r, c);
                    mf += fused(r, c);
                }
            ma /= n;
            mb /= n;
            mf /= n;
            double va = 0, vb = 0, vf = 0, caf = 0, cbf = 0;
            for (int r = r0; r < r0 + window; ++r)
                for (int c = c0; c < c0 + window; ++c) {
                    const double da = a(r, c) - ma, db = b(r, c) - mb, df = fused(r, c) - mf;
                    va += da * da;
                    vb += db * db;
                    vf += df * df;
                    caf += da * df;
                    cbf += db * df;
                }
            va /= n;
            vb /= n;
            vf /= n;
            caf /= n;
            cbf /= n;
            const double lambda = va + vb > 0.0 ? va / (va + vb) : 0.5;
            total += lambda * quality_index(ma, mf, va, vf, caf) + (1.0 - lambda) * quality_index(mb, mf, vb, vf, cbf);
            ++positions;
        }
    return total / static_cast<double>(positions);
}

struct SliceMetrics {
    double q_mi = 0.0, q_g = 0.0, q_s = 0.0;
    std::optional<double> emse, ssim;
    bool q_mi_degenerate = false;  // fused image has zero entropy
    bool q_g_degenerate = false;   // neither input has gradients
};

struct MetricsReport {
    std::vector<SliceMetrics> slices;
    SliceMetrics mean;
};

inline SliceMetrics evaluate_slice(const Slice& a, const Slice& b, const Slice& fused,
                                   const std::optional<Slice>& gt = std::nullopt) {
    SliceMetrics m;
    m.q_mi = q_mi(a, b, fused);
    m.q_mi_degenerate = entropy(fused) == 0.0;
    m.q_g = q_g(a, b, fused);
    m.q_g_degenerate = !has_gradients(a) && !has_gradients(b);
    m.q_s = q_s(a, b, fused);
    if (gt) {
        m.emse = emse(fused, *gt);
        m.ssim = ssim(fused, *gt);
    }
    return m;
}

inline MetricsReport evaluate_volume(const Volume& a, const Volume& b, const Volume& fused,
                                     const std::optional<Volume>& gt = std::nullopt) {
    require(a.depth() == fused.depth() && b.depth() == fused.depth(), "evaluate: stacks differ in depth");
    require(!gt || gt->depth() == fused.depth(), "evaluate: ground truth differs in depth");
    MetricsReport rep;
    for (int z = 0; z < fused.depth(); ++z) {
        std::optional<Slice> g;
        if (gt) g = gt->slice(z);
        rep.slices.push_back(evaluate_slice(a.slice(z), b.slice(z), fused.slice(z), g));
    }
    const double n = static_cast<double>(rep.slices.size());
    for (const auto& s : rep.slices) {
        rep.mean.q_mi += s.q_mi / n;
        rep.mean.q_g += s.q_g / n;
        rep.mean.q_s += s.q_s / n;
        rep.mean.q_mi_degenerate = rep.mean.q_mi_degenerate || s.q_mi_degenerate;
        rep.mean.q_g_degenerate = rep.mean.q_g_degenerate || s.q_g_degenerate;
        if (s.emse) rep.mean.emse = rep.mean.emse.value_or(0.0) + *s.emse / n;
        if (s.ssim) rep.mean.ssim = rep.mean.ssim.value_or(0.0) + *s.ssim / n;
    }
    return rep;
}

}  // namespace lsfuse::metrics
