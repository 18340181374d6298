#pragma once

// Focus-defocus boundary estimation. For every column i a changeover row
// omega_i splits the sample interval [p_u, p_l]: rows <= omega_i are taken from
// view a, rows below from view b. The estimate maximizes
//
//   J(omega, c) = sum_i clarity_i(omega_i) - lambda * sum_k || omega_{k-s:k+s} - poly_k ||^2
//
// where clarity_i is the attenuation-weighted focus sum of the column and poly_k
// is a degree-Q least-squares polynomial fitted to the boundary in the window
// centred on column k. Boundary updates (E-step) and window refits (M-step)
// alternate; each step cannot decrease J.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "image.hpp"

namespace lsfuse::em {

using geometry::IncidentProfile;

struct BoundaryCurve {
    std::vector<int> omega;
    std::vector<bool> valid;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;

    int cols() const noexcept { return static_cast<int>(omega.size()); }
};

// Shape of the lower (view b) branch of the attenuation weight. `mirrored`
// weighs view b 1 at its own entry row p_l and 0.5 at the boundary, the mirror
// image of view a. `literal` runs the other way: 1 at the boundary, 0.5 at p_l.
enum class Attenuation { mirrored, literal };

inline const char* to_string(Attenuation a) { return a == Attenuation::mirrored ? "mirrored" : "literal"; }

struct EmConfig {
    double lambda = 0.5;
    int s = 10;
    int Q = 2;
    int max_iters = 50;
    int tol = 0;
    Attenuation attenuation = Attenuation::mirrored;
};

inline void validate_config(const EmConfig& cfg) {
    require(cfg.lambda >= 0.0 && std::isfinite(cfg.lambda), "em.lambda must be finite and >= 0");
    require(cfg.s >= 1, "em.s must be >= 1");
    require(cfg.Q >= 0 && cfg.Q <= 2 * cfg.s, "em.Q must satisfy 0 <= Q <= 2s");
    require(cfg.max_iters >= 1, "em.max_iters must be >= 1");
    require(cfg.tol >= 0, "em.tol must be >= 0");
}

// Piecewise-linear photon-path weight of row j given the boundary row omega.
// View a's rows fall from 1 at p_u to 0.5 just above omega; rows from omega
// down to p_l follow the lower branch selected by `model`. Rows outside
// [p_u, p_l] weigh 0.
inline double attenuation_weight(int j, int p_u, int p_l, int omega, Attenuation model = Attenuation::mirrored) {
    if (j < p_u || j > p_l) return 0.0;
    if (p_u == p_l) return 1.0;
    if (j < omega) return 1.0 - 0.5 * static_cast<double>(j - p_u) / static_cast<double>(omega - p_u);
    if (omega == p_l) return 0.5;
    const double t = static_cast<double>(std::abs(j - p_l)) / static_cast<double>(p_l - omega);
    const double a = model == Attenuation::literal ? 0.5 + 0.5 * t : 1.0 - 0.5 * t;
    return std::clamp(a, 0.0, 1.0);
}

inline void validate_boundary(const BoundaryCurve& curve, const IncidentProfile& profile) {
    require(curve.cols() == profile.cols() && curve.valid.size() == profile.valid.size(),
            "boundary and incident profile differ in column count");
    for (int i = 0; i < curve.cols(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (profile.valid[k] && (curve.omega[k] < profile.p_u[k] || curve.omega[k] > profile.p_l[k]))
            fail(ErrorKind::validation, "boundary row outside the sample interval at column " + std::to_string(i));
    }
}

inline Plane attenuation_profile(const IncidentProfile& profile, const BoundaryCurve& omega, int rows,
                                 Attenuation model = Attenuation::mirrored) {
    geometry::validate_profile(profile, rows);
    validate_boundary(omega, profile);
    Plane a(rows, profile.cols(), 0.0);
    for (int i = 0; i < profile.cols(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!profile.valid[k]) continue;
        for (int j = profile.p_u[k]; j <= profile.p_l[k]; ++j)
            a(j, i) = attenuation_weight(j, profile.p_u[k], profile.p_l[k], omega.omega[k], model);
    }
    return a;
}

// sum_{j <= omega_i} A F^a + sum_{j > omega_i} A F^b over column i.
inline double column_clarity(const Plane& fa, const Plane& fb, const Plane& a, int omega_i, int i) {
    double sum = 0.0;
    for (int j = 0; j < a.rows(); ++j) sum += a(j, i) * (j <= omega_i ? fa(j, i) : fb(j, i));
    return sum;
}

namespace detail {

// column_clarity with the attenuation of candidate row r evaluated on the fly.
inline double clarity_at(const Plane& fa, const Plane& fb, int i, int p_u, int p_l, int r,
                         Attenuation model = Attenuation::mirrored) {
    double sum = 0.0;
    for (int j = p_u; j <= p_l; ++j) sum += attenuation_weight(j, p_u, p_l, r, model) * (j <= r ? fa(j, i) : fb(j, i));
    return sum;
}

}  // namespace detail

// Initial boundary: p_u plus the number of sample rows where F^a > F^b.
inline BoundaryCurve init_boundary(const Plane& fa, const Plane& fb, const IncidentProfile& profile) {
    require_same_shape(fa, fb, "init_boundary");
    require(profile.cols() == fa.cols(), "incident profile column count differs from focus maps");
    geometry::validate_profile(profile, fa.rows());
    BoundaryCurve curve;
    curve.omega.assign(static_cast<std::size_t>(fa.cols()), 0);
    curve.valid = profile.valid;
    for (int i = 0; i < fa.cols(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!profile.valid[k]) continue;
        int count = 0;
        for (int j = profile.p_u[k]; j <= profile.p_l[k]; ++j)
            if (fa(j, i) > fb(j, i)) ++count;
        curve.omega[k] = std::clamp(profile.p_u[k] + count, profile.p_u[k], profile.p_l[k]);
    }
    return curve;
}

// Least-squares polynomial over one window. Coefficients are ordered by
// descending power of the column offset delta (delta^Q ... delta, 1).
struct WindowFit {
    bool constrained = false;
    std::vector<double> coeffs;

    double operator()(double delta) const {
        double v = 0.0;
        for (double c : coeffs) v = v * delta + c;
        return v;
    }
};

struct PolyFitParams {
    int s = 0;
    int Q = 0;
    std::vector<WindowFit> windows;  // one per column; unconstrained where not fitted
};

// Fits omega over the valid columns of [i-s, i+s]. Unconstrained (no
// coefficients) when column i is invalid or fewer than Q+1 valid columns remain.
inline WindowFit fit_window_poly(const BoundaryCurve& omega, int i, int s, int Q) {
    WindowFit fit;
    const int n_cols = omega.cols();
    if (i < 0 || i >= n_cols || !omega.valid[static_cast<std::size_t>(i)]) return fit;
    std::vector<int> offsets;
    for (int d = -s; d <= s; ++d) {
        const int k = i + d;
        if (k >= 0 && k < n_cols && omega.valid[static_cast<std::size_t>(k)]) offsets.push_back(d);
    }
    if (static_cast<int>(offsets.size()) < Q + 1) return fit;

    // offsets scaled to [-1, 1] keep the Vandermonde system well conditioned
    const int n = static_cast<int>(offsets.size());
    Eigen::MatrixXd design(n, Q + 1);
    Eigen::VectorXd target(n);
    for (int r = 0; r < n; ++r) {
        const double u = static_cast<double>(offsets[static_cast<std::size_t>(r)]) / s;
        double p = 1.0;
        for (int col = Q; col >= 0; --col) {
            design(r, col) = p;
            p *= u;
        }
        target(r) = omega.omega[static_cast<std::size_t>(i + offsets[static_cast<std::size_t>(r)])];
    }
    const Eigen::VectorXd scaled = design.colPivHouseholderQr().solve(target);
    fit.constrained = true;
    fit.coeffs.resize(static_cast<std::size_t>(Q + 1));
    for (int col = 0; col <= Q; ++col) {
        const int power = Q - col;
        fit.coeffs[static_cast<std::size_t>(col)] = scaled(col) / std::pow(static_cast<double>(s), power);
    }
    return fit;
}

inline PolyFitParams fit_all_windows(const BoundaryCurve& omega, int s, int Q) {
    PolyFitParams p{s, Q, {}};
    p.windows.reserve(omega.omega.size());
    for (int i = 0; i < omega.cols(); ++i) p.windows.push_back(fit_window_poly(omega, i, s, Q));
    return p;
}

// ||omega_{i-s:i+s} - window polynomial||^2 over the valid columns of window i.
inline double smoothness_penalty(const BoundaryCurve& omega, const PolyFitParams& c, int i) {
    const auto& fit = c.windows.at(static_cast<std::size_t>(i));
    if (!fit.constrained) return 0.0;
    double sum = 0.0;
    for (int d = -c.s; d <= c.s; ++d) {
        const int k = i + d;
        if (k < 0 || k >= omega.cols() || !omega.valid[static_cast<std::size_t>(k)]) continue;
        const double r = omega.omega[static_cast<std::size_t>(k)] - fit(d);
        sum += r * r;
    }
    return sum;
}

inline double penalized_objective(const Plane& fa, const Plane& fb, const IncidentProfile& profile,
                                  const BoundaryCurve& omega, const PolyFitParams& c, double lambda,
                                  Attenuation model = Attenuation::mirrored) {
    double clarity = 0.0, residual = 0.0;
    for (int i = 0; i < omega.cols(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!profile.valid[k]) continue;
        clarity += detail::clarity_at(fa, fb, i, profile.p_u[k], profile.p_l[k], omega.omega[k], model);
        residual += smoothness_penalty(omega, c, i);
    }
    return clarity - lambda * residual;
}

namespace detail {

// Predictions for column i of every fitted window that covers it.
inline void window_predictions(const PolyFitParams& c, const BoundaryCurve& omega, int i, std::vector<double>& out) {
    out.clear();
    for (int d = -c.s; d <= c.s; ++d) {
        const int k = i + d;
        if (k < 0 || k >= omega.cols()) continue;
        const auto& fit = c.windows[static_cast<std::size_t>(k)];
        if (fit.constrained) out.push_back(fit(-d));
    }
}

}  // namespace detail

// Jacobi boundary update. With the window polynomials fixed, J separates by
// column: column i maximizes clarity_i(r) - lambda * sum_k (r - poly_k(i - k))^2
// over r in [p_u, p_l], the sum running over all fitted windows containing i.
// Candidate scores come from prefix sums; near-ties are re-scored by direct
// summation and the smallest maximizing row wins.
inline BoundaryCurve e_step(const Plane& fa, const Plane& fb, const IncidentProfile& profile,
                            const BoundaryCurve& omega, const PolyFitParams& c, const EmConfig& cfg) {
    require_same_shape(fa, fb, "e_step");
    require(profile.cols() == fa.cols() && omega.cols() == fa.cols(), "e_step: column count mismatch");
    const double lambda = cfg.lambda;
    const bool literal = cfg.attenuation == Attenuation::literal;
    BoundaryCurve next = omega;
    next.objective_trace.clear();

    std::vector<double> preds, score, sa0, sa1, sb0, sb1;
    for (int i = 0; i < fa.cols(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!profile.valid[k]) continue;
        const int u = profile.p_u[k], l = profile.p_l[k];
        if (u == l) {
            next.omega[k] = u;
            continue;
        }
        const int len = l - u + 1;
        // sa*[r-u]: sums over rows u..r-1 of view a; sb*[r-u]: sums over rows r+1..l of view b
        sa0.assign(static_cast<std::size_t>(len), 0.0);
        sa1.assign(static_cast<std::size_t>(len), 0.0);
        sb0.assign(static_cast<std::size_t>(len), 0.0);
        sb1.assign(static_cast<std::size_t>(len), 0.0);
        for (int r = u + 1; r <= l; ++r) {
            const auto t = static_cast<std::size_t>(r - u);
            sa0[t] = sa0[t - 1] + fa(r - 1, i);
            sa1[t] = sa1[t - 1] + (r - 1 - u) * fa(r - 1, i);
        }
        for (int r = l - 1; r >= u; --r) {
            const auto t = static_cast<std::size_t>(r - u);
            sb0[t] = sb0[t + 1] + fb(r + 1, i);
            sb1[t] = sb1[t + 1] + (l - r - 1) * fb(r + 1, i);
        }

        detail::window_predictions(c, omega, i, preds);
        const double count = static_cast<double>(preds.size());
        double mean = 0.0;
        for (double p : preds) mean += p;
        if (count > 0) mean /= count;

        score.assign(static_cast<std::size_t>(len), 0.0);
        double best = -std::numeric_limits<double>::infinity();
        for (int r = u; r <= l; ++r) {
            const auto t = static_cast<std::size_t>(r - u);
            // row r itself sits on the lower branch at zero distance from omega
            double data = (r < l && literal ? 1.0 : 0.5) * fa(r, i);
            if (r > u) data += sa0[t] - 0.5 * sa1[t] / (r - u);
            if (r < l) data += literal ? 0.5 * sb0[t] + 0.5 * sb1[t] / (l - r) : sb0[t] - 0.5 * sb1[t] / (l - r);
            const double dev = r - mean;
            score[t] = data - lambda * count * dev * dev;
            best = std::max(best, score[t]);
        }

        const double slack = 1e-9 * (1.0 + std::abs(best));
        int best_row = -1;
        double best_exact = -std::numeric_limits<double>::infinity();
        for (int r = u; r <= l; ++r) {
            if (score[static_cast<std::size_t>(r - u)] < best - slack) continue;
            double pen = 0.0;
            for (double p : preds) pen += (r - p) * (r - p);
            const double exact = detail::clarity_at(fa, fb, i, u, l, r, cfg.attenuation) - lambda * pen;
            if (exact > best_exact) {
                best_exact = exact;
                best_row = r;
            }
        }
        next.omega[k] = best_row;
    }
    return next;
}

// Linear interpolation of omega across invalid columns (nearest valid value at the ends).
inline void fill_invalid_columns(BoundaryCurve& curve) {
    const int n = curve.cols();
    int prev = -1;
    for (int i = 0; i <= n; ++i) {
        if (i < n && !curve.valid[static_cast<std::size_t>(i)]) continue;
        const int left = prev, right = i < n ? i : -1;
        for (int g = left + 1; g < (right >= 0 ? right : n); ++g) {
            auto& w = curve.omega[static_cast<std::size_t>(g)];
            if (left >= 0 && right >= 0) {
                const double wl = curve.omega[static_cast<std::size_t>(left)];
                const double wr = curve.omega[static_cast<std::size_t>(right)];
                w = static_cast<int>(std::lround(wl + (wr - wl) * (g - left) / static_cast<double>(right - left)));
            } else if (left >= 0) {
                w = curve.omega[static_cast<std::size_t>(left)];
            } else if (right >= 0) {
                w = curve.omega[static_cast<std::size_t>(right)];
            }
        }
        prev = i;
    }
}

inline BoundaryCurve em_estimate(const Plane& fa, const Plane& fb, const IncidentProfile& profile,
                                 const EmConfig& cfg = {}) {
    validate_config(cfg);
    if (profile.valid_count() == 0) fail(ErrorKind::no_sample, "no sample found");
    BoundaryCurve omega = init_boundary(fa, fb, profile);
    PolyFitParams c = fit_all_windows(omega, cfg.s, cfg.Q);
    std::vector<double> trace{penalized_objective(fa, fb, profile, omega, c, cfg.lambda, cfg.attenuation)};

    int iterations = 0;
    bool converged = false;
    while (iterations < cfg.max_iters) {
        BoundaryCurve next = e_step(fa, fb, profile, omega, c, cfg);
        int moved = 0;
        for (int i = 0; i < omega.cols(); ++i)
            if (profile.valid[static_cast<std::size_t>(i)])
                moved = std::max(moved, std::abs(next.omega[static_cast<std::size_t>(i)] -
                                                 omega.omega[static_cast<std::size_t>(i)]));
        omega = std::move(next);
        c = fit_all_windows(omega, cfg.s, cfg.Q);
        trace.push_back(penalized_objective(fa, fb, profile, omega, c, cfg.lambda, cfg.attenuation));
        ++iterations;
        if (moved <= cfg.tol) {
            converged = true;
            break;
        }
    }
    omega.objective_trace = std::move(trace);
    omega.iterations = iterations;
    omega.converged = converged;
    fill_invalid_columns(omega);
    return omega;
}

// Divides both maps by the larger of their in-sample 99th percentiles so that
// lambda has a comparable meaning across datasets. Returns the divisor used.
inline double normalize_focus_pair(Plane& fa, Plane& fb, const IncidentProfile& profile) {
    auto p99 = [&](const Plane& f) {
        std::vector<double> v;
        for (int i = 0; i < f.cols(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            if (!profile.valid[k]) continue;
            for (int j = profile.p_u[k]; j <= profile.p_l[k]; ++j) v.push_back(f(j, i));
        }
        if (v.empty()) return 0.0;
        const auto nth = static_cast<std::ptrdiff_t>(std::floor(0.99 * static_cast<double>(v.size() - 1)));
        std::nth_element(v.begin(), v.begin() + nth, v.end());
        return v[static_cast<std::size_t>(nth)];
    };
    double scale = std::max(p99(fa), p99(fb));
    if (!(scale > 0.0)) {
        scale = 0.0;
        for (double x : fa.pixels()) scale = std::max(scale, x);
        for (double x : fb.pixels()) scale = std::max(scale, x);
    }
    if (!(scale > 0.0)) return 1.0;
    for (double& x : fa.pixels()) x /= scale;
    for (double& x : fb.pixels()) x /= scale;
    return scale;
}

}  // namespace lsfuse::em
