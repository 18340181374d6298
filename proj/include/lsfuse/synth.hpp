#pragma once

// Synthetic dual-view degradation: depth-dependent Gaussian blur from each
// illumination side, seeded ghost texture and additive noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "filtering.hpp"
#include "geometry.hpp"
#include "image.hpp"

namespace lsfuse::synth {

// x, y are the column and row of the top-left corner.
struct Rect {
    int x = 0, y = 0, w = 0, h = 0;

    bool contains(int row, int col) const noexcept { return col >= x && col < x + w && row >= y && row < y + h; }
};

enum class GhostView { a, b };

struct GhostSpec {
    Rect region;
    double amplitude = 0.0;
    std::uint64_t seed = 0;
    GhostView view = GhostView::a;
};

struct BlurModel {
    double sigma_max = 4.0;
    // Maps relative depth t in [0,1] to a fraction of sigma_max; must be
    // nondecreasing with shape(0) = 0 and shape(1) = 1. Empty means linear.
    std::function<double(double)> shape;
    std::vector<GhostSpec> ghosts;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    double sigma_at(int depth, int thickness) const {
        if (thickness <= 0 || sigma_max <= 0.0) return 0.0;
        const double t = std::clamp(static_cast<double>(depth) / thickness, 0.0, 1.0);
        return sigma_max * (shape ? shape(t) : t);
    }
};

inline constexpr double sigma_step = 0.25;

inline int sigma_level(double sigma) { return static_cast<int>(std::lround(sigma / sigma_step)); }

inline void validate_rect(const Rect& r, int rows, int cols) {
    require(r.w > 0 && r.h > 0 && r.x >= 0 && r.y >= 0 && r.x + r.w <= cols && r.y + r.h <= rows,
            "ghost region " + std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," +
                std::to_string(r.h) + " is not inside the " + std::to_string(cols) + "x" + std::to_string(rows) + " image");
}

// Adds blurred seeded noise, rescaled to peak `amplitude`, inside `region`.
inline Slice inject_ghost(const Slice& view, const Rect& region, double amplitude, std::uint64_t seed) {
    validate_rect(region, view.rows(), view.cols());
    require(std::isfinite(amplitude) && amplitude >= 0.0, "ghost amplitude must be finite and >= 0");
    Slice out = view;
    if (amplitude == 0.0) return out;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Plane noise(region.h, region.w);
    for (double& v : noise.pixels()) v = uni(rng);
    const double sigma = std::max(2.0, std::min(region.w, region.h) / 6.0);
    const Plane smooth = gaussian_blur(noise, sigma);
    const auto [lo, hi] = std::ranges::minmax(smooth.pixels());
    for (int r = 0; r < region.h; ++r)
        for (int c = 0; c < region.w; ++c) {
            const double t = hi > lo ? (smooth(r, c) - lo) / (hi - lo) : 1.0;
            float& px = out(region.y + r, region.x + c);
            px = static_cast<float>(std::clamp(static_cast<double>(px) + amplitude * t, 0.0, 1.0));
        }
    return out;
}

namespace detail {

// Blurred copies of gt at every quantized sigma level up to `levels`.
inline std::vector<Plane> blur_bank(const Slice& gt, int levels) {
    std::vector<Plane> bank;
    bank.reserve(static_cast<std::size_t>(levels) + 1);
    for (int k = 0; k <= levels; ++k) bank.push_back(gaussian_blur(gt, k * sigma_step));
    return bank;
}

inline void add_noise(Slice& s, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (float& v : s.pixels()) v = static_cast<float>(std::clamp(static_cast<double>(v) + gauss(rng), 0.0, 1.0));
}

}  // namespace detail

// View a is blurred by depth below p_u, view b by depth above p_l. Pixels
// outside the sample keep their gt value.
inline std::pair<Slice, Slice> simulate_views(const Slice& gt, const geometry::IncidentProfile& profile,
                                              const BlurModel& model) {
    validate_slice(gt, "ground truth");
    require(profile.cols() == gt.cols(), "incident profile width does not match the ground truth");
    geometry::validate_profile(profile, gt.rows());
    require(std::isfinite(model.sigma_max) && model.sigma_max >= 0.0, "sigma_max must be finite and >= 0");
    require(model.noise_sigma >= 0.0, "noise sigma must be >= 0");

    Slice a = gt, b = gt;
    const auto bank = detail::blur_bank(gt, sigma_level(model.sigma_max));
    for (int c = 0; c < gt.cols(); ++c) {
        const auto ci = static_cast<std::size_t>(c);
        if (!profile.valid[ci]) continue;
        const int pu = profile.p_u[ci], pl = profile.p_l[ci], thickness = pl - pu;
        for (int r = pu; r <= pl; ++r) {
            const int la = sigma_level(model.sigma_at(r - pu, thickness));
            const int lb = sigma_level(model.sigma_at(pl - r, thickness));
            a(r, c) = static_cast<float>(std::clamp(bank[static_cast<std::size_t>(la)](r, c), 0.0, 1.0));
            b(r, c) = static_cast<float>(std::clamp(bank[static_cast<std::size_t>(lb)](r, c), 0.0, 1.0));
        }
    }
    for (const auto& g : model.ghosts) {
        Slice& target = g.view == GhostView::a ? a : b;
        target = inject_ghost(target, g.region, g.amplitude, g.seed);
    }
    if (model.noise_sigma > 0.0) {
        detail::add_noise(a, model.noise_sigma, model.seed * 2 + 1);
        detail::add_noise(b, model.noise_sigma, model.seed * 2 + 2);
    }
    return {std::move(a), std::move(b)};
}

namespace detail {

// Seeded uniform noise blurred by sigma and standardized to zero mean, unit std.
inline Plane standardized_noise(int rows, int cols, double sigma, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Plane noise(rows, cols);
    for (double& v : noise.pixels()) v = uni(rng);
    Plane out = gaussian_blur(noise, sigma);
    double mean = 0.0, var = 0.0;
    for (double v : out.pixels()) mean += v;
    mean /= static_cast<double>(out.size());
    for (double v : out.pixels()) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(out.size()));
    for (double& v : out.pixels()) v = sd > 0.0 ? (v - mean) / sd : 0.0;
    return out;
}

}  // namespace detail

// Procedural test sample: an ellipse of seeded texture in [0.3, 1] on a zero
// background. The texture is fine grain (noise blurred by 0.5 px) under a weak
// coarse modulation, so blur removes detail at every depth.
inline Slice make_phantom(int rows, int cols, std::uint64_t seed) {
    require(rows >= min_slice_extent && cols >= min_slice_extent, "phantom must be at least 4x4");
    std::mt19937_64 rng(seed);
    Plane tex = detail::standardized_noise(rows, cols, 0.5, rng);
    const Plane coarse = detail::standardized_noise(rows, cols, 8.0, rng);
    for (std::size_t k = 0; k < tex.size(); ++k) tex.pixels()[k] += 0.3 * coarse.pixels()[k];
    const auto [lo, hi] = std::ranges::minmax(tex.pixels());

    const double cy = 0.5 * (rows - 1), cx = 0.5 * (cols - 1);
    const double ry = 0.40 * rows, rx = 0.45 * cols;
    Slice out(rows, cols, 0.0f);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double dy = (r - cy) / ry, dx = (c - cx) / rx;
            if (dy * dy + dx * dx > 1.0) continue;
            const double t = hi > lo ? (tex(r, c) - lo) / (hi - lo) : 0.5;
            out(r, c) = static_cast<float>(0.3 + 0.7 * t);
        }
    return out;
}

}  // namespace lsfuse::synth
