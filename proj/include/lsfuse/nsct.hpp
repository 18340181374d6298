#pragma once

// Nonsubsampled contourlet transform and the directional-contrast focus measure.
//
// Pyramid stage: a trous lowpass filtering with periodic extension; level j
// upsamples the lowpass table by 2^j and the bandpass output is the difference
// of consecutive lowpass levels. Directional stage: each bandpass plane is
// split by 2^l angular wedge windows in the frequency domain which sum to one
// at every frequency. Synthesis is therefore a plain sum of all bands and the
// transform is perfectly reconstructing and shift-equivariant under circular
// shifts, up to floating-point rounding.
//
// Bands are indexed coarse to fine: scale 0 is the coarsest bandpass level.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "filters.hpp"
#include "image.hpp"

namespace lsfuse::nsct {

struct NsctConfig {
    int scales = 3;
    std::vector<int> directions{2, 3, 3};  // log2 of the direction count per scale, coarse to fine
    FilterBank filters = default_filter_bank();
};

struct NsctCoeffs {
    Plane lowpass;
    std::vector<std::vector<Plane>> bands;  // bands[scale][direction]

    int scales() const noexcept { return static_cast<int>(bands.size()); }
    int rows() const noexcept { return lowpass.rows(); }
    int cols() const noexcept { return lowpass.cols(); }
};

inline void validate_config(const NsctConfig& cfg) {
    require(cfg.scales >= 1, "nsct.scales must be >= 1");
    require(static_cast<int>(cfg.directions.size()) == cfg.scales,
            "nsct.directions must list one entry per scale (" + std::to_string(cfg.scales) + ")");
    for (int l : cfg.directions) require(l >= 1 && l <= 6, "nsct.directions entries must be in [1,6]");
}

inline void require_decomposable(int rows, int cols, int scales) {
    const long need = 1L << (scales + 1);
    if (rows < need || cols < need)
        fail(ErrorKind::validation, "image too small for " + std::to_string(scales) + " scales: " +
                                        std::to_string(rows) + "x" + std::to_string(cols) + " < " +
                                        std::to_string(need) + "x" + std::to_string(need));
}

namespace detail {

inline std::vector<int> wrapped_offsets(int extent, long offset) {
    std::vector<int> idx(static_cast<std::size_t>(extent));
    const long m = extent;
    for (int i = 0; i < extent; ++i) idx[static_cast<std::size_t>(i)] = static_cast<int>(((i + offset) % m + m) % m);
    return idx;
}

// One a trous lowpass step at pyramid level `level` (tap spacing 2^level).
inline Plane atrous_lowpass(const Plane& in, const PyramidFilter& f, int level) {
    const int rows = in.rows(), cols = in.cols();
    const long step = 1L << level;
    auto offset = [&](int k, int centre) { return (k - centre) * step; };

    if (f.separable) {
        const int centre = f.cols / 2;
        Plane tmp(rows, cols, 0.0);
        for (int k = 0; k < f.cols; ++k) {
            const double w = f.taps[static_cast<std::size_t>(k)];
            const auto idx = wrapped_offsets(cols, offset(k, centre));
            for (int r = 0; r < rows; ++r) {
                auto src = in.row(r);
                auto dst = tmp.row(r);
                for (int c = 0; c < cols; ++c) dst[c] += w * src[idx[static_cast<std::size_t>(c)]];
            }
        }
        Plane out(rows, cols, 0.0);
        for (int k = 0; k < f.cols; ++k) {
            const double w = f.taps[static_cast<std::size_t>(k)];
            const auto idx = wrapped_offsets(rows, offset(k, centre));
            for (int r = 0; r < rows; ++r) {
                auto src = tmp.row(idx[static_cast<std::size_t>(r)]);
                auto dst = out.row(r);
                for (int c = 0; c < cols; ++c) dst[c] += w * src[c];
            }
        }
        return out;
    }

    Plane out(rows, cols, 0.0);
    const int cr = f.rows / 2, cc = f.cols / 2;
    for (int a = 0; a < f.rows; ++a) {
        const auto ridx = wrapped_offsets(rows, offset(a, cr));
        for (int b = 0; b < f.cols; ++b) {
            const double w = f.taps[static_cast<std::size_t>(a) * f.cols + b];
            if (w == 0.0) continue;
            const auto cidx = wrapped_offsets(cols, offset(b, cc));
            for (int r = 0; r < rows; ++r) {
                auto src = in.row(ridx[static_cast<std::size_t>(r)]);
                auto dst = out.row(r);
                for (int c = 0; c < cols; ++c) dst[c] += w * src[cidx[static_cast<std::size_t>(c)]];
            }
        }
    }
    return out;
}

}  // namespace detail

// Angular window weights of all `count` directions on the r2c half spectrum of
// an M x N plane: weights[d][u * (N/2+1) + v]. Direction d is centred on the
// frequency orientation d*pi/count (atan2(fy, fx) folded into [0, pi)). The
// windows are raised-cosine ramps that sum to one everywhere; the DC bin is
// shared equally. Columns v = 0 and v = N/2 are symmetrized so every filtered
// spectrum stays Hermitian.
inline std::vector<std::vector<double>> direction_windows(int rows, int cols, int count, double transition) {
    const int half = cols / 2 + 1;
    const double pi = std::numbers::pi;
    const double width = pi / count;
    const double t = transition * width / 2.0;
    std::vector<std::vector<double>> w(static_cast<std::size_t>(count),
                                       std::vector<double>(static_cast<std::size_t>(rows) * half));

    auto window = [&](double theta, int d) {
        double dist = std::remainder(theta - d * width, pi);  // in [-pi/2, pi/2]
        dist = std::abs(dist);
        if (dist <= width / 2.0 - t) return 1.0;
        if (dist >= width / 2.0 + t) return 0.0;
        const double c = std::cos(pi / 4.0 * (1.0 + (dist - width / 2.0) / t));
        return c * c;
    };
    auto raw = [&](int u, int v, int d) {
        if (u == 0 && v == 0) return 1.0 / count;
        const double fy = (u <= rows / 2 ? u : u - rows) / static_cast<double>(rows);
        const double fx = (v <= cols / 2 ? v : v - cols) / static_cast<double>(cols);
        return window(std::atan2(fy, fx), d);
    };

    for (int u = 0; u < rows; ++u) {
        const int mirror_u = (rows - u) % rows;
        for (int v = 0; v < half; ++v) {
            const bool self_paired = v == 0 || (cols % 2 == 0 && v == cols / 2);
            for (int d = 0; d < count; ++d) {
                double value = raw(u, v, d);
                if (self_paired) value = 0.5 * (value + raw(mirror_u, v, d));
                w[static_cast<std::size_t>(d)][static_cast<std::size_t>(u) * half + v] = value;
            }
        }
    }
    return w;
}

inline NsctCoeffs decompose(const Plane& image, const NsctConfig& cfg = {}) {
    validate_config(cfg);
    require_decomposable(image.rows(), image.cols(), cfg.scales);

    std::vector<Plane> pyramid_bands;  // fine to coarse
    Plane current = image;
    for (int level = 0; level < cfg.scales; ++level) {
        Plane next = detail::atrous_lowpass(current, cfg.filters.pyramid, level);
        for (std::size_t k = 0; k < current.size(); ++k) current.pixels()[k] -= next.pixels()[k];
        pyramid_bands.push_back(std::move(current));
        current = std::move(next);
    }

    NsctCoeffs out;
    out.lowpass = std::move(current);
    fft::RealFft2d fft(image.rows(), image.cols());
    for (int scale = 0; scale < cfg.scales; ++scale) {
        const Plane& band = pyramid_bands[static_cast<std::size_t>(cfg.scales - 1 - scale)];
        const int count = 1 << cfg.directions[static_cast<std::size_t>(scale)];
        const auto windows = direction_windows(image.rows(), image.cols(), count, cfg.filters.directional.transition);
        const auto spectrum = fft.forward(band);
        std::vector<Plane> dirs;
        dirs.reserve(static_cast<std::size_t>(count));
        for (const auto& w : windows) dirs.push_back(fft.inverse_weighted(spectrum, w));
        out.bands.push_back(std::move(dirs));
    }
    return out;
}

inline NsctCoeffs decompose(const Slice& slice, const NsctConfig& cfg = {}) {
    return decompose(convert<double>(slice), cfg);
}

inline Plane reconstruct(const NsctCoeffs& coeffs) {
    Plane out = coeffs.lowpass;
    for (std::size_t s = 0; s < coeffs.bands.size(); ++s)
        for (std::size_t d = 0; d < coeffs.bands[s].size(); ++d) {
            const Plane& band = coeffs.bands[s][d];
            require_same_shape(band, out, "reconstruct band " + std::to_string(s) + "/" + std::to_string(d));
            for (std::size_t k = 0; k < out.size(); ++k) out.pixels()[k] += band.pixels()[k];
        }
    return out;
}

// Pixel-level clarity: F = sum over scales and directions of
// |S_{i,l}| / max(|lowpass|, eps) * Dsigma_i, where Dsigma_i is the population
// standard deviation of the direction magnitudes at scale i.
inline Plane focus_measure(const NsctCoeffs& coeffs, double epsilon = 1e-3) {
    require(epsilon > 0.0, "focus epsilon must be positive");
    const Plane& low = coeffs.lowpass;
    Plane focus(low.rows(), low.cols(), 0.0);
    for (const auto& scale : coeffs.bands) {
        require(!scale.empty(), "scale without direction bands");
        for (const auto& band : scale) require_same_shape(band, low, "focus_measure");
        const double count = static_cast<double>(scale.size());
        for (std::size_t k = 0; k < focus.size(); ++k) {
            double sum = 0.0;
            for (const auto& band : scale) sum += std::abs(band.pixels()[k]);
            const double mean = sum / count;
            double var = 0.0;
            for (const auto& band : scale) {
                const double d = std::abs(band.pixels()[k]) - mean;
                var += d * d;
            }
            const double spread = std::sqrt(var / count);
            const double base = std::max(std::abs(low.pixels()[k]), epsilon);
            focus.pixels()[k] += sum / base * spread;
        }
    }
    return focus;
}

inline double band_energy(const Plane& band) {
    double e = 0.0;
    for (double v : band.pixels()) e += v * v;
    return band.empty() ? 0.0 : e / static_cast<double>(band.size());
}

}  // namespace lsfuse::nsct
