#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "image.hpp"

namespace lsfuse {

// Normalized 1-D Gaussian taps with radius ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma, int radius = -1) {
    require(sigma > 0.0, "gaussian sigma must be positive");
    if (radius < 0) radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

// Mirror index without repeating the edge sample (..., 2, 1 | 0, 1, 2, ...).
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

// Separable convolution with mirrored borders.
template <typename T>
Plane separable_filter(const Image<T>& img, const std::vector<double>& taps) {
    const int rows = img.rows(), cols = img.cols();
    const int radius = static_cast<int>(taps.size() / 2);
    Plane tmp(rows, cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        auto src = img.row(r);
        auto dst = tmp.row(r);
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[static_cast<std::size_t>(k + radius)] * src[static_cast<std::size_t>(reflect_index(c + k, cols))];
            dst[c] = acc;
        }
    }
    Plane out(rows, cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        auto dst = out.row(r);
        for (int k = -radius; k <= radius; ++k) {
            const double w = taps[static_cast<std::size_t>(k + radius)];
            auto src = tmp.row(reflect_index(r + k, rows));
            for (int c = 0; c < cols; ++c) dst[c] += w * src[c];
        }
    }
    return out;
}

template <typename T>
Plane gaussian_blur(const Image<T>& img, double sigma) {
    if (sigma <= 0.0) return convert<double>(img);
    return separable_filter(img, gaussian_kernel(sigma));
}

inline Slice clamp_to_slice(const Plane& p) {
    Slice out(p.rows(), p.cols());
    for (std::size_t k = 0; k < p.size(); ++k)
        out.pixels()[k] = static_cast<float>(std::clamp(p.pixels()[k], 0.0, 1.0));
    return out;
}

}  // namespace lsfuse
