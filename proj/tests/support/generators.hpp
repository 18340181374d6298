#pragma once

// Seeded random inputs for property tests.

#include <cstdint>
#include <random>
#include <vector>

#include "lsfuse/filtering.hpp"
#include "lsfuse/geometry.hpp"
#include "lsfuse/image.hpp"

namespace testgen {

using lsfuse::Plane;
using lsfuse::Slice;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return uniform() < p; }
    std::mt19937_64& engine() { return rng_; }

    Slice slice(int rows, int cols) {
        Slice s(rows, cols);
        for (float& v : s.pixels()) v = static_cast<float>(uniform());
        return s;
    }

    Plane plane(int rows, int cols, double lo = 0.0, double hi = 1.0) {
        Plane p(rows, cols);
        for (double& v : p.pixels()) v = uniform(lo, hi);
        return p;
    }

    // Smooth texture: noise blurred by sigma, rescaled to [lo, hi].
    Slice texture(int rows, int cols, double sigma, double lo = 0.0, double hi = 1.0) {
        const Plane blurred = lsfuse::gaussian_blur(plane(rows, cols), sigma);
        double mn = blurred.pixels()[0], mx = mn;
        for (double v : blurred.pixels()) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        Slice s(rows, cols);
        for (std::size_t k = 0; k < s.size(); ++k)
            s.pixels()[k] = static_cast<float>(lo + (hi - lo) * (mx > mn ? (blurred.pixels()[k] - mn) / (mx - mn) : 0.5));
        return s;
    }

    // Random per-column intervals; roughly `invalid_p` of the columns are invalid.
    lsfuse::geometry::IncidentProfile profile(int rows, int cols, double invalid_p = 0.15) {
        lsfuse::geometry::IncidentProfile p{std::vector<int>(static_cast<std::size_t>(cols), 0),
                                            std::vector<int>(static_cast<std::size_t>(cols), 0),
                                            std::vector<bool>(static_cast<std::size_t>(cols), false)};
        for (int c = 0; c < cols; ++c) {
            const auto k = static_cast<std::size_t>(c);
            if (coin(invalid_p)) continue;
            int a = integer(0, rows - 1), b = integer(0, rows - 1);
            if (a > b) std::swap(a, b);
            p.p_u[k] = a;
            p.p_l[k] = b;
            p.valid[k] = true;
        }
        return p;
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace testgen
