#pragma once

// Per-slice fusion pipeline, volume batching and two reference baselines.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "boundary_em.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "image.hpp"
#include "nsct.hpp"

namespace lsfuse::fusion {

struct FuseConfig {
    nsct::NsctConfig nsct;
    double epsilon = 1e-3;
    geometry::SegmentationConfig seg;
    em::EmConfig em;
    int feather = 5;
};

inline void validate_config(const FuseConfig& cfg) {
    nsct::validate_config(cfg.nsct);
    require(cfg.epsilon > 0.0, "nsct.epsilon must be > 0");
    require(cfg.seg.bins >= 2, "seg.bins must be >= 2");
    require(!cfg.seg.alpha || *cfg.seg.alpha > 0.0, "seg.alpha must be > 0");
    require(cfg.seg.min_component_px >= 0, "seg.min_component_px must be >= 0");
    em::validate_config(cfg.em);
    require(cfg.feather >= 0, "fuse.feather must be >= 0");
}

struct StageTimings {
    double nsct_s = 0.0;
    double geometry_s = 0.0;
    double em_s = 0.0;
    double compose_s = 0.0;

    StageTimings& operator+=(const StageTimings& o) {
        nsct_s += o.nsct_s;
        geometry_s += o.geometry_s;
        em_s += o.em_s;
        compose_s += o.compose_s;
        return *this;
    }
    double total() const { return nsct_s + geometry_s + em_s + compose_s; }
};

// Rows <= omega_i come from view a, rows > omega_i from view b. With feather > 0
// the weight of view a ramps linearly from 1 at omega_i - feather to 0 at
// omega_i + feather (0.5 on the boundary row).
inline Slice compose(const Slice& a, const Slice& b, const em::BoundaryCurve& omega, int feather) {
    require_same_shape(a, b, "compose");
    require(omega.cols() == a.cols(), "compose: boundary has " + std::to_string(omega.cols()) + " columns, slice " +
                                          std::to_string(a.cols()));
    require(feather >= 0, "feather must be >= 0");
    Slice out(a.rows(), a.cols());
    for (int c = 0; c < a.cols(); ++c) {
        const int w = omega.omega[static_cast<std::size_t>(c)];
        for (int r = 0; r < a.rows(); ++r) {
            double wa;
            if (feather == 0)
                wa = r <= w ? 1.0 : 0.0;
            else
                wa = std::clamp(0.5 - static_cast<double>(r - w) / (2.0 * feather), 0.0, 1.0);
            const double va = a(r, c), vb = b(r, c);
            out(r, c) = static_cast<float>(vb + wa * (va - vb));
        }
    }
    return out;
}

inline Plane focus_map(const Slice& s, const FuseConfig& cfg) {
    return nsct::focus_measure(nsct::decompose(s, cfg.nsct), cfg.epsilon);
}

enum class BaselineMode { average, max_focus };

// Per-pixel pick of the view with the larger focus value (view a on ties).
inline Slice max_focus_select(const Slice& a, const Slice& b, const Plane& fa, const Plane& fb) {
    require_same_shape(a, b, "max_focus_select");
    require_same_shape(fa, a, "max_focus_select focus map");
    require_same_shape(fb, a, "max_focus_select focus map");
    Slice out(a.rows(), a.cols());
    for (std::size_t k = 0; k < a.size(); ++k)
        out.pixels()[k] = fa.pixels()[k] >= fb.pixels()[k] ? a.pixels()[k] : b.pixels()[k];
    return out;
}

inline Slice baseline_fuse(const Slice& a, const Slice& b, BaselineMode mode, const FuseConfig& cfg = {}) {
    require_same_shape(a, b, "baseline_fuse");
    if (mode == BaselineMode::max_focus) return max_focus_select(a, b, focus_map(a, cfg), focus_map(b, cfg));
    Slice out(a.rows(), a.cols());
    for (std::size_t k = 0; k < a.size(); ++k)
        out.pixels()[k] = static_cast<float>(0.5 * (static_cast<double>(a.pixels()[k]) + b.pixels()[k]));
    return out;
}

struct SliceFusion {
    Slice fused;
    em::BoundaryCurve boundary;
    geometry::IncidentProfile profile;
    bool fallback = false;  // no sample: fused is the average baseline
    std::string warning;
    StageTimings timing;
};

namespace detail {

template <typename F>
auto timed(double& acc, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto result = f();
    acc += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace detail

// Focus maps, shared sample geometry, boundary EM and composition for one
// canonical-frame slice pair. Deterministic.
inline SliceFusion fuse_slice(const Slice& a, const Slice& b, const FuseConfig& cfg = {}) {
    validate_config(cfg);
    require_same_shape(a, b, "fuse_slice");
    validate_slice(a, "view a");
    validate_slice(b, "view b");
    nsct::require_decomposable(a.rows(), a.cols(), cfg.nsct.scales);

    SliceFusion out;
    Plane fa = detail::timed(out.timing.nsct_s, [&] { return focus_map(a, cfg); });
    Plane fb = detail::timed(out.timing.nsct_s, [&] { return focus_map(b, cfg); });

    std::optional<geometry::SampleGeometry> geo;
    try {
        geo = detail::timed(out.timing.geometry_s, [&] { return geometry::sample_geometry(pixelwise_max(a, b), cfg.seg); });
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_sample) throw;
        out.fallback = true;
        out.warning = e.what();
    }
    if (!out.fallback && geo->profile.valid_count() == 0) {
        out.fallback = true;
        out.warning = "no sample found";
    }
    if (out.fallback) {
        out.fused = baseline_fuse(a, b, BaselineMode::average, cfg);
        out.boundary.omega.assign(static_cast<std::size_t>(a.cols()), 0);
        out.boundary.valid.assign(static_cast<std::size_t>(a.cols()), false);
        out.profile = geometry::IncidentProfile{std::vector<int>(static_cast<std::size_t>(a.cols()), 0),
                                                std::vector<int>(static_cast<std::size_t>(a.cols()), 0),
                                                out.boundary.valid};
        return out;
    }
    out.profile = geo->profile;
    out.boundary = detail::timed(out.timing.em_s, [&] {
        em::normalize_focus_pair(fa, fb, out.profile);
        return em::em_estimate(fa, fb, out.profile, cfg.em);
    });
    out.fused = detail::timed(out.timing.compose_s, [&] { return compose(a, b, out.boundary, cfg.feather); });
    return out;
}

struct SliceReport {
    int z = 0;
    bool fallback = false;
    std::string message;  // warning or error text, empty when clean
    bool failed = false;
};

struct FusionResult {
    Volume fused;
    std::vector<em::BoundaryCurve> boundaries;  // canonical frame, one per z
    std::vector<geometry::IncidentProfile> profiles;
    std::vector<SliceReport> reports;
    StageTimings timing;
    FuseConfig config_echo;
    int workers = 1;
};

// Fuses every z independently on up to `workers` threads. Output order and
// values do not depend on the worker count. Slices that fail are replaced by
// the average baseline and reported; the call throws only when all fail.
inline FusionResult fuse_volume(const ViewPair& pair, const FuseConfig& cfg = {}, int workers = 1) {
    validate_pair(pair);
    validate_config(cfg);
    require(workers >= 1, "workers must be >= 1");
    const int depth = pair.view_a.depth();
    const AxisMeta meta = pair.view_a.meta();

    std::vector<std::optional<SliceFusion>> results(static_cast<std::size_t>(depth));
    std::vector<std::string> errors(static_cast<std::size_t>(depth));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int z = next.fetch_add(1); z < depth; z = next.fetch_add(1)) {
            try {
                const Slice a = to_canonical(pair.view_a.slice(z), meta);
                const Slice b = to_canonical(pair.view_b.slice(z), meta);
                results[static_cast<std::size_t>(z)] = fuse_slice(a, b, cfg);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(z)] = e.what();
            }
        }
    };
    const int n_threads = std::min(workers, depth);
    if (n_threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    }

    FusionResult out;
    out.config_echo = cfg;
    out.workers = workers;
    std::vector<Slice> fused;
    int failures = 0;
    std::string first_error;
    for (int z = 0; z < depth; ++z) {
        auto& r = results[static_cast<std::size_t>(z)];
        SliceReport rep{z, false, {}, false};
        if (r) {
            rep.fallback = r->fallback;
            rep.message = r->warning;
            out.timing += r->timing;
            fused.push_back(from_canonical(r->fused, meta));
            out.boundaries.push_back(std::move(r->boundary));
            out.profiles.push_back(std::move(r->profile));
        } else {
            ++failures;
            rep.failed = true;
            rep.fallback = true;
            rep.message = errors[static_cast<std::size_t>(z)];
            if (first_error.empty()) first_error = "slice " + std::to_string(z) + ": " + rep.message;
            fused.push_back(baseline_fuse(pair.view_a.slice(z), pair.view_b.slice(z), BaselineMode::average, cfg));
            const int canon_cols = meta.axis == IlluminationAxis::cols ? pair.view_a.rows() : pair.view_a.cols();
            em::BoundaryCurve empty;
            empty.omega.assign(static_cast<std::size_t>(canon_cols), 0);
            empty.valid.assign(static_cast<std::size_t>(canon_cols), false);
            out.profiles.push_back(geometry::IncidentProfile{std::vector<int>(empty.omega.size(), 0),
                                                             std::vector<int>(empty.omega.size(), 0), empty.valid});
            out.boundaries.push_back(std::move(empty));
        }
        out.reports.push_back(std::move(rep));
    }
    if (failures == depth) fail(ErrorKind::validation, "all " + std::to_string(depth) + " slices failed; " + first_error);
    out.fused = Volume(std::move(fused), meta);
    return out;
}

}  // namespace lsfuse::fusion
