#include <gtest/gtest.h>

#include "lsfuse/fuser.hpp"
#include "lsfuse/metrics.hpp"
#include "lsfuse/synth.hpp"
#include "support/generators.hpp"

using namespace lsfuse;
using namespace lsfuse::fusion;

namespace {

em::BoundaryCurve flat_curve(int cols, int row) {
    em::BoundaryCurve c;
    c.omega.assign(static_cast<std::size_t>(cols), row);
    c.valid.assign(static_cast<std::size_t>(cols), true);
    return c;
}

}  // namespace

TEST(Compose, HardCutFollowsBoundary) {
    testgen::Gen gen(51);
    const Slice a = gen.slice(12, 6), b = gen.slice(12, 6);
    em::BoundaryCurve w = flat_curve(6, 0);
    for (int i = 0; i < 6; ++i) w.omega[static_cast<std::size_t>(i)] = 2 * i;
    const Slice f = compose(a, b, w, 0);
    for (int r = 0; r < 12; ++r)
        for (int c = 0; c < 6; ++c) EXPECT_EQ(f(r, c), r <= 2 * c ? a(r, c) : b(r, c));
    const Slice all_a = compose(a, b, flat_curve(6, 11), 0);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(all_a.pixels()[k], a.pixels()[k]);
}

TEST(Compose, FeatherRamp) {
    const Slice a(12, 3, 1.0f), b(12, 3, 0.0f);
    const Slice f = compose(a, b, flat_curve(3, 5), 1);
    EXPECT_EQ(f(3, 0), 1.0f);
    EXPECT_EQ(f(4, 0), 1.0f);
    EXPECT_EQ(f(5, 0), 0.5f);
    EXPECT_EQ(f(6, 0), 0.0f);
    EXPECT_EQ(f(7, 0), 0.0f);
    const Slice g = compose(a, b, flat_curve(3, 5), 3);
    EXPECT_FLOAT_EQ(g(3, 1), 0.5f + 2.0f / 6.0f);
    EXPECT_EQ(g(1, 1), 1.0f);
    EXPECT_EQ(g(9, 1), 0.0f);
}

TEST(Compose, ConvexCombinationProperty) {
    testgen::Gen gen(52);
    for (int trial = 0; trial < 10; ++trial) {
        const int rows = gen.integer(4, 30), cols = gen.integer(4, 30);
        const Slice a = gen.slice(rows, cols), b = gen.slice(rows, cols);
        em::BoundaryCurve w = flat_curve(cols, 0);
        for (int& v : w.omega) v = gen.integer(0, rows - 1);
        const Slice f = compose(a, b, w, gen.integer(0, 6));
        for (std::size_t k = 0; k < f.size(); ++k) {
            EXPECT_GE(f.pixels()[k], std::min(a.pixels()[k], b.pixels()[k]));
            EXPECT_LE(f.pixels()[k], std::max(a.pixels()[k], b.pixels()[k]));
        }
        const Slice same = compose(a, a, w, gen.integer(0, 6));
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(same.pixels()[k], a.pixels()[k]);
    }
}

TEST(Baselines, AverageAndMaxFocus) {
    const Slice x(8, 8, 0.2f), y(8, 8, 0.6f);
    const Slice avg = baseline_fuse(x, y, BaselineMode::average);
    for (float v : avg.pixels()) EXPECT_FLOAT_EQ(v, 0.4f);
    testgen::Gen gen(53);
    const Slice s = gen.slice(32, 32);
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_EQ(baseline_fuse(s, s, BaselineMode::average).pixels()[k], s.pixels()[k]);
    const Plane hi(32, 32, 2.0), lo(32, 32, 1.0);
    const Slice t = gen.slice(32, 32);
    const Slice pick = max_focus_select(s, t, hi, lo);
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_EQ(pick.pixels()[k], s.pixels()[k]);
}

TEST(FuseSlice, IdenticalViewsReturnInput) {
    const Slice gt = synth::make_phantom(64, 64, 3);
    const auto r = fuse_slice(gt, gt);
    EXPECT_FALSE(r.fallback);
    for (std::size_t k = 0; k < gt.size(); ++k) EXPECT_EQ(r.fused.pixels()[k], gt.pixels()[k]);
    for (int i = 0; i < 64; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!r.profile.valid[k]) continue;
        EXPECT_GE(r.boundary.omega[k], r.profile.p_u[k]);
        EXPECT_LE(r.boundary.omega[k], r.profile.p_l[k]);
    }
}

TEST(FuseSlice, NoSampleFallsBackToAverage) {
    const Slice a(32, 32, 0.3f), b(32, 32, 0.5f);
    const auto r = fuse_slice(a, b);
    EXPECT_TRUE(r.fallback);
    EXPECT_FALSE(r.warning.empty());
    for (float v : r.fused.pixels()) EXPECT_FLOAT_EQ(v, 0.4f);
}

TEST(FuseSlice, RejectsMismatchedOrTinyInputs) {
    EXPECT_THROW(fuse_slice(Slice(32, 32, 0.f), Slice(32, 31, 0.f)), Error);
    EXPECT_THROW(fuse_slice(Slice(8, 8, 0.f), Slice(8, 8, 0.f)), Error);
}

TEST(FuseSlice, GhostBeyondBoundaryIsExcluded) {
    const int n = 128;
    const Slice gt = synth::make_phantom(n, n, 4);
    const auto geo = geometry::sample_geometry(gt);
    synth::BlurModel model;
    const synth::Rect g{n / 4, static_cast<int>(0.9 * n) + 1, n / 2, n - static_cast<int>(0.9 * n) - 3};
    model.ghosts.push_back({g, 0.6, 77, synth::GhostView::a});
    const auto [a, b] = synth::simulate_views(gt, geo.profile, model);
    const auto r = fuse_slice(a, b);
    float fused_max = 0.0f, b_max = 0.0f;
    for (int row = g.y; row < g.y + g.h; ++row)
        for (int col = g.x; col < g.x + g.w; ++col) {
            fused_max = std::max(fused_max, r.fused(row, col));
            b_max = std::max(b_max, b(row, col));
        }
    EXPECT_LE(fused_max, b_max + 0.02f);
}

TEST(FuseVolume, SingleSliceMatchesFuseSlice) {
    const Slice gt = synth::make_phantom(64, 64, 5);
    const auto geo = geometry::sample_geometry(gt);
    const auto [a, b] = synth::simulate_views(gt, geo.profile, {});
    const auto one = fuse_slice(a, b);
    const auto vol = fuse_volume({Volume({a}), Volume({b})});
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(vol.fused.slice(0).pixels()[k], one.fused.pixels()[k]);
    EXPECT_EQ(vol.boundaries[0].omega, one.boundary.omega);
    EXPECT_EQ(vol.profiles[0], one.profile);
}

TEST(FuseVolume, WorkerCountInvariantAndAxisAware) {
    std::vector<Slice> sa, sb;
    for (int z = 0; z < 4; ++z) {
        const Slice gt = synth::make_phantom(48, 64, static_cast<std::uint64_t>(z));
        const auto [a, b] = synth::simulate_views(gt, geometry::sample_geometry(gt).profile, {});
        sa.push_back(a);
        sb.push_back(b);
    }
    sa.push_back(Slice(48, 64, 0.0f));  // empty slice falls back
    sb.push_back(Slice(48, 64, 0.0f));
    const ViewPair pair{Volume(sa), Volume(sb)};
    const auto r1 = fuse_volume(pair, {}, 1), r4 = fuse_volume(pair, {}, 4);
    for (int z = 0; z < 5; ++z) {
        EXPECT_EQ(r1.boundaries[static_cast<std::size_t>(z)].omega, r4.boundaries[static_cast<std::size_t>(z)].omega);
        for (std::size_t k = 0; k < sa[0].size(); ++k)
            ASSERT_EQ(r1.fused.slice(z).pixels()[k], r4.fused.slice(z).pixels()[k]);
    }
    EXPECT_TRUE(r1.reports[4].fallback);
    EXPECT_FALSE(r1.reports[4].failed);

    // the same data presented with the illumination along columns, view a from the right
    const AxisMeta meta{IlluminationAxis::cols, EntrySide::bottom};
    std::vector<Slice> ta, tb;
    for (int z = 0; z < 5; ++z) {
        ta.push_back(from_canonical(sa[static_cast<std::size_t>(z)], meta));
        tb.push_back(from_canonical(sb[static_cast<std::size_t>(z)], meta));
    }
    const auto rt = fuse_volume({Volume(ta, meta), Volume(tb, meta)}, {}, 2);
    for (int z = 0; z < 5; ++z) {
        const Slice back = to_canonical(rt.fused.slice(z), meta);
        for (std::size_t k = 0; k < back.size(); ++k) ASSERT_EQ(back.pixels()[k], r1.fused.slice(z).pixels()[k]);
    }
}

TEST(FuseVolume, FailsOnlyWhenEverySliceFails) {
    const ViewPair bad{Volume({Slice(6, 6, 0.f)}), Volume({Slice(6, 6, 0.f)})};
    EXPECT_THROW(fuse_volume(bad), Error);
    EXPECT_THROW(fuse_volume({Volume({Slice(32, 32, 0.f)}), Volume({Slice(32, 33, 0.f)})}), Error);
}

TEST(FuseVolume, FusedBeatsInputsOnSynthBlur) {
    double fused = 0.0, inputs = 0.0;
    for (int z = 0; z < 6; ++z) {
        const Slice gt = synth::make_phantom(96, 96, 200u + static_cast<std::uint64_t>(z));
        const auto [a, b] = synth::simulate_views(gt, geometry::sample_geometry(gt).profile, {});
        fused += metrics::emse(fuse_slice(a, b).fused, gt);
        inputs += 0.5 * (metrics::emse(a, gt) + metrics::emse(b, gt));
    }
    EXPECT_LT(fused, inputs);
}

TEST(FuseConfigValidation, RejectsBadValues) {
    FuseConfig c;
    c.feather = -1;
    EXPECT_THROW(validate_config(c), Error);
    c = {};
    c.epsilon = 0.0;
    EXPECT_THROW(validate_config(c), Error);
    c = {};
    c.seg.bins = 1;
    EXPECT_THROW(validate_config(c), Error);
}
