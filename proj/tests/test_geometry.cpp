#include <gtest/gtest.h>

#include "lsfuse/geometry.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace lsfuse;
using namespace lsfuse::geometry;

namespace {

Mask rect_mask(int rows, int cols, int r0, int r1, int c0, int c1) {
    Mask m(rows, cols, 0);
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) m(r, c) = 1;
    return m;
}

bool subset(const Mask& a, const Mask& b) {
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a.pixels()[k] && !b.pixels()[k]) return false;
    return true;
}

bool equal(const Mask& a, const Mask& b) {
    for (std::size_t k = 0; k < a.size(); ++k)
        if ((a.pixels()[k] != 0) != (b.pixels()[k] != 0)) return false;
    return true;
}

// Random blob: union of a few filled discs.
Mask blob(testgen::Gen& gen, int rows, int cols) {
    Mask m(rows, cols, 0);
    const int discs = gen.integer(1, 4);
    for (int d = 0; d < discs; ++d) {
        const int cr = gen.integer(rows / 4, 3 * rows / 4), cc = gen.integer(cols / 4, 3 * cols / 4);
        const int rad = gen.integer(2, std::min(rows, cols) / 4);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= rad * rad) m(r, c) = 1;
    }
    return m;
}

}  // namespace

TEST(Otsu, TwoLevelImage) {
    Slice s(10, 10, 0.1f);
    for (int r = 5; r < 10; ++r)
        for (int c = 0; c < 10; ++c) s(r, c) = 0.9f;
    const double t = otsu_threshold(s);
    EXPECT_GT(t, 0.1);
    EXPECT_LE(t, 0.9);
    EXPECT_EQ(t, oracle::otsu(s, 256));
    const Mask m = foreground_mask(s, t, 0);
    for (int r = 0; r < 10; ++r) EXPECT_EQ(m(r, 0) != 0, r >= 5);
}

TEST(Otsu, ConstantImageHasNoSeparation) {
    try {
        otsu_threshold(Slice(8, 8, 0.4f));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::no_sample);
    }
}

TEST(Otsu, GaussianClusters) {
    testgen::Gen gen(21);
    std::normal_distribution<double> lo(0.2, 0.01), hi(0.8, 0.01);
    Slice s(200, 100);
    for (int k = 0; k < 20000; ++k)
        s.pixels()[static_cast<std::size_t>(k)] =
            static_cast<float>(std::clamp(k < 10000 ? lo(gen.engine()) : hi(gen.engine()), 0.0, 1.0));
    const double t = otsu_threshold(s);
    EXPECT_EQ(t, oracle::otsu(s, 256));
    // every split inside the gap is optimal; the lowest one sits just above the dark cluster
    float dark = 0.0f, bright = 1.0f;
    for (int k = 0; k < 20000; ++k) {
        const float v = s.pixels()[static_cast<std::size_t>(k)];
        (k < 10000 ? dark : bright) = k < 10000 ? std::max(dark, v) : std::min(bright, v);
    }
    EXPECT_GE(t, dark);
    EXPECT_LT(t, bright);
}

TEST(Otsu, MatchesExhaustiveScanOnRandomHistograms) {
    testgen::Gen gen(22);
    for (int trial = 0; trial < 50; ++trial) {
        const int bins = trial % 5 == 0 ? gen.integer(2, 16) : 256;
        // sparse, clustered or uniform histograms
        Slice s(gen.integer(4, 40), gen.integer(4, 40));
        const int mode = trial % 3;
        const double c1 = gen.uniform(), c2 = gen.uniform();
        for (float& v : s.pixels()) {
            double x = mode == 0 ? gen.uniform() : mode == 1 ? (gen.coin() ? c1 : c2) + gen.uniform(-0.05, 0.05)
                                                            : std::floor(gen.uniform() * 6) / 5.0;
            v = static_cast<float>(std::clamp(x, 0.0, 1.0));
        }
        const double expect = oracle::otsu(s, bins);
        if (expect < 0) {
            EXPECT_THROW(otsu_threshold(s, bins), Error);
        } else {
            EXPECT_EQ(otsu_threshold(s, bins), expect) << "trial " << trial;
        }
    }
}

TEST(ForegroundMask, SquareAndSpeckle) {
    Slice s(60, 60, 0.0f);
    for (int r = 20; r < 40; ++r)
        for (int c = 20; c < 40; ++c) s(r, c) = 0.9f;
    s(2, 2) = s(2, 3) = s(3, 2) = 0.9f;
    const Mask m = foreground_mask(s, 0.5, 10);
    EXPECT_TRUE(equal(m, rect_mask(60, 60, 20, 39, 20, 39)));
    const Mask keep = foreground_mask(s, 0.5, 1);
    EXPECT_EQ(count_foreground(keep), 403u);
    EXPECT_EQ(count_foreground(foreground_mask(s, 0.95, 0)), 0u);
}

TEST(FillHoles, InteriorOnly) {
    Mask m = rect_mask(12, 12, 2, 9, 2, 9);
    m(5, 5) = m(5, 6) = 0;
    m(2, 4) = 0;  // notch open to the outside stays background
    const Mask f = fill_holes(m);
    EXPECT_TRUE(f(5, 5));
    EXPECT_TRUE(f(5, 6));
    EXPECT_FALSE(f(2, 4));
    EXPECT_FALSE(f(0, 0));
    EXPECT_EQ(count_foreground(f), 63u);
}

TEST(BoundingPolygon, LargeAlphaIsConvexHull) {
    testgen::Gen gen(23);
    for (int trial = 0; trial < 15; ++trial) {
        const Mask m = blob(gen, gen.integer(20, 50), gen.integer(20, 50));
        EXPECT_TRUE(equal(bounding_polygon(m, 1e9), oracle::filled_hull(m))) << "trial " << trial;
    }
}

TEST(BoundingPolygon, SupersetAndMonotoneInAlpha) {
    testgen::Gen gen(24);
    for (int trial = 0; trial < 10; ++trial) {
        const Mask m = blob(gen, 40, 40);
        Mask prev = m;
        for (double alpha : {1.0, 2.0, 4.0, 8.0, 16.0, 1e6}) {
            const Mask p = bounding_polygon(m, alpha);
            EXPECT_TRUE(subset(m, p));
            EXPECT_TRUE(subset(prev, p)) << "alpha " << alpha;
            prev = p;
        }
    }
}

TEST(BoundingPolygon, SeparateSquaresStaySeparate) {
    Mask m = rect_mask(40, 40, 5, 9, 5, 9);
    const Mask other = rect_mask(40, 40, 28, 32, 25, 29);
    for (std::size_t k = 0; k < m.size(); ++k) m.pixels()[k] |= other.pixels()[k];
    EXPECT_TRUE(equal(bounding_polygon(m, 4.0), m));
    // with a huge alpha the gap is bridged
    EXPECT_GT(count_foreground(bounding_polygon(m, 1e9)), count_foreground(m));
}

TEST(BoundingPolygon, ConvexInputIsFixedPoint) {
    const Mask m = rect_mask(30, 30, 3, 20, 7, 25);
    for (double alpha : {2.0, 5.0, 1e9}) EXPECT_TRUE(equal(bounding_polygon(m, alpha), m));
    EXPECT_THROW(bounding_polygon(rect_mask(10, 10, 1, 1, 1, 2), 5.0), Error);
}

TEST(IncidentProfile, FullAndEmpty) {
    const auto full = incident_profile(Mask(7, 5, 1));
    for (int i = 0; i < 5; ++i) {
        EXPECT_TRUE(full.valid[static_cast<std::size_t>(i)]);
        EXPECT_EQ(full.p_u[static_cast<std::size_t>(i)], 0);
        EXPECT_EQ(full.p_l[static_cast<std::size_t>(i)], 6);
    }
    const auto empty = incident_profile(Mask(7, 5, 0));
    EXPECT_EQ(empty.valid_count(), 0);
}

TEST(IncidentProfile, Rectangle) {
    const auto p = incident_profile(rect_mask(64, 32, 10, 50, 5, 20));
    for (int i = 0; i < 32; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const bool inside = i >= 5 && i <= 20;
        EXPECT_EQ(p.valid[k], inside);
        if (inside) {
            EXPECT_EQ(p.p_u[k], 10);
            EXPECT_EQ(p.p_l[k], 50);
        }
    }
}

TEST(IncidentProfile, EndpointsAreForegroundAndOutsideIsNot) {
    testgen::Gen gen(25);
    for (int trial = 0; trial < 10; ++trial) {
        const Mask poly = bounding_polygon(blob(gen, 36, 36), 5.0);
        const auto p = incident_profile(poly);
        for (int i = 0; i < 36; ++i) {
            const auto k = static_cast<std::size_t>(i);
            if (!p.valid[k]) {
                for (int r = 0; r < 36; ++r) EXPECT_FALSE(poly(r, i));
                continue;
            }
            EXPECT_TRUE(poly(p.p_u[k], i));
            EXPECT_TRUE(poly(p.p_l[k], i));
            for (int r = 0; r < p.p_u[k]; ++r) EXPECT_FALSE(poly(r, i));
            for (int r = p.p_l[k] + 1; r < 36; ++r) EXPECT_FALSE(poly(r, i));
        }
    }
}

TEST(SampleGeometry, EllipseOnBackground) {
    Slice s(64, 64, 0.02f);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c)
            if (std::pow((r - 32) / 20.0, 2) + std::pow((c - 32) / 25.0, 2) <= 1.0) s(r, c) = 0.8f;
    const auto g = sample_geometry(s);
    const auto& p = g.profile;
    EXPECT_TRUE(p.valid[32]);
    EXPECT_EQ(p.p_u[32], 12);
    EXPECT_EQ(p.p_l[32], 52);
    EXPECT_FALSE(p.valid[2]);
    EXPECT_THROW(sample_geometry(Slice(16, 16, 0.3f)), Error);
}

TEST(SampleGeometry, DefaultAlpha) {
    SegmentationConfig cfg;
    EXPECT_DOUBLE_EQ(resolved_alpha(cfg, 100, 300), 15.0);
    cfg.alpha = 3.0;
    EXPECT_DOUBLE_EQ(resolved_alpha(cfg, 100, 300), 3.0);
}
