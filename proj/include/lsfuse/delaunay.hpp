#pragma once

// Delaunay triangulation of integer lattice points (Bowyer-Watson with an
// x-sorted sweep that retires triangles whose circumcircle lies left of the
// sweep line). Orientation and in-circle tests are exact in 128-bit integers,
// which keeps the grid's many cocircular configurations well defined.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "errors.hpp"

namespace lsfuse::geometry {

struct LatticePoint {
    std::int64_t x = 0;
    std::int64_t y = 0;
    friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
};

struct Triangle {
    std::array<int, 3> v{};  // indices into the input point list
};

namespace detail {

using i128 = __int128;

inline i128 orient(const LatticePoint& a, const LatticePoint& b, const LatticePoint& c) {
    return static_cast<i128>(b.x - a.x) * (c.y - a.y) - static_cast<i128>(b.y - a.y) * (c.x - a.x);
}

// > 0 when d is strictly inside the circumcircle of counter-clockwise (a, b, c).
inline i128 in_circle(const LatticePoint& a, const LatticePoint& b, const LatticePoint& c, const LatticePoint& d) {
    const i128 adx = a.x - d.x, ady = a.y - d.y;
    const i128 bdx = b.x - d.x, bdy = b.y - d.y;
    const i128 cdx = c.x - d.x, cdy = c.y - d.y;
    const i128 ad = adx * adx + ady * ady;
    const i128 bd = bdx * bdx + bdy * bdy;
    const i128 cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

struct WorkTriangle {
    std::array<int, 3> v;
    double cx, cy, r2;  // circumcircle, used only to retire triangles from the sweep
};

}  // namespace detail

// Triangulates distinct points with |x|, |y| < 2^24. Returns counter-clockwise
// triangles; collinear input yields no triangles.
inline std::vector<Triangle> delaunay(const std::vector<LatticePoint>& input) {
    const int n = static_cast<int>(input.size());
    if (n < 3) return {};
    for (const auto& p : input)
        if (std::llabs(p.x) >= (1LL << 24) || std::llabs(p.y) >= (1LL << 24))
            fail(ErrorKind::validation, "delaunay: coordinates out of range");

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& p = input[static_cast<std::size_t>(a)];
        const auto& q = input[static_cast<std::size_t>(b)];
        return p.x != q.x ? p.x < q.x : p.y < q.y;
    });

    std::vector<LatticePoint> pts(input.begin(), input.end());
    std::int64_t minx = pts[0].x, maxx = minx, miny = pts[0].y, maxy = miny;
    for (const auto& p : pts) {
        minx = std::min(minx, p.x);
        maxx = std::max(maxx, p.x);
        miny = std::min(miny, p.y);
        maxy = std::max(maxy, p.y);
    }
    // super-triangle far outside the data; the 128-bit predicates stay exact up to ~2^29
    const std::int64_t big = 1LL << 27;
    const std::int64_t mx = (minx + maxx) / 2, my = (miny + maxy) / 2;
    pts.push_back({mx - big, my - big});
    pts.push_back({mx + big, my - big});
    pts.push_back({mx, my + big});
    const int s0 = n, s1 = n + 1, s2 = n + 2;

    auto make = [&](int a, int b, int c) {
        if (detail::orient(pts[static_cast<std::size_t>(a)], pts[static_cast<std::size_t>(b)],
                           pts[static_cast<std::size_t>(c)]) < 0)
            std::swap(b, c);
        const auto& A = pts[static_cast<std::size_t>(a)];
        const auto& B = pts[static_cast<std::size_t>(b)];
        const auto& C = pts[static_cast<std::size_t>(c)];
        const double ax = static_cast<double>(A.x), ay = static_cast<double>(A.y);
        const double bx = static_cast<double>(B.x) - ax, by = static_cast<double>(B.y) - ay;
        const double cx = static_cast<double>(C.x) - ax, cy = static_cast<double>(C.y) - ay;
        const double d = 2.0 * (bx * cy - by * cx);
        detail::WorkTriangle t{{a, b, c}, 0.0, 0.0, 0.0};
        if (d == 0.0) {
            t.r2 = std::numeric_limits<double>::infinity();
        } else {
            const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
            const double ux = (cy * b2 - by * c2) / d, uy = (bx * c2 - cx * b2) / d;
            t.cx = ax + ux;
            t.cy = ay + uy;
            t.r2 = ux * ux + uy * uy;
        }
        return t;
    };

    std::vector<detail::WorkTriangle> active{make(s0, s1, s2)};
    std::vector<Triangle> done;
    std::vector<std::array<int, 2>> edges;
    std::vector<detail::WorkTriangle> keep;

    for (int idx : order) {
        const auto& p = pts[static_cast<std::size_t>(idx)];
        edges.clear();
        keep.clear();
        for (const auto& t : active) {
            const bool has_super = t.v[0] >= n || t.v[1] >= n || t.v[2] >= n;
            if (!has_super && std::isfinite(t.r2)) {
                const double dx = static_cast<double>(p.x) - t.cx;
                // retired: the circle lies entirely left of the sweep (margin absorbs rounding)
                if (dx > 0.0 && dx * dx > t.r2 * (1.0 + 1e-9) + 1e-6) {
                    done.push_back({t.v});
                    continue;
                }
            }
            const auto& a = pts[static_cast<std::size_t>(t.v[0])];
            const auto& b = pts[static_cast<std::size_t>(t.v[1])];
            const auto& c = pts[static_cast<std::size_t>(t.v[2])];
            if (detail::in_circle(a, b, c, p) > 0) {
                edges.push_back({t.v[0], t.v[1]});
                edges.push_back({t.v[1], t.v[2]});
                edges.push_back({t.v[2], t.v[0]});
            } else {
                keep.push_back(t);
            }
        }
        // cavity boundary = edges seen exactly once
        for (auto& e : edges)
            if (e[0] > e[1]) std::swap(e[0], e[1]);
        std::sort(edges.begin(), edges.end());
        for (std::size_t k = 0; k < edges.size();) {
            std::size_t m = k + 1;
            while (m < edges.size() && edges[m] == edges[k]) ++m;
            if (m - k == 1) {
                const auto& A = pts[static_cast<std::size_t>(edges[k][0])];
                const auto& B = pts[static_cast<std::size_t>(edges[k][1])];
                if (detail::orient(A, B, p) != 0) keep.push_back(make(edges[k][0], edges[k][1], idx));
            }
            k = m;
        }
        active.swap(keep);
    }
    for (const auto& t : active) done.push_back({t.v});

    std::vector<Triangle> out;
    out.reserve(done.size());
    for (const auto& t : done)
        if (t.v[0] != s0 && t.v[0] != s1 && t.v[0] != s2 && t.v[1] != s0 && t.v[1] != s1 && t.v[1] != s2 &&
            t.v[2] != s0 && t.v[2] != s1 && t.v[2] != s2)
            out.push_back(t);
    return out;
}

}  // namespace lsfuse::geometry
