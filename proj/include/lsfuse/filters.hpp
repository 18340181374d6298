#pragma once

// Filter tables for the nonsubsampled transform.
//
// Table file grammar (plain text, '#' starts a comment, blank lines ignored):
//
//   name <identifier>
//   kind separable|grid|wedge
//   rows <R>            (separable: 1; grid: odd R)
//   cols <C>            (odd)
//   <R lines of C coefficients, row-major, centre tap at (R/2, C/2)>
//
// `separable` applies the single row of taps along both axes; `grid` is a full
// 2-D kernel. A `wedge` table carries one value, the angular transition ratio
// in (0,1] of the raised-cosine direction windows (1 = widest overlap), and
// omits rows/cols.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace lsfuse::nsct {

struct PyramidFilter {
    std::string name;
    bool separable = true;
    int rows = 1;
    int cols = 0;
    std::vector<double> taps;  // rows*cols, row-major
};

struct DirectionalFilter {
    std::string name;
    double transition = 1.0;
};

struct FilterBank {
    PyramidFilter pyramid;
    DirectionalFilter directional;

    std::string version() const { return pyramid.name + "+" + directional.name; }
};

namespace detail {

struct RawTable {
    std::string name;
    std::string kind;
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
};

inline RawTable parse_table(std::istream& in, const std::string& origin) {
    RawTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        auto bad = [&](const std::string& msg) {
            fail(ErrorKind::validation, origin + ":" + std::to_string(lineno) + ": " + msg);
        };
        if (head == "name") {
            if (!(ls >> t.name)) bad("missing name");
        } else if (head == "kind") {
            if (!(ls >> t.kind)) bad("missing kind");
        } else if (head == "rows") {
            if (!(ls >> t.rows)) bad("bad rows");
        } else if (head == "cols") {
            if (!(ls >> t.cols)) bad("bad cols");
        } else {
            ls.clear();
            ls.str(line);
            double v;
            while (ls >> v) t.values.push_back(v);
            if (!ls.eof()) bad("unparseable coefficient");
        }
    }
    return t;
}

}  // namespace detail

inline PyramidFilter parse_pyramid_filter(std::istream& in, const std::string& origin = "<table>") {
    auto t = detail::parse_table(in, origin);
    auto bad = [&](const std::string& msg) { fail(ErrorKind::validation, origin + ": " + msg); };
    if (t.kind != "separable" && t.kind != "grid") bad("pyramid table kind must be separable or grid");
    if (t.cols <= 0 || t.cols % 2 == 0) bad("cols must be odd and positive");
    if (t.kind == "separable" && t.rows != 1) bad("separable table must have rows 1");
    if (t.kind == "grid" && (t.rows <= 0 || t.rows % 2 == 0)) bad("rows must be odd and positive");
    if (t.values.size() != static_cast<std::size_t>(t.rows) * t.cols) bad("coefficient count != rows*cols");
    double sum = 0.0;
    for (double v : t.values) sum += v;
    // unit DC gain per axis keeps constant images out of the bandpass bands
    if (std::abs(sum - 1.0) > 1e-9) bad("lowpass taps must sum to 1");
    return PyramidFilter{t.name.empty() ? "unnamed" : t.name, t.kind == "separable", t.rows, t.cols,
                         std::move(t.values)};
}

inline DirectionalFilter parse_directional_filter(std::istream& in, const std::string& origin = "<table>") {
    auto t = detail::parse_table(in, origin);
    if (t.kind != "wedge") fail(ErrorKind::validation, origin + ": directional table kind must be wedge");
    if (t.values.size() != 1 || !(t.values[0] > 0.0 && t.values[0] <= 1.0))
        fail(ErrorKind::validation, origin + ": wedge table needs one transition ratio in (0,1]");
    return DirectionalFilter{t.name.empty() ? "unnamed" : t.name, t.values[0]};
}

// Built-in copies of data/filters/*.txt.
inline constexpr const char* default_pyramid_table = R"(# B3-spline a trous lowpass, applied separably
name b3spline-v1
kind separable
rows 1
cols 5
0.0625 0.25 0.375 0.25 0.0625
)";

inline constexpr const char* default_directional_table = R"(# raised-cosine angular wedges, full overlap
name wedge-cos2-v1
kind wedge
1.0
)";

inline const FilterBank& default_filter_bank() {
    static const FilterBank bank = [] {
        std::istringstream p(default_pyramid_table), d(default_directional_table);
        return FilterBank{parse_pyramid_filter(p, "builtin pyramid"), parse_directional_filter(d, "builtin wedge")};
    }();
    return bank;
}

inline PyramidFilter load_pyramid_filter(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read filter table '" + path + "'");
    return parse_pyramid_filter(in, path);
}

inline DirectionalFilter load_directional_filter(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read filter table '" + path + "'");
    return parse_directional_filter(in, path);
}

}  // namespace lsfuse::nsct
