#pragma once

// Run configuration: defaults, flat `key = value` files and `--set` overrides.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "fuser.hpp"
#include "image.hpp"

namespace lsfuse {

struct RunConfig {
    fusion::FuseConfig fuse;
    AxisMeta io;
    int workers = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline int parse_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) fail(ErrorKind::validation, key + ": expected an integer, got '" + v + "'");
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(out))
        fail(ErrorKind::validation, key + ": expected a finite number, got '" + v + "'");
    return out;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
    if (out.empty()) fail(ErrorKind::validation, key + ": expected a comma separated list");
    return out;
}

inline std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct KeyHandler {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, KeyHandler>& key_table() {
    static const std::map<std::string, KeyHandler> table = [] {
        std::map<std::string, KeyHandler> t;
        auto int_key = [&](const std::string& k, auto member) {
            t[k] = {[k, member](RunConfig& c, const std::string& v) { member(c) = parse_int(k, v); },
                    [member](const RunConfig& c) { return std::to_string(member(c)); }};
        };
        auto real_key = [&](const std::string& k, auto member) {
            t[k] = {[k, member](RunConfig& c, const std::string& v) { member(c) = parse_double(k, v); },
                    [member](const RunConfig& c) { return format_double(member(c)); }};
        };
        int_key("nsct.scales", [](auto& c) -> auto& { return c.fuse.nsct.scales; });
        real_key("nsct.epsilon", [](auto& c) -> auto& { return c.fuse.epsilon; });
        int_key("seg.bins", [](auto& c) -> auto& { return c.fuse.seg.bins; });
        int_key("seg.min_component_px", [](auto& c) -> auto& { return c.fuse.seg.min_component_px; });
        real_key("em.lambda", [](auto& c) -> auto& { return c.fuse.em.lambda; });
        int_key("em.s", [](auto& c) -> auto& { return c.fuse.em.s; });
        int_key("em.Q", [](auto& c) -> auto& { return c.fuse.em.Q; });
        int_key("em.max_iters", [](auto& c) -> auto& { return c.fuse.em.max_iters; });
        real_key("em.tol", [](auto& c) -> auto& { return c.fuse.em.tol; });
        int_key("fuse.feather", [](auto& c) -> auto& { return c.fuse.feather; });
        int_key("workers", [](auto& c) -> auto& { return c.workers; });

        t["nsct.directions"] = {
            [](RunConfig& c, const std::string& v) { c.fuse.nsct.directions = parse_int_list("nsct.directions", v); },
            [](const RunConfig& c) { return join(c.fuse.nsct.directions); }};
        t["seg.alpha"] = {[](RunConfig& c, const std::string& v) {
                              if (v == "auto")
                                  c.fuse.seg.alpha.reset();
                              else
                                  c.fuse.seg.alpha = parse_double("seg.alpha", v);
                          },
                          [](const RunConfig& c) {
                              return c.fuse.seg.alpha ? format_double(*c.fuse.seg.alpha) : std::string("auto");
                          }};
        t["em.attenuation"] = {[](RunConfig& c, const std::string& v) {
                                   if (v == "mirrored")
                                       c.fuse.em.attenuation = em::Attenuation::mirrored;
                                   else if (v == "literal")
                                       c.fuse.em.attenuation = em::Attenuation::literal;
                                   else
                                       fail(ErrorKind::validation,
                                            "em.attenuation: expected mirrored or literal, got '" + v + "'");
                               },
                               [](const RunConfig& c) { return std::string(em::to_string(c.fuse.em.attenuation)); }};
        t["io.axis"] = {[](RunConfig& c, const std::string& v) {
                            if (v == "rows")
                                c.io.axis = IlluminationAxis::rows;
                            else if (v == "cols")
                                c.io.axis = IlluminationAxis::cols;
                            else
                                fail(ErrorKind::validation, "io.axis: expected rows or cols, got '" + v + "'");
                        },
                        [](const RunConfig& c) { return std::string(c.io.axis == IlluminationAxis::rows ? "rows" : "cols"); }};
        t["io.a_side"] = {[](RunConfig& c, const std::string& v) {
                              if (v == "top")
                                  c.io.a_side = EntrySide::top;
                              else if (v == "bottom")
                                  c.io.a_side = EntrySide::bottom;
                              else
                                  fail(ErrorKind::validation, "io.a_side: expected top or bottom, got '" + v + "'");
                          },
                          [](const RunConfig& c) { return std::string(c.io.a_side == EntrySide::top ? "top" : "bottom"); }};
        return t;
    }();
    return table;
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : detail::key_table()) keys.push_back(k);
    return keys;
}

inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = detail::key_table();
    const auto it = table.find(key);
    if (it == table.end()) fail(ErrorKind::validation, "unknown config key '" + key + "'");
    it->second.set(cfg, detail::trim(value));
}

// Accepts "key=value" as given to --set.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) fail(ErrorKind::usage, "--set expects key=value, got '" + assignment + "'");
    set_config_value(cfg, detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

// Blank lines and lines starting with '#' are ignored.
inline void apply_config_stream(RunConfig& cfg, std::istream& in, const std::string& origin) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::validation, origin + ":" + std::to_string(lineno) + ": expected key = value");
        try {
            set_config_value(cfg, detail::trim(t.substr(0, eq)), t.substr(eq + 1));
        } catch (const Error& e) {
            fail(e.kind(), origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open config file " + path);
    apply_config_stream(cfg, in, path);
}

inline void validate_config(const RunConfig& cfg) {
    fusion::validate_config(cfg.fuse);
    require(cfg.workers >= 1, "workers must be >= 1");
}

// Resolved values in key order.
inline std::map<std::string, std::string> config_echo(const RunConfig& cfg) {
    std::map<std::string, std::string> out;
    for (const auto& [k, h] : detail::key_table()) out[k] = h.get(cfg);
    return out;
}

}  // namespace lsfuse
