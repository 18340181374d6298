// lsfuse command-line front end: fuse, simulate, evaluate, transform.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsfuse/lsfuse.hpp"

namespace {

using namespace lsfuse;
using json = nlohmann::ordered_json;

constexpr const char* exit_codes_help =
    "Exit codes: 0 success, 2 usage error, 3 I/O error, 4 validation error, 5 internal error.";

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::usage: return 2;
        case ErrorKind::io: return 3;
        case ErrorKind::validation:
        case ErrorKind::no_sample: return 4;
        case ErrorKind::internal: return 5;
    }
    return 5;
}

// Machine-readable failure line on stderr.
void report_error(ErrorKind kind, const std::string& message) {
    std::cerr << "error: kind=" << to_string(kind) << " code=" << exit_code(kind) << " message=\"" << message << "\"\n";
}

Volume with_meta(const Volume& v, const AxisMeta& meta) {
    return Volume(std::vector<Slice>(v.slices().begin(), v.slices().end()), meta);
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorKind::io, "write failed for " + path);
}

json timings_json(const fusion::StageTimings& t) {
    return json{{"nsct_s", t.nsct_s}, {"geometry_s", t.geometry_s}, {"em_s", t.em_s}, {"compose_s", t.compose_s}};
}

// ---------------------------------------------------------------- fuse

struct FuseArgs {
    std::string view_a, view_b, out, boundary_out, profile_out, objective_out, manifest, config;
    std::vector<std::string> sets;
    std::optional<int> bit_depth_hint;
    std::string out_depth = "32f";
    std::optional<int> workers;
};

int run_fuse(const FuseArgs& args) {
    RunConfig cfg;
    if (!args.config.empty()) apply_config_file(cfg, args.config);
    for (const auto& s : args.sets) apply_override(cfg, s);
    if (args.workers) cfg.workers = *args.workers;
    validate_config(cfg);
    const BitDepth out_depth = parse_bit_depth(args.out_depth);

    const auto t0 = std::chrono::steady_clock::now();
    ViewPair pair{with_meta(load_stack(args.view_a, args.bit_depth_hint), cfg.io),
                  with_meta(load_stack(args.view_b, args.bit_depth_hint), cfg.io)};
    const auto result = fusion::fuse_volume(pair, cfg.fuse, cfg.workers);
    save_stack(result.fused, args.out, out_depth);

    const int extent = cfg.io.axis == IlluminationAxis::rows ? pair.view_a.rows() : pair.view_a.cols();
    if (!args.boundary_out.empty())
        csv::write_file(args.boundary_out,
                        [&](std::ostream& o) { csv::write_boundaries(o, result.boundaries, cfg.io, extent); });
    if (!args.objective_out.empty())
        csv::write_file(args.objective_out, [&](std::ostream& o) { csv::write_objectives(o, result.boundaries); });
    if (!args.profile_out.empty())
        csv::write_file(args.profile_out, [&](std::ostream& o) {
            o << "z,";
            for (std::size_t z = 0; z < result.profiles.size(); ++z) {
                std::ostringstream block;
                csv::write_profile(block, result.profiles[z]);
                std::string line;
                std::istringstream lines(block.str());
                bool header = true;
                while (std::getline(lines, line)) {
                    if (header) {
                        if (z == 0) o << line << '\n';
                        header = false;
                        continue;
                    }
                    o << z << ',' << line << '\n';
                }
            }
        });

    json slices = json::array();
    for (const auto& r : result.reports) {
        json s{{"z", r.z}, {"fallback", r.fallback}, {"failed", r.failed}};
        if (!r.message.empty()) s["message"] = r.message;
        const auto& b = result.boundaries[static_cast<std::size_t>(r.z)];
        s["em_iterations"] = b.iterations;
        s["em_converged"] = b.converged;
        slices.push_back(std::move(s));
        if (!r.message.empty()) std::cerr << "warning: slice " << r.z << ": " << r.message << '\n';
    }
    json manifest{{"command", "fuse"},
                  {"version", version},
                  {"filters", cfg.fuse.nsct.filters.version()},
                  {"inputs", {{"view_a", args.view_a}, {"view_b", args.view_b}}},
                  {"output", args.out},
                  {"output_bit_depth", to_string(out_depth)},
                  {"config", config_echo(cfg)},
                  {"timings", timings_json(result.timing)},
                  {"wall_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                  {"slices", slices}};
    write_json(args.manifest.empty() ? args.out + ".manifest.json" : args.manifest, manifest);
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string ground_truth, out_a, out_b, manifest;
    double sigma_max = 4.0;
    std::uint64_t seed = 0;
    std::vector<std::string> ghosts;
    double noise = 0.0;
    std::string out_depth = "32f";
};

synth::GhostSpec parse_ghost(const std::string& text, std::uint64_t seed) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            fail(ErrorKind::usage, "--ghost expects x,y,w,h,amp; bad field '" + item + "'");
        }
    }
    if (v.size() != 5) fail(ErrorKind::usage, "--ghost expects x,y,w,h,amp, got '" + text + "'");
    for (int k = 0; k < 4; ++k)
        if (v[static_cast<std::size_t>(k)] != std::floor(v[static_cast<std::size_t>(k)]))
            fail(ErrorKind::usage, "--ghost rectangle fields must be integers");
    synth::GhostSpec g;
    g.region = {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3])};
    g.amplitude = v[4];
    g.seed = seed;
    return g;
}

int run_simulate(const SimulateArgs& args) {
    require(std::isfinite(args.sigma_max) && args.sigma_max >= 0.0, "--sigma-max must be >= 0");
    require(args.noise >= 0.0, "--noise must be >= 0");
    const BitDepth out_depth = parse_bit_depth(args.out_depth);
    const Volume gt = load_stack(args.ground_truth);

    std::vector<Slice> out_a, out_b;
    json slices = json::array();
    for (int z = 0; z < gt.depth(); ++z) {
        const Slice& s = gt.slice(z);
        synth::BlurModel model;
        model.sigma_max = args.sigma_max;
        model.noise_sigma = args.noise;
        model.seed = args.seed + static_cast<std::uint64_t>(z);
        for (std::size_t g = 0; g < args.ghosts.size(); ++g)
            model.ghosts.push_back(parse_ghost(args.ghosts[g], args.seed * 1000003u + z * 101u + g));

        geometry::IncidentProfile profile;
        bool sample = true;
        try {
            profile = geometry::sample_geometry(s).profile;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::no_sample) throw;
            sample = false;
            profile = {std::vector<int>(static_cast<std::size_t>(s.cols()), 0),
                       std::vector<int>(static_cast<std::size_t>(s.cols()), 0),
                       std::vector<bool>(static_cast<std::size_t>(s.cols()), false)};
        }
        auto [a, b] = synth::simulate_views(s, profile, model);
        out_a.push_back(std::move(a));
        out_b.push_back(std::move(b));
        slices.push_back(json{{"z", z}, {"sample_found", sample}, {"valid_columns", profile.valid_count()}});
    }
    save_stack(Volume(std::move(out_a)), args.out_a, out_depth);
    save_stack(Volume(std::move(out_b)), args.out_b, out_depth);

    json manifest{{"command", "simulate"},
                  {"version", version},
                  {"ground_truth", args.ground_truth},
                  {"outputs", {{"view_a", args.out_a}, {"view_b", args.out_b}}},
                  {"sigma_max", args.sigma_max},
                  {"sigma_step", synth::sigma_step},
                  {"profile", "linear"},
                  {"seed", args.seed},
                  {"noise", args.noise},
                  {"ghosts", args.ghosts},
                  {"slices", slices}};
    write_json(args.manifest.empty() ? args.out_a + ".manifest.json" : args.manifest, manifest);
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string view_a, view_b, ground_truth, out;
    std::vector<std::string> fused, labels;
};

int run_evaluate(const EvaluateArgs& args) {
    if (!args.labels.empty() && args.labels.size() != args.fused.size())
        fail(ErrorKind::usage, "--label must be given once per --fused stack");
    const Volume a = load_stack(args.view_a), b = load_stack(args.view_b);
    std::optional<Volume> gt;
    if (!args.ground_truth.empty()) gt = load_stack(args.ground_truth);

    std::vector<std::string> labels = args.labels;
    std::vector<metrics::MetricsReport> reports;
    for (std::size_t m = 0; m < args.fused.size(); ++m) {
        if (labels.size() < args.fused.size()) labels.push_back("method" + std::to_string(m + 1));
        const Volume f = load_stack(args.fused[m]);
        require(f.rows() == a.rows() && f.cols() == a.cols() && b.rows() == a.rows() && b.cols() == a.cols(),
                "evaluate: " + args.fused[m] + " does not match the input dimensions");
        require(!gt || (gt->rows() == a.rows() && gt->cols() == a.cols()),
                "evaluate: ground truth does not match the input dimensions");
        reports.push_back(metrics::evaluate_volume(a, b, f, gt));
        if (reports.back().mean.q_mi_degenerate)
            std::cerr << "warning: " << labels[m] << ": fused image has zero entropy, q_mi terms set to 0\n";
        if (reports.back().mean.q_g_degenerate)
            std::cerr << "warning: " << labels[m] << ": inputs without gradients, q_g set to 0\n";
    }

    std::vector<std::string> names{"q_mi", "q_g", "q_s"};
    if (gt) {
        names.push_back("emse");
        names.push_back("ssim");
    }
    auto pick = [](const metrics::SliceMetrics& s, const std::string& n) {
        if (n == "q_mi") return s.q_mi;
        if (n == "q_g") return s.q_g;
        if (n == "q_s") return s.q_s;
        if (n == "emse") return s.emse.value_or(0.0);
        return s.ssim.value_or(0.0);
    };
    std::ostringstream os;
    os.precision(10);
    os << "z,metric";
    for (const auto& l : labels) os << ',' << l;
    os << '\n';
    for (int z = 0; z < a.depth(); ++z)
        for (const auto& n : names) {
            os << z << ',' << n;
            for (const auto& r : reports) os << ',' << pick(r.slices[static_cast<std::size_t>(z)], n);
            os << '\n';
        }
    for (const auto& n : names) {
        os << "mean," << n;
        for (const auto& r : reports) os << ',' << pick(r.mean, n);
        os << '\n';
    }
    if (args.out.empty()) {
        std::cout << os.str();
    } else {
        csv::write_file(args.out, [&](std::ostream& o) { o << os.str(); });
    }
    return 0;
}

// ---------------------------------------------------------------- transform

struct TransformArgs {
    std::string input;
    int z = 0;
    int scales = 3;
    std::string directions;
};

int run_transform(const TransformArgs& args) {
    RunConfig cfg;
    if (!args.directions.empty())
        set_config_value(cfg, "nsct.directions", args.directions);
    else if (args.scales != cfg.fuse.nsct.scales)
        cfg.fuse.nsct.directions.assign(static_cast<std::size_t>(std::max(args.scales, 0)), 3);
    cfg.fuse.nsct.scales = args.scales;
    nsct::validate_config(cfg.fuse.nsct);
    const Volume v = load_stack(args.input);
    require(args.z >= 0 && args.z < v.depth(), "--z out of range (stack has " + std::to_string(v.depth()) + " slices)");
    const Slice& s = v.slice(args.z);
    nsct::require_decomposable(s.rows(), s.cols(), cfg.fuse.nsct.scales);

    const auto coeffs = nsct::decompose(s, cfg.fuse.nsct);
    const Plane back = nsct::reconstruct(coeffs);
    double err = 0.0;
    for (std::size_t k = 0; k < back.size(); ++k)
        err = std::max(err, std::abs(back.pixels()[k] - static_cast<double>(s.pixels()[k])));

    std::printf("band,scale,direction,energy\n");
    std::printf("lowpass,-,-,%.10e\n", nsct::band_energy(coeffs.lowpass));
    for (int sc = 0; sc < coeffs.scales(); ++sc)
        for (std::size_t d = 0; d < coeffs.bands[static_cast<std::size_t>(sc)].size(); ++d)
            std::printf("bandpass,%d,%zu,%.10e\n", sc, d,
                        nsct::band_energy(coeffs.bands[static_cast<std::size_t>(sc)][d]));
    std::printf("roundtrip_max_abs_error,%.3e\n", err);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-view light-sheet fusion by focus-defocus boundary estimation.\n" +
                 std::string(exit_codes_help)};
    app.set_version_flag("--version",
                         std::string("lsfuse ") + version + "\nfilters " + nsct::default_filter_bank().version());
    app.require_subcommand(1);
    app.footer(exit_codes_help);

    FuseArgs fa;
    auto* fuse = app.add_subcommand("fuse", "Fuse two opposing views into one stack");
    fuse->add_option("--view-a", fa.view_a, "View illuminated from the top/left side")->required();
    fuse->add_option("--view-b", fa.view_b, "View illuminated from the opposite side")->required();
    fuse->add_option("--out", fa.out, "Fused TIFF stack")->required();
    fuse->add_option("--boundary-out", fa.boundary_out, "Boundary CSV (z,col,omega_row,valid)");
    fuse->add_option("--profile-out", fa.profile_out, "Incident profile CSV (z,col,p_u,p_l,valid)");
    fuse->add_option("--objective-out", fa.objective_out, "EM objective trace CSV (z,iter,objective)");
    fuse->add_option("--manifest", fa.manifest, "Run manifest path (default <out>.manifest.json)");
    fuse->add_option("--config", fa.config, "Flat key = value config file");
    fuse->add_option("--set", fa.sets, "Override a config key (key=value), repeatable");
    fuse->add_option("--bit-depth", fa.bit_depth_hint, "Effective input bit depth for integer TIFFs (e.g. 12)");
    fuse->add_option("--out-depth", fa.out_depth, "Output sample type: 8, 16 or 32f")->capture_default_str();
    fuse->add_option("--workers", fa.workers, "Worker threads (overrides config)");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Blur a clean stack into a synthetic dual-view pair");
    sim->add_option("--ground-truth", sa.ground_truth, "Clean input stack")->required();
    sim->add_option("--out-a", sa.out_a, "Output view a")->required();
    sim->add_option("--out-b", sa.out_b, "Output view b")->required();
    sim->add_option("--sigma-max", sa.sigma_max, "Blur sigma at full sample depth (pixels)")->capture_default_str();
    sim->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
    sim->add_option("--ghost", sa.ghosts, "Ghost in view a: x,y,w,h,amp (repeatable)");
    sim->add_option("--noise", sa.noise, "Additive Gaussian noise sigma")->capture_default_str();
    sim->add_option("--manifest", sa.manifest, "Run manifest path (default <out-a>.manifest.json)");
    sim->add_option("--out-depth", sa.out_depth, "Output sample type: 8, 16 or 32f")->capture_default_str();

    EvaluateArgs ea;
    auto* eval = app.add_subcommand("evaluate", "Fusion quality metrics, one column per fused stack");
    eval->add_option("--view-a", ea.view_a, "Input view a")->required();
    eval->add_option("--view-b", ea.view_b, "Input view b")->required();
    eval->add_option("--fused", ea.fused, "Fused stack (repeatable)")->required();
    eval->add_option("--label", ea.labels, "Column label per --fused stack");
    eval->add_option("--ground-truth", ea.ground_truth, "Reference stack for emse and ssim");
    eval->add_option("--out", ea.out, "CSV output (default stdout)");

    TransformArgs ta;
    auto* tr = app.add_subcommand("transform", "Band energies and round-trip error of the transform");
    tr->add_option("--input", ta.input, "Input stack")->required();
    tr->add_option("--z", ta.z, "Slice index")->capture_default_str();
    tr->add_option("--scales", ta.scales, "Number of scales")->capture_default_str();
    tr->add_option("--directions", ta.directions, "log2 direction counts per scale, e.g. 2,3,3");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error(ErrorKind::usage, e.what());
        return 2;
    }

    try {
        if (*fuse) return run_fuse(fa);
        if (*sim) return run_simulate(sa);
        if (*eval) return run_evaluate(ea);
        if (*tr) return run_transform(ta);
    } catch (const Error& e) {
        report_error(e.kind(), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        report_error(ErrorKind::internal, e.what());
        return 5;
    }
    return 5;
}
