// Phantom -> synthetic dual view -> fusion -> metrics, printed as a table.
// Optional argument: output directory for the TIFF stacks.

#include <cstdio>
#include <optional>
#include <string>

#include "lsfuse/lsfuse.hpp"

using namespace lsfuse;

int main(int argc, char** argv) {
    const int n = 256;
    const Slice gt = synth::make_phantom(n, n, 7);
    const auto geo = geometry::sample_geometry(gt);

    synth::BlurModel model;
    model.sigma_max = 4.0;
    auto [a, b] = synth::simulate_views(gt, geo.profile, model);

    const auto fused = fusion::fuse_slice(a, b);
    const Slice avg = fusion::baseline_fuse(a, b, fusion::BaselineMode::average);
    const Slice maxf = fusion::baseline_fuse(a, b, fusion::BaselineMode::max_focus);

    std::printf("%-10s %10s %10s %8s %8s %8s\n", "method", "emse", "ssim", "q_mi", "q_g", "q_s");
    auto row = [&](const char* name, const Slice& f) {
        const auto m = metrics::evaluate_slice(a, b, f, gt);
        std::printf("%-10s %10.3e %10.4f %8.4f %8.4f %8.4f\n", name, *m.emse, *m.ssim, m.q_mi, m.q_g, m.q_s);
    };
    row("view_a", a);
    row("view_b", b);
    row("average", avg);
    row("max_focus", maxf);
    row("boundary", fused.fused);

    int hits = 0, valid = 0;
    for (int c = 0; c < n; ++c) {
        const auto k = static_cast<std::size_t>(c);
        if (!geo.profile.valid[k]) continue;
        ++valid;
        const double mid = 0.5 * (geo.profile.p_u[k] + geo.profile.p_l[k]);
        if (std::abs(fused.boundary.omega[k] - mid) <= 3.0) ++hits;
    }
    std::printf("boundary within 3 rows of the midline: %d / %d columns, %d EM iterations\n", hits, valid,
                fused.boundary.iterations);

    if (argc > 1) {
        const std::string dir = argv[1];
        save_stack(Volume({gt}), dir + "/phantom_gt.tif", BitDepth::f32);
        save_stack(Volume({a}), dir + "/phantom_a.tif", BitDepth::f32);
        save_stack(Volume({b}), dir + "/phantom_b.tif", BitDepth::f32);
        save_stack(Volume({fused.fused}), dir + "/phantom_fused.tif", BitDepth::f32);
    }
    return 0;
}
