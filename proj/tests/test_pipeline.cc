#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "gml/geometry.h"
#include "gml/grids.h"
#include "gml/pipeline.h"
#include "gml/rng.h"
#include "gml/spectral_watermark.h"

using namespace gml;

namespace {

// small end-to-end sweep: 8x8 latent, stride 2 -> 16x16 image
TrialConfig tiny_config() {
    TrialConfig cfg;
    cfg.w = 8;
    cfg.h = 8;
    cfg.c = 1;
    cfg.surrogate.stride = 2;
    cfg.surrogate.sigma = 1.0;
    cfg.surrogate.radius = 3;
    cfg.r_min = 0.0;
    cfg.r_max = 4.0;
    cfg.key_seed = 5;
    cfg.key_strength = 2.0;
    cfg.translations = {0.0, 1.0};
    cfg.trials = 6;
    cfg.psnr_stride = 3;
    cfg.master_seed = 9;
    return cfg;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace

TEST_CASE("seed derivation separates every (a,b) pair under one master") {
    std::set<uint64_t> seen;
    for (uint64_t a = 0; a < 50; ++a)
        for (uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(1, a, b));
    CHECK(seen.size() == 2500);
    CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}

TEST_CASE("synthetic carrier is deterministic, seed-sensitive, and in range") {
    ImageGrid a = synth_carrier(48, 32, 4);
    ImageGrid b = synth_carrier(48, 32, 4);
    ImageGrid c = synth_carrier(48, 32, 5);
    CHECK(a.W == 48);
    CHECK(a.H == 32);
    CHECK(a.C == 1);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    double lo = 1e9, hi = -1e9;
    for (double v : a.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
    CHECK(hi - lo > 0.05); // not a constant field
}

TEST_CASE("attack stages match the standalone transforms") {
    ImageGrid img = make_image(8, 8, 1);
    for (size_t i = 0; i < img.values.size(); ++i) img.values[i] = rng_uniform(3, i);

    SUBCASE("zero attack copies the input") {
        ImageGrid out = attack_image(img, 0.0, 0.0, 31.7175);
        CHECK(out.values == img.values);
    }
    SUBCASE("axis-aligned translation wraps circularly") {
        ImageGrid out = attack_image(img, 3.0, 0.0, 0.0);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                CHECK(out.at(0, y, x) == doctest::Approx(img.at(0, y, (x + 5) % 8)).epsilon(1e-12));
    }
    SUBCASE("pure rotation equals the padded transform") {
        GeometricTransform rot;
        rot.rotation_deg = 4.0;
        ImageGrid direct = apply_transform(img, rot, img, EdgeMode::pad_source);
        ImageGrid out = attack_image(img, 0.0, 4.0, 31.7175);
        CHECK(out.values == direct.values);
    }
}

TEST_CASE("decorrelated oracle collapses to the mean key magnitude") {
    // with uniform phases and chain gains <= 1, E|k - g k cos U| = |k| per bin,
    // so the monte-carlo value must approach the canonical mean magnitude
    RingMask mask = make_ring_mask(16, 16, 0.0, 6.0, 0);
    WatermarkKey key = scale_key(sample_key(mask, 21), 2.0);
    SurrogateConfig sur;
    sur.stride = 4;
    sur.sigma = 2.0;
    sur.radius = 6;
    std::vector<int> canon = canonical_indices(mask);
    double mean_mag = 0.0;
    for (int i : canon) mean_mag += std::abs(key.values[i]);
    mean_mag /= double(canon.size());
    double oracle = decorrelated_oracle(key, mask, sur, 16, 16, 4000, 77);
    CHECK(std::abs(oracle - mean_mag) < 1e-2);
    CHECK_THROWS_AS(decorrelated_oracle(key, mask, sur, 16, 16, 0, 1), std::invalid_argument);
}

TEST_CASE("sweep cells populate every statistic and stay finite") {
    SweepReport rep = run_detection_sweep(tiny_config());
    REQUIRE(rep.cells.size() == 2);
    const CellResult& c0 = rep.cells[0];
    const CellResult& c1 = rep.cells[1];
    CHECK(c0.translation_px == 0.0);
    CHECK(c1.translation_px == 1.0);
    CHECK(c0.n == 6);
    for (const CellResult* c : {&c0, &c1}) {
        CHECK(std::isfinite(c->mean_distance));
        CHECK(std::isfinite(c->std_distance));
        CHECK(std::isfinite(c->tau));
        CHECK(c->tau > 0.0);
        CHECK(c->tpr >= 0.0);
        CHECK(c->tpr <= 1.0);
        CHECK(c->mean_bit_accuracy >= 0.0);
        CHECK(c->mean_bit_accuracy <= 1.0);
        CHECK(std::isfinite(c->mean_corr));
        CHECK(std::isfinite(c->raw_psnr_db));
        CHECK(std::isfinite(c->aligned_psnr_db));
    }
    // no attack: perfect detection on the round trip, corr normalized to 1
    CHECK(c0.tpr == 1.0);
    CHECK(c0.mean_bit_accuracy == 1.0);
    CHECK(c0.corr_ratio == 1.0);
    CHECK(c0.phase_range_rad == 0.0);
    CHECK(c0.expected_attenuation == 1.0);
    CHECK(c0.raw_psnr_db == 99.0);
    // full spread across the ring: 4*pi*r_max*T/(stride*w)
    CHECK(c1.phase_range_rad ==
          doctest::Approx(4.0 * std::numbers::pi * 4.0 * 1.0 / (2.0 * 8.0)).epsilon(1e-12));
}

TEST_CASE("sweep is byte-identical across thread counts") {
    TrialConfig cfg = tiny_config();
    SweepReport r1 = run_detection_sweep(cfg);
    cfg.threads = 3;
    SweepReport r3 = run_detection_sweep(cfg);
    CHECK(sweep_csv(r1) == sweep_csv(r3));
}

TEST_CASE("csv and svg emitters are well-formed") {
    SweepReport empty;
    CHECK(sweep_csv(empty) ==
          "translation_px,rotation_deg,n,mean_distance,std_distance,mean_distance_clean,tau,tpr,"
          "mean_bit_accuracy,mean_corr,corr_ratio,phase_range_rad,coord_drift_cells,"
          "expected_attenuation,raw_psnr_db,aligned_psnr_db\n");

    SweepReport one;
    one.cells.push_back(CellResult{});
    std::string csv = sweep_csv(one);
    size_t lines = 0, commas = 0;
    size_t header_end = csv.find('\n');
    for (char ch : csv)
        if (ch == '\n') ++lines;
    for (size_t i = header_end + 1; i < csv.size(); ++i)
        if (csv[i] == ',') ++commas;
    CHECK(lines == 2);
    CHECK(commas == 15); // 16 columns

    std::string svg = sweep_svg(run_detection_sweep(tiny_config()));
    CHECK(svg.find("<svg") != std::string::npos);
    size_t polylines = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++polylines;
        pos += 9;
    }
    CHECK(polylines == 3);
}

TEST_CASE("removal pipeline smoke run fills the report") {
    RemovalConfig cfg;
    cfg.w = 8;
    cfg.h = 8;
    cfg.surrogate.stride = 4;
    cfg.surrogate.sigma = 2.0;
    cfg.surrogate.radius = 6;
    cfg.r_min = 1.0;
    cfg.r_max = 4.0;
    cfg.key_strength = 1.0;
    cfg.p = 16;
    cfg.a = 2;
    cfg.n_patch = 4;
    cfg.beta = 8.0;
    cfg.fit_iterations = 10;
    cfg.bounds.max_translation_px = 4.0;
    cfg.n_seeds = 3;
    cfg.n_clean = 10;
    RemovalReport rep = run_removal_pipeline(cfg);
    CHECK(rep.tau > 0.0);
    CHECK(rep.pre_detected); // unattacked watermark must be found before removal
    CHECK(rep.watermarked_distance < rep.tau);
    CHECK(std::isfinite(rep.refit_distance));
    CHECK(std::isfinite(rep.fit_noise));
    CHECK(rep.fit_noise >= 0.0);
    REQUIRE(rep.loss_trace.size() == 10);
    CHECK(all_finite(rep.loss_trace));
    REQUIRE(rep.seeds.size() == 3);
    std::set<uint64_t> seeds;
    for (const RemovalSeedResult& s : rep.seeds) {
        seeds.insert(s.seed);
        CHECK(std::isfinite(s.post_distance));
        CHECK(std::isfinite(s.raw_psnr_db));
        CHECK(std::isfinite(s.aligned_psnr_db));
        CHECK(std::abs(s.t.dx) <= 4.0);
        CHECK(std::abs(s.t.dy) <= 4.0);
        CHECK(s.post_detected == (s.post_distance < rep.tau));
    }
    CHECK(seeds.size() == 3); // perturbation draws must differ per seed

    std::string csv = removal_csv(rep);
    CHECK(csv.find("post_distance") != std::string::npos);
    size_t lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines == 5); // comment, header, 3 seed rows
}
