// command-line front end for the watermark laboratory: embedding, attacks,
// detection, sweeps, splat fitting, and the removal pipeline.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gml/gauss2d.h"
#include "gml/geometry.h"
#include "gml/grids.h"
#include "gml/masking.h"
#include "gml/metrics.h"
#include "gml/pipeline.h"
#include "gml/rng.h"
#include "gml/serial.h"
#include "gml/spectral_watermark.h"
#include "gml/vae_surrogate.h"

namespace {

bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

gml::ImageGrid load_image_any(const std::string& path) {
    if (ends_with(path, ".png")) return gml::load_png(path);
    return gml::load_image_binary(path);
}

void save_image_any(const gml::ImageGrid& img, const std::string& path) {
    if (ends_with(path, ".png")) {
        gml::save_png(img, path);
        return;
    }
    gml::save_image_binary(img, path);
}

gml::ImageGrid to_rgb(const gml::ImageGrid& img) {
    if (img.C == 3) return img;
    if (img.C != 1) throw std::invalid_argument("expected a 1- or 3-channel image");
    gml::ImageGrid out = gml::make_image(img.W, img.H, 3, 0.0);
    size_t plane = size_t(img.H) * img.W;
    for (int c = 0; c < 3; ++c)
        std::copy(img.values.begin(), img.values.end(), out.values.begin() + size_t(c) * plane);
    return out;
}

void add_surrogate_opts(CLI::App* cmd, gml::SurrogateConfig& sur, std::string& boundary) {
    cmd->add_option("--stride", sur.stride, "pixels per latent cell");
    cmd->add_option("--sigma", sur.sigma, "blur kernel sigma, pixels");
    cmd->add_option("--radius", sur.radius, "blur kernel half-width, pixels");
    cmd->add_option("--boundary", boundary, "blur boundary: circular|replicate")
        ->check(CLI::IsMember({"circular", "replicate"}));
}

gml::SurrogateConfig finish_surrogate(gml::SurrogateConfig sur, const std::string& boundary) {
    sur.boundary = boundary == "replicate" ? gml::Boundary::replicate : gml::Boundary::circular;
    return sur;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-ring watermark laboratory"};
    app.require_subcommand(1);

    // ---- embed ----
    auto* embed = app.add_subcommand("embed", "embed a ring key into a latent grid");
    struct {
        int w = 64, h = 64, c = 1, channel = 0;
        double r_min = 0.0, r_max = 16.0, strength = 1.0;
        uint64_t key_seed = 7, latent_seed = 1;
        std::string latent_in, latent_out, key_out, png_out;
    } eo;
    embed->add_option("--width", eo.w, "latent width");
    embed->add_option("--height", eo.h, "latent height");
    embed->add_option("--channels", eo.c, "latent channel count");
    embed->add_option("--channel", eo.channel, "channel carrying the key");
    embed->add_option("--r-min", eo.r_min, "inner ring radius");
    embed->add_option("--r-max", eo.r_max, "outer ring radius");
    embed->add_option("--strength", eo.strength, "key amplitude multiplier");
    embed->add_option("--key-seed", eo.key_seed, "key sampling seed");
    embed->add_option("--latent-seed", eo.latent_seed, "seed for a random carrier latent");
    embed->add_option("--latent-in", eo.latent_in, "carrier latent (GML1); random if omitted");
    embed->add_option("--latent-out", eo.latent_out, "output latent path (GML1)")->required();
    embed->add_option("--key-out", eo.key_out, "output key+mask JSON path");
    embed->add_option("--png", eo.png_out, "optional PNG preview of the embedded channel");

    // ---- attack ----
    auto* attack = app.add_subcommand("attack", "apply a geometric transform to an image");
    struct {
        std::string in, out, json;
        double dx = 0, dy = 0, rotation = 0, scale = 1;
        std::string edge = "pad";
    } ao;
    attack->add_option("--in", ao.in, "input image (GML1 or .png)")->required();
    attack->add_option("--out", ao.out, "output image path")->required();
    attack->add_option("--dx", ao.dx, "translation x, pixels");
    attack->add_option("--dy", ao.dy, "translation y, pixels");
    attack->add_option("--rotation", ao.rotation, "rotation, degrees");
    attack->add_option("--scale", ao.scale, "zoom factor about the center");
    attack->add_option("--transform-json", ao.json, "read the transform from a JSON file");
    attack->add_option("--edge", ao.edge, "edge handling: pad|circular")
        ->check(CLI::IsMember({"pad", "circular"}));

    // ---- detect ----
    auto* detect = app.add_subcommand("detect", "measure the detection distance of a latent or image");
    struct {
        std::string latent_in, image_in, key_in, mode = "real";
        double tau = 0.0;
        gml::SurrogateConfig sur;
        std::string boundary = "circular";
    } dopt;
    detect->add_option("--latent-in", dopt.latent_in, "latent to test (GML1)");
    detect->add_option("--image-in", dopt.image_in, "image to encode and test");
    detect->add_option("--key", dopt.key_in, "key+mask JSON from embed")->required();
    detect->add_option("--tau", dopt.tau, "decision threshold (prints verdict when > 0)");
    detect->add_option("--mode", dopt.mode, "distance mode: real|modulus")
        ->check(CLI::IsMember({"real", "modulus"}));
    add_surrogate_opts(detect, dopt.sur, dopt.boundary);

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "run the translation/rotation detection sweep");
    gml::TrialConfig tc;
    std::string sweep_csv_path, sweep_svg_path, sweep_boundary = "circular";
    sweep->add_option("--width", tc.w, "latent width");
    sweep->add_option("--height", tc.h, "latent height");
    sweep->add_option("--r-min", tc.r_min, "inner ring radius");
    sweep->add_option("--r-max", tc.r_max, "outer ring radius");
    sweep->add_option("--key-seed", tc.key_seed, "key sampling seed");
    sweep->add_option("--strength", tc.key_strength, "key amplitude multiplier");
    sweep->add_option("--translations", tc.translations, "translation magnitudes, pixels")
        ->delimiter(',');
    sweep->add_option("--rotations", tc.rotations, "rotations, degrees")->delimiter(',');
    sweep->add_option("--angle", tc.translation_angle_deg, "translation direction, degrees");
    sweep->add_option("--trials", tc.trials, "trials per cell");
    sweep->add_option("--fpr", tc.fpr, "operating false-positive rate");
    sweep->add_option("--psnr-stride", tc.psnr_stride, "aligned psnr every n-th trial");
    sweep->add_option("--threads", tc.threads, "worker threads");
    sweep->add_option("--seed", tc.master_seed, "master seed");
    add_surrogate_opts(sweep, tc.surrogate, sweep_boundary);
    sweep->add_option("--out", sweep_csv_path, "CSV output path")->required();
    sweep->add_option("--svg", sweep_svg_path, "optional SVG chart path");

    // ---- fit ----
    auto* fitc = app.add_subcommand("fit", "fit a gaussian splat scene to an image");
    struct {
        std::string target, scene_out, render_out;
        int p = 16, a = 2, n_patch = 64, iterations = 300;
        double beta = 0.0; // 0 = keep the init default
        uint64_t seed = 1;
        gml::OptimizerConfig opt{0.2, 0.9, 0.999, 1e-8, 0.9, 25, {1.0, 0.0, 1.0}};
    } fo;
    fitc->add_option("--target", fo.target, "target image (GML1 or .png)")->required();
    fitc->add_option("--scene-out", fo.scene_out, "output scene path (GMS1)");
    fitc->add_option("--render-out", fo.render_out, "rendered image output (GML1 or .png)");
    fitc->add_option("--p", fo.p, "patch size, pixels");
    fitc->add_option("--apron", fo.a, "patch overlap margin, pixels");
    fitc->add_option("--n-patch", fo.n_patch, "gaussians per patch (perfect square)");
    fitc->add_option("--beta", fo.beta, "mean-offset bound; 0 keeps the lattice default");
    fitc->add_option("--iterations", fo.iterations, "optimizer iterations");
    fitc->add_option("--lr", fo.opt.lr, "adam learning rate");
    fitc->add_option("--lr-decay", fo.opt.lr_decay, "multiplicative lr decay");
    fitc->add_option("--decay-every", fo.opt.decay_every, "iterations between decays");
    fitc->add_option("--l1", fo.opt.loss.l1_weight, "l1 loss weight");
    fitc->add_option("--freq", fo.opt.loss.freq_weight, "frequency loss weight");
    fitc->add_option("--gamma", fo.opt.loss.gamma, "frequency loss exponent");
    fitc->add_option("--seed", fo.seed, "scene init seed");

    // ---- remove ----
    auto* removec = app.add_subcommand("remove", "run the splat-based removal pipeline");
    gml::RemovalConfig rc = gml::default_removal_config();
    std::string remove_out, remove_boundary = "circular";
    removec->add_option("--width", rc.w, "latent width");
    removec->add_option("--height", rc.h, "latent height");
    removec->add_option("--r-min", rc.r_min, "inner ring radius");
    removec->add_option("--r-max", rc.r_max, "outer ring radius");
    removec->add_option("--key-seed", rc.key_seed, "key sampling seed");
    removec->add_option("--strength", rc.key_strength, "key amplitude multiplier");
    removec->add_option("--carrier-seed", rc.carrier_seed, "synthetic carrier seed");
    removec->add_option("--n-patch", rc.n_patch, "gaussians per patch");
    removec->add_option("--beta", rc.beta, "mean-offset bound for the fitted scene");
    removec->add_option("--iterations", rc.fit_iterations, "fit iterations");
    removec->add_option("--lr", rc.fit.lr, "adam learning rate");
    removec->add_option("--freq", rc.fit.loss.freq_weight, "frequency loss weight");
    removec->add_option("--seeds", rc.n_seeds, "perturbation seeds");
    removec->add_option("--perturb-seed", rc.perturb_seed, "master perturbation seed");
    removec->add_option("--n-clean", rc.n_clean, "clean carriers for the threshold");
    removec->add_option("--fpr", rc.fpr, "operating false-positive rate");
    add_surrogate_opts(removec, rc.surrogate, remove_boundary);
    removec->add_option("--out", remove_out, "CSV output path")->required();

    // ---- predict ----
    auto* predict = app.add_subcommand("predict", "closed-form phase predictions for a transform");
    struct {
        int w = 64, h = 64, stride = 8;
        double r_min = 0.0, r_max = 16.0;
        double dx = 0, dy = 0, rotation = 0, scale = 1, coherence = 1.0;
    } po;
    predict->add_option("--width", po.w, "latent width");
    predict->add_option("--height", po.h, "latent height");
    predict->add_option("--stride", po.stride, "pixels per latent cell");
    predict->add_option("--r-min", po.r_min, "inner ring radius");
    predict->add_option("--r-max", po.r_max, "outer ring radius");
    predict->add_option("--dx", po.dx, "translation x, pixels");
    predict->add_option("--dy", po.dy, "translation y, pixels");
    predict->add_option("--rotation", po.rotation, "rotation, degrees");
    predict->add_option("--scale", po.scale, "zoom factor");
    predict->add_option("--coherence", po.coherence, "residual coherence factor");

    try {
        app.parse(argc, argv);

        if (*embed) {
            gml::LatentGrid z = eo.latent_in.empty()
                                    ? gml::random_latent(eo.w, eo.h, eo.c, eo.latent_seed)
                                    : gml::load_latent(eo.latent_in);
            gml::RingMask mask = gml::make_ring_mask(z.w, z.h, eo.r_min, eo.r_max, eo.channel);
            gml::WatermarkKey key =
                gml::scale_key(gml::sample_key(mask, eo.key_seed), eo.strength);
            gml::LatentGrid zw = gml::embed_key(z, mask, key);
            gml::save_latent(zw, eo.latent_out);
            if (!eo.key_out.empty()) gml::save_key_json(mask, key, z.w, z.h, eo.key_out);
            if (!eo.png_out.empty()) {
                gml::ImageGrid view = gml::make_image(z.w, z.h, 1, 0.0);
                const double* ch = &zw.values[size_t(eo.channel) * z.h * z.w];
                for (size_t i = 0; i < view.values.size(); ++i)
                    view.values[i] = 0.5 + 0.15 * ch[i];
                gml::save_png(view, eo.png_out);
            }
            double d0 = gml::detection_distance(zw, mask, key);
            std::printf("embedded %zu ring coordinates, zero-attack distance %.6g\n",
                        mask.coords.size(), d0);
        } else if (*attack) {
            gml::ImageGrid img = load_image_any(ao.in);
            gml::GeometricTransform t;
            if (!ao.json.empty()) {
                t = gml::load_transform_json(ao.json);
            } else {
                t.dx = ao.dx;
                t.dy = ao.dy;
                t.rotation_deg = ao.rotation;
                t.scale = ao.scale;
            }
            gml::EdgeMode mode =
                ao.edge == "circular" ? gml::EdgeMode::circular : gml::EdgeMode::pad_source;
            gml::ImageGrid out = gml::apply_transform(img, t, img, mode);
            save_image_any(out, ao.out);
            std::printf("transformed %dx%dx%d image (dx=%g dy=%g rot=%g scale=%g)\n", img.W,
                        img.H, img.C, t.dx, t.dy, t.rotation_deg, t.scale);
        } else if (*detect) {
            if (dopt.latent_in.empty() == dopt.image_in.empty())
                throw std::invalid_argument("detect: provide exactly one of --latent-in/--image-in");
            auto [mask, key, kw, kh] = gml::load_key_json(dopt.key_in);
            gml::LatentGrid z = dopt.latent_in.empty()
                                    ? gml::encode_downsample(load_image_any(dopt.image_in),
                                                             finish_surrogate(dopt.sur, dopt.boundary))
                                    : gml::load_latent(dopt.latent_in);
            gml::DetectMode mode = dopt.mode == "modulus" ? gml::DetectMode::complex_modulus
                                                          : gml::DetectMode::real_part;
            double d = gml::detection_distance(z, mask, key, mode);
            double acc = gml::bit_accuracy(z, mask, key);
            if (dopt.tau > 0.0) {
                gml::DetectionResult r = gml::decide(d, dopt.tau);
                std::printf("distance=%.6g bit_accuracy=%.4f tau=%.6g verdict=%s\n", d, acc,
                            dopt.tau, r.verdict ? "watermarked" : "clean");
            } else {
                std::printf("distance=%.6g bit_accuracy=%.4f\n", d, acc);
            }
        } else if (*sweep) {
            tc.surrogate = finish_surrogate(tc.surrogate, sweep_boundary);
            gml::SweepReport rep = gml::run_detection_sweep(tc);
            gml::emit_report(rep, sweep_csv_path, sweep_svg_path);
            for (const auto& c : rep.cells)
                std::printf("T=%-6g R=%-6g d=%.4f tau=%.4f tpr=%.3f acc=%.3f corr_ratio=%.3f\n",
                            c.translation_px, c.rotation_deg, c.mean_distance, c.tau, c.tpr,
                            c.mean_bit_accuracy, c.corr_ratio);
            std::printf("wrote %s\n", sweep_csv_path.c_str());
        } else if (*fitc) {
            gml::ImageGrid target = to_rgb(load_image_any(fo.target));
            gml::GaussianScene scene =
                gml::init_scene(target.H, target.W, fo.p, fo.a, fo.n_patch, fo.seed);
            if (fo.beta > 0.0) scene.beta = fo.beta;
            std::vector<double> trace = gml::fit(scene, target, fo.opt, fo.iterations);
            gml::ImageGrid render = gml::rasterize(scene);
            double q = gml::psnr(render, target);
            std::printf("fit %d gaussians, %d iterations: loss %.6g -> %.6g, psnr %.2f dB\n",
                        scene.total(), fo.iterations, trace.empty() ? 0.0 : trace.front(),
                        trace.empty() ? 0.0 : trace.back(), q);
            if (!fo.scene_out.empty()) gml::save_scene(scene, fo.scene_out);
            if (!fo.render_out.empty()) save_image_any(render, fo.render_out);
        } else if (*removec) {
            rc.surrogate = finish_surrogate(rc.surrogate, remove_boundary);
            gml::RemovalReport rep = gml::run_removal_pipeline(rc);
            gml::write_text_file(remove_out, gml::removal_csv(rep));
            int removed = 0, beats_pre = 0;
            for (const auto& s : rep.seeds) {
                if (!s.post_detected) ++removed;
                if (s.post_distance > rep.watermarked_distance) ++beats_pre;
            }
            std::printf("tau=%.4f pre=%.4f (detected=%d) refit=%.4f fit_noise=%.4f\n", rep.tau,
                        rep.watermarked_distance, rep.pre_detected ? 1 : 0, rep.refit_distance,
                        rep.fit_noise);
            std::printf("%zu seeds: %d undetected after perturbation, %d above pre-distance\n",
                        rep.seeds.size(), removed, beats_pre);
            std::printf("wrote %s\n", remove_out.c_str());
        } else if (*predict) {
            gml::RingMask mask = gml::make_ring_mask(po.w, po.h, po.r_min, po.r_max, 0);
            gml::GeometricTransform t;
            t.dx = po.dx;
            t.dy = po.dy;
            t.rotation_deg = po.rotation;
            t.scale = po.scale;
            gml::PhasePrediction pred =
                gml::make_phase_prediction(mask, t, po.stride, po.w, po.h, po.coherence);
            double mean_abs = 0.0;
            for (double r : pred.delta_phi) mean_abs += std::abs(r);
            if (!pred.delta_phi.empty()) mean_abs /= double(pred.delta_phi.size());
            std::printf("phase_range=%.6g rad\ncoord_drift=%.6g cells\n"
                        "expected_attenuation=%.6g\nmean_abs_ramp=%.6g rad\n",
                        pred.range, pred.drift, pred.attenuation, mean_abs);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
