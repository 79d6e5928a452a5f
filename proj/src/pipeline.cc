#include "gml/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "gml/rng.h"
#include "gml/serial.h"

namespace gml {

namespace {

std::string fmt_g(double v) {
    char b[40];
    std::snprintf(b, sizeof(b), "%.9g", v);
    return b;
}

// key correlation with the per-frequency chain gain divided out, so the value
// reads 1 at zero attack and tracks pure phase decoherence afterwards
double equalized_corr(const Spectrum& s, const RingMask& mask, const WatermarkKey& key,
                      const std::vector<std::complex<double>>& chain) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < mask.coords.size(); ++i) {
        std::complex<double> eq = s.at(mask.coords[i][0], mask.coords[i][1]) / chain[i];
        num += key.values[i] * eq.real();
        den += key.values[i] * key.values[i];
    }
    return den > 0.0 ? num / den : 0.0;
}

struct TrialSlot {
    double d_w = 0.0, d_clean = 0.0, bit = 0.0, corr = 0.0, raw_psnr = 0.0, aligned = 0.0;
    bool has_aligned = false;
};

} // namespace

ImageGrid attack_image(const ImageGrid& img, double translation_px, double rotation_deg,
                       double angle_deg) {
    ImageGrid cur = img;
    if (rotation_deg != 0.0) {
        GeometricTransform rot;
        rot.rotation_deg = rotation_deg;
        cur = apply_transform(cur, rot, img, EdgeMode::pad_source);
    }
    if (translation_px != 0.0) {
        double zr = angle_deg * std::numbers::pi / 180.0;
        GeometricTransform tr;
        tr.dx = translation_px * std::cos(zr);
        tr.dy = translation_px * std::sin(zr);
        cur = apply_transform(cur, tr, cur, EdgeMode::circular);
    }
    return cur;
}

double decorrelated_oracle(const WatermarkKey& key, const RingMask& mask,
                           const SurrogateConfig& surrogate, int w, int h, int mc_trials,
                           uint64_t seed) {
    if (mc_trials <= 0) throw std::invalid_argument("decorrelated_oracle: mc_trials must be > 0");
    if (key.values.size() != mask.coords.size())
        throw std::invalid_argument("decorrelated_oracle: key/mask size mismatch");
    std::vector<std::complex<double>> chain = chain_transfer(surrogate, mask, w, h);
    std::vector<int> canon = canonical_indices(mask);
    RngStream rng(seed);
    double acc = 0.0;
    for (int t = 0; t < mc_trials; ++t) {
        double s = 0.0;
        for (int i : canon) {
            double g = std::abs(chain[i]);
            double u = rng.uniform() * 2.0 * std::numbers::pi;
            s += std::abs(key.values[i] - g * key.values[i] * std::cos(u));
        }
        acc += s / double(canon.size());
    }
    return acc / double(mc_trials);
}

SweepReport run_detection_sweep(const TrialConfig& cfg) {
    if (cfg.w < 2 || cfg.h < 2 || cfg.c < 1)
        throw std::invalid_argument("run_detection_sweep: bad latent dimensions");
    if (cfg.mask_channel < 0 || cfg.mask_channel >= cfg.c)
        throw std::invalid_argument("run_detection_sweep: mask channel out of range");
    if (cfg.trials < 1) throw std::invalid_argument("run_detection_sweep: need at least 1 trial");
    validate_config(cfg.surrogate);

    RingMask mask = make_ring_mask(cfg.w, cfg.h, cfg.r_min, cfg.r_max, cfg.mask_channel);
    WatermarkKey key = scale_key(sample_key(mask, cfg.key_seed), cfg.key_strength);
    std::vector<std::complex<double>> chain = chain_transfer(cfg.surrogate, mask, cfg.w, cfg.h);

    std::vector<double> translations = cfg.translations.empty() ? std::vector<double>{0.0}
                                                                : cfg.translations;
    std::vector<double> rotations = cfg.rotations.empty() ? std::vector<double>{0.0}
                                                          : cfg.rotations;

    // warm the transform plan for the latent size before any worker threads start
    {
        LatentGrid warm = make_latent(cfg.w, cfg.h, 1, 0.0);
        Spectrum s = fft2_centered(warm, 0);
        ifft2_centered(s);
    }

    const int img_w = cfg.w * cfg.surrogate.stride, img_h = cfg.h * cfg.surrogate.stride;
    const int align_R = std::max(0, std::min(12, std::min(img_w, img_h) / 2 - 1));

    SweepReport rep;
    rep.cfg = cfg;
    int cell_idx = 0;
    for (double T : translations) {
        for (double R : rotations) {
            std::vector<TrialSlot> slots(size_t(cfg.trials));
            auto run_one = [&](int i) {
                TrialSlot& slot = slots[size_t(i)];
                uint64_t ts = derive_seed(cfg.master_seed, uint64_t(cell_idx), uint64_t(i));
                LatentGrid z0 = random_latent(cfg.w, cfg.h, cfg.c, derive_seed(ts, 1, 0));
                LatentGrid zw = embed_key(z0, mask, key);
                ImageGrid img_wm = decode_upsample(zw, cfg.surrogate);
                ImageGrid img_at = attack_image(img_wm, T, R, cfg.translation_angle_deg);
                LatentGrid z_hat = encode_downsample(img_at, cfg.surrogate);
                slot.d_w = detection_distance(z_hat, mask, key);
                slot.bit = bit_accuracy(z_hat, mask, key);
                Spectrum sw = fft2_centered(z_hat, mask.channel);
                slot.corr = equalized_corr(sw, mask, key, chain);
                slot.raw_psnr = psnr(img_wm, img_at);
                if (cfg.psnr_stride > 0 && i % cfg.psnr_stride == 0) {
                    slot.aligned = aligned_psnr(img_wm, img_at, align_R).psnr_db;
                    slot.has_aligned = true;
                }
                LatentGrid zc = random_latent(cfg.w, cfg.h, cfg.c, derive_seed(ts, 2, 0));
                ImageGrid img_cl = decode_upsample(zc, cfg.surrogate);
                ImageGrid img_ca = attack_image(img_cl, T, R, cfg.translation_angle_deg);
                slot.d_clean = detection_distance(encode_downsample(img_ca, cfg.surrogate), mask,
                                                  key);
            };
            int nthreads = std::max(1, cfg.threads);
            if (nthreads == 1) {
                for (int i = 0; i < cfg.trials; ++i) run_one(i);
            } else {
                // fixed slot per trial: the partition cannot affect the merged result
                std::vector<std::thread> pool;
                std::exception_ptr err;
                std::mutex err_mu;
                int chunk = (cfg.trials + nthreads - 1) / nthreads;
                for (int t = 0; t < nthreads; ++t) {
                    int lo = t * chunk, hi = std::min(cfg.trials, lo + chunk);
                    if (lo >= hi) break;
                    pool.emplace_back([&, lo, hi]() {
                        try {
                            for (int i = lo; i < hi; ++i) run_one(i);
                        } catch (...) {
                            std::lock_guard<std::mutex> g(err_mu);
                            if (!err) err = std::current_exception();
                        }
                    });
                }
                for (auto& th : pool) th.join();
                if (err) std::rethrow_exception(err);
            }

            CellResult cell;
            cell.translation_px = T;
            cell.rotation_deg = R;
            cell.n = cfg.trials;
            std::vector<double> dw(slots.size()), dc(slots.size());
            double sum_bit = 0.0, sum_corr = 0.0, sum_raw = 0.0, sum_al = 0.0;
            int n_al = 0;
            for (size_t i = 0; i < slots.size(); ++i) {
                dw[i] = slots[i].d_w;
                dc[i] = slots[i].d_clean;
                sum_bit += slots[i].bit;
                sum_corr += slots[i].corr;
                sum_raw += slots[i].raw_psnr;
                if (slots[i].has_aligned) {
                    sum_al += slots[i].aligned;
                    ++n_al;
                }
            }
            double n = double(cfg.trials);
            double mean_w = 0.0, mean_c = 0.0;
            for (double v : dw) mean_w += v;
            for (double v : dc) mean_c += v;
            mean_w /= n;
            mean_c /= n;
            double var = 0.0;
            for (double v : dw) var += (v - mean_w) * (v - mean_w);
            cell.mean_distance = mean_w;
            cell.std_distance = cfg.trials > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
            cell.mean_distance_clean = mean_c;
            cell.tau = tau_from_clean(dc, cfg.fpr);
            cell.tpr = tpr_at_fpr({dc, dw, cfg.fpr});
            cell.mean_bit_accuracy = sum_bit / n;
            cell.mean_corr = sum_corr / n;
            cell.raw_psnr_db = sum_raw / n;
            cell.aligned_psnr_db = n_al > 0 ? sum_al / double(n_al) : 0.0;
            cell.phase_range_rad =
                phase_range(mask.r_max, std::abs(T), cfg.surrogate.stride, cfg.w);
            cell.coord_drift_cells =
                coord_drift(mask.r_max, std::abs(R) * std::numbers::pi / 180.0);
            cell.expected_attenuation = expected_attenuation(cell.phase_range_rad / 2.0, 1.0);
            rep.cells.push_back(cell);
            ++cell_idx;
        }
    }

    // normalize correlations by the unattacked cell when the grid includes one
    double zero_corr = 0.0;
    for (const auto& c : rep.cells)
        if (c.translation_px == 0.0 && c.rotation_deg == 0.0) zero_corr = c.mean_corr;
    for (auto& c : rep.cells)
        c.corr_ratio = zero_corr != 0.0 ? c.mean_corr / zero_corr : c.mean_corr;
    return rep;
}

std::string sweep_csv(const SweepReport& report) {
    std::ostringstream o;
    o << "translation_px,rotation_deg,n,mean_distance,std_distance,mean_distance_clean,tau,tpr,"
         "mean_bit_accuracy,mean_corr,corr_ratio,phase_range_rad,coord_drift_cells,"
         "expected_attenuation,raw_psnr_db,aligned_psnr_db\n";
    for (const auto& c : report.cells) {
        o << fmt_g(c.translation_px) << ',' << fmt_g(c.rotation_deg) << ',' << c.n << ','
          << fmt_g(c.mean_distance) << ',' << fmt_g(c.std_distance) << ','
          << fmt_g(c.mean_distance_clean) << ',' << fmt_g(c.tau) << ',' << fmt_g(c.tpr) << ','
          << fmt_g(c.mean_bit_accuracy) << ',' << fmt_g(c.mean_corr) << ','
          << fmt_g(c.corr_ratio) << ',' << fmt_g(c.phase_range_rad) << ','
          << fmt_g(c.coord_drift_cells) << ',' << fmt_g(c.expected_attenuation) << ','
          << fmt_g(c.raw_psnr_db) << ',' << fmt_g(c.aligned_psnr_db) << '\n';
    }
    return o.str();
}

std::string sweep_svg(const SweepReport& report) {
    const double x0 = 60, x1 = 620, y0 = 40, y1 = 360, vmax = 1.2;
    size_t n = report.cells.size();
    auto xpos = [&](size_t i) {
        return n > 1 ? x0 + (x1 - x0) * double(i) / double(n - 1) : 0.5 * (x0 + x1);
    };
    auto ypos = [&](double v) {
        v = std::clamp(v, 0.0, vmax);
        return y1 - (y1 - y0) * v / vmax;
    };
    auto f2 = [](double v) {
        char b[32];
        std::snprintf(b, sizeof(b), "%.2f", v);
        return std::string(b);
    };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 400\" "
         "font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    o << "<line x1=\"60\" y1=\"360\" x2=\"620\" y2=\"360\" stroke=\"black\"/>\n";
    o << "<line x1=\"60\" y1=\"40\" x2=\"60\" y2=\"360\" stroke=\"black\"/>\n";
    // y gridline at 1.0
    o << "<line x1=\"60\" y1=\"" << f2(ypos(1.0)) << "\" x2=\"620\" y2=\"" << f2(ypos(1.0))
      << "\" stroke=\"#cccccc\" stroke-dasharray=\"4 4\"/>\n";
    o << "<text x=\"40\" y=\"" << f2(ypos(1.0) + 4) << "\">1.0</text>\n";
    o << "<text x=\"40\" y=\"" << f2(y1 + 4) << "\">0.0</text>\n";
    const char* colors[3] = {"#1f77b4", "#d62728", "#2ca02c"};
    const char* names[3] = {"tpr", "corr_ratio", "expected_attenuation"};
    for (int series = 0; series < 3; ++series) {
        o << "<polyline fill=\"none\" stroke=\"" << colors[series] << "\" stroke-width=\"2\" points=\"";
        for (size_t i = 0; i < n; ++i) {
            const CellResult& c = report.cells[i];
            double v = series == 0 ? c.tpr : series == 1 ? c.corr_ratio : c.expected_attenuation;
            o << f2(xpos(i)) << ',' << f2(ypos(v));
            if (i + 1 < n) o << ' ';
        }
        o << "\"/>\n";
        o << "<text x=\"" << 70 + 180 * series << "\" y=\"24\" fill=\"" << colors[series] << "\">"
          << names[series] << "</text>\n";
    }
    for (size_t i = 0; i < n; ++i) {
        const CellResult& c = report.cells[i];
        char lab[48];
        std::snprintf(lab, sizeof(lab), "%.4g/%.4g", c.translation_px, c.rotation_deg);
        o << "<text x=\"" << f2(xpos(i) - 12) << "\" y=\"378\">" << lab << "</text>\n";
    }
    o << "<text x=\"280\" y=\"396\">translation_px/rotation_deg</text>\n";
    o << "</svg>\n";
    return o.str();
}

void emit_report(const SweepReport& report, const std::string& csv_path,
                 const std::string& svg_path) {
    write_text_file(csv_path, sweep_csv(report));
    if (!svg_path.empty()) write_text_file(svg_path, sweep_svg(report));
}

ImageGrid synth_carrier(int W, int H, uint64_t seed) {
    if (W <= 0 || H <= 0) throw std::invalid_argument("synth_carrier: bad dimensions");
    RngStream rng(seed);
    const int K = 16; // control lattice; smoothstep interpolation keeps the surface C1
    std::vector<double> lat(size_t(K + 1) * (K + 1));
    for (double& v : lat) v = rng.uniform();
    double gx = rng.uniform(-0.3, 0.3), gy = rng.uniform(-0.3, 0.3);
    ImageGrid img = make_image(W, H, 1, 0.0);
    double lo = 1e300, hi = -1e300;
    for (int y = 0; y < H; ++y) {
        double fy = double(y) / H * K;
        int iy = int(fy);
        double ty = fy - iy;
        double sy = ty * ty * (3.0 - 2.0 * ty);
        for (int x = 0; x < W; ++x) {
            double fx = double(x) / W * K;
            int ix = int(fx);
            double tx = fx - ix;
            double sx = tx * tx * (3.0 - 2.0 * tx);
            double v00 = lat[size_t(iy) * (K + 1) + ix], v01 = lat[size_t(iy) * (K + 1) + ix + 1];
            double v10 = lat[size_t(iy + 1) * (K + 1) + ix],
                   v11 = lat[size_t(iy + 1) * (K + 1) + ix + 1];
            double v = (1 - sy) * ((1 - sx) * v00 + sx * v01) + sy * ((1 - sx) * v10 + sx * v11);
            v += gx * double(x) / W + gy * double(y) / H;
            img.values[size_t(y) * W + x] = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    double span = hi > lo ? hi - lo : 1.0;
    for (double& v : img.values) v = 0.05 + 0.9 * (v - lo) / span;
    return img;
}

RemovalConfig default_removal_config() {
    RemovalConfig cfg;
    cfg.fit.lr = 0.15;
    cfg.fit.lr_decay = 0.7;
    cfg.fit.decay_every = 50;
    cfg.fit.loss.l1_weight = 1.0;
    cfg.fit.loss.freq_weight = 0.25;
    cfg.fit.loss.gamma = 1.0;
    return cfg;
}

RemovalReport run_removal_pipeline(const RemovalConfig& cfg) {
    validate_config(cfg.surrogate);
    if (cfg.n_seeds < 0 || cfg.n_clean < 1)
        throw std::invalid_argument("run_removal_pipeline: bad trial counts");
    const int W = cfg.w * cfg.surrogate.stride, H = cfg.h * cfg.surrogate.stride;
    RingMask mask = make_ring_mask(cfg.w, cfg.h, cfg.r_min, cfg.r_max, 0);
    WatermarkKey key = scale_key(sample_key(mask, cfg.key_seed), cfg.key_strength);
    RemovalReport rep;

    // operating threshold from clean synthetic carriers run through the encoder
    std::vector<double> clean(size_t(cfg.n_clean));
    for (int j = 0; j < cfg.n_clean; ++j) {
        ImageGrid cj = synth_carrier(W, H, derive_seed(cfg.carrier_seed, 1, uint64_t(j)));
        clean[size_t(j)] = detection_distance(encode_downsample(cj, cfg.surrogate), mask, key);
    }
    rep.tau = tau_from_clean(clean, cfg.fpr);

    // watermark a carrier through the latent channel and decode it back
    ImageGrid carrier = synth_carrier(W, H, cfg.carrier_seed);
    LatentGrid z0 = encode_downsample(carrier, cfg.surrogate);
    LatentGrid zw = embed_key(z0, mask, key);
    ImageGrid img_w = decode_upsample(zw, cfg.surrogate);
    LatentGrid z_hat = encode_downsample(img_w, cfg.surrogate);
    rep.watermarked_distance = detection_distance(z_hat, mask, key);
    rep.pre_detected = rep.watermarked_distance < rep.tau;

    // fit the splat scene to the watermarked image (replicated to rgb)
    size_t plane = size_t(H) * W;
    ImageGrid target = make_image(W, H, 3, 0.0);
    for (int c = 0; c < 3; ++c)
        std::copy(img_w.values.begin(), img_w.values.end(),
                  target.values.begin() + size_t(c) * plane);
    int p_eff = cfg.p;
    if (p_eff == 0) {
        if (H != W)
            throw std::invalid_argument(
                "run_removal_pipeline: the image-spanning patch layout (p = 0) needs a "
                "square image; set an explicit patch size");
        p_eff = H;
    }
    GaussianScene scene = init_scene(H, W, p_eff, cfg.a, cfg.n_patch, cfg.carrier_seed);
    scene.beta = cfg.beta;
    rep.loss_trace = fit(scene, target, cfg.fit, cfg.fit_iterations);

    ImageGrid fit_img = rasterize(scene);
    LatentGrid z_fit = encode_downsample(fit_img, cfg.surrogate);
    rep.refit_distance = detection_distance(z_fit, mask, key);
    {
        Spectrum sf = fft2_centered(z_fit, 0);
        Spectrum sw = fft2_centered(z_hat, 0);
        std::vector<int> canon = canonical_indices(mask);
        double acc = 0.0;
        for (int i : canon)
            acc += std::abs(sf.at(mask.coords[i][0], mask.coords[i][1]).real() -
                            sw.at(mask.coords[i][0], mask.coords[i][1]).real());
        rep.fit_noise = acc / double(canon.size());
    }

    const int align_R = std::max(0, std::min(12, std::min(W, H) / 2 - 1));
    for (int sidx = 0; sidx < cfg.n_seeds; ++sidx) {
        uint64_t ps = derive_seed(cfg.perturb_seed, uint64_t(sidx), 0);
        RemovalSeedResult r;
        r.seed = ps;
        r.t = sample_micro_perturbation(cfg.bounds, ps);
        GaussianScene pert = perturb_means(scene, r.t);
        ImageGrid img_p = rasterize(pert);
        r.post_distance = detection_distance(encode_downsample(img_p, cfg.surrogate), mask, key);
        r.post_detected = r.post_distance < rep.tau;
        r.raw_psnr_db = psnr(target, img_p);
        AlignResult ar = aligned_psnr(target, img_p, align_R);
        r.aligned_psnr_db = ar.psnr_db;
        r.shift_y = ar.shift_y;
        r.shift_x = ar.shift_x;
        rep.seeds.push_back(r);
    }
    return rep;
}

std::string removal_csv(const RemovalReport& report) {
    std::ostringstream o;
    o << "# tau=" << fmt_g(report.tau) << " watermarked_distance="
      << fmt_g(report.watermarked_distance) << " refit_distance=" << fmt_g(report.refit_distance)
      << " fit_noise=" << fmt_g(report.fit_noise) << " pre_detected=" << (report.pre_detected ? 1 : 0)
      << '\n';
    o << "seed,dx_px,dy_px,rotation_deg,scale,post_distance,post_detected,raw_psnr_db,"
         "aligned_psnr_db,shift_y,shift_x\n";
    for (const auto& s : report.seeds) {
        o << s.seed << ',' << fmt_g(s.t.dx) << ',' << fmt_g(s.t.dy) << ','
          << fmt_g(s.t.rotation_deg) << ',' << fmt_g(s.t.scale) << ',' << fmt_g(s.post_distance)
          << ',' << (s.post_detected ? 1 : 0) << ',' << fmt_g(s.raw_psnr_db) << ','
          << fmt_g(s.aligned_psnr_db) << ',' << s.shift_y << ',' << s.shift_x << '\n';
    }
    return o.str();
}

} // namespace gml
