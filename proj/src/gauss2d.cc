#include "gml/gauss2d.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "gml/fft.h"

namespace gml {

namespace {

void validate_scene(const GaussianScene& sc) {
    if (sc.H <= 0 || sc.W <= 0 || sc.p <= 0 || sc.a < 0 || sc.p <= 2 * sc.a)
        throw std::invalid_argument("gaussian scene: need H,W > 0 and 0 <= a < p/2");
    if (sc.H % sc.p != 0 || sc.W % sc.p != 0)
        throw std::invalid_argument("gaussian scene: patch size must divide H and W");
    if (sc.patches_y != sc.H / sc.p || sc.patches_x != sc.W / sc.p)
        throw std::invalid_argument("gaussian scene: patch grid inconsistent with H, W, p");
    size_t n = size_t(sc.total());
    if (sc.mu_fix.size() != 2 * n || sc.mu_bias_raw.size() != 2 * n || sc.log_l11.size() != n ||
        sc.l21.size() != n || sc.log_l22.size() != n || sc.color.size() != 3 * n ||
        sc.opacity.size() != n)
        throw std::invalid_argument("gaussian scene: parameter array sizes inconsistent");
    if (!(sc.beta > 0.0)) throw std::invalid_argument("gaussian scene: beta must be positive");
}

// unnormalized blend weight of patch (py,px) at pixel (x,y): 2a+1 minus the
// chebyshev distance to the patch core box, floored at zero
double patch_weight(const GaussianScene& sc, int py, int px, int x, int y) {
    int y_lo = py * sc.p + sc.a, y_hi = py * sc.p + sc.p - sc.a - 1;
    int x_lo = px * sc.p + sc.a, x_hi = px * sc.p + sc.p - sc.a - 1;
    int dy = std::max({y_lo - y, y - y_hi, 0});
    int dx = std::max({x_lo - x, x - x_hi, 0});
    int d = std::max(dx, dy);
    int w = 2 * sc.a + 1 - d;
    return w > 0 ? double(w) : 0.0;
}

struct GaussFactors {
    double mux, muy;      // effective mean
    double l11, l21, l22; // cholesky entries of the covariance factor
    bool degenerate;
};

GaussFactors factors_for(const GaussianScene& sc, int i) {
    GaussFactors f;
    f.mux = sc.mean_x(i);
    f.muy = sc.mean_y(i);
    f.l11 = std::exp(sc.log_l11[i]);
    f.l21 = sc.l21[i];
    f.l22 = std::exp(sc.log_l22[i]);
    // condition number of Sigma = L L^T via the 2x2 eigenvalues
    double s11 = f.l11 * f.l11;
    double s21 = f.l21 * f.l11;
    double s22 = f.l21 * f.l21 + f.l22 * f.l22;
    double tr = s11 + s22, det = s11 * s22 - s21 * s21;
    double disc = std::sqrt(std::max(tr * tr - 4.0 * det, 0.0));
    double lmax = 0.5 * (tr + disc), lmin = 0.5 * (tr - disc);
    f.degenerate = !(std::isfinite(lmax) && lmin > 0.0 && lmax <= 1e12 * lmin);
    return f;
}

struct PixRange {
    int x0, x1, y0, y1; // half-open
};

// diag-based bounding box around the mean, clipped to the extended region.
// comparisons stay in double so enormous cutoffs never overflow an int cast.
PixRange gauss_bbox(const GaussFactors& f, double cull, int ex0, int ex1, int ey0, int ey1) {
    double hx = cull * f.l11;
    double hy = cull * std::sqrt(f.l21 * f.l21 + f.l22 * f.l22);
    auto lo = [](double v, int l, int h) {
        if (!(v > l)) return l;
        if (v >= h) return h;
        return int(std::ceil(v));
    };
    auto hi = [](double v, int l, int h) {
        if (!(v < h - 1)) return h;
        if (v < l) return l;
        return int(std::floor(v)) + 1;
    };
    PixRange r;
    r.x0 = lo(f.mux - hx, ex0, ex1);
    r.x1 = hi(f.mux + hx, ex0, ex1);
    r.y0 = lo(f.muy - hy, ey0, ey1);
    r.y1 = hi(f.muy + hy, ey0, ey1);
    return r;
}

// weighted-blended render; fills the per-pixel patch-weight plane as a side product
ImageGrid forward_pass(const GaussianScene& sc, std::vector<double>& wsum_out) {
    validate_scene(sc);
    sc.degenerate_count = 0;
    ImageGrid out = make_image(sc.W, sc.H, 3, 0.0);
    size_t plane = size_t(sc.H) * sc.W;
    std::vector<double> wsum(plane, 0.0);
    double c2 = sc.cull_sigma * sc.cull_sigma;
    for (int py = 0; py < sc.patches_y; ++py) {
        for (int px = 0; px < sc.patches_x; ++px) {
            int ey0 = std::max(0, py * sc.p - sc.a);
            int ey1 = std::min(sc.H, py * sc.p + sc.p + sc.a);
            int ex0 = std::max(0, px * sc.p - sc.a);
            int ex1 = std::min(sc.W, px * sc.p + sc.p + sc.a);
            for (int y = ey0; y < ey1; ++y)
                for (int x = ex0; x < ex1; ++x)
                    wsum[size_t(y) * sc.W + x] += patch_weight(sc, py, px, x, y);
            int base = (py * sc.patches_x + px) * sc.n_patch;
            for (int k = 0; k < sc.n_patch; ++k) {
                int i = base + k;
                GaussFactors f = factors_for(sc, i);
                if (f.degenerate) {
                    ++sc.degenerate_count;
                    continue;
                }
                PixRange pr = gauss_bbox(f, sc.cull_sigma, ex0, ex1, ey0, ey1);
                for (int y = pr.y0; y < pr.y1; ++y) {
                    for (int x = pr.x0; x < pr.x1; ++x) {
                        double rx = x - f.mux, ry = y - f.muy;
                        double sy1 = rx / f.l11;
                        double sy2 = (ry - f.l21 * sy1) / f.l22;
                        double m2 = sy1 * sy1 + sy2 * sy2;
                        if (m2 > c2) continue;
                        double wv = patch_weight(sc, py, px, x, y) * sc.opacity[i] *
                                    std::exp(-0.5 * m2);
                        size_t pix = size_t(y) * sc.W + x;
                        for (int c = 0; c < 3; ++c)
                            out.values[size_t(c) * plane + pix] += wv * sc.color[3 * i + c];
                    }
                }
            }
        }
    }
    // every pixel lies inside its owning tile, so the weight sum is >= 1
    for (int c = 0; c < 3; ++c)
        for (size_t j = 0; j < plane; ++j) out.values[size_t(c) * plane + j] /= wsum[j];
    wsum_out = std::move(wsum);
    return out;
}

} // namespace

double GaussianScene::mean_x(int i) const {
    return mu_fix[2 * i] + beta * std::tanh(mu_bias_raw[2 * i]);
}

double GaussianScene::mean_y(int i) const {
    return mu_fix[2 * i + 1] + beta * std::tanh(mu_bias_raw[2 * i + 1]);
}

GaussianScene init_scene(int H, int W, int p, int a, int n_patch, uint64_t seed) {
    (void)seed; // layout below is fully deterministic
    if (H <= 0 || W <= 0 || p <= 0) throw std::invalid_argument("init_scene: bad dimensions");
    if (a < 0 || p <= 2 * a) throw std::invalid_argument("init_scene: need 0 <= a < p/2");
    if (H % p != 0 || W % p != 0)
        throw std::invalid_argument("init_scene: patch size must divide H and W");
    int k = int(std::lround(std::sqrt(double(n_patch))));
    if (n_patch <= 0 || k * k != n_patch)
        throw std::invalid_argument("init_scene: n_patch must be a positive perfect square");
    GaussianScene sc;
    sc.H = H;
    sc.W = W;
    sc.p = p;
    sc.a = a;
    sc.n_patch = n_patch;
    sc.patches_y = H / p;
    sc.patches_x = W / p;
    double spacing = double(p) / k;
    sc.beta = spacing / 2.0;
    size_t n = size_t(sc.total());
    sc.mu_fix.resize(2 * n);
    sc.mu_bias_raw.assign(2 * n, 0.0);
    sc.log_l11.assign(n, std::log(spacing / 2.0));
    sc.l21.assign(n, 0.0);
    sc.log_l22.assign(n, std::log(spacing / 2.0));
    sc.color.assign(3 * n, 0.5);
    sc.opacity.assign(n, 0.1);
    for (int py = 0; py < sc.patches_y; ++py)
        for (int px = 0; px < sc.patches_x; ++px)
            for (int gy = 0; gy < k; ++gy)
                for (int gx = 0; gx < k; ++gx) {
                    int i = (py * sc.patches_x + px) * n_patch + gy * k + gx;
                    sc.mu_fix[2 * i] = px * p + (gx + 0.5) * spacing;
                    sc.mu_fix[2 * i + 1] = py * p + (gy + 0.5) * spacing;
                }
    return sc;
}

ImageGrid rasterize(const GaussianScene& scene) {
    std::vector<double> wsum;
    return forward_pass(scene, wsum);
}

std::vector<std::pair<int, double>> border_blend_weights(const GaussianScene& scene, int x,
                                                         int y) {
    validate_scene(scene);
    if (x < 0 || x >= scene.W || y < 0 || y >= scene.H)
        throw std::invalid_argument("border_blend_weights: pixel out of range");
    std::vector<std::pair<int, double>> out;
    double total = 0.0;
    int oy = y / scene.p, ox = x / scene.p;
    for (int py = std::max(0, oy - 1); py <= std::min(scene.patches_y - 1, oy + 1); ++py) {
        for (int px = std::max(0, ox - 1); px <= std::min(scene.patches_x - 1, ox + 1); ++px) {
            double w = patch_weight(scene, py, px, x, y);
            if (w > 0.0) {
                out.emplace_back(py * scene.patches_x + px, w);
                total += w;
            }
        }
    }
    for (auto& pw : out) pw.second /= total;
    return out;
}

RenderResult rasterize_with_grads(const GaussianScene& sc, const ImageGrid& target,
                                  const LossSpec& spec) {
    if (target.H != sc.H || target.W != sc.W)
        throw std::invalid_argument("rasterize_with_grads: target dimensions mismatch");
    if (target.C != 1 && target.C != 3)
        throw std::invalid_argument("rasterize_with_grads: target must have 1 or 3 channels");
    std::vector<double> wsum;
    RenderResult rr;
    rr.image = forward_pass(sc, wsum);
    const int H = sc.H, W = sc.W;
    size_t plane = size_t(H) * W;
    // loss and the upstream gradient with respect to each rendered pixel.
    // a single-channel target is compared against every rendered channel.
    std::vector<double> up(3 * plane, 0.0);
    double loss = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double* tv = &target.values[size_t(target.C == 1 ? 0 : c) * plane];
        const double* ov = &rr.image.values[size_t(c) * plane];
        double* uv = &up[size_t(c) * plane];
        if (spec.l1_weight != 0.0) {
            double acc = 0.0;
            for (size_t j = 0; j < plane; ++j) {
                double d = ov[j] - tv[j];
                acc += std::abs(d);
                uv[j] += spec.l1_weight * double((d > 0) - (d < 0)) / double(3 * plane);
            }
            loss += spec.l1_weight * acc / double(3 * plane);
        }
        if (spec.freq_weight != 0.0) {
            std::vector<double> diff(plane);
            for (size_t j = 0; j < plane; ++j) diff[j] = ov[j] - tv[j];
            auto D = fft2_unitary_real(diff.data(), W, H);
            double acc = 0.0;
            std::vector<std::complex<double>> G(plane);
            for (size_t j = 0; j < plane; ++j) {
                double m = std::abs(D[j]);
                acc += std::pow(m, spec.gamma);
                G[j] = m > 0.0 ? D[j] * std::pow(m, spec.gamma - 2.0) : 0.0;
            }
            loss += spec.freq_weight * acc / double(plane) / 3.0;
            auto g = fft2_unitary(G.data(), W, H, true);
            double scale = spec.freq_weight * spec.gamma / double(plane) / 3.0;
            for (size_t j = 0; j < plane; ++j) uv[j] += scale * g[j].real();
        }
    }
    rr.loss = loss;

    size_t n = size_t(sc.total());
    rr.grads.mu_bias_raw.assign(2 * n, 0.0);
    rr.grads.log_l11.assign(n, 0.0);
    rr.grads.l21.assign(n, 0.0);
    rr.grads.log_l22.assign(n, 0.0);
    rr.grads.color.assign(3 * n, 0.0);
    rr.grads.opacity.assign(n, 0.0);
    double c2 = sc.cull_sigma * sc.cull_sigma;
    for (int py = 0; py < sc.patches_y; ++py) {
        for (int px = 0; px < sc.patches_x; ++px) {
            int ey0 = std::max(0, py * sc.p - sc.a);
            int ey1 = std::min(sc.H, py * sc.p + sc.p + sc.a);
            int ex0 = std::max(0, px * sc.p - sc.a);
            int ex1 = std::min(sc.W, px * sc.p + sc.p + sc.a);
            int base = (py * sc.patches_x + px) * sc.n_patch;
            for (int k = 0; k < sc.n_patch; ++k) {
                int i = base + k;
                GaussFactors f = factors_for(sc, i);
                if (f.degenerate) continue; // already counted by the forward pass
                PixRange pr = gauss_bbox(f, sc.cull_sigma, ex0, ex1, ey0, ey1);
                double gmx = 0, gmy = 0, gl11 = 0, gl21 = 0, gl22 = 0, gop = 0;
                double gcol[3] = {0, 0, 0};
                for (int y = pr.y0; y < pr.y1; ++y) {
                    for (int x = pr.x0; x < pr.x1; ++x) {
                        double rx = x - f.mux, ry = y - f.muy;
                        double sy1 = rx / f.l11;
                        double sy2 = (ry - f.l21 * sy1) / f.l22;
                        double m2 = sy1 * sy1 + sy2 * sy2;
                        if (m2 > c2) continue;
                        double e = std::exp(-0.5 * m2);
                        size_t pix = size_t(y) * W + x;
                        double wt = patch_weight(sc, py, px, x, y) / wsum[pix];
                        double s = 0.0;
                        for (int c = 0; c < 3; ++c) {
                            double uc = up[size_t(c) * plane + pix] * wt;
                            gcol[c] += uc * sc.opacity[i] * e;
                            s += uc * sc.color[3 * i + c];
                        }
                        gop += s * e;
                        double gm2 = -0.5 * s * sc.opacity[i] * e;
                        // back-substitute L^T u = y; dm2/dL = -2 u y^T, dm2/dmu = -2 u
                        double u2 = sy2 / f.l22;
                        double u1 = (sy1 - f.l21 * u2) / f.l11;
                        gl11 += gm2 * (-2.0 * u1 * sy1);
                        gl21 += gm2 * (-2.0 * u2 * sy1);
                        gl22 += gm2 * (-2.0 * u2 * sy2);
                        gmx += gm2 * (-2.0 * u1);
                        gmy += gm2 * (-2.0 * u2);
                    }
                }
                rr.grads.log_l11[i] = gl11 * f.l11;
                rr.grads.l21[i] = gl21;
                rr.grads.log_l22[i] = gl22 * f.l22;
                double tx = std::tanh(sc.mu_bias_raw[2 * i]);
                double ty = std::tanh(sc.mu_bias_raw[2 * i + 1]);
                rr.grads.mu_bias_raw[2 * i] = gmx * sc.beta * (1.0 - tx * tx);
                rr.grads.mu_bias_raw[2 * i + 1] = gmy * sc.beta * (1.0 - ty * ty);
                for (int c = 0; c < 3; ++c) rr.grads.color[3 * i + c] = gcol[c];
                rr.grads.opacity[i] = gop;
            }
        }
    }
    return rr;
}

std::vector<double> fit(GaussianScene& scene, const ImageGrid& target, const OptimizerConfig& cfg,
                        int iterations) {
    if (iterations < 0) throw std::invalid_argument("fit: negative iteration count");
    struct Adam {
        std::vector<double> m, v;
    };
    auto mk = [](size_t sz) { return Adam{std::vector<double>(sz, 0.0), std::vector<double>(sz, 0.0)}; };
    size_t n = size_t(scene.total());
    Adam a_bias = mk(2 * n), a_l11 = mk(n), a_l21 = mk(n), a_l22 = mk(n), a_col = mk(3 * n),
         a_op = mk(n);
    std::vector<double> trace;
    trace.reserve(size_t(iterations));
    double lr = cfg.lr;
    for (int it = 0; it < iterations; ++it) {
        if (cfg.decay_every > 0 && it > 0 && it % cfg.decay_every == 0) lr *= cfg.lr_decay;
        RenderResult rr = rasterize_with_grads(scene, target, cfg.loss);
        if (!std::isfinite(rr.loss))
            throw std::runtime_error("fit: non-finite loss at iteration " + std::to_string(it));
        trace.push_back(rr.loss);
        double t = it + 1.0;
        double bc1 = 1.0 - std::pow(cfg.beta1, t), bc2 = 1.0 - std::pow(cfg.beta2, t);
        auto step = [&](std::vector<double>& p, const std::vector<double>& g, Adam& st) {
            for (size_t j = 0; j < p.size(); ++j) {
                st.m[j] = cfg.beta1 * st.m[j] + (1.0 - cfg.beta1) * g[j];
                st.v[j] = cfg.beta2 * st.v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                p[j] -= lr * (st.m[j] / bc1) / (std::sqrt(st.v[j] / bc2) + cfg.eps);
            }
        };
        step(scene.mu_bias_raw, rr.grads.mu_bias_raw, a_bias);
        step(scene.log_l11, rr.grads.log_l11, a_l11);
        step(scene.l21, rr.grads.l21, a_l21);
        step(scene.log_l22, rr.grads.log_l22, a_l22);
        step(scene.color, rr.grads.color, a_col);
        step(scene.opacity, rr.grads.opacity, a_op);
        for (double& c : scene.color) c = std::clamp(c, 0.0, 1.0);
    }
    return trace;
}

GaussianScene perturb_means(const GaussianScene& scene, const GeometricTransform& t) {
    validate_scene(scene);
    validate_micro_bounds(t);
    if (is_identity(t)) return scene;
    GaussianScene out = scene;
    out.degenerate_count = 0;
    out.clamp_count = 0;
    double th = t.rotation_deg * std::numbers::pi / 180.0;
    double c = std::cos(th), s = std::sin(th);
    double cx = (scene.W - 1) / 2.0, cy = (scene.H - 1) / 2.0;
    const double bound = 1.0 - 1e-12; // keeps atanh finite; excess offset is clamped
    int n = scene.total();
    for (int i = 0; i < n; ++i) {
        double vx = scene.mean_x(i) - cx, vy = scene.mean_y(i) - cy;
        double x1 = c * vx - s * vy + t.dx; // rotate about center, then translate
        double y1 = s * vx + c * vy + t.dy;
        double mx = cx + t.scale * x1; // scale about center
        double my = cy + t.scale * y1;
        double bx = (mx - scene.mu_fix[2 * i]) / scene.beta;
        double by = (my - scene.mu_fix[2 * i + 1]) / scene.beta;
        if (std::abs(bx) > bound) {
            bx = std::copysign(bound, bx);
            ++out.clamp_count;
        }
        if (std::abs(by) > bound) {
            by = std::copysign(bound, by);
            ++out.clamp_count;
        }
        out.mu_bias_raw[2 * i] = std::atanh(bx);
        out.mu_bias_raw[2 * i + 1] = std::atanh(by);
        if (t.rotation_deg != 0.0) {
            // co-rotate the covariance: Sigma' = R Sigma R^T, refactored to cholesky form
            double l11 = std::exp(scene.log_l11[i]);
            double l21v = scene.l21[i];
            double l22 = std::exp(scene.log_l22[i]);
            double s11 = l11 * l11, s21 = l21v * l11, s22 = l21v * l21v + l22 * l22;
            double r11 = c * c * s11 - 2.0 * c * s * s21 + s * s * s22;
            double r21 = c * s * (s11 - s22) + (c * c - s * s) * s21;
            double r22 = s * s * s11 + 2.0 * c * s * s21 + c * c * s22;
            double nl11 = std::sqrt(r11);
            double nl21 = r21 / nl11;
            double nl22 = std::sqrt(std::max(r22 - nl21 * nl21, 0.0));
            out.log_l11[i] = std::log(nl11);
            out.l21[i] = nl21;
            out.log_l22[i] = std::log(nl22);
        }
    }
    return out;
}

} // namespace gml
