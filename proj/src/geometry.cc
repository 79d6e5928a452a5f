#include "gml/geometry.h"

#include <cmath>
#include <stdexcept>

#include "gml/rng.h"

namespace gml {

void validate_micro_bounds(const GeometricTransform& t) {
    if (!(std::abs(t.rotation_deg) <= 45.0))
        throw std::invalid_argument("micro bounds: |rotation| must be <= 45 degrees");
    if (!(t.scale > 0.5 && t.scale < 2.0))
        throw std::invalid_argument("micro bounds: scale must lie in (0.5, 2)");
    if (!std::isfinite(t.dx) || !std::isfinite(t.dy))
        throw std::invalid_argument("micro bounds: non-finite translation");
}

GeometricTransform inverse_transform(const GeometricTransform& t) {
    // forward: rotate about center, translate by D, scale about center.
    // undoing in the same stage order needs rotation -theta, translation
    // -s * R(-theta) * D, scale 1/s.
    double th = -t.rotation_deg * M_PI / 180.0;
    double c = std::cos(th), s = std::sin(th);
    GeometricTransform inv;
    inv.rotation_deg = -t.rotation_deg;
    inv.scale = 1.0 / t.scale;
    inv.dx = -t.scale * (c * t.dx - s * t.dy);
    inv.dy = -t.scale * (s * t.dx + c * t.dy);
    return inv;
}

namespace {

// bilinear lookup; returns false when the sample point has no full source coverage
bool sample_bilinear(const ImageGrid& img, int ch, double xs, double ys, EdgeMode mode,
                     double* out) {
    int W = img.W, H = img.H;
    if (mode == EdgeMode::circular) {
        xs = xs - W * std::floor(xs / W);
        ys = ys - H * std::floor(ys / H);
    } else if (xs < 0.0 || ys < 0.0 || xs > W - 1.0 || ys > H - 1.0) {
        return false;
    }
    int x0 = int(std::floor(xs)), y0 = int(std::floor(ys));
    double fx = xs - x0, fy = ys - y0;
    int x1 = x0 + 1, y1 = y0 + 1;
    if (mode == EdgeMode::circular) {
        x0 %= W;
        y0 %= H;
        x1 %= W;
        y1 %= H;
    } else {
        x1 = x1 > W - 1 ? W - 1 : x1;
        y1 = y1 > H - 1 ? H - 1 : y1;
    }
    double v00 = img.at(ch, y0, x0), v01 = img.at(ch, y0, x1);
    double v10 = img.at(ch, y1, x0), v11 = img.at(ch, y1, x1);
    *out = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
    return true;
}

using MapFn = void (*)(double, double, double, double, const double*, double*, double*);

ImageGrid resample(const ImageGrid& img, const ImageGrid& pad, EdgeMode mode, MapFn fn,
                   const double* params) {
    ImageGrid out = make_image(img.W, img.H, img.C);
    double cx = (img.W - 1) / 2.0, cy = (img.H - 1) / 2.0;
    for (int y = 0; y < img.H; ++y) {
        for (int x = 0; x < img.W; ++x) {
            double xs, ys;
            fn(double(x), double(y), cx, cy, params, &xs, &ys);
            for (int c = 0; c < img.C; ++c) {
                double v;
                if (sample_bilinear(img, c, xs, ys, mode, &v))
                    out.at(c, y, x) = v;
                else
                    out.at(c, y, x) = pad.at(c, y, x);
            }
        }
    }
    return out;
}

void map_rotate(double x, double y, double cx, double cy, const double* p, double* xs, double* ys) {
    // inverse rotation about center (p[0]=cos, p[1]=sin of the forward angle)
    double dx = x - cx, dy = y - cy;
    *xs = cx + p[0] * dx + p[1] * dy;
    *ys = cy - p[1] * dx + p[0] * dy;
}

void map_shift(double x, double y, double, double, const double* p, double* xs, double* ys) {
    *xs = x - p[0];
    *ys = y - p[1];
}

void map_zoom(double x, double y, double cx, double cy, const double* p, double* xs, double* ys) {
    *xs = cx + (x - cx) / p[0];
    *ys = cy + (y - cy) / p[0];
}

} // namespace

ImageGrid apply_transform(const ImageGrid& img, const GeometricTransform& t,
                          const ImageGrid& pad_source, EdgeMode mode) {
    if (pad_source.W != img.W || pad_source.H != img.H || pad_source.C != img.C)
        throw std::invalid_argument("apply_transform: pad_source dimensions differ");
    if (!(t.scale > 0.0) || !std::isfinite(t.scale) || !std::isfinite(t.rotation_deg) ||
        !std::isfinite(t.dx) || !std::isfinite(t.dy))
        throw std::invalid_argument("apply_transform: invalid transform");
    ImageGrid cur = img;
    if (t.rotation_deg != 0.0) {
        double th = t.rotation_deg * M_PI / 180.0;
        double p[2] = {std::cos(th), std::sin(th)};
        cur = resample(cur, pad_source, mode, map_rotate, p);
    }
    if (t.dx != 0.0 || t.dy != 0.0) {
        double p[2] = {t.dx, t.dy};
        cur = resample(cur, pad_source, mode, map_shift, p);
    }
    if (t.scale != 1.0) {
        double p[1] = {t.scale};
        cur = resample(cur, pad_source, mode, map_zoom, p);
    }
    return cur;
}

GeometricTransform sample_micro_perturbation(const MicroBounds& bounds, uint64_t seed) {
    if (bounds.max_translation_px < 0 || bounds.max_rotation_deg < 0 ||
        bounds.max_rotation_deg > 45.0 || !(bounds.scale_min <= bounds.scale_max) ||
        !(bounds.scale_min > 0.5) || !(bounds.scale_max < 2.0))
        throw std::invalid_argument("sample_micro_perturbation: bounds outside micro contract");
    RngStream rng(seed);
    GeometricTransform t;
    t.dx = rng.uniform(-bounds.max_translation_px, bounds.max_translation_px);
    t.dy = rng.uniform(-bounds.max_translation_px, bounds.max_translation_px);
    t.rotation_deg = rng.uniform(-bounds.max_rotation_deg, bounds.max_rotation_deg);
    t.scale = rng.uniform(bounds.scale_min, bounds.scale_max);
    return t;
}

double phase_ramp(int u, int v, double dx, double dy, int stride, int w, int h) {
    return -2.0 * M_PI *
           (double(u) * dx / (double(stride) * w) + double(v) * dy / (double(stride) * h));
}

double phase_range(double r_max, double translation_norm, int stride, int w) {
    return 4.0 * M_PI * r_max * translation_norm / (double(stride) * w);
}

double coord_drift(double r, double theta_radians) { return r * std::abs(theta_radians); }

double expected_attenuation(double alpha, double coherence) {
    if (alpha == 0.0) return coherence;
    return std::sin(alpha) / alpha * coherence;
}

PhasePrediction make_phase_prediction(const RingMask& mask, const GeometricTransform& t,
                                      int stride, int w, int h, double coherence) {
    PhasePrediction p;
    p.delta_phi.resize(mask.coords.size());
    for (size_t i = 0; i < mask.coords.size(); ++i)
        p.delta_phi[i] = phase_ramp(mask.coords[i][0], mask.coords[i][1], t.dx, t.dy, stride, w, h);
    p.range = phase_range(mask.r_max, std::hypot(t.dx, t.dy), stride, w);
    p.drift = coord_drift(mask.r_max, t.rotation_deg * M_PI / 180.0);
    p.attenuation = expected_attenuation(p.range / 2.0, coherence);
    return p;
}

} // namespace gml
