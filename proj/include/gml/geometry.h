#pragma once
#include <cstdint>
#include <vector>

#include "gml/grids.h"
#include "gml/spectral_watermark.h"

namespace gml {

// composite micro-geometric perturbation; applied as rotation -> translation -> scale,
// each stage bilinear, about the image center
struct GeometricTransform {
    double dx = 0.0, dy = 0.0;     // pixels
    double rotation_deg = 0.0;     // degrees, positive = counter-clockwise in (x right, y down)
    double scale = 1.0;            // zoom about center, >1 magnifies
};

inline bool is_identity(const GeometricTransform& t) {
    return t.dx == 0.0 && t.dy == 0.0 && t.rotation_deg == 0.0 && t.scale == 1.0;
}

// micro-perturbation contract: |rotation| <= 45 deg, scale in (0.5, 2).
// enforced at the sampling/mean-perturbation gates, not in apply_transform
// (plain image transforms may use any angle).
void validate_micro_bounds(const GeometricTransform& t);

// exact inverse under the fixed stage order
GeometricTransform inverse_transform(const GeometricTransform& t);

enum class EdgeMode { pad_source, circular };

// apply the three stages to every channel. pixels whose inverse-mapped sample point
// falls outside the source are copied from pad_source (pad_source mode) or wrapped
// (circular mode). output dimensions equal input dimensions.
ImageGrid apply_transform(const ImageGrid& img, const GeometricTransform& t,
                          const ImageGrid& pad_source, EdgeMode mode = EdgeMode::pad_source);

struct MicroBounds {
    double max_translation_px = 10.0; // per axis
    double max_rotation_deg = 5.0;
    double scale_min = 0.97, scale_max = 1.03;
};

// uniform draw inside the bounds, deterministic per seed
GeometricTransform sample_micro_perturbation(const MicroBounds& bounds, uint64_t seed);

// ---- closed-form predictors ----

// latent-spectrum phase change caused by a pixel translation (Delta_x, Delta_y)
double phase_ramp(int u, int v, double dx, double dy, int stride, int w, int h);

// total spread of the ramp across a ring of radius r_max
double phase_range(double r_max, double translation_norm, int stride, int w);

// spatial drift of a ring coordinate under rotation, in latent grid units
double coord_drift(double r, double theta_radians);

// sinc-type expected correlation decay; alpha is half the phase range
double expected_attenuation(double alpha, double coherence);

// per-frequency predictions bundled for reporting
struct PhasePrediction {
    std::vector<double> delta_phi;  // one per mask coordinate
    double range = 0.0;             // radians
    double drift = 0.0;             // latent grid units
    double attenuation = 0.0;       // expected correlation factor
};

PhasePrediction make_phase_prediction(const RingMask& mask, const GeometricTransform& t,
                                      int stride, int w, int h, double coherence = 1.0);

} // namespace gml
