#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "gml/geometry.h"
#include "gml/grids.h"
#include "gml/metrics.h"

namespace gml {

// patch-organized 2d gaussian primitives. per gaussian:
//   effective mean  mu = mu_fix + beta * tanh(mu_bias_raw)   (per axis)
//   covariance      Sigma = L L^T, L = [[exp(log_l11), 0], [l21, exp(log_l22)]]
//   color in [0,1]^3, unconstrained opacity
// storage is struct-of-arrays, patch-major (patch index * n_patch + slot).
struct GaussianScene {
    int H = 0, W = 0;
    int p = 16;        // patch size
    int a = 2;         // overlap margin (apron)
    int n_patch = 64;  // gaussians per patch
    int patches_y = 0, patches_x = 0;
    double beta = 1.0;       // mean-offset bound, pixels
    double cull_sigma = 3.0; // mahalanobis cutoff; large value disables culling

    std::vector<double> mu_fix;      // 2 per gaussian (x, y)
    std::vector<double> mu_bias_raw; // 2 per gaussian
    std::vector<double> log_l11, l21, log_l22;
    std::vector<double> color;       // 3 per gaussian
    std::vector<double> opacity;

    mutable long degenerate_count = 0; // gaussians skipped for condition number > 1e12
    long clamp_count = 0;              // bias clamps recorded by perturb_means

    int total() const { return patches_y * patches_x * n_patch; }
    double mean_x(int i) const;
    double mean_y(int i) const;
};

// mu_fix on a uniform lattice per patch (n_patch must be a perfect square),
// zero biases, diagonal L at half the lattice spacing, mid-gray colors,
// small constant opacity. beta defaults to half the lattice spacing.
GaussianScene init_scene(int H, int W, int p, int a, int n_patch, uint64_t seed);

// render: each patch rasterizes its own gaussians over the extended (p+2a)^2
// region; core (p-2a)^2 pixels copy through, border pixels blend across
// contributing patches with weights linear in distance to the owning core.
// output is 3-channel, unclamped.
ImageGrid rasterize(const GaussianScene& scene);

// blend weights of every patch contributing to pixel (x,y); weights sum to 1
std::vector<std::pair<int, double>> border_blend_weights(const GaussianScene& scene, int x, int y);

struct LossSpec {
    double l1_weight = 1.0;
    double freq_weight = 0.0;
    double gamma = 1.0;
};

struct GradientSet {
    std::vector<double> mu_bias_raw; // 2 per gaussian
    std::vector<double> log_l11, l21, log_l22;
    std::vector<double> color; // 3 per gaussian
    std::vector<double> opacity;
};

struct RenderResult {
    ImageGrid image;
    double loss = 0.0;
    GradientSet grads;
};

// forward render + configured loss vs target + exact analytic parameter gradients
RenderResult rasterize_with_grads(const GaussianScene& scene, const ImageGrid& target,
                                  const LossSpec& spec);

struct OptimizerConfig {
    double lr = 2e-4;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double lr_decay = 1.0; // multiplicative, applied every decay_every iterations
    int decay_every = 0;   // 0 disables decay
    LossSpec loss;
};

// adam descent on all parameter classes; colors projected back to [0,1] after each
// step. returns the per-iteration loss trace. throws on non-finite loss.
std::vector<double> fit(GaussianScene& scene, const ImageGrid& target,
                        const OptimizerConfig& cfg, int iterations);

// map every effective mean through t (micro bounds enforced), recompute biases by
// inverse tanh (clamped with a diagnostic count), co-rotate covariance orientation
GaussianScene perturb_means(const GaussianScene& scene, const GeometricTransform& t);

} // namespace gml
