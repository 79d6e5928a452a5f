#pragma once
#include <cstdint>
#include <vector>

namespace gml {

// real-valued multi-channel array at latent (stride-reduced) resolution, channel-major
struct LatentGrid {
    int w = 0, h = 0, c = 0;
    std::vector<double> values; // size c*h*w

    double& at(int ch, int y, int x) { return values[(size_t(ch) * h + y) * w + x]; }
    double at(int ch, int y, int x) const { return values[(size_t(ch) * h + y) * w + x]; }
    const double* channel(int ch) const { return values.data() + size_t(ch) * h * w; }
    double* channel(int ch) { return values.data() + size_t(ch) * h * w; }
};

// pixel-resolution image, channel-major planes; display channels live in [0,1],
// latent-carrying channels are unbounded
struct ImageGrid {
    int W = 0, H = 0, C = 0;
    std::vector<double> values; // size C*H*W

    double& at(int ch, int y, int x) { return values[(size_t(ch) * H + y) * W + x]; }
    double at(int ch, int y, int x) const { return values[(size_t(ch) * H + y) * W + x]; }
    const double* channel(int ch) const { return values.data() + size_t(ch) * H * W; }
    double* channel(int ch) { return values.data() + size_t(ch) * H * W; }
};

LatentGrid make_latent(int w, int h, int c, double fill = 0.0);
ImageGrid make_image(int W, int H, int C, double fill = 0.0);

// iid standard-normal latent from the counter stream
LatentGrid random_latent(int w, int h, int c, uint64_t seed);

// all values finite check (throws std::invalid_argument when not)
void require_finite(const LatentGrid& z, const char* what);
void require_finite(const ImageGrid& img, const char* what);

} // namespace gml
