#include "gml/grids.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gml/rng.h"

namespace gml {

LatentGrid make_latent(int w, int h, int c, double fill) {
    if (w < 1 || h < 1 || c < 1) throw std::invalid_argument("latent dimensions must be >= 1");
    LatentGrid z;
    z.w = w;
    z.h = h;
    z.c = c;
    z.values.assign(size_t(c) * h * w, fill);
    return z;
}

ImageGrid make_image(int W, int H, int C, double fill) {
    if (W < 1 || H < 1 || C < 1) throw std::invalid_argument("image dimensions must be >= 1");
    ImageGrid img;
    img.W = W;
    img.H = H;
    img.C = C;
    img.values.assign(size_t(C) * H * W, fill);
    return img;
}

LatentGrid random_latent(int w, int h, int c, uint64_t seed) {
    LatentGrid z = make_latent(w, h, c);
    for (size_t i = 0; i < z.values.size(); ++i) z.values[i] = rng_normal(seed, i);
    return z;
}

void require_finite(const LatentGrid& z, const char* what) {
    for (double v : z.values)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

void require_finite(const ImageGrid& img, const char* what) {
    for (double v : img.values)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

} // namespace gml
