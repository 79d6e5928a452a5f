#include "gml/masking.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gml/rng.h"
#include "gml/spectral_watermark.h"

namespace gml {

ImageGrid frequency_band_mask(const ImageGrid& img, FbmMode mode, double r_f) {
    if (mode == FbmMode::none) return img;
    if (!(r_f >= 0.0)) throw std::invalid_argument("frequency_band_mask: r_f must be >= 0");
    require_finite(img, "frequency_band_mask");
    ImageGrid out = img;
    size_t plane = size_t(img.H) * img.W;
    for (int ch = 0; ch < img.C; ++ch) {
        Spectrum s = fft2_centered(&img.values[size_t(ch) * plane], img.W, img.H);
        for (int v = -(img.H / 2); v < img.H - img.H / 2; ++v) {
            for (int u = -(img.W / 2); u < img.W - img.W / 2; ++u) {
                double r = std::hypot(double(u), double(v));
                bool keep = mode == FbmMode::low_pass ? (r <= r_f) : (r > r_f);
                if (!keep) s.at(u, v) = 0.0;
            }
        }
        // radial bands are mirror-symmetric, so the masked spectrum stays hermitian
        std::vector<double> back = ifft2_centered(s);
        std::copy(back.begin(), back.end(), out.values.begin() + size_t(ch) * plane);
    }
    return out;
}

std::pair<ImageGrid, ImageGrid> spatial_random_mask(const ImageGrid& img, double ratio,
                                                    int region_min, int region_max,
                                                    uint64_t seed) {
    if (!(ratio >= 0.0 && ratio <= 1.0))
        throw std::invalid_argument("spatial_random_mask: ratio must be in [0, 1]");
    if (region_min < 1 || region_max < region_min)
        throw std::invalid_argument("spatial_random_mask: need 1 <= region_min <= region_max");
    if (region_max > img.W || region_max > img.H)
        throw std::invalid_argument("spatial_random_mask: region_max exceeds image size");
    ImageGrid out = img;
    ImageGrid mask = make_image(img.W, img.H, 1, 0.0);
    size_t plane = size_t(img.H) * img.W;
    size_t covered = 0;
    RngStream rng(seed);
    int span = region_max - region_min + 1;
    // add rectangles until the covered fraction first reaches the target, so the
    // overshoot is bounded by a single region
    while (double(covered) < ratio * double(plane)) {
        int rw = region_min + int(rng.uniform() * span);
        int rh = region_min + int(rng.uniform() * span);
        rw = std::min(rw, region_max);
        rh = std::min(rh, region_max);
        int x0 = int(rng.uniform() * (img.W - rw + 1));
        int y0 = int(rng.uniform() * (img.H - rh + 1));
        x0 = std::min(x0, img.W - rw);
        y0 = std::min(y0, img.H - rh);
        for (int y = y0; y < y0 + rh; ++y) {
            for (int x = x0; x < x0 + rw; ++x) {
                size_t pix = size_t(y) * img.W + x;
                if (mask.values[pix] == 0.0) {
                    mask.values[pix] = 1.0;
                    ++covered;
                    for (int ch = 0; ch < img.C; ++ch) out.values[size_t(ch) * plane + pix] = 0.5;
                }
            }
        }
    }
    return {std::move(out), std::move(mask)};
}

std::pair<ImageGrid, ImageGrid> apply_mask_spec(const ImageGrid& img, const MaskSpec& spec) {
    ImageGrid stage = frequency_band_mask(img, spec.mode, spec.r_f);
    if (spec.ratio > 0.0)
        return spatial_random_mask(stage, spec.ratio, spec.region_min, spec.region_max, spec.seed);
    return {std::move(stage), make_image(img.W, img.H, 1, 0.0)};
}

} // namespace gml
