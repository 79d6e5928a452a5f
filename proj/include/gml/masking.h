#pragma once
#include <cstdint>
#include <string>
#include <utility>

#include "gml/grids.h"

namespace gml {

enum class FbmMode { none, low_pass, high_pass };

// per-channel centered FFT; low-pass keeps radii <= r_f, high-pass keeps radii > r_f
ImageGrid frequency_band_mask(const ImageGrid& img, FbmMode mode, double r_f);

// place random rectangles (sides sampled in [region_min, region_max]) until the
// masked fraction reaches ratio; masked pixels set to mid-gray 0.5.
// returns the masked image and a 1-channel 0/1 mask.
std::pair<ImageGrid, ImageGrid> spatial_random_mask(const ImageGrid& img, double ratio,
                                                    int region_min, int region_max, uint64_t seed);

// config carrier for the CLI / ablation runs
struct MaskSpec {
    FbmMode mode = FbmMode::none;
    double r_f = 8.0;
    double ratio = 0.0;
    int region_min = 1, region_max = 8;
    uint64_t seed = 0;
};

std::pair<ImageGrid, ImageGrid> apply_mask_spec(const ImageGrid& img, const MaskSpec& spec);

} // namespace gml
