#pragma once
#include <string>
#include <tuple>
#include <vector>

#include "gml/gauss2d.h"
#include "gml/geometry.h"
#include "gml/grids.h"
#include "gml/spectral_watermark.h"

namespace gml {

// flat binary latent format: magic "GML1", u32 LE c,h,w, then c*h*w f32 LE row-major per channel
void save_latent(const LatentGrid& z, const std::string& path);
LatentGrid load_latent(const std::string& path);

// image reuses the latent container format (channels as latent channels)
void save_image_binary(const ImageGrid& img, const std::string& path);
ImageGrid load_image_binary(const std::string& path);

// scene format: magic "GMS1", u32 LE p,a,n_patch,H,W, f32 beta, then 12 f32 per gaussian
// (mu_fix xy, mu_bias_raw xy, log_l11, l21, log_l22, color rgb, opacity, reserved 0),
// patch-major order
void save_scene(const GaussianScene& scene, const std::string& path);
GaussianScene load_scene(const std::string& path);

// key + mask as one JSON document: dimensions, radii, channel, seed, coordinate list, eta list
void save_key_json(const RingMask& mask, const WatermarkKey& key, int w, int h,
                   const std::string& path);
std::tuple<RingMask, WatermarkKey, int, int> load_key_json(const std::string& path);

// transform JSON with explicit units in the field names
void save_transform_json(const GeometricTransform& t, const std::string& path);
GeometricTransform load_transform_json(const std::string& path);
std::string transform_to_json(const GeometricTransform& t);
GeometricTransform transform_from_json(const std::string& text);

// 8-bit PNG display path: values clamped to [0,1]; 1 channel -> gray, 3 -> rgb
void save_png(const ImageGrid& img, const std::string& path);
ImageGrid load_png(const std::string& path);

// 1-bit PNG for binary masks (any value > 0.5 is set)
void save_mask_png(const ImageGrid& mask, const std::string& path);

// metric batches: header trial_id,metric_name,value
void save_metric_csv(const std::vector<std::tuple<int, std::string, double>>& rows,
                     const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace gml
