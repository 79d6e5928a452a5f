#pragma once
#include <complex>
#include <vector>

#include "gml/grids.h"
#include "gml/spectral_watermark.h"

namespace gml {

enum class Boundary { circular, replicate };

// encoder/decoder surrogate: continuous convolution (normalized Gaussian kernel)
// plus strided sampling
struct SurrogateConfig {
    int stride = 8;          // pixels per latent cell
    double sigma = 4.0;      // kernel sigma, pixels (default stride/2)
    int radius = 12;         // kernel support half-width, >= ceil(3*sigma)
    Boundary boundary = Boundary::circular;
};

void validate_config(const SurrogateConfig& cfg);

// normalized 1-d kernel, length 2*radius+1, weights sum to 1
std::vector<double> make_kernel(const SurrogateConfig& cfg);

// hold-expand each latent cell to a stride x stride block centered on the sampling
// lattice, then blur with the kernel; output is stride*h x stride*w, one image
// channel per latent channel
ImageGrid decode_upsample(const LatentGrid& z, const SurrogateConfig& cfg);

// blur with the kernel, then sample at pixel (stride*ny, stride*nx)
LatentGrid encode_downsample(const ImageGrid& img, const SurrogateConfig& cfg);

// separable blur used by both directions (exposed for tests and masking utilities)
ImageGrid blur_image(const ImageGrid& img, const SurrogateConfig& cfg);

// analytic complex transfer of the decode->encode round trip at latent frequency
// (u,v): per-axis hold-block response times the squared kernel response. this is
// what a latent Fourier coefficient is multiplied by when it survives the chain
// without any pixel-domain attack.
std::complex<double> chain_transfer_at(const SurrogateConfig& cfg, int u, int v, int w, int h);

// transfer evaluated at every mask coordinate (same order as mask.coords)
std::vector<std::complex<double>> chain_transfer(const SurrogateConfig& cfg, const RingMask& mask,
                                                 int w, int h);

} // namespace gml
