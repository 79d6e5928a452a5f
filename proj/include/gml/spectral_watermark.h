#pragma once
#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "gml/grids.h"

namespace gml {

// DC-centered complex frequency array of one channel.
// the coefficient for frequency offset (u,v) from DC sits at row h/2+v, col w/2+u.
struct Spectrum {
    int w = 0, h = 0;
    std::vector<std::complex<double>> coeff; // h*w, row-major

    std::complex<double>& at(int u, int v) { return coeff[size_t(h / 2 + v) * w + (w / 2 + u)]; }
    std::complex<double> at(int u, int v) const { return coeff[size_t(h / 2 + v) * w + (w / 2 + u)]; }
};

// unitary (orthonormal) 2-d FFT with the DC component moved to the center index
Spectrum fft2_centered(const double* data, int w, int h);
Spectrum fft2_centered(const LatentGrid& z, int channel);

// inverse; input must be Hermitian-symmetric within tol or a runtime_error is thrown
std::vector<double> ifft2_centered(const Spectrum& s, double sym_tol = 1e-6);

// frequency support of the key: integer lattice points with r_min <= |(u,v)| <= r_max
struct RingMask {
    int w = 0, h = 0; // grid the mask was built for
    double r_min = 0.0, r_max = 16.0;
    int channel = 0;
    std::vector<std::array<int, 2>> coords; // (u,v) offsets from center, row-major order
};

RingMask make_ring_mask(int w, int h, double r_min, double r_max, int channel);

// mirror coordinate of (u,v) on a w x h grid, expressed as centered offsets
std::array<int, 2> mirror_coord(int u, int v, int w, int h);

// indices into mask.coords keeping exactly one representative per conjugate pair
// (self-conjugate points, plus the lexicographically-smaller member of each pair)
std::vector<int> canonical_indices(const RingMask& mask);

struct WatermarkKey {
    std::vector<double> values; // one per mask coordinate
    uint64_t seed = 0;
};

// standard normal, keyed by (seed, canonical coordinate index); mirror coordinates
// carry the same value so a real key embeds consistently on both pair members
WatermarkKey sample_key(const RingMask& mask, uint64_t seed);

// amplitude-scaled copy (detection is linear in key scale)
WatermarkKey scale_key(const WatermarkKey& key, double factor);

// overwrite masked coefficients of the masked channel with eta (+ conjugate mirrors);
// self-mirror coordinates are forced real
LatentGrid embed_key(const LatentGrid& z, const RingMask& mask, const WatermarkKey& key);

enum class DetectMode { real_part, complex_modulus };

// normalized L1 distance between the key and the recovered coefficients over the
// canonical (non-mirrored) mask coordinates
double detection_distance(const LatentGrid& z, const RingMask& mask, const WatermarkKey& key,
                          DetectMode mode = DetectMode::real_part);

struct DetectionResult {
    double distance = 0.0;
    double threshold = 0.0;
    bool verdict = false; // distance < threshold, strict
};

DetectionResult decide(double d, double tau);

// fraction of canonical coordinates where sign(Re(Z)) agrees with sign(eta)
double bit_accuracy(const LatentGrid& z, const RingMask& mask, const WatermarkKey& key);

} // namespace gml
