#include "gml/spectral_watermark.h"

#include <cmath>
#include <map>
#include <stdexcept>

#include "gml/fft.h"
#include "gml/rng.h"

namespace gml {

Spectrum fft2_centered(const double* data, int w, int h) {
    if (w < 2 || h < 2) throw std::invalid_argument("fft2_centered: dimensions must be >= 2x2");
    size_t n = size_t(w) * h;
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(data[i])) throw std::invalid_argument("fft2_centered: non-finite input");
    std::vector<std::complex<double>> out = fft2_unitary_real(data, w, h);
    Spectrum s;
    s.w = w;
    s.h = h;
    s.coeff.resize(n);
    int cy = h / 2, cx = w / 2;
    for (int y = 0; y < h; ++y) {
        int ry = (y + h - cy) % h; // centered row y holds raw bin ry
        for (int x = 0; x < w; ++x) {
            int rx = (x + w - cx) % w;
            s.coeff[size_t(y) * w + x] = out[size_t(ry) * w + rx];
        }
    }
    return s;
}

Spectrum fft2_centered(const LatentGrid& z, int channel) {
    if (channel < 0 || channel >= z.c) throw std::invalid_argument("fft2_centered: bad channel");
    return fft2_centered(z.channel(channel), z.w, z.h);
}

std::vector<double> ifft2_centered(const Spectrum& s, double sym_tol) {
    int w = s.w, h = s.h;
    size_t n = size_t(w) * h;
    // hermitian symmetry check against the mirror coefficient
    double worst = 0.0;
    for (int v = -(h / 2); v < h - h / 2; ++v) {
        for (int u = -(w / 2); u < w - w / 2; ++u) {
            auto m = mirror_coord(u, v, w, h);
            std::complex<double> z1 = s.at(u, v), z2 = std::conj(s.at(m[0], m[1]));
            worst = std::max(worst, std::abs(z1 - z2));
        }
    }
    if (worst > sym_tol)
        throw std::runtime_error("ifft2_centered: spectrum not hermitian-symmetric (residual " +
                                 std::to_string(worst) + ")");
    std::vector<std::complex<double>> in(n);
    int cy = h / 2, cx = w / 2;
    for (int y = 0; y < h; ++y) {
        int ry = (y + h - cy) % h;
        for (int x = 0; x < w; ++x) {
            int rx = (x + w - cx) % w;
            in[size_t(ry) * w + rx] = s.coeff[size_t(y) * w + x];
        }
    }
    std::vector<std::complex<double>> out = fft2_unitary(in.data(), w, h, true);
    std::vector<double> res(n);
    for (size_t i = 0; i < n; ++i) res[i] = out[i].real();
    return res;
}

RingMask make_ring_mask(int w, int h, double r_min, double r_max, int channel) {
    if (!(r_min >= 0.0) || !(r_max > r_min))
        throw std::invalid_argument("make_ring_mask: need 0 <= r_min < r_max");
    if (r_max > std::min(w, h) / 2.0)
        throw std::invalid_argument("make_ring_mask: r_max exceeds min(w,h)/2");
    RingMask m;
    m.w = w;
    m.h = h;
    m.r_min = r_min;
    m.r_max = r_max;
    m.channel = channel;
    for (int v = -(h / 2); v < h - h / 2; ++v) {
        for (int u = -(w / 2); u < w - w / 2; ++u) {
            double r = std::hypot(double(u), double(v));
            if (r >= r_min && r <= r_max) m.coords.push_back({u, v});
        }
    }
    if (m.coords.empty()) throw std::invalid_argument("make_ring_mask: empty annulus");
    return m;
}

std::array<int, 2> mirror_coord(int u, int v, int w, int h) {
    auto center = [](int o, int n) {
        int m = ((-o) % n + n) % n; // raw mirror bin
        if (m >= n - n / 2) m -= n; // back to centered offset
        return m;
    };
    return {center(u, w), center(v, h)};
}

std::vector<int> canonical_indices(const RingMask& mask) {
    std::vector<int> keep;
    for (int i = 0; i < int(mask.coords.size()); ++i) {
        int u = mask.coords[i][0], v = mask.coords[i][1];
        auto m = mirror_coord(u, v, mask.w, mask.h);
        if ((m[0] == u && m[1] == v) || std::make_pair(v, u) < std::make_pair(m[1], m[0]))
            keep.push_back(i);
    }
    return keep;
}

WatermarkKey sample_key(const RingMask& mask, uint64_t seed) {
    // map each coordinate to its pair's canonical index so mirrors share a value
    std::map<std::pair<int, int>, int> index_of;
    for (int i = 0; i < int(mask.coords.size()); ++i)
        index_of[{mask.coords[i][0], mask.coords[i][1]}] = i;
    WatermarkKey key;
    key.seed = seed;
    key.values.resize(mask.coords.size());
    for (int i = 0; i < int(mask.coords.size()); ++i) {
        int u = mask.coords[i][0], v = mask.coords[i][1];
        auto m = mirror_coord(u, v, mask.w, mask.h);
        bool canonical =
            (m[0] == u && m[1] == v) || std::make_pair(v, u) < std::make_pair(m[1], m[0]);
        int src = i;
        if (!canonical) {
            auto it = index_of.find({m[0], m[1]});
            if (it != index_of.end()) src = it->second; // mirror inside the mask: share its draw
        }
        key.values[i] = rng_normal(seed, src);
    }
    return key;
}

WatermarkKey scale_key(const WatermarkKey& key, double factor) {
    WatermarkKey out = key;
    for (double& v : out.values) v *= factor;
    return out;
}

LatentGrid embed_key(const LatentGrid& z, const RingMask& mask, const WatermarkKey& key) {
    if (mask.channel < 0 || mask.channel >= z.c)
        throw std::invalid_argument("embed_key: mask channel out of range");
    if (key.values.size() != mask.coords.size())
        throw std::invalid_argument("embed_key: key/mask size mismatch");
    Spectrum s = fft2_centered(z, mask.channel);
    for (size_t i = 0; i < mask.coords.size(); ++i) {
        int u = mask.coords[i][0], v = mask.coords[i][1];
        auto m = mirror_coord(u, v, z.w, z.h);
        std::complex<double> val(key.values[i], 0.0);
        s.at(u, v) = val; // self-mirror coordinates end up real by construction
        if (m[0] != u || m[1] != v) s.at(m[0], m[1]) = std::conj(val);
    }
    LatentGrid out = z;
    std::vector<double> ch = ifft2_centered(s);
    std::copy(ch.begin(), ch.end(), out.channel(mask.channel));
    return out;
}

double detection_distance(const LatentGrid& z, const RingMask& mask, const WatermarkKey& key,
                          DetectMode mode) {
    if (key.values.size() != mask.coords.size())
        throw std::invalid_argument("detection_distance: key/mask size mismatch");
    if (z.w != mask.w || z.h != mask.h)
        throw std::invalid_argument("detection_distance: latent/mask dimensions differ");
    Spectrum s = fft2_centered(z, mask.channel);
    std::vector<int> canon = canonical_indices(mask);
    double acc = 0.0;
    for (int i : canon) {
        std::complex<double> zc = s.at(mask.coords[i][0], mask.coords[i][1]);
        if (mode == DetectMode::real_part)
            acc += std::abs(key.values[i] - zc.real());
        else
            acc += std::abs(std::complex<double>(key.values[i], 0.0) - zc);
    }
    return acc / double(canon.size());
}

DetectionResult decide(double d, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("decide: threshold must be positive");
    DetectionResult r;
    r.distance = d;
    r.threshold = tau;
    r.verdict = d < tau;
    return r;
}

double bit_accuracy(const LatentGrid& z, const RingMask& mask, const WatermarkKey& key) {
    for (double v : key.values)
        if (v == 0.0) throw std::invalid_argument("bit_accuracy: key value is zero");
    Spectrum s = fft2_centered(z, mask.channel);
    std::vector<int> canon = canonical_indices(mask);
    int agree = 0;
    for (int i : canon) {
        double re = s.at(mask.coords[i][0], mask.coords[i][1]).real();
        if ((re > 0) == (key.values[i] > 0)) ++agree;
    }
    return double(agree) / double(canon.size());
}

} // namespace gml
