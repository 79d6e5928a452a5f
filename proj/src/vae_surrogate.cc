#include "gml/vae_surrogate.h"

#include <cmath>
#include <stdexcept>

namespace gml {

void validate_config(const SurrogateConfig& cfg) {
    if (cfg.stride < 1) throw std::invalid_argument("surrogate: stride must be >= 1");
    if (!(cfg.sigma > 0.0)) throw std::invalid_argument("surrogate: sigma must be positive");
    if (cfg.radius < int(std::ceil(3.0 * cfg.sigma)))
        throw std::invalid_argument("surrogate: kernel radius must be >= ceil(3*sigma)");
}

std::vector<double> make_kernel(const SurrogateConfig& cfg) {
    validate_config(cfg);
    std::vector<double> k(2 * cfg.radius + 1);
    double sum = 0.0;
    for (int j = -cfg.radius; j <= cfg.radius; ++j) {
        double v = std::exp(-0.5 * (double(j) * j) / (cfg.sigma * cfg.sigma));
        k[j + cfg.radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

namespace {

// separable 1-d pass along x for one channel plane
void blur_axis_x(const double* src, double* dst, int W, int H, const std::vector<double>& k,
                 int radius, Boundary mode) {
    for (int y = 0; y < H; ++y) {
        const double* row = src + size_t(y) * W;
        double* out = dst + size_t(y) * W;
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j) {
                int xi = x + j;
                if (mode == Boundary::circular)
                    xi = (xi % W + W) % W;
                else
                    xi = xi < 0 ? 0 : (xi >= W ? W - 1 : xi);
                acc += k[j + radius] * row[xi];
            }
            out[x] = acc;
        }
    }
}

void blur_axis_y(const double* src, double* dst, int W, int H, const std::vector<double>& k,
                 int radius, Boundary mode) {
    for (int x = 0; x < W; ++x) {
        for (int y = 0; y < H; ++y) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j) {
                int yi = y + j;
                if (mode == Boundary::circular)
                    yi = (yi % H + H) % H;
                else
                    yi = yi < 0 ? 0 : (yi >= H ? H - 1 : yi);
                acc += k[j + radius] * src[size_t(yi) * W + x];
            }
            dst[size_t(y) * W + x] = acc;
        }
    }
}

} // namespace

ImageGrid blur_image(const ImageGrid& img, const SurrogateConfig& cfg) {
    std::vector<double> k = make_kernel(cfg);
    ImageGrid out = img;
    std::vector<double> tmp(size_t(img.W) * img.H);
    for (int c = 0; c < img.C; ++c) {
        blur_axis_x(img.channel(c), tmp.data(), img.W, img.H, k, cfg.radius, cfg.boundary);
        blur_axis_y(tmp.data(), out.channel(c), img.W, img.H, k, cfg.radius, cfg.boundary);
    }
    return out;
}

ImageGrid decode_upsample(const LatentGrid& z, const SurrogateConfig& cfg) {
    validate_config(cfg);
    int d = cfg.stride;
    ImageGrid img = make_image(z.w * d, z.h * d, z.c);
    // cell n covers pixels [n*d - d/2, n*d + d/2): blocks centered on the sampling lattice
    for (int c = 0; c < z.c; ++c) {
        for (int y = 0; y < img.H; ++y) {
            int ny = (y + d / 2) / d;
            if (cfg.boundary == Boundary::circular)
                ny %= z.h;
            else
                ny = ny >= z.h ? z.h - 1 : ny;
            for (int x = 0; x < img.W; ++x) {
                int nx = (x + d / 2) / d;
                if (cfg.boundary == Boundary::circular)
                    nx %= z.w;
                else
                    nx = nx >= z.w ? z.w - 1 : nx;
                img.at(c, y, x) = z.at(c, ny, nx);
            }
        }
    }
    return blur_image(img, cfg);
}

LatentGrid encode_downsample(const ImageGrid& img, const SurrogateConfig& cfg) {
    validate_config(cfg);
    int d = cfg.stride;
    if (img.W % d != 0 || img.H % d != 0)
        throw std::invalid_argument("encode_downsample: dimensions not divisible by stride");
    ImageGrid blurred = blur_image(img, cfg);
    LatentGrid z = make_latent(img.W / d, img.H / d, img.C);
    for (int c = 0; c < img.C; ++c)
        for (int ny = 0; ny < z.h; ++ny)
            for (int nx = 0; nx < z.w; ++nx) z.at(c, ny, nx) = blurred.at(c, ny * d, nx * d);
    return z;
}

std::complex<double> chain_transfer_at(const SurrogateConfig& cfg, int u, int v, int w, int h) {
    std::vector<double> k = make_kernel(cfg);
    int d = cfg.stride;
    auto axis = [&](int f, int n) -> std::complex<double> {
        double omega = 2.0 * M_PI * double(f) / double(d * n);
        // centered hold block: sum_{j=-d/2}^{d/2-1} e^{-i omega j}
        std::complex<double> hold;
        if (f == 0) {
            hold = 1.0;
        } else {
            hold = std::polar(1.0, omega / 2.0) * std::sin(d * omega / 2.0) /
                   (double(d) * std::sin(omega / 2.0));
        }
        // symmetric kernel response, applied twice (decode blur + encode blur)
        double ker = 0.0;
        for (int j = -cfg.radius; j <= cfg.radius; ++j) ker += k[j + cfg.radius] * std::cos(omega * j);
        return hold * ker * ker;
    };
    return axis(u, w) * axis(v, h);
}

std::vector<std::complex<double>> chain_transfer(const SurrogateConfig& cfg, const RingMask& mask,
                                                 int w, int h) {
    std::vector<std::complex<double>> g(mask.coords.size());
    for (size_t i = 0; i < mask.coords.size(); ++i)
        g[i] = chain_transfer_at(cfg, mask.coords[i][0], mask.coords[i][1], w, h);
    return g;
}

} // namespace gml
