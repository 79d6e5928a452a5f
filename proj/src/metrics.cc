#include "gml/metrics.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "gml/fft.h"

namespace gml {

namespace {

void check_same_shape(const ImageGrid& a, const ImageGrid& b, const char* who) {
    if (a.W != b.W || a.H != b.H || a.C != b.C)
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

double mse_region(const ImageGrid& a, const ImageGrid& b, int y0, int y1, int x0, int x1) {
    double acc = 0.0;
    for (int c = 0; c < a.C; ++c)
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
                double d = a.at(c, y, x) - b.at(c, y, x);
                acc += d * d;
            }
    return acc / (double(a.C) * (y1 - y0) * (x1 - x0));
}

double psnr_from_mse(double mse) {
    if (mse < 1e-10) return 99.0;
    return 10.0 * std::log10(1.0 / mse);
}

} // namespace

double l1_loss(const ImageGrid& a, const ImageGrid& b) {
    check_same_shape(a, b, "l1_loss");
    double acc = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) acc += std::abs(a.values[i] - b.values[i]);
    return acc / double(a.values.size());
}

double frequency_loss(const ImageGrid& a, const ImageGrid& b, const FrequencyLossSpec& spec) {
    check_same_shape(a, b, "frequency_loss");
    if (!(spec.gamma > 0.0)) throw std::invalid_argument("frequency_loss: gamma must be positive");
    size_t plane = size_t(a.H) * a.W;
    double total = 0.0;
    std::vector<double> diff(plane);
    for (int ch = 0; ch < a.C; ++ch) {
        const double* av = &a.values[size_t(ch) * plane];
        const double* bv = &b.values[size_t(ch) * plane];
        for (size_t j = 0; j < plane; ++j) diff[j] = av[j] - bv[j];
        std::vector<std::complex<double>> d = fft2_unitary_real(diff.data(), a.W, a.H);
        double acc = 0.0;
        for (size_t j = 0; j < plane; ++j) acc += std::pow(std::abs(d[j]), spec.gamma);
        total += acc / double(plane);
    }
    return total / double(a.C);
}

double psnr(const ImageGrid& a, const ImageGrid& b) {
    check_same_shape(a, b, "psnr");
    return psnr_from_mse(mse_region(a, b, 0, a.H, 0, a.W));
}

double psnr_interior(const ImageGrid& a, const ImageGrid& b, int r) {
    check_same_shape(a, b, "psnr_interior");
    if (r < 0 || 2 * r >= a.H || 2 * r >= a.W)
        throw std::invalid_argument("psnr_interior: border exceeds image");
    return psnr_from_mse(mse_region(a, b, r, a.H - r, r, a.W - r));
}

AlignResult aligned_psnr(const ImageGrid& a, const ImageGrid& b, int R) {
    check_same_shape(a, b, "aligned_psnr");
    if (R < 0 || 2 * R >= a.H || 2 * R >= a.W)
        throw std::invalid_argument("aligned_psnr: search radius exceeds image");
    const int H = a.H, W = a.W;
    double best_mse = -1.0;
    int best_i = 0, best_j = 0;
    for (int i = -R; i <= R; ++i) {
        for (int j = -R; j <= R; ++j) {
            double acc = 0.0;
            for (int c = 0; c < a.C; ++c) {
                for (int y = R; y < H - R; ++y) {
                    int by = (y + i % H + H) % H;
                    for (int x = R; x < W - R; ++x) {
                        int bx = (x + j % W + W) % W;
                        double d = a.at(c, y, x) - b.at(c, by, bx);
                        acc += d * d;
                    }
                }
            }
            double mse = acc / (double(a.C) * (H - 2 * R) * (W - 2 * R));
            bool better = best_mse < 0.0 || mse < best_mse;
            if (!better && mse == best_mse)
                better = i * i + j * j < best_i * best_i + best_j * best_j;
            if (better) {
                best_mse = mse;
                best_i = i;
                best_j = j;
            }
        }
    }
    return {psnr_from_mse(best_mse), best_i, best_j};
}

double tau_from_clean(const std::vector<double>& clean, double fpr) {
    if (clean.empty()) throw std::invalid_argument("tau_from_clean: no clean scores");
    if (!(fpr > 0.0 && fpr <= 1.0))
        throw std::invalid_argument("tau_from_clean: fpr must be in (0, 1]");
    std::vector<double> sorted = clean;
    std::sort(sorted.begin(), sorted.end());
    size_t k = size_t(std::ceil(fpr * double(sorted.size())));
    if (k < 1) k = 1;
    if (k > sorted.size()) k = sorted.size();
    return sorted[k - 1];
}

double tpr_at_fpr(const RocInput& roc) {
    if (roc.watermarked.empty()) throw std::invalid_argument("tpr_at_fpr: no watermarked scores");
    double tau = tau_from_clean(roc.clean, roc.target_fpr);
    size_t hits = 0;
    for (double d : roc.watermarked)
        if (d < tau) ++hits;
    return double(hits) / double(roc.watermarked.size());
}

} // namespace gml
