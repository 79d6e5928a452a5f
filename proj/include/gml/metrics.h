#pragma once
#include <vector>

#include "gml/grids.h"

namespace gml {

// mean absolute difference over all pixels and channels
double l1_loss(const ImageGrid& a, const ImageGrid& b);

struct FrequencyLossSpec {
    double gamma = 1.0;       // spectral error exponent
    double lambda_freq = 1.0; // weight when combined with L1
};

// mean |F(a)-F(b)|^gamma over the unitary spectrum, averaged over channels
double frequency_loss(const ImageGrid& a, const ImageGrid& b, const FrequencyLossSpec& spec);

// 10*log10(1/MSE) with peak 1; capped at 99 dB when MSE < 1e-10
double psnr(const ImageGrid& a, const ImageGrid& b);

// psnr restricted to rows/cols [r, H-r) x [r, W-r)
double psnr_interior(const ImageGrid& a, const ImageGrid& b, int r);

struct AlignResult {
    double psnr_db = 0.0;
    int shift_y = 0, shift_x = 0; // translation b appears to have undergone relative to a
};

// exhaustive integer circular-shift search |i|,|j| <= R, scored on the interior
// excluding an R-pixel border; ties broken by smallest shift norm then row-major
AlignResult aligned_psnr(const ImageGrid& a, const ImageGrid& b, int R);

struct RocInput {
    std::vector<double> clean;       // detection distances from unwatermarked inputs
    std::vector<double> watermarked; // from watermarked inputs
    double target_fpr = 0.01;
};

// empirical threshold: k-th smallest clean score, k = ceil(fpr*N)
double tau_from_clean(const std::vector<double>& clean, double fpr);

// fraction of watermarked scores strictly below the threshold
double tpr_at_fpr(const RocInput& roc);

} // namespace gml
