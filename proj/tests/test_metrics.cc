#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "gml/grids.h"
#include "gml/metrics.h"
#include "gml/rng.h"

using namespace gml;

namespace {

ImageGrid random_image(int W, int H, int C, uint64_t seed) {
    ImageGrid img = make_image(W, H, C);
    for (size_t i = 0; i < img.values.size(); ++i) img.values[i] = rng_uniform(seed, i);
    return img;
}

ImageGrid rolled(const ImageGrid& a, int sy, int sx) {
    ImageGrid b = a;
    for (int c = 0; c < a.C; ++c)
        for (int y = 0; y < a.H; ++y)
            for (int x = 0; x < a.W; ++x)
                b.at(c, y, x) = a.at(c, ((y - sy) % a.H + a.H) % a.H, ((x - sx) % a.W + a.W) % a.W);
    return b;
}

} // namespace

TEST_CASE("l1 and psnr worked examples") {
    ImageGrid a = make_image(8, 8, 3, 0.0);
    ImageGrid b = make_image(8, 8, 3, 0.5);
    CHECK(l1_loss(a, b) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(l1_loss(b, a) == l1_loss(a, b));

    CHECK(psnr(a, a) == 99.0); // identical images hit the cap
    ImageGrid c = a;
    for (double& v : c.values) v += 0.1; // MSE 0.01 -> 20 dB
    CHECK(psnr(a, c) == doctest::Approx(20.0).epsilon(1e-12));

    ImageGrid d = random_image(8, 8, 1, 1), e = random_image(8, 8, 1, 2);
    CHECK(psnr(d, e) == psnr(e, d));
    CHECK_THROWS_AS(psnr(d, random_image(9, 8, 1, 3)), std::invalid_argument);
}

TEST_CASE("interior psnr ignores the border") {
    ImageGrid a = random_image(16, 16, 1, 4);
    ImageGrid b = a;
    b.at(0, 0, 5) += 0.7; // corrupt border only
    b.at(0, 15, 9) += 0.7;
    CHECK(psnr(a, b) < 99.0);
    CHECK(psnr_interior(a, b, 1) == 99.0);
    CHECK_THROWS_AS(psnr_interior(a, b, 8), std::invalid_argument); // empty interior
}

TEST_CASE("frequency loss at gamma 2 is the mse, by parseval") {
    ImageGrid a = random_image(12, 10, 3, 5), b = random_image(12, 10, 3, 6);
    FrequencyLossSpec spec;
    spec.gamma = 2.0;
    double mse = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        double d = a.values[i] - b.values[i];
        mse += d * d;
    }
    mse /= double(a.values.size());
    CHECK(frequency_loss(a, b, spec) == doctest::Approx(mse).epsilon(1e-9));
}

TEST_CASE("frequency loss of a spatial impulse has closed form at gamma 1") {
    // unit impulse spreads to |D| = 1/sqrt(HW) in every unitary bin
    int W = 8, H = 4;
    ImageGrid a = make_image(W, H, 1, 0.0), b = a;
    b.at(0, 1, 3) = 1.0;
    FrequencyLossSpec spec;
    spec.gamma = 1.0;
    CHECK(frequency_loss(a, b, spec) ==
          doctest::Approx(1.0 / std::sqrt(double(W) * H)).epsilon(1e-12));
    spec.gamma = -1.0;
    CHECK_THROWS_AS(frequency_loss(a, b, spec), std::invalid_argument);
}

TEST_CASE("threshold selection takes the k-th smallest clean score") {
    std::vector<double> clean;
    for (int i = 200; i >= 1; --i) clean.push_back(i / 100.0); // shuffled-ish descending
    CHECK(tau_from_clean(clean, 0.01) == doctest::Approx(0.02).epsilon(1e-15)); // k = 2
    CHECK(tau_from_clean(clean, 1.0) == doctest::Approx(2.0).epsilon(1e-15));   // k = 200
    CHECK(tau_from_clean({0.5}, 0.01) == 0.5); // k clamps to 1
    CHECK_THROWS_AS(tau_from_clean({}, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(tau_from_clean(clean, 0.0), std::invalid_argument);
}

TEST_CASE("tpr counts strictly-below-threshold watermarked scores") {
    RocInput roc;
    roc.clean = {0.5, 0.6, 0.7, 0.8};
    roc.target_fpr = 0.25; // k = 1 -> tau = 0.5
    roc.watermarked = {0.4, 0.5};
    CHECK(tpr_at_fpr(roc) == 0.5); // 0.5 is not strictly below tau
    roc.watermarked = {0.1, 0.2, 0.3};
    CHECK(tpr_at_fpr(roc) == 1.0);
    roc.watermarked.clear();
    CHECK_THROWS_AS(tpr_at_fpr(roc), std::invalid_argument);
}

TEST_CASE("alignment search recovers an exact circular shift") {
    ImageGrid a = random_image(24, 24, 1, 7);
    ImageGrid b = rolled(a, 3, -2);
    AlignResult r = aligned_psnr(a, b, 5);
    CHECK(r.shift_y == 3);
    CHECK(r.shift_x == -2);
    CHECK(r.psnr_db == 99.0);
    // a constant image ties every shift; the smallest-norm shift wins
    ImageGrid flat = make_image(16, 16, 1, 0.25);
    AlignResult z = aligned_psnr(flat, flat, 3);
    CHECK(z.shift_y == 0);
    CHECK(z.shift_x == 0);
    CHECK(z.psnr_db == 99.0);
}

TEST_CASE("aligned psnr never loses to the unshifted interior comparison") {
    ImageGrid a = random_image(20, 20, 3, 8), b = random_image(20, 20, 3, 9);
    AlignResult r = aligned_psnr(a, b, 4);
    CHECK(r.psnr_db >= psnr_interior(a, b, 4) - 1e-9);
}
