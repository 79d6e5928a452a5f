#include "gml/fft.h"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace gml {

namespace {

struct PlanPair {
    fftw_plan fwd = nullptr, bwd = nullptr;
};

// FFTW_UNALIGNED so cached plans run on any caller buffer
PlanPair& plans_for(int w, int h) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, PlanPair> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(w, h);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<double>> a(size_t(w) * h), b(size_t(w) * h);
    PlanPair pp;
    pp.fwd = fftw_plan_dft_2d(h, w, reinterpret_cast<fftw_complex*>(a.data()),
                              reinterpret_cast<fftw_complex*>(b.data()), FFTW_FORWARD,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
    pp.bwd = fftw_plan_dft_2d(h, w, reinterpret_cast<fftw_complex*>(a.data()),
                              reinterpret_cast<fftw_complex*>(b.data()), FFTW_BACKWARD,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
    return cache.emplace(key, pp).first->second;
}

} // namespace

std::vector<std::complex<double>> fft2_unitary(const std::complex<double>* in, int w, int h,
                                               bool inverse) {
    size_t n = size_t(w) * h;
    std::vector<std::complex<double>> tmp(in, in + n), out(n);
    PlanPair& pp = plans_for(w, h);
    fftw_execute_dft(inverse ? pp.bwd : pp.fwd, reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    double norm = 1.0 / std::sqrt(double(n));
    for (auto& v : out) v *= norm;
    return out;
}

std::vector<std::complex<double>> fft2_unitary_real(const double* in, int w, int h) {
    size_t n = size_t(w) * h;
    std::vector<std::complex<double>> tmp(n);
    for (size_t i = 0; i < n; ++i) tmp[i] = in[i];
    return fft2_unitary(tmp.data(), w, h, false);
}

} // namespace gml
