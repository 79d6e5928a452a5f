#pragma once
#include <complex>
#include <vector>

namespace gml {

// unitary 2-d transforms (1/sqrt(n) both directions), natural (non-centered) bin order.
// thread-safe: plan creation is locked, execution is reentrant.
std::vector<std::complex<double>> fft2_unitary(const std::complex<double>* in, int w, int h,
                                               bool inverse);
std::vector<std::complex<double>> fft2_unitary_real(const double* in, int w, int h);

} // namespace gml
