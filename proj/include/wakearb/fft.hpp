#pragma once

#include <complex>
#include <vector>

namespace wakearb {

// In-place iterative radix-2 FFT. a.size() must be a power of two.
// inverse=true applies the conjugate transform and the 1/N scale.
void fft(std::vector<std::complex<double>>& a, bool inverse = false);

}  // namespace wakearb
