#pragma once

#include <complex>
#include <vector>

// Minimal power-of-two FFT.  Every spectral operation in this project runs on
// power-of-two grids, so a radix-2 transform is all that is needed and keeps
// results bit-reproducible across platforms.

namespace bfdreg {

// In-place complex FFT, length must be a power of two.
// inverse=true applies the conjugate transform WITHOUT the 1/n factor;
// callers that need the inverse divide themselves.
void fft_pow2(std::complex<double>* data, std::size_t n, bool inverse);

inline void fft_pow2(std::vector<std::complex<double>>& v, bool inverse) {
    fft_pow2(v.data(), v.size(), inverse);
}

// Signed DFT bin frequency q -> q or q-n for q >= n/2.
inline long long dft_signed_bin(std::size_t q, std::size_t n) {
    return q < n / 2 ? static_cast<long long>(q)
                     : static_cast<long long>(q) - static_cast<long long>(n);
}

}  // namespace bfdreg
