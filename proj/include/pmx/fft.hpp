#ifndef PMX_FFT_HPP
#define PMX_FFT_HPP

#include <complex>
#include <vector>

namespace pmx::fft {

using cvec = std::vector<std::complex<double>>;

// In-place radix-2 transform, length must be a power of two.
// sign = -1: forward (e^{-2pi i jk/N}), sign = +1: inverse kernel (no 1/N).
void transform(cvec& a, int sign);

// Forward/backward with 1/N normalization on the backward direction.
void forward(cvec& a);
void inverse(cvec& a);

// 2D transform on row-major N0 x N1 data.
void transform2d(cvec& a, int n0, int n1, int sign);

// Circular convolution of two real vectors of equal power-of-two length.
std::vector<double> circular_convolve(const std::vector<double>& f, const std::vector<double>& g);

bool is_pow2(int n);

}  // namespace pmx::fft

#endif
