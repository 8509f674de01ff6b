#include "pmx/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pmx::fft {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void transform(cvec& a, int sign) {
  const int n = static_cast<int>(a.size());
  if (!is_pow2(n)) throw std::invalid_argument("fft: length must be a power of two");
  // bit reversal
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / len;
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

void forward(cvec& a) { transform(a, -1); }

void inverse(cvec& a) {
  transform(a, +1);
  const double inv = 1.0 / static_cast<double>(a.size());
  for (auto& z : a) z *= inv;
}

void transform2d(cvec& a, int n0, int n1, int sign) {
  if (static_cast<int>(a.size()) != n0 * n1) throw std::invalid_argument("fft2d: size mismatch");
  cvec row(n1), col(n0);
  for (int i = 0; i < n0; ++i) {
    for (int j = 0; j < n1; ++j) row[j] = a[i * n1 + j];
    transform(row, sign);
    for (int j = 0; j < n1; ++j) a[i * n1 + j] = row[j];
  }
  for (int j = 0; j < n1; ++j) {
    for (int i = 0; i < n0; ++i) col[i] = a[i * n1 + j];
    transform(col, sign);
    for (int i = 0; i < n0; ++i) a[i * n1 + j] = col[i];
  }
}

std::vector<double> circular_convolve(const std::vector<double>& f, const std::vector<double>& g) {
  if (f.size() != g.size()) throw std::invalid_argument("circular_convolve: size mismatch");
  const int n = static_cast<int>(f.size());
  cvec a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = f[i];
    b[i] = g[i];
  }
  forward(a);
  forward(b);
  for (int i = 0; i < n; ++i) a[i] *= b[i];
  inverse(a);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a[i].real();
  return out;
}

}  // namespace pmx::fft
