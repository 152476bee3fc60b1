#include "beamosd/fft.hpp"

#include <cmath>

namespace beamosd {

void fft_inplace(cvec& data, bool inverse) {
  const size_t n = data.size();
  require(n > 0 && (n & (n - 1)) == 0, "fft: size must be a power of two");

  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cplx w(1, 0);
      for (size_t k = 0; k < len / 2; ++k) {
        cplx u = data[i + k];
        cplx v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (cplx& v : data) v *= inv_n;
  }
}

cvec rfft(const std::vector<double>& x, int n) {
  require(static_cast<int>(x.size()) <= n, "rfft: input longer than fft size");
  cvec buf(n, cplx(0, 0));
  for (size_t i = 0; i < x.size(); ++i) buf[i] = cplx(x[i], 0);
  fft_inplace(buf, false);
  buf.resize(n / 2 + 1);
  return buf;
}

std::vector<double> irfft(const cvec& half, int n) {
  require(static_cast<int>(half.size()) == n / 2 + 1,
          "irfft: expected n/2+1 bins");
  cvec buf(n);
  for (int k = 0; k <= n / 2; ++k) buf[k] = half[k];
  for (int k = n / 2 + 1; k < n; ++k) buf[k] = std::conj(half[n - k]);
  fft_inplace(buf, true);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = buf[i].real();
  return x;
}

}  // namespace beamosd
