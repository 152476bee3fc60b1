#pragma once

#include <vector>

#include "beamosd/common.hpp"

namespace beamosd {

// In-place radix-2 FFT; size must be a power of two.
void fft_inplace(cvec& data, bool inverse);

// Real-input FFT returning bins 0..n/2 of an n-point transform.
cvec rfft(const std::vector<double>& x, int n);

// Inverse of rfft: reconstructs n real samples from n/2+1 bins assuming
// conjugate symmetry.
std::vector<double> irfft(const cvec& half, int n);

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace beamosd
