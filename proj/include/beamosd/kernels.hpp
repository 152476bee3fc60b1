#pragma once

#include <cstring>

namespace beamosd {

// Row-major matrix multiply: C[m x n] = op(A) * op(B), optionally
// accumulating into C. op(A) is A[m x k] when ta is false, A[k x m]
// transposed otherwise; same for B. OpenMP-parallel over rows of C, each row
// written by exactly one thread so results are bit-identical at any thread
// count. gemm_ref is the serial reference kept for equivalence tests and the
// benchmark target.

template <typename T>
void gemm_ref(bool ta, bool tb, int m, int n, int k, const T* a, const T* b,
              T* c, bool acc) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<size_t>(i) * n;
    if (!acc)
      for (int j = 0; j < n; ++j) crow[j] = T(0);
    for (int kk = 0; kk < k; ++kk) {
      const T aik = ta ? a[static_cast<size_t>(kk) * m + i]
                       : a[static_cast<size_t>(i) * k + kk];
      if (!tb) {
        const T* brow = b + static_cast<size_t>(kk) * n;
        for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
      } else {
        for (int j = 0; j < n; ++j)
          crow[j] += aik * b[static_cast<size_t>(j) * k + kk];
      }
    }
  }
}

template <typename T>
void gemm(bool ta, bool tb, int m, int n, int k, const T* a, const T* b, T* c,
          bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<size_t>(i) * n;
    if (!acc)
      for (int j = 0; j < n; ++j) crow[j] = T(0);
    for (int kk = 0; kk < k; ++kk) {
      const T aik = ta ? a[static_cast<size_t>(kk) * m + i]
                       : a[static_cast<size_t>(i) * k + kk];
      if (!tb) {
        const T* brow = b + static_cast<size_t>(kk) * n;
        for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
      } else {
        for (int j = 0; j < n; ++j)
          crow[j] += aik * b[static_cast<size_t>(j) * k + kk];
      }
    }
  }
}

}  // namespace beamosd
