#pragma once

#include <vector>

#include "beamosd/common.hpp"

namespace beamosd {

// Dense row-major complex matrix, only as large as the constraint solves
// need (N x M with N <= M <= a few dozen).
struct CMat {
  int rows = 0;
  int cols = 0;
  cvec a;

  CMat() = default;
  CMat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

  cplx& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  const cplx& at(int r, int c) const {
    return a[static_cast<size_t>(r) * cols + c];
  }
};

// y = A x
cvec matvec(const CMat& a, const cvec& x);

// y = A^H x  (conjugate transpose)
cvec matvec_adjoint(const CMat& a, const cvec& x);

// A A^H for a wide matrix A (result is rows x rows, Hermitian).
CMat gram(const CMat& a);

// Solves A x = b in place via partial-pivot LU. Throws NumericError when a
// pivot falls below `singular_tol` relative to the largest matrix entry.
cvec lu_solve(CMat a, cvec b, double singular_tol = 1e-13);

}  // namespace beamosd
