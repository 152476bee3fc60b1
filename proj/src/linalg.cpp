#include "beamosd/linalg.hpp"

#include <cmath>

namespace beamosd {

cvec matvec(const CMat& a, const cvec& x) {
  require(static_cast<int>(x.size()) == a.cols, "matvec: size mismatch");
  cvec y(a.rows, cplx(0, 0));
  for (int r = 0; r < a.rows; ++r) {
    cplx acc(0, 0);
    for (int c = 0; c < a.cols; ++c) acc += a.at(r, c) * x[c];
    y[r] = acc;
  }
  return y;
}

cvec matvec_adjoint(const CMat& a, const cvec& x) {
  require(static_cast<int>(x.size()) == a.rows, "matvec_adjoint: size mismatch");
  cvec y(a.cols, cplx(0, 0));
  for (int r = 0; r < a.rows; ++r) {
    cplx xr = x[r];
    for (int c = 0; c < a.cols; ++c) y[c] += std::conj(a.at(r, c)) * xr;
  }
  return y;
}

CMat gram(const CMat& a) {
  CMat g(a.rows, a.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < a.rows; ++j) {
      cplx acc(0, 0);
      for (int c = 0; c < a.cols; ++c)
        acc += a.at(i, c) * std::conj(a.at(j, c));
      g.at(i, j) = acc;
    }
  }
  return g;
}

cvec lu_solve(CMat a, cvec b, double singular_tol) {
  require(a.rows == a.cols, "lu_solve: matrix must be square");
  require(static_cast<int>(b.size()) == a.rows, "lu_solve: rhs size mismatch");
  const int n = a.rows;

  double scale = 0.0;
  for (const cplx& v : a.a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) throw NumericError("lu_solve: zero matrix");

  for (int k = 0; k < n; ++k) {
    int pivot = k;
    double best = std::abs(a.at(k, k));
    for (int r = k + 1; r < n; ++r) {
      double mag = std::abs(a.at(r, k));
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (best <= singular_tol * scale)
      throw NumericError("lu_solve: matrix is singular to working precision");
    if (pivot != k) {
      for (int c = 0; c < n; ++c) std::swap(a.at(k, c), a.at(pivot, c));
      std::swap(b[k], b[pivot]);
    }
    const cplx inv_piv = 1.0 / a.at(k, k);
    for (int r = k + 1; r < n; ++r) {
      cplx f = a.at(r, k) * inv_piv;
      if (f == cplx(0, 0)) continue;
      a.at(r, k) = f;
      for (int c = k + 1; c < n; ++c) a.at(r, c) -= f * a.at(k, c);
      b[r] -= f * b[k];
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    cplx acc = b[k];
    for (int c = k + 1; c < n; ++c) acc -= a.at(k, c) * b[c];
    b[k] = acc / a.at(k, k);
  }
  return b;
}

}  // namespace beamosd
