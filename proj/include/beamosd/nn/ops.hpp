#pragma once

#include <cmath>
#include <vector>

#include "beamosd/kernels.hpp"
#include "beamosd/nn/graph.hpp"

namespace beamosd {

// All tensors are row-major 2-D [rows x cols] unless noted; the feature axis
// runs over rows and time over columns, matching the D x T convention of the
// model descriptions.

template <typename T>
int matmul(Graph<T>& g, int a, int b) {
  Node<T>* na = &g.at(a);
  Node<T>* nb = &g.at(b);
  require(na->cols() == nb->rows(), "matmul: inner dimensions disagree");
  const int m = na->rows(), k = na->cols(), n = nb->cols();
  int out = g.op({m, n}, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  no->fwd = [na, nb, no, m, k, n] {
    gemm(false, false, m, n, k, na->val.data(), nb->val.data(),
         no->val.data(), false);
  };
  no->bwd = [na, nb, no, m, k, n] {
    gemm(false, true, m, k, n, no->grad.data(), nb->val.data(),
         na->grad.data(), true);
    gemm(true, false, k, n, m, na->val.data(), no->grad.data(),
         nb->grad.data(), true);
  };
  return out;
}

template <typename T>
int add(Graph<T>& g, int a, int b) {
  Node<T>* na = &g.at(a);
  Node<T>* nb = &g.at(b);
  require(na->dims == nb->dims, "add: shape mismatch");
  int out = g.op(na->dims, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  const int n = no->size();
  no->fwd = [na, nb, no, n] {
    for (int i = 0; i < n; ++i) no->val[i] = na->val[i] + nb->val[i];
  };
  no->bwd = [na, nb, no, n] {
    for (int i = 0; i < n; ++i) {
      na->grad[i] += no->grad[i];
      nb->grad[i] += no->grad[i];
    }
  };
  return out;
}

// Adds a per-row bias vector b[rows] to every column of a.
template <typename T>
int add_colvec(Graph<T>& g, int a, int b) {
  Node<T>* na = &g.at(a);
  Node<T>* nb = &g.at(b);
  require(nb->size() == na->rows(), "add_colvec: bias length != rows");
  int out = g.op(na->dims, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  const int rows = na->rows(), cols = na->cols();
  no->fwd = [na, nb, no, rows, cols] {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        no->val[i * cols + j] = na->val[i * cols + j] + nb->val[i];
  };
  no->bwd = [na, nb, no, rows, cols] {
    for (int i = 0; i < rows; ++i) {
      T acc = T(0);
      for (int j = 0; j < cols; ++j) {
        na->grad[i * cols + j] += no->grad[i * cols + j];
        acc += no->grad[i * cols + j];
      }
      nb->grad[i] += acc;
    }
  };
  return out;
}

template <typename T>
int relu(Graph<T>& g, int a) {
  Node<T>* na = &g.at(a);
  int out = g.op(na->dims, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  const int n = no->size();
  no->fwd = [na, no, n] {
    for (int i = 0; i < n; ++i) no->val[i] = na->val[i] > T(0) ? na->val[i] : T(0);
  };
  no->bwd = [na, no, n] {
    for (int i = 0; i < n; ++i)
      if (na->val[i] > T(0)) na->grad[i] += no->grad[i];
  };
  return out;
}

template <typename T>
int scale(Graph<T>& g, int a, T s) {
  Node<T>* na = &g.at(a);
  int out = g.op(na->dims, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  const int n = no->size();
  no->fwd = [na, no, n, s] {
    for (int i = 0; i < n; ++i) no->val[i] = s * na->val[i];
  };
  no->bwd = [na, no, n, s] {
    for (int i = 0; i < n; ++i) na->grad[i] += s * no->grad[i];
  };
  return out;
}

template <typename T>
int transpose(Graph<T>& g, int a) {
  Node<T>* na = &g.at(a);
  const int rows = na->rows(), cols = na->cols();
  int out = g.op({cols, rows}, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  no->fwd = [na, no, rows, cols] {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) no->val[j * rows + i] = na->val[i * cols + j];
  };
  no->bwd = [na, no, rows, cols] {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        na->grad[i * cols + j] += no->grad[j * rows + i];
  };
  return out;
}

// Row-wise softmax: every output row sums to one.
template <typename T>
int softmax_rows(Graph<T>& g, int a) {
  Node<T>* na = &g.at(a);
  int out = g.op(na->dims, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  const int rows = na->rows(), cols = na->cols();
  no->fwd = [na, no, rows, cols] {
    for (int i = 0; i < rows; ++i) {
      const T* x = &na->val[i * cols];
      T* y = &no->val[i * cols];
      T mx = x[0];
      for (int j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
      T sum = T(0);
      for (int j = 0; j < cols; ++j) {
        y[j] = std::exp(x[j] - mx);
        sum += y[j];
      }
      for (int j = 0; j < cols; ++j) y[j] /= sum;
    }
  };
  no->bwd = [na, no, rows, cols] {
    for (int i = 0; i < rows; ++i) {
      const T* y = &no->val[i * cols];
      const T* dy = &no->grad[i * cols];
      T dot = T(0);
      for (int j = 0; j < cols; ++j) dot += dy[j] * y[j];
      for (int j = 0; j < cols; ++j)
        na->grad[i * cols + j] += y[j] * (dy[j] - dot);
    }
  };
  return out;
}

// Layer norm over the feature (row) axis, independently per column, with
// learned per-row gain and shift.
template <typename T>
int layernorm_cols(Graph<T>& g, int x, int gamma, int beta) {
  Node<T>* nx = &g.at(x);
  Node<T>* ng = &g.at(gamma);
  Node<T>* nb = &g.at(beta);
  const int rows = nx->rows(), cols = nx->cols();
  require(ng->size() == rows && nb->size() == rows,
          "layernorm_cols: gain/shift length != rows");
  int out = g.op(nx->dims, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  constexpr T eps = T(1e-5);
  no->fwd = [nx, ng, nb, no, rows, cols] {
    for (int j = 0; j < cols; ++j) {
      T mu = T(0);
      for (int i = 0; i < rows; ++i) mu += nx->val[i * cols + j];
      mu /= rows;
      T var = T(0);
      for (int i = 0; i < rows; ++i) {
        T d = nx->val[i * cols + j] - mu;
        var += d * d;
      }
      var /= rows;
      const T inv = T(1) / std::sqrt(var + eps);
      for (int i = 0; i < rows; ++i) {
        T xhat = (nx->val[i * cols + j] - mu) * inv;
        no->val[i * cols + j] = ng->val[i] * xhat + nb->val[i];
      }
    }
  };
  no->bwd = [nx, ng, nb, no, rows, cols] {
    for (int j = 0; j < cols; ++j) {
      // Recompute the column statistics; cheaper than caching per column.
      T mu = T(0);
      for (int i = 0; i < rows; ++i) mu += nx->val[i * cols + j];
      mu /= rows;
      T var = T(0);
      for (int i = 0; i < rows; ++i) {
        T d = nx->val[i * cols + j] - mu;
        var += d * d;
      }
      var /= rows;
      const T inv = T(1) / std::sqrt(var + eps);

      T sum_dxhat = T(0), sum_dxhat_xhat = T(0);
      for (int i = 0; i < rows; ++i) {
        T xhat = (nx->val[i * cols + j] - mu) * inv;
        T dy = no->grad[i * cols + j];
        ng->grad[i] += dy * xhat;
        nb->grad[i] += dy;
        T dxhat = dy * ng->val[i];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
      }
      for (int i = 0; i < rows; ++i) {
        T xhat = (nx->val[i * cols + j] - mu) * inv;
        T dxhat = no->grad[i * cols + j] * ng->val[i];
        nx->grad[i * cols + j] +=
            inv * (dxhat - sum_dxhat / rows - xhat * sum_dxhat_xhat / rows);
      }
    }
  };
  return out;
}

// Same-padded 1-D convolution over the time (column) axis.
// x: [Cin x T], w: [Cout x Cin x K], b: [Cout] -> [Cout x ceil(T/stride)].
template <typename T>
int conv1d(Graph<T>& g, int x, int w, int b, int stride) {
  Node<T>* nx = &g.at(x);
  Node<T>* nw = &g.at(w);
  Node<T>* nb = &g.at(b);
  require(nw->dims.size() == 3, "conv1d: weight must be [Cout x Cin x K]");
  const int cin = nx->rows(), t_in = nx->cols();
  const int cout = nw->dims[0], k = nw->dims[2];
  require(nw->dims[1] == cin, "conv1d: weight Cin != input rows");
  require(nb->size() == cout, "conv1d: bias length != Cout");
  require(stride >= 1, "conv1d: stride must be >= 1");
  require(k % 2 == 1, "conv1d: kernel must be odd for same padding");
  const int pad = (k - 1) / 2;
  const int t_out = (t_in + stride - 1) / stride;
  int out = g.op({cout, t_out}, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  no->fwd = [nx, nw, nb, no, cin, cout, k, pad, stride, t_in, t_out] {
#pragma omp parallel for schedule(static)
    for (int co = 0; co < cout; ++co) {
      for (int t = 0; t < t_out; ++t) {
        T acc = nb->val[co];
        const int base = t * stride - pad;
        for (int ci = 0; ci < cin; ++ci) {
          const T* xr = &nx->val[ci * t_in];
          const T* wr = &nw->val[(co * cin + ci) * k];
          for (int kk = 0; kk < k; ++kk) {
            const int s = base + kk;
            if (s >= 0 && s < t_in) acc += xr[s] * wr[kk];
          }
        }
        no->val[co * t_out + t] = acc;
      }
    }
  };
  no->bwd = [nx, nw, nb, no, cin, cout, k, pad, stride, t_in, t_out] {
    for (int co = 0; co < cout; ++co) {
      const T* dy = &no->grad[co * t_out];
      T db = T(0);
      for (int t = 0; t < t_out; ++t) db += dy[t];
      nb->grad[co] += db;
      for (int ci = 0; ci < cin; ++ci) {
        const T* xr = &nx->val[ci * t_in];
        T* dxr = &nx->grad[ci * t_in];
        T* dwr = &nw->grad[(co * cin + ci) * k];
        for (int t = 0; t < t_out; ++t) {
          const int base = t * stride - pad;
          const T dyt = dy[t];
          for (int kk = 0; kk < k; ++kk) {
            const int s = base + kk;
            if (s >= 0 && s < t_in) {
              dwr[kk] += dyt * xr[s];
              dxr[s] += dyt * nw->val[(co * cin + ci) * k + kk];
            }
          }
        }
      }
    }
  };
  return out;
}

// Stacks inputs along the feature (row) axis; all must share a column count.
template <typename T>
int concat_rows(Graph<T>& g, const std::vector<int>& ids) {
  require(!ids.empty(), "concat_rows: no inputs");
  std::vector<Node<T>*> ins;
  int rows = 0;
  const int cols = g.at(ids[0]).cols();
  for (int id : ids) {
    Node<T>* n = &g.at(id);
    require(n->cols() == cols, "concat_rows: column mismatch");
    rows += n->rows();
    ins.push_back(n);
  }
  int out = g.op({rows, cols}, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  no->fwd = [ins, no] {
    size_t offset = 0;
    for (Node<T>* n : ins) {
      std::copy(n->val.begin(), n->val.end(), no->val.begin() + offset);
      offset += n->val.size();
    }
  };
  no->bwd = [ins, no] {
    size_t offset = 0;
    for (Node<T>* n : ins) {
      for (size_t i = 0; i < n->grad.size(); ++i)
        n->grad[i] += no->grad[offset + i];
      offset += n->grad.size();
    }
  };
  return out;
}

// Joins two sequences along the time (column) axis.
template <typename T>
int concat_cols(Graph<T>& g, int a, int b) {
  Node<T>* na = &g.at(a);
  Node<T>* nb = &g.at(b);
  require(na->rows() == nb->rows(), "concat_cols: row mismatch");
  const int rows = na->rows(), ca = na->cols(), cb = nb->cols();
  int out = g.op({rows, ca + cb}, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  no->fwd = [na, nb, no, rows, ca, cb] {
    for (int i = 0; i < rows; ++i) {
      std::copy(&na->val[i * ca], &na->val[i * ca] + ca,
                &no->val[i * (ca + cb)]);
      std::copy(&nb->val[i * cb], &nb->val[i * cb] + cb,
                &no->val[i * (ca + cb) + ca]);
    }
  };
  no->bwd = [na, nb, no, rows, ca, cb] {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < ca; ++j)
        na->grad[i * ca + j] += no->grad[i * (ca + cb) + j];
      for (int j = 0; j < cb; ++j)
        nb->grad[i * cb + j] += no->grad[i * (ca + cb) + ca + j];
    }
  };
  return out;
}

template <typename T>
int slice_rows(Graph<T>& g, int a, int row0, int rows) {
  Node<T>* na = &g.at(a);
  require(row0 >= 0 && rows >= 1 && row0 + rows <= na->rows(),
          "slice_rows: range out of bounds");
  const int cols = na->cols();
  int out = g.op({rows, cols}, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  no->fwd = [na, no, row0, rows, cols] {
    std::copy(&na->val[row0 * cols], &na->val[(row0 + rows) * cols],
              no->val.begin());
  };
  no->bwd = [na, no, row0, rows, cols] {
    for (int i = 0; i < rows * cols; ++i)
      na->grad[row0 * cols + i] += no->grad[i];
  };
  return out;
}

// Mean over the time axis: [D x T] -> [D x 1].
template <typename T>
int mean_cols(Graph<T>& g, int a) {
  Node<T>* na = &g.at(a);
  const int rows = na->rows(), cols = na->cols();
  int out = g.op({rows, 1}, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  no->fwd = [na, no, rows, cols] {
    for (int i = 0; i < rows; ++i) {
      T acc = T(0);
      for (int j = 0; j < cols; ++j) acc += na->val[i * cols + j];
      no->val[i] = acc / cols;
    }
  };
  no->bwd = [na, no, rows, cols] {
    for (int i = 0; i < rows; ++i) {
      const T share = no->grad[i] / cols;
      for (int j = 0; j < cols; ++j) na->grad[i * cols + j] += share;
    }
  };
  return out;
}

// Non-overlapping mean pooling along time by an integer factor.
template <typename T>
int avgpool_cols(Graph<T>& g, int a, int factor) {
  Node<T>* na = &g.at(a);
  const int rows = na->rows(), cols = na->cols();
  require(factor >= 1 && cols % factor == 0,
          "avgpool_cols: columns (" + std::to_string(cols) +
              ") not divisible by factor (" + std::to_string(factor) + ")");
  const int t_out = cols / factor;
  int out = g.op({rows, t_out}, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  no->fwd = [na, no, rows, cols, factor, t_out] {
    for (int i = 0; i < rows; ++i)
      for (int t = 0; t < t_out; ++t) {
        T acc = T(0);
        for (int f = 0; f < factor; ++f) acc += na->val[i * cols + t * factor + f];
        no->val[i * t_out + t] = acc / factor;
      }
  };
  no->bwd = [na, no, rows, cols, factor, t_out] {
    for (int i = 0; i < rows; ++i)
      for (int t = 0; t < t_out; ++t) {
        const T share = no->grad[i * t_out + t] / factor;
        for (int f = 0; f < factor; ++f)
          na->grad[i * cols + t * factor + f] += share;
      }
  };
  return out;
}

// Numerically stable binary cross-entropy on a single logit; the label is a
// one-element leaf set per sample and receives no gradient.
template <typename T>
int bce_with_logits(Graph<T>& g, int logit, int label) {
  Node<T>* nz = &g.at(logit);
  Node<T>* ny = &g.at(label);
  require(nz->size() == 1 && ny->size() == 1,
          "bce_with_logits: logit and label must be scalars");
  int out = g.op({1}, nullptr, nullptr);
  Node<T>* no = &g.at(out);
  no->fwd = [nz, ny, no] {
    const T z = nz->val[0], y = ny->val[0];
    no->val[0] = std::max(z, T(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
  };
  no->bwd = [nz, ny, no] {
    const T z = nz->val[0], y = ny->val[0];
    const T sig = T(1) / (T(1) + std::exp(-z));
    nz->grad[0] += no->grad[0] * (sig - y);
  };
  return out;
}

}  // namespace beamosd
