#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "beamosd/nn/ops.hpp"
#include "beamosd/runtime.hpp"

namespace beamosd {

struct EncoderConfig {
  int model_dim = 64;
  int num_heads = 4;
  int num_layers = 2;
  int ffn_dim = 0;  // 0 means 4 * model_dim
  bool positional = true;

  int ffn() const { return ffn_dim > 0 ? ffn_dim : 4 * model_dim; }
  void validate() const {
    require(model_dim >= 1 && num_heads >= 1 && num_layers >= 0,
            "EncoderConfig: dimensions must be positive");
    require(model_dim % num_heads == 0,
            "EncoderConfig: model_dim must be divisible by num_heads");
  }
};

// Uniform fan-in initialization, seeded through the shared Rng so builds are
// reproducible bit for bit.
template <typename T>
int init_param(Graph<T>& g, std::vector<int> dims, int fan_in,
               const std::string& name, Rng& rng) {
  int id = g.param(std::move(dims), name);
  Node<T>& n = g.at(id);
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
  for (T& v : n.val) v = static_cast<T>(rng.uniform(-bound, bound));
  return id;
}

template <typename T>
int zero_param(Graph<T>& g, std::vector<int> dims, const std::string& name) {
  return g.param(std::move(dims), name);
}

template <typename T>
int ones_param(Graph<T>& g, std::vector<int> dims, const std::string& name) {
  int id = g.param(std::move(dims), name);
  Node<T>& n = g.at(id);
  std::fill(n.val.begin(), n.val.end(), T(1));
  return id;
}

// Constant [D x T] sinusoid table: row 2i is sin(t / 10000^(2i/D)), row
// 2i + 1 the matching cos.
template <typename T>
int positional_encoding(Graph<T>& g, int model_dim, int t_len) {
  int id = g.leaf({model_dim, t_len});
  Node<T>& n = g.at(id);
  for (int d = 0; d < model_dim; ++d) {
    const int i = d / 2;
    const double rate = std::pow(10000.0, 2.0 * i / model_dim);
    for (int t = 0; t < t_len; ++t) {
      const double angle = t / rate;
      n.val[d * t_len + t] =
          static_cast<T>(d % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return id;
}

// x [in_dim x T] -> W x + b -> [out_dim x T].
template <typename T>
int linear(Graph<T>& g, int x, int in_dim, int out_dim,
           const std::string& prefix, Rng& rng) {
  int w = init_param(g, {out_dim, in_dim}, in_dim, prefix + ".w", rng);
  int b = zero_param(g, {out_dim}, prefix + ".b");
  return add_colvec(g, matmul(g, w, x), b);
}

template <typename T>
int multihead_attention(Graph<T>& g, int x, const EncoderConfig& cfg,
                        const std::string& prefix, Rng& rng) {
  const int d = cfg.model_dim;
  const int dh = d / cfg.num_heads;
  int q = linear(g, x, d, d, prefix + ".q", rng);
  int k = linear(g, x, d, d, prefix + ".k", rng);
  int v = linear(g, x, d, d, prefix + ".v", rng);

  std::vector<int> heads;
  for (int h = 0; h < cfg.num_heads; ++h) {
    int qh = slice_rows(g, q, h * dh, dh);
    int kh = slice_rows(g, k, h * dh, dh);
    int vh = slice_rows(g, v, h * dh, dh);
    // scores[t, s] = <q_t, k_s> / sqrt(dh); rows are queries.
    int scores = scale(g, matmul(g, transpose(g, qh), kh),
                       static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
    int attn = softmax_rows(g, scores);
    // out[:, t] = sum_s attn[t, s] * v[:, s].
    heads.push_back(matmul(g, vh, transpose(g, attn)));
  }
  int merged = concat_rows(g, heads);
  return linear(g, merged, d, d, prefix + ".o", rng);
}

// Pre-norm transformer encoder stack; adds sinusoidal positions at entry.
template <typename T>
int encoder_forward(Graph<T>& g, int x, const EncoderConfig& cfg,
                    const std::string& prefix, Rng& rng) {
  cfg.validate();
  require(g.at(x).rows() == cfg.model_dim,
          "encoder_forward: input rows != model_dim");
  int h = x;
  if (cfg.positional)
    h = add(g, h, positional_encoding(g, cfg.model_dim, g.at(x).cols()));
  for (int layer = 0; layer < cfg.num_layers; ++layer) {
    const std::string lp = prefix + ".layer" + std::to_string(layer);
    int g1 = ones_param(g, {cfg.model_dim}, lp + ".ln1.g");
    int b1 = zero_param(g, {cfg.model_dim}, lp + ".ln1.b");
    int attn = multihead_attention(g, layernorm_cols(g, h, g1, b1), cfg,
                                   lp + ".attn", rng);
    h = add(g, h, attn);

    int g2 = ones_param(g, {cfg.model_dim}, lp + ".ln2.g");
    int b2 = zero_param(g, {cfg.model_dim}, lp + ".ln2.b");
    int normed = layernorm_cols(g, h, g2, b2);
    int ff = linear(g, relu(g, linear(g, normed, cfg.model_dim, cfg.ffn(),
                                      lp + ".ffn1", rng)),
                    cfg.ffn(), cfg.model_dim, lp + ".ffn2", rng);
    h = add(g, h, ff);
  }
  return h;
}

// Two stride-2 same-padded convolutions with ReLU: [F x L] -> [D x L/4].
template <typename T>
int prenet_forward(Graph<T>& g, int x, int model_dim,
                   const std::string& prefix, Rng& rng,
                   int stride = 2) {
  const int f = g.at(x).rows();
  const int l = g.at(x).cols();
  if (stride == 2)
    require(l % 4 == 0, "prenet_forward: length must be divisible by 4");
  constexpr int kKernel = 5;
  int w1 = init_param(g, {model_dim, f, kKernel}, f * kKernel,
                      prefix + ".conv1.w", rng);
  int b1 = zero_param(g, {model_dim}, prefix + ".conv1.b");
  int h = relu(g, conv1d(g, x, w1, b1, stride));
  int w2 = init_param(g, {model_dim, model_dim, kKernel}, model_dim * kKernel,
                      prefix + ".conv2.w", rng);
  int b2 = zero_param(g, {model_dim}, prefix + ".conv2.b");
  return relu(g, conv1d(g, h, w2, b2, stride));
}

// Shared-weight prenet applied to several equally shaped inputs.
template <typename T>
std::vector<int> prenet_forward_shared(Graph<T>& g, const std::vector<int>& xs,
                                       int model_dim, const std::string& prefix,
                                       Rng& rng, int stride = 2) {
  require(!xs.empty(), "prenet_forward_shared: no inputs");
  const int f = g.at(xs[0]).rows();
  const int l = g.at(xs[0]).cols();
  if (stride == 2)
    require(l % 4 == 0, "prenet_forward_shared: length must be divisible by 4");
  constexpr int kKernel = 5;
  int w1 = init_param(g, {model_dim, f, kKernel}, f * kKernel,
                      prefix + ".conv1.w", rng);
  int b1 = zero_param(g, {model_dim}, prefix + ".conv1.b");
  int w2 = init_param(g, {model_dim, model_dim, kKernel}, model_dim * kKernel,
                      prefix + ".conv2.w", rng);
  int b2 = zero_param(g, {model_dim}, prefix + ".conv2.b");
  std::vector<int> outs;
  for (int x : xs) {
    require(g.at(x).rows() == f && g.at(x).cols() == l,
            "prenet_forward_shared: input shape mismatch");
    int h = relu(g, conv1d(g, x, w1, b1, stride));
    outs.push_back(relu(g, conv1d(g, h, w2, b2, stride)));
  }
  return outs;
}

// Per-timestep two-layer feed-forward: [C x T] -> [D x T].
template <typename T>
int postnet_forward(Graph<T>& g, int x, int model_dim,
                    const std::string& prefix, Rng& rng) {
  const int c = g.at(x).rows();
  int h = relu(g, linear(g, x, c, model_dim, prefix + ".fc1", rng));
  return linear(g, h, model_dim, model_dim, prefix + ".fc2", rng);
}

// [D x 1] embedding -> scalar logit.
template <typename T>
int classifier_forward(Graph<T>& g, int emb, const std::string& prefix,
                       Rng& rng) {
  const int d = g.at(emb).rows();
  return linear(g, emb, d, 1, prefix, rng);
}

}  // namespace beamosd
