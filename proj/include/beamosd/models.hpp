#pragma once

#include <memory>
#include <string>
#include <vector>

#include "beamosd/nn/encoder.hpp"

namespace beamosd {

enum class ModelKind { kBaseline, kBeamTransformer, kSpatialNet, kCombined };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

inline constexpr int kNumBeams = 8;
inline constexpr int kSpatialInputDim = 128;

// Opposite-beam pairs, 0-based: (0,4), (1,5), (2,6), (3,7).
inline constexpr int kPairMap[4][2] = {{0, 4}, {1, 5}, {2, 6}, {3, 7}};

struct ModelConfig {
  ModelKind kind = ModelKind::kSpatialNet;
  int fbank_dim = 40;      // F
  int frames = 96;         // L, divisible by 4 for the stride-2 prenet
  int model_dim = 32;      // D
  int num_heads = 4;
  int pair_layers = 2;     // per-pair encoders (BeamTransformer)
  int baseline_layers = 6; // single-channel baseline encoder
  int spatial_layers = 2;
  std::uint64_t seed = 1;

  void validate() const {
    require(fbank_dim >= 1 && frames >= 4 && model_dim >= 1,
            "ModelConfig: dimensions must be positive");
    require(frames % 4 == 0, "ModelConfig: frames must be divisible by 4");
    require(model_dim % num_heads == 0,
            "ModelConfig: model_dim must be divisible by num_heads");
  }
};

// One named stage of the shape contract; count > 1 means `count` parallel
// tensors of the given dims (e.g. 8 beams, 4 pairs). `node` is the graph id
// of the first tensor of the stage, kept so tests can probe intermediates.
struct ShapeStage {
  std::string name;
  std::vector<int> dims;
  int count = 1;
  int node = -1;
};

template <typename T>
struct BuiltModel {
  std::unique_ptr<Graph<T>> graph;
  ModelConfig cfg;
  std::vector<int> beam_inputs;  // 8 x [F x L]
  int spatial_input = -1;        // [128 x L]
  int single_input = -1;         // [F x L]
  int label = -1;                // [1]
  int logit = -1;                // [1 x 1]
  int loss = -1;                 // [1]
  std::vector<ShapeStage> trace;

  const ShapeStage& stage(const std::string& name) const {
    for (const auto& s : trace)
      if (s.name == name) return s;
    throw ArgumentError("BuiltModel: no stage named '" + name + "'");
  }
};

namespace detail {

template <typename T>
void record(BuiltModel<T>& m, const std::string& name, int node, int count = 1) {
  m.trace.push_back({name, m.graph->at(node).dims, count, node});
}

// Pairs opposite beams and concatenates each pair along time:
// 8 x [D x L/4] -> 4 x [D x L/2].
template <typename T>
std::vector<int> recombine_beams(Graph<T>& g, const std::vector<int>& beams) {
  require(static_cast<int>(beams.size()) == kNumBeams,
          "recombine_beams: expected exactly 8 beams");
  std::vector<int> pairs;
  for (const auto& pm : kPairMap)
    pairs.push_back(concat_cols(g, beams[pm[0]], beams[pm[1]]));
  return pairs;
}

template <typename T>
void build_bt_trunk(BuiltModel<T>& m, Rng& rng, const std::string& prefix,
                    int& postnet_out) {
  Graph<T>& g = *m.graph;
  const ModelConfig& cfg = m.cfg;
  std::vector<int> inputs;
  for (int b = 0; b < kNumBeams; ++b)
    inputs.push_back(g.leaf({cfg.fbank_dim, cfg.frames}));
  m.beam_inputs = inputs;
  record(m, prefix + "input", inputs[0], kNumBeams);

  std::vector<int> pre = prenet_forward_shared(g, inputs, cfg.model_dim,
                                               prefix + "prenet", rng);
  record(m, prefix + "prenet", pre[0], kNumBeams);

  std::vector<int> pairs = recombine_beams(g, pre);
  record(m, prefix + "recombination", pairs[0],
         static_cast<int>(pairs.size()));

  EncoderConfig enc;
  enc.model_dim = cfg.model_dim;
  enc.num_heads = cfg.num_heads;
  enc.num_layers = cfg.pair_layers;
  std::vector<int> encoded;
  for (size_t p = 0; p < pairs.size(); ++p)
    encoded.push_back(encoder_forward(g, pairs[p], enc,
                                      prefix + "pair" + std::to_string(p), rng));
  int stacked = concat_rows(g, encoded);
  record(m, prefix + "encoders", stacked);

  postnet_out = postnet_forward(g, stacked, cfg.model_dim,
                                prefix + "postnet", rng);
  record(m, prefix + "postnet", postnet_out);
}

template <typename T>
void build_spatial_trunk(BuiltModel<T>& m, Rng& rng, const std::string& prefix,
                         int& postnet_out) {
  Graph<T>& g = *m.graph;
  const ModelConfig& cfg = m.cfg;
  m.spatial_input = g.leaf({kSpatialInputDim, cfg.frames});
  record(m, prefix + "input", m.spatial_input);

  // Length-preserving prenet: same two-conv front end at stride 1.
  int pre = prenet_forward(g, m.spatial_input, cfg.model_dim,
                           prefix + "prenet", rng, 1);
  record(m, prefix + "prenet", pre);

  EncoderConfig enc;
  enc.model_dim = cfg.model_dim;
  enc.num_heads = cfg.num_heads;
  enc.num_layers = cfg.spatial_layers;
  int h = encoder_forward(g, pre, enc, prefix + "encoder", rng);
  record(m, prefix + "encoder", h);

  postnet_out = postnet_forward(g, h, cfg.model_dim, prefix + "postnet", rng);
  record(m, prefix + "postnet", postnet_out);
}

}  // namespace detail

template <typename T>
BuiltModel<T> build_model(const ModelConfig& cfg) {
  cfg.validate();
  BuiltModel<T> m;
  m.graph = std::make_unique<Graph<T>>();
  m.cfg = cfg;
  Graph<T>& g = *m.graph;
  Rng rng(cfg.seed);

  int pooled = -1;
  switch (cfg.kind) {
    case ModelKind::kBaseline: {
      m.single_input = g.leaf({cfg.fbank_dim, cfg.frames});
      detail::record(m, "input", m.single_input);
      int pre = prenet_forward(g, m.single_input, cfg.model_dim, "prenet", rng);
      detail::record(m, "prenet", pre);
      EncoderConfig enc;
      enc.model_dim = cfg.model_dim;
      enc.num_heads = cfg.num_heads;
      enc.num_layers = cfg.baseline_layers;
      int h = encoder_forward(g, pre, enc, "encoder", rng);
      detail::record(m, "encoder", h);
      int post = postnet_forward(g, h, cfg.model_dim, "postnet", rng);
      detail::record(m, "postnet", post);
      pooled = mean_cols(g, post);
      break;
    }
    case ModelKind::kBeamTransformer: {
      int post = -1;
      detail::build_bt_trunk(m, rng, "", post);
      pooled = mean_cols(g, post);
      break;
    }
    case ModelKind::kSpatialNet: {
      int post = -1;
      detail::build_spatial_trunk(m, rng, "", post);
      pooled = mean_cols(g, post);
      break;
    }
    case ModelKind::kCombined: {
      int bt_post = -1, sp_post = -1;
      detail::build_bt_trunk(m, rng, "bt.", bt_post);
      detail::build_spatial_trunk(m, rng, "spatial.", sp_post);
      // Frame alignment: pool the full-rate SpatialNet sequence down to the
      // BeamTransformer post-net rate before feature-wise concatenation.
      const int bt_len = g.at(bt_post).cols();
      const int sp_len = g.at(sp_post).cols();
      require(sp_len % bt_len == 0,
              "combined: cannot align spatial length " +
                  std::to_string(sp_len) + " to beam length " +
                  std::to_string(bt_len));
      int aligned = avgpool_cols(g, sp_post, sp_len / bt_len);
      int fused = concat_rows(g, std::vector<int>{bt_post, aligned});
      detail::record(m, "fusion", fused);
      pooled = mean_cols(g, fused);
      break;
    }
  }
  detail::record(m, "meanpool", pooled);
  m.logit = classifier_forward(g, pooled, "classifier", rng);
  m.label = g.leaf({1});
  m.loss = bce_with_logits(g, m.logit, m.label);
  return m;
}

}  // namespace beamosd
