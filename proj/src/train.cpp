#include "beamosd/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "json.hpp"

namespace beamosd {

FeatureStreams streams_for(ModelKind kind) {
  FeatureStreams s;
  switch (kind) {
    case ModelKind::kBaseline: s.single = true; break;
    case ModelKind::kBeamTransformer: s.beams = true; break;
    case ModelKind::kSpatialNet: s.spatial = true; break;
    case ModelKind::kCombined: s.beams = s.spatial = true; break;
  }
  return s;
}

namespace {

// Per-row mean/std of row-major [rows x frames] blocks across the selected
// segments; `blocks` counts equal-shaped blocks per segment (8 for beams).
void row_stats(const FeatureDataset& data,
               std::vector<float> SegmentFeatures::*stream, int rows,
               int blocks, std::vector<float>& mean, std::vector<float>& std) {
  const int frames = data.frames;
  std::vector<double> sum(rows, 0.0), sq(rows, 0.0);
  double count = 0;
  for (int idx : data.train_indices) {
    const std::vector<float>& v = data.segments[idx].*stream;
    require(!v.empty(), "compute_norm_stats: missing feature stream");
    for (int blk = 0; blk < blocks; ++blk) {
      const float* base = &v[static_cast<size_t>(blk) * rows * frames];
      for (int r = 0; r < rows; ++r)
        for (int t = 0; t < frames; ++t) {
          const double x = base[static_cast<size_t>(r) * frames + t];
          sum[r] += x;
          sq[r] += x * x;
        }
    }
    count += static_cast<double>(blocks) * frames;
  }
  mean.resize(rows);
  std.resize(rows);
  for (int r = 0; r < rows; ++r) {
    const double mu = sum[r] / count;
    const double var = std::max(0.0, sq[r] / count - mu * mu);
    mean[r] = static_cast<float>(mu);
    std[r] = static_cast<float>(std::max(1e-6, std::sqrt(var)));
  }
}

void normalize_into(const std::vector<float>& src, int rows, int frames,
                    int block, const std::vector<float>& mean,
                    const std::vector<float>& std, std::vector<float>& dst) {
  require(static_cast<int>(mean.size()) == rows &&
              static_cast<int>(std.size()) == rows,
          "set_inputs: normalization stats missing for a consumed stream");
  const float* base = &src[static_cast<size_t>(block) * rows * frames];
  for (int r = 0; r < rows; ++r) {
    const float mu = mean[r], sd = std[r];
    for (int t = 0; t < frames; ++t)
      dst[static_cast<size_t>(r) * frames + t] =
          (base[static_cast<size_t>(r) * frames + t] - mu) / sd;
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

NormStats compute_norm_stats(const FeatureDataset& data, ModelKind kind) {
  require(!data.train_indices.empty(), "compute_norm_stats: no training split");
  const FeatureStreams st = streams_for(kind);
  NormStats norm;
  if (st.beams)
    row_stats(data, &SegmentFeatures::beams, data.fbank_dim, kNumAcousticBeams,
              norm.beams_mean, norm.beams_std);
  if (st.spatial)
    row_stats(data, &SegmentFeatures::spatial, kSpatialInputDim, 1,
              norm.spatial_mean, norm.spatial_std);
  if (st.single)
    row_stats(data, &SegmentFeatures::single, data.fbank_dim, 1,
              norm.single_mean, norm.single_std);
  return norm;
}

void set_inputs(BuiltModel<float>& model, const SegmentFeatures& seg,
                const FeatureDataset& data, const NormStats& norm) {
  Graph<float>& g = *model.graph;
  const int frames = data.frames;
  const FeatureStreams st = streams_for(model.cfg.kind);
  if (st.beams) {
    require(!seg.beams.empty(), "set_inputs: segment lacks beam features");
    for (int b = 0; b < kNumAcousticBeams; ++b)
      normalize_into(seg.beams, data.fbank_dim, frames, b, norm.beams_mean,
                     norm.beams_std, g.at(model.beam_inputs[b]).val);
  }
  if (st.spatial) {
    require(!seg.spatial.empty(), "set_inputs: segment lacks spatial features");
    normalize_into(seg.spatial, kSpatialInputDim, frames, 0, norm.spatial_mean,
                   norm.spatial_std, g.at(model.spatial_input).val);
  }
  if (st.single) {
    require(!seg.single.empty(), "set_inputs: segment lacks single features");
    normalize_into(seg.single, data.fbank_dim, frames, 0, norm.single_mean,
                   norm.single_std, g.at(model.single_input).val);
  }
  g.at(model.label).val[0] = static_cast<float>(seg.label);
}

Adam::Adam(Graph<float>& g, const TrainConfig& cfg) : g_(&g), cfg_(cfg) {
  for (int id : g.params()) {
    m_.emplace_back(g.at(id).size(), 0.0f);
    v_.emplace_back(g.at(id).size(), 0.0f);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const auto& ids = g_->params();
  for (size_t p = 0; p < ids.size(); ++p) {
    Node<float>& n = g_->at(ids[p]);
    float* m = m_[p].data();
    float* v = v_[p].data();
    for (int i = 0; i < n.size(); ++i) {
      const double gi = n.grad[i];
      m[i] = static_cast<float>(cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi);
      v[i] = static_cast<float>(cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      n.val[i] -= static_cast<float>(cfg_.lr * mhat /
                                     (std::sqrt(vhat) + cfg_.adam_eps));
    }
  }
}

Metrics evaluate_model(BuiltModel<float>& model, const NormStats& norm,
                       const FeatureDataset& data,
                       const std::vector<int>& indices, double threshold) {
  require(!indices.empty(), "evaluate_model: no segments to evaluate");
  std::vector<int> preds, labels;
  preds.reserve(indices.size());
  labels.reserve(indices.size());
  for (int idx : indices) {
    set_inputs(model, data.segments[idx], data, norm);
    model.graph->forward();
    const double p = sigmoid(model.graph->at(model.logit).val[0]);
    preds.push_back(p > threshold ? 1 : 0);
    labels.push_back(data.segments[idx].label);
  }
  return compute_metrics(preds, labels);
}

namespace {

void append_log_line(const std::string& path, const EpochLog& row) {
  nlohmann::ordered_json j;
  j["epoch"] = row.epoch;
  j["train_loss"] = row.train_loss;
  j["test_accuracy"] = row.test.accuracy;
  j["test_precision"] = row.test.precision;
  j["test_recall"] = row.test.recall;
  j["test_fscore"] = row.test.fscore;
  std::ofstream out(path, std::ios::app);
  require(out.good(), "train_model: cannot write " + path);
  out << j.dump() << "\n";
}

}  // namespace

TrainResult train_model(const ModelConfig& mcfg, const TrainConfig& tcfg,
                        const FeatureDataset& data) {
  tcfg.validate();
  ModelConfig cfg = mcfg;
  cfg.fbank_dim = data.fbank_dim;  // the dataset fixes F and L
  cfg.frames = data.frames;
  cfg.validate();
  require(!data.train_indices.empty(), "train_model: empty training split");
  require(!data.test_indices.empty(), "train_model: empty test split");

  BuiltModel<float> model = build_model<float>(cfg);
  Graph<float>& g = *model.graph;
  const NormStats norm = compute_norm_stats(data, cfg.kind);
  Adam opt(g, tcfg);

  const bool artifacts = !tcfg.out_dir.empty();
  std::filesystem::path dir(tcfg.out_dir);
  std::string log_path;
  if (artifacts) {
    std::filesystem::create_directories(dir);
    log_path = (dir / "log.jsonl").string();
    std::ofstream(log_path, std::ios::trunc);  // fresh log per run
  }

  TrainResult result;
  std::vector<int> order = data.train_indices;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(tcfg.seed, 0xE000u + epoch));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

    double loss_sum = 0.0;
    const int n = static_cast<int>(order.size());
    for (int start = 0; start < n; start += tcfg.batch_size) {
      const int bn = std::min(tcfg.batch_size, n - start);
      g.zero_param_grads();
      for (int i = start; i < start + bn; ++i) {
        set_inputs(model, data.segments[order[i]], data, norm);
        g.forward();
        loss_sum += g.at(model.loss).val[0];
        g.backward(model.loss, 1.0f / static_cast<float>(bn));
      }
      opt.step();
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / n;
    row.test = evaluate_model(model, norm, data, data.test_indices,
                              tcfg.threshold);
    result.log.push_back(row);
    if (artifacts) {
      save_checkpoint(
          (dir / ("checkpoint_epoch" + std::to_string(epoch) + ".btns"))
              .string(),
          model, norm);
      append_log_line(log_path, row);
    }
  }
  if (artifacts) {
    result.checkpoint_path = (dir / "checkpoint.btns").string();
    save_checkpoint(result.checkpoint_path, model, norm);
  }
  return result;
}

namespace {

NamedTensor scalar_tensor(const std::string& name, double value) {
  return NamedTensor{name, {1}, {static_cast<float>(value)}};
}

NamedTensor vec_tensor(const std::string& name, const std::vector<float>& v) {
  return NamedTensor{name, {v.size()}, v};
}

int scalar_int(const std::vector<NamedTensor>& ts, const std::string& name) {
  const NamedTensor& t = find_tensor(ts, name);
  if (t.size() != 1) throw DataError("checkpoint: " + name + " must be scalar");
  return static_cast<int>(std::lround(t.data[0]));
}

const NamedTensor* maybe_tensor(const std::vector<NamedTensor>& ts,
                                const std::string& name) {
  for (const auto& t : ts)
    if (t.name == name) return &t;
  return nullptr;
}

void load_norm_vec(const std::vector<NamedTensor>& ts, const std::string& name,
                   std::vector<float>& out) {
  if (const NamedTensor* t = maybe_tensor(ts, name)) out = t->data;
}

}  // namespace

void save_checkpoint(const std::string& path, const BuiltModel<float>& model,
                     const NormStats& norm) {
  const ModelConfig& cfg = model.cfg;
  std::vector<NamedTensor> ts;
  ts.push_back(scalar_tensor("cfg.kind", static_cast<int>(cfg.kind)));
  ts.push_back(scalar_tensor("cfg.fbank_dim", cfg.fbank_dim));
  ts.push_back(scalar_tensor("cfg.frames", cfg.frames));
  ts.push_back(scalar_tensor("cfg.model_dim", cfg.model_dim));
  ts.push_back(scalar_tensor("cfg.num_heads", cfg.num_heads));
  ts.push_back(scalar_tensor("cfg.pair_layers", cfg.pair_layers));
  ts.push_back(scalar_tensor("cfg.baseline_layers", cfg.baseline_layers));
  ts.push_back(scalar_tensor("cfg.spatial_layers", cfg.spatial_layers));
  if (!norm.beams_mean.empty()) {
    ts.push_back(vec_tensor("norm.beams.mean", norm.beams_mean));
    ts.push_back(vec_tensor("norm.beams.std", norm.beams_std));
  }
  if (!norm.spatial_mean.empty()) {
    ts.push_back(vec_tensor("norm.spatial.mean", norm.spatial_mean));
    ts.push_back(vec_tensor("norm.spatial.std", norm.spatial_std));
  }
  if (!norm.single_mean.empty()) {
    ts.push_back(vec_tensor("norm.single.mean", norm.single_mean));
    ts.push_back(vec_tensor("norm.single.std", norm.single_std));
  }
  const Graph<float>& g = *model.graph;
  for (int id : g.params()) {
    const Node<float>& n = g.at(id);
    NamedTensor t;
    t.name = n.name;
    t.dims.assign(n.dims.begin(), n.dims.end());
    t.data = n.val;
    ts.push_back(std::move(t));
  }
  write_btns(path, ts);
}

Checkpoint load_checkpoint(const std::string& path) {
  Checkpoint ck;
  std::vector<NamedTensor> ts = read_btns(path);
  const int kind = scalar_int(ts, "cfg.kind");
  if (kind < 0 || kind > 3)
    throw DataError("checkpoint: bad model kind " + std::to_string(kind));
  ck.cfg.kind = static_cast<ModelKind>(kind);
  ck.cfg.fbank_dim = scalar_int(ts, "cfg.fbank_dim");
  ck.cfg.frames = scalar_int(ts, "cfg.frames");
  ck.cfg.model_dim = scalar_int(ts, "cfg.model_dim");
  ck.cfg.num_heads = scalar_int(ts, "cfg.num_heads");
  ck.cfg.pair_layers = scalar_int(ts, "cfg.pair_layers");
  ck.cfg.baseline_layers = scalar_int(ts, "cfg.baseline_layers");
  ck.cfg.spatial_layers = scalar_int(ts, "cfg.spatial_layers");
  ck.cfg.validate();
  load_norm_vec(ts, "norm.beams.mean", ck.norm.beams_mean);
  load_norm_vec(ts, "norm.beams.std", ck.norm.beams_std);
  load_norm_vec(ts, "norm.spatial.mean", ck.norm.spatial_mean);
  load_norm_vec(ts, "norm.spatial.std", ck.norm.spatial_std);
  load_norm_vec(ts, "norm.single.mean", ck.norm.single_mean);
  load_norm_vec(ts, "norm.single.std", ck.norm.single_std);
  for (auto& t : ts)
    if (t.name.rfind("cfg.", 0) != 0 && t.name.rfind("norm.", 0) != 0)
      ck.params.push_back(std::move(t));
  return ck;
}

BuiltModel<float> restore_model(const Checkpoint& ck) {
  BuiltModel<float> model = build_model<float>(ck.cfg);
  Graph<float>& g = *model.graph;
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : ck.params) by_name[t.name] = &t;
  if (by_name.size() != ck.params.size())
    throw DataError("checkpoint: duplicate parameter names");
  size_t used = 0;
  for (int id : g.params()) {
    Node<float>& n = g.at(id);
    auto it = by_name.find(n.name);
    if (it == by_name.end())
      throw DataError("checkpoint: missing parameter " + n.name);
    const NamedTensor& t = *it->second;
    if (t.size() != static_cast<std::uint64_t>(n.size()))
      throw DataError("checkpoint: size mismatch for " + n.name);
    std::copy(t.data.begin(), t.data.end(), n.val.begin());
    ++used;
  }
  if (used != ck.params.size())
    throw DataError("checkpoint: " +
                    std::to_string(ck.params.size() - used) +
                    " tensors do not match any model parameter");
  return model;
}

Metrics evaluate_checkpoint(const std::string& checkpoint_path,
                            const FeatureDataset& data,
                            const std::string& split, double threshold,
                            std::string* model_name_out) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  if (ck.cfg.frames != data.frames)
    throw DataError("evaluate: checkpoint expects " +
                    std::to_string(ck.cfg.frames) + " frames, dataset has " +
                    std::to_string(data.frames));
  const FeatureStreams st = streams_for(ck.cfg.kind);
  if ((st.beams || st.single) && ck.cfg.fbank_dim != data.fbank_dim)
    throw DataError("evaluate: checkpoint expects fbank_dim " +
                    std::to_string(ck.cfg.fbank_dim) + ", dataset has " +
                    std::to_string(data.fbank_dim));
  BuiltModel<float> model = restore_model(ck);
  if (model_name_out) *model_name_out = model_kind_name(ck.cfg.kind);

  const std::vector<int>* indices = nullptr;
  if (split == "train") indices = &data.train_indices;
  else if (split == "test") indices = &data.test_indices;
  else throw ArgumentError("evaluate: unknown split '" + split + "'");
  if (indices->empty())
    throw DataError("evaluate: split '" + split + "' has no segments");
  return evaluate_model(model, ck.norm, data, *indices, threshold);
}

std::string format_report(const std::string& model_name,
                          const std::string& split, double segment_seconds,
                          const Metrics& m) {
  nlohmann::ordered_json j;
  j["model"] = model_name;
  j["split"] = split;
  j["segment_seconds"] = segment_seconds;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["fscore"] = m.fscore;
  j["confusion"] = {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
  return j.dump(2) + "\n";
}

void write_report(const std::string& path, const std::string& model_name,
                  const std::string& split, double segment_seconds,
                  const Metrics& m) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "write_report: cannot write " + path);
  out << format_report(model_name, split, segment_seconds, m);
}

}  // namespace beamosd
