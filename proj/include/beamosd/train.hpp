#pragma once

#include <string>
#include <vector>

#include "beamosd/container.hpp"
#include "beamosd/features.hpp"
#include "beamosd/metrics.hpp"
#include "beamosd/models.hpp"

namespace beamosd {

// Per-row feature normalization fitted on the training split. Streams the
// model does not consume stay empty.
struct NormStats {
  std::vector<float> beams_mean, beams_std;      // [F], pooled over beams
  std::vector<float> spatial_mean, spatial_std;  // [128]
  std::vector<float> single_mean, single_std;    // [F]
};

// Which feature streams a model kind consumes.
FeatureStreams streams_for(ModelKind kind);

NormStats compute_norm_stats(const FeatureDataset& data, ModelKind kind);

// Copies the segment's streams into the model's input leaves, applying the
// per-row normalization, and sets the label leaf.
void set_inputs(BuiltModel<float>& model, const SegmentFeatures& seg,
                const FeatureDataset& data, const NormStats& norm);

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 16;
  int epochs = 4;
  std::uint64_t seed = 7;
  double threshold = 0.5;
  std::string out_dir;  // checkpoints + log.jsonl; empty = no artifacts

  void validate() const {
    require(lr > 0, "TrainConfig: lr must be > 0");
    require(batch_size >= 1 && epochs >= 1,
            "TrainConfig: batch_size and epochs must be >= 1");
    require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1,
            "TrainConfig: betas must lie in [0, 1)");
  }
};

// Adam over the graph's parameter nodes; step() consumes the accumulated
// batch-mean gradients.
class Adam {
 public:
  Adam(Graph<float>& g, const TrainConfig& cfg);
  void step();

 private:
  Graph<float>* g_;
  TrainConfig cfg_;
  std::vector<std::vector<float>> m_, v_;
  long t_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  Metrics test;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::string checkpoint_path;  // final checkpoint, "" when out_dir is empty
};

// Seeded-shuffle mini-batch training; writes checkpoint_epochN.btns, a final
// checkpoint.btns and log.jsonl rows (epoch, train_loss, test metrics) under
// out_dir. Gradient updates are strictly serial.
TrainResult train_model(const ModelConfig& mcfg, const TrainConfig& tcfg,
                        const FeatureDataset& data);

// Prediction = 1 iff sigmoid(logit) > threshold over the given segments.
Metrics evaluate_model(BuiltModel<float>& model, const NormStats& norm,
                       const FeatureDataset& data,
                       const std::vector<int>& indices, double threshold);

struct Checkpoint {
  ModelConfig cfg;
  NormStats norm;
  std::vector<NamedTensor> params;
};

void save_checkpoint(const std::string& path, const BuiltModel<float>& model,
                     const NormStats& norm);
Checkpoint load_checkpoint(const std::string& path);
// Rebuilds the architecture and installs the checkpoint parameters.
BuiltModel<float> restore_model(const Checkpoint& ck);

Metrics evaluate_checkpoint(const std::string& checkpoint_path,
                            const FeatureDataset& data,
                            const std::string& split, double threshold,
                            std::string* model_name_out = nullptr);

// {"model", "split", "segment_seconds", "accuracy", ...} JSON report.
std::string format_report(const std::string& model_name,
                          const std::string& split, double segment_seconds,
                          const Metrics& m);
void write_report(const std::string& path, const std::string& model_name,
                  const std::string& split, double segment_seconds,
                  const Metrics& m);

}  // namespace beamosd
