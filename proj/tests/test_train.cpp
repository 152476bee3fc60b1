#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "beamosd/train.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace beamosd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("beamosd_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(f), {});
}

// One shared simulated dataset: 40 half-second segments, half of them
// overlaps, all three feature streams extracted once.
struct SharedData {
  TempDir dir{"train_shared"};
  FeatureDataset ds;
};

const SharedData& shared() {
  static SharedData s = [] {
    SharedData x;
    DatasetOptions opts;
    opts.duration_s = 0.5;
    opts.overlap_fraction = 0.5;
    generate_dataset(40, opts, x.dir.path.string(), 1234, ArrayGeometry{});
    FeatureExtractor fx(FeatureConfig{});
    FeatureStreams st;
    st.beams = st.spatial = st.single = true;
    x.ds = extract_dataset((x.dir.path / "manifest.jsonl").string(), fx, st);
    return x;
  }();
  return s;
}

ModelConfig small_spatial() {
  ModelConfig cfg;
  cfg.kind = ModelKind::kSpatialNet;
  cfg.model_dim = 8;
  cfg.num_heads = 2;
  cfg.spatial_layers = 1;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("metrics: perfect predictions") {
  Metrics m = compute_metrics({1, 0, 1, 0}, {1, 0, 1, 0});
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.fscore == 1.0);
  CHECK(m.tp == 2);
  CHECK(m.tn == 2);
}

TEST_CASE("metrics: hand confusion matrix") {
  std::vector<int> preds, labels;
  auto emit = [&](int p, int y, int count) {
    for (int i = 0; i < count; ++i) {
      preds.push_back(p);
      labels.push_back(y);
    }
  };
  emit(1, 1, 3);  // tp
  emit(1, 0, 1);  // fp
  emit(0, 1, 2);  // fn
  emit(0, 0, 4);  // tn
  Metrics m = compute_metrics(preds, labels);
  CHECK(m.tp == 3);
  CHECK(m.fp == 1);
  CHECK(m.fn == 2);
  CHECK(m.tn == 4);
  CHECK(m.accuracy == 0.7);
  CHECK(m.precision == 0.75);
  CHECK(m.recall == 0.6);
  CHECK(m.fscore == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // The emitted f-score is the exact harmonic mean of the emitted P and R.
  CHECK(m.fscore == 2.0 * m.precision * m.recall / (m.precision + m.recall));
}

TEST_CASE("metrics: harmonic-mean consistency at P=0.754, R=0.746") {
  // Smallest integer confusion with exactly these rates:
  // P = 377/500 needs tp divisible by 377, R = 373/500 needs tp divisible
  // by 373, so tp = 754 * 373 = 281242.
  const int tp = 754 * 373, fp = 373000 - tp, fn = 377000 - tp;
  std::vector<int> preds, labels;
  preds.reserve(tp + fp + fn);
  labels.reserve(tp + fp + fn);
  for (int i = 0; i < tp; ++i) { preds.push_back(1); labels.push_back(1); }
  for (int i = 0; i < fp; ++i) { preds.push_back(1); labels.push_back(0); }
  for (int i = 0; i < fn; ++i) { preds.push_back(0); labels.push_back(1); }
  Metrics m = compute_metrics(preds, labels);
  CHECK(m.precision == 0.754);
  CHECK(m.recall == 0.746);
  CHECK(std::abs(m.fscore - 0.750) <= 5e-4);  // 0.750 at report precision
}

TEST_CASE("metrics: zero denominators report zero with cleared flags") {
  Metrics m = compute_metrics({0, 0, 0}, {0, 0, 0});
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.fscore == 0.0);
  CHECK_FALSE(m.precision_defined);
  CHECK_FALSE(m.recall_defined);
  CHECK_FALSE(m.fscore_defined);

  Metrics n = compute_metrics({0, 0}, {1, 0});
  CHECK(n.precision == 0.0);
  CHECK_FALSE(n.precision_defined);
  CHECK(n.recall == 0.0);
  CHECK(n.recall_defined);  // tp + fn > 0, recall is simply zero
}

TEST_CASE("metrics: agrees with a naive recount on random pairs") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(12));
    std::vector<int> preds(n), labels(n);
    for (int i = 0; i < n; ++i) {
      preds[i] = static_cast<int>(rng.uniform_index(2));
      labels[i] = static_cast<int>(rng.uniform_index(2));
    }
    Metrics m = compute_metrics(preds, labels);
    long tp = 0, fp = 0, tn = 0, fn = 0, correct = 0;
    for (int i = 0; i < n; ++i) {
      tp += preds[i] == 1 && labels[i] == 1;
      fp += preds[i] == 1 && labels[i] == 0;
      tn += preds[i] == 0 && labels[i] == 0;
      fn += preds[i] == 0 && labels[i] == 1;
      correct += preds[i] == labels[i];
    }
    CHECK(m.tp == tp);
    CHECK(m.fp == fp);
    CHECK(m.tn == tn);
    CHECK(m.fn == fn);
    CHECK(m.accuracy == static_cast<double>(correct) / n);
  }
}

TEST_CASE("metrics: input validation") {
  CHECK_THROWS_AS(compute_metrics({}, {}), ArgumentError);
  CHECK_THROWS_AS(compute_metrics({1}, {1, 0}), ArgumentError);
  CHECK_THROWS_AS(compute_metrics({2}, {1}), ArgumentError);
}

TEST_CASE("adam: first two bias-corrected steps match hand arithmetic") {
  Graph<float> g;
  int w = g.param({1}, "w");
  g.at(w).val[0] = 1.0f;
  TrainConfig tc;
  Adam opt(g, tc);

  // With a constant gradient the bias-corrected update is lr * g/(|g|+eps).
  g.at(w).grad[0] = 0.5f;
  opt.step();
  CHECK(g.at(w).val[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
  g.at(w).grad[0] = 0.5f;
  opt.step();
  CHECK(g.at(w).val[0] == doctest::Approx(1.0 - 2e-3).epsilon(1e-6));
}

TEST_CASE("norm stats and input normalization on a hand-built dataset") {
  FeatureDataset ds;
  ds.fbank_dim = 2;
  ds.frames = 4;
  ds.segment_seconds = 0.25;
  ds.segments.resize(2);
  // Row 0 over both segments: {1,1,3,3, 1,3,1,3} -> mean 2, var 1.
  // Row 1 constant 5 -> std floored at 1e-6.
  ds.segments[0].single = {1, 1, 3, 3, 5, 5, 5, 5};
  ds.segments[1].single = {1, 3, 1, 3, 5, 5, 5, 5};
  ds.segments[0].label = 1;
  ds.segments[1].label = 0;
  ds.train_indices = {0, 1};

  NormStats norm = compute_norm_stats(ds, ModelKind::kBaseline);
  REQUIRE(norm.single_mean.size() == 2);
  CHECK(norm.single_mean[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(norm.single_std[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(norm.single_mean[1] == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(norm.single_std[1] == 1e-6f);
  CHECK(norm.beams_mean.empty());
  CHECK(norm.spatial_mean.empty());

  ModelConfig cfg;
  cfg.kind = ModelKind::kBaseline;
  cfg.fbank_dim = 2;
  cfg.frames = 4;
  cfg.model_dim = 4;
  cfg.num_heads = 2;
  cfg.baseline_layers = 1;
  BuiltModel<float> model = build_model<float>(cfg);
  set_inputs(model, ds.segments[0], ds, norm);
  const auto& v = model.graph->at(model.single_input).val;
  CHECK(v[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(v[2] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(v[4] == 0.0f);  // constant row normalizes to zero
  CHECK(model.graph->at(model.label).val[0] == 1.0f);

  SegmentFeatures empty;
  CHECK_THROWS_WITH_AS(set_inputs(model, empty, ds, norm),
                       doctest::Contains("lacks"), ArgumentError);
}

TEST_CASE("training run: loss falls, artifacts appear, reruns are identical") {
  const FeatureDataset& ds = shared().ds;
  TempDir out_a("train_run_a");
  TempDir out_b("train_run_b");

  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 8;
  tc.seed = 99;
  tc.out_dir = out_a.path.string();
  TrainResult a = train_model(small_spatial(), tc, ds);

  REQUIRE(a.log.size() == 3);
  CHECK(a.log[2].train_loss < a.log[0].train_loss);
  for (const EpochLog& row : a.log) CHECK(std::isfinite(row.train_loss));
  CHECK(a.log[2].test.accuracy >= 0.5);
  CHECK(fs::exists(out_a.path / "checkpoint_epoch0.btns"));
  CHECK(fs::exists(out_a.path / "checkpoint_epoch2.btns"));
  CHECK(fs::exists(a.checkpoint_path));

  std::ifstream log(out_a.path / "log.jsonl");
  std::string line;
  int rows = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("epoch") == rows);
    CHECK(j.contains("train_loss"));
    CHECK(j.contains("test_accuracy"));
    ++rows;
  }
  CHECK(rows == 3);

  tc.out_dir = out_b.path.string();
  TrainResult b = train_model(small_spatial(), tc, ds);
  CHECK(slurp(a.checkpoint_path) == slurp(b.checkpoint_path));
  CHECK(slurp((out_a.path / "log.jsonl").string()) ==
        slurp((out_b.path / "log.jsonl").string()));
}

TEST_CASE("checkpoint round trip preserves the model exactly") {
  const FeatureDataset& ds = shared().ds;
  TempDir out("train_roundtrip");
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  tc.out_dir = out.path.string();
  TrainResult r = train_model(small_spatial(), tc, ds);

  Checkpoint ck = load_checkpoint(r.checkpoint_path);
  CHECK(ck.cfg.kind == ModelKind::kSpatialNet);
  CHECK(ck.cfg.frames == ds.frames);
  CHECK(ck.cfg.model_dim == 8);
  CHECK(!ck.norm.spatial_mean.empty());
  CHECK(ck.norm.beams_mean.empty());
  CHECK(!ck.params.empty());

  std::string name;
  Metrics via_file = evaluate_checkpoint(r.checkpoint_path, ds, "test", 0.5,
                                         &name);
  CHECK(name == "spatial");
  // The retrained in-memory model evaluated directly must agree.
  CHECK(via_file.accuracy == r.log.back().test.accuracy);
  CHECK(via_file.tp == r.log.back().test.tp);
  CHECK(via_file.fn == r.log.back().test.fn);

  // Thresholding near one can only lose recall.
  Metrics strict = evaluate_checkpoint(r.checkpoint_path, ds, "test",
                                       1.0 - 1e-9);
  CHECK(strict.recall <= via_file.recall);

  CHECK_THROWS_AS(evaluate_checkpoint(r.checkpoint_path, ds, "validation", 0.5),
                  ArgumentError);
}

TEST_CASE("checkpoint tampering is detected") {
  const FeatureDataset& ds = shared().ds;
  TempDir out("train_tamper");
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  tc.out_dir = out.path.string();
  TrainResult r = train_model(small_spatial(), tc, ds);

  std::vector<NamedTensor> ts = read_btns(r.checkpoint_path);

  // Drop the last parameter tensor.
  std::vector<NamedTensor> missing(ts.begin(), ts.end() - 1);
  const std::string p1 = (out.path / "missing.btns").string();
  write_btns(p1, missing);
  CHECK_THROWS_WITH_AS(evaluate_checkpoint(p1, ds, "test", 0.5),
                       doctest::Contains("missing parameter"), DataError);

  // Add a stray tensor.
  std::vector<NamedTensor> extra = ts;
  extra.push_back({"stray.w", {2}, {1.0f, 2.0f}});
  const std::string p2 = (out.path / "extra.btns").string();
  write_btns(p2, extra);
  CHECK_THROWS_WITH_AS(evaluate_checkpoint(p2, ds, "test", 0.5),
                       doctest::Contains("do not match"), DataError);

  // Corrupt a parameter's shape.
  std::vector<NamedTensor> resized = ts;
  for (auto& t : resized)
    if (t.name.rfind("cfg.", 0) != 0 && t.name.rfind("norm.", 0) != 0) {
      t.dims = {1};
      t.data = {0.0f};
      break;
    }
  const std::string p3 = (out.path / "resized.btns").string();
  write_btns(p3, resized);
  CHECK_THROWS_WITH_AS(evaluate_checkpoint(p3, ds, "test", 0.5),
                       doctest::Contains("size mismatch"), DataError);
}

TEST_CASE("evaluate rejects a dataset whose frame count disagrees") {
  const FeatureDataset& ds = shared().ds;
  TempDir out("train_frames");
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  tc.out_dir = out.path.string();
  TrainResult r = train_model(small_spatial(), tc, ds);

  FeatureDataset other = ds;
  other.frames = ds.frames - 4;
  CHECK_THROWS_WITH_AS(evaluate_checkpoint(r.checkpoint_path, other, "test", 0.5),
                       doctest::Contains(std::to_string(ds.frames).c_str()),
                       DataError);
}

TEST_CASE("random-init model scores at chance on the balanced test split") {
  const FeatureDataset& ds = shared().ds;
  // The 50% overlap fixture yields a balanced test split by construction.
  int positives = 0;
  for (int idx : ds.test_indices) positives += ds.segments[idx].label;
  REQUIRE(positives * 2 == static_cast<int>(ds.test_indices.size()));

  ModelConfig cfg = small_spatial();
  cfg.seed = 3;
  BuiltModel<float> model = build_model<float>(cfg);
  // Match the leaf shapes the dataset will feed.
  cfg.frames = ds.frames;
  model = build_model<float>(cfg);
  NormStats norm = compute_norm_stats(ds, cfg.kind);
  Metrics m = evaluate_model(model, norm, ds, ds.test_indices, 0.5);
  CHECK(m.accuracy >= 0.25);
  CHECK(m.accuracy <= 0.75);
}

TEST_CASE("report JSON layout") {
  Metrics m = compute_metrics({1, 0, 1}, {1, 1, 1});
  const std::string text = format_report("bt", "test", 1.0, m);
  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("model") == "bt");
  CHECK(j.at("split") == "test");
  CHECK(j.at("segment_seconds") == 1.0);
  CHECK(j.at("accuracy") == m.accuracy);
  CHECK(j.at("precision") == m.precision);
  CHECK(j.at("recall") == m.recall);
  CHECK(j.at("fscore") == m.fscore);
  CHECK(j.at("confusion").at("tp") == 2);
  CHECK(j.at("confusion").at("fn") == 1);

  TempDir dir("report");
  const std::string path = (dir.path / "report.json").string();
  write_report(path, "bt", "test", 1.0, m);
  std::ifstream f(path);
  std::string content((std::istreambuf_iterator<char>(f)), {});
  CHECK(content == text);
}
