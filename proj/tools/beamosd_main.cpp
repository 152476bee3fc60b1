// Command-line front end: simulation, feature extraction, beam analysis,
// training and evaluation as reproducible subcommands.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "beamosd/features.hpp"
#include "beamosd/nn/gradcheck.hpp"
#include "beamosd/spatial.hpp"
#include "beamosd/train.hpp"
#include "json.hpp"

using namespace beamosd;

namespace {

// Config-file overlay: every option registers a setter keyed by its long
// name; file values apply only where the command line stayed silent, so the
// precedence is flags > file > defaults. Unknown keys are rejected by name.
struct Binding {
  CLI::Option* opt = nullptr;
  std::function<void(const nlohmann::json&)> apply;
};
using Bindings = std::map<std::string, Binding>;

template <typename T>
void bind_opt(Bindings& b, CLI::Option* opt, T& target, const std::string& name) {
  b[name] = {opt, [&target, name](const nlohmann::json& v) {
               try {
                 target = v.get<T>();
               } catch (const nlohmann::json::exception&) {
                 throw ArgumentError("config: bad value for '" + name + "'");
               }
             }};
}

void apply_config(const std::string& path, const Bindings& bindings) {
  std::ifstream f(path);
  if (!f) throw DataError("config: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config: " + path + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("config: top-level JSON object expected");
  for (const auto& [key, value] : j.items()) {
    auto it = bindings.find(key);
    if (it == bindings.end())
      throw ArgumentError("config: unknown key '" + key + "'");
    if (it->second.opt->count() == 0) it->second.apply(value);
  }
}

std::string fmt(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::ofstream open_out(const std::string& path, const std::string& what) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(what + ": cannot write " + path);
  return out;
}

// ---- simulate ----

struct SimulateArgs {
  std::string out;
  int num = 200;
  double overlap_frac = 0.4;
  int seconds = 1;
  std::uint64_t seed = 1;
  double min_sep = 30.0;
  double test_fraction = 0.2;
};

void cmd_simulate(const SimulateArgs& a) {
  require(!a.out.empty(), "simulate: --out is required");
  require(a.num >= 1, "simulate: --num must be >= 1");
  require(a.seconds == 1 || a.seconds == 2, "simulate: --seconds must be 1 or 2");
  DatasetOptions opts;
  opts.duration_s = a.seconds;
  opts.overlap_fraction = a.overlap_frac;
  opts.min_separation_deg = a.min_sep;
  opts.test_fraction = a.test_fraction;
  const auto segments =
      generate_dataset(a.num, opts, a.out, a.seed, ArrayGeometry{});
  int overlaps = 0;
  for (const auto& s : segments) overlaps += s.label;
  std::cout << "wrote " << segments.size() << " segments (" << overlaps
            << " overlapping) under " << a.out << "\n";
}

// ---- features ----

struct FeaturesArgs {
  std::string wav, type = "beams", out;
  int fbank = 40;
};

void cmd_features(const FeaturesArgs& a) {
  require(!a.wav.empty(), "features: --wav is required");
  require(!a.out.empty(), "features: --out is required");
  require(a.fbank == 40 || a.fbank == 160, "features: --fbank must be 40 or 160");
  require(a.type == "beams" || a.type == "spatial" || a.type == "single",
          "features: --type must be beams, spatial or single");
  FeatureConfig cfg;
  cfg.fbank_dim = a.fbank;
  FeatureExtractor fx(cfg);
  const Audio audio = read_wav(a.wav);
  const std::uint64_t l = fx.num_frames(audio.num_samples());

  NamedTensor t;
  t.name = "features";
  if (a.type == "beams") {
    t.dims = {static_cast<std::uint64_t>(a.fbank), l, 8};
    t.data = interleave_beams(fx.beam_features(audio), a.fbank,
                              static_cast<int>(l));
  } else if (a.type == "spatial") {
    t.dims = {128, l};
    t.data = fx.spatial_features(audio);
  } else {
    t.dims = {static_cast<std::uint64_t>(a.fbank), l};
    t.data = fx.single_features(audio);
  }
  write_btns(a.out, {t});
  std::cout << "wrote " << a.type << " features [";
  for (size_t i = 0; i < t.dims.size(); ++i)
    std::cout << (i ? " x " : "") << t.dims[i];
  std::cout << "] to " << a.out << "\n";
}

// ---- beampattern ----

struct BeampatternArgs {
  int beam = 0;
  double freq = 1000.0;
  std::string out;
  int angles = 360;
};

void cmd_beampattern(const BeampatternArgs& a) {
  require(!a.out.empty(), "beampattern: --out is required");
  require(a.beam >= 0 && a.beam < kNumAcousticBeams,
          "beampattern: --beam must be in [0, 8)");
  require(a.angles >= 2, "beampattern: --angles must be >= 2");
  FeatureConfig cfg;
  FeatureExtractor fx(cfg);
  const BeamformerBank& bank = fx.acoustic_bank();

  std::ofstream out = open_out(a.out, "beampattern");
  out << "angle_deg,gain_real,gain_imag,gain_abs\n";
  for (int j = 0; j < a.angles; ++j) {
    const double deg = 360.0 * j / a.angles;
    const cplx gain = beampattern(bank, a.beam, a.freq, deg_to_rad(deg));
    out << fmt(deg, "%.6g") << ',' << fmt(gain.real()) << ','
        << fmt(gain.imag()) << ',' << fmt(std::abs(gain)) << "\n";
  }
  std::cout << "wrote beampattern of beam " << a.beam << " at " << a.freq
            << " Hz to " << a.out << "\n";
}

// ---- srp ----

struct SrpArgs {
  std::string wav, out;
  bool no_phat = false;
  int smooth = 5;
};

void cmd_srp(const SrpArgs& a) {
  require(!a.wav.empty(), "srp: --wav is required");
  require(!a.out.empty(), "srp: --out is required");
  FeatureConfig cfg;
  FeatureExtractor fx(cfg);
  const Audio audio = read_wav(a.wav);
  require(audio.num_channels() == 8, "srp: expected an 8 channel recording");

  std::vector<Stft> specs;
  for (const auto& ch : audio.channels) specs.push_back(stft(ch, cfg.stft));
  const int frames = specs[0].num_frames;
  const int bins = specs[0].num_bins;
  require(frames >= 1, "srp: audio shorter than one frame");
  std::vector<cvec> bin_major(frames);
  for (int t = 0; t < frames; ++t) {
    bin_major[t].resize(static_cast<size_t>(bins) * 8);
    for (int k = 0; k < bins; ++k)
      for (int m = 0; m < 8; ++m)
        bin_major[t][static_cast<size_t>(k) * 8 + m] = specs[m].frame(t)[k];
  }
  const SpatialSpectrum spec = spatial_spectrum(bin_major, fx.localization_bank(),
                                                !a.no_phat, a.smooth);

  std::ofstream out = open_out(a.out, "srp");
  out << "frame_index";
  for (int j = 0; j < spec.num_angles; ++j) out << ",p" << j;
  out << ",doa_deg_raw,doa_deg_smoothed\n";
  for (int t = 0; t < spec.num_frames; ++t) {
    out << t;
    for (int j = 0; j < spec.num_angles; ++j)
      out << ',' << fmt(spec.power[static_cast<size_t>(t) * spec.num_angles + j],
                        "%.9g");
    out << ',' << fmt(rad_to_deg(spec.doa_raw[t]), "%.6g") << ','
        << fmt(rad_to_deg(spec.doa_smoothed[t]), "%.6g") << "\n";
  }
  std::cout << "wrote " << spec.num_frames << " SRP frames to " << a.out << "\n";
}

// ---- train ----

struct TrainArgs {
  std::string manifest, model = "spatial", out;
  int epochs = 4;
  int batch = 16;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  int fbank = 40;
  int dim = 32;
  int heads = 4;
  int layers = 2;
  double threshold = 0.5;
};

void cmd_train(const TrainArgs& a) {
  require(!a.manifest.empty(), "train: --manifest is required");
  require(!a.out.empty(), "train: --out is required");
  const ModelKind kind = model_kind_from_name(a.model);

  FeatureConfig fcfg;
  fcfg.fbank_dim = a.fbank;
  FeatureExtractor fx(fcfg);
  const FeatureDataset data = extract_dataset(a.manifest, fx, streams_for(kind));

  ModelConfig mcfg;
  mcfg.kind = kind;
  mcfg.fbank_dim = a.fbank;
  mcfg.frames = data.frames;
  mcfg.model_dim = a.dim;
  mcfg.num_heads = a.heads;
  mcfg.pair_layers = a.layers;
  mcfg.spatial_layers = a.layers;
  mcfg.seed = a.seed;

  TrainConfig tcfg;
  tcfg.lr = a.lr;
  tcfg.batch_size = a.batch;
  tcfg.epochs = a.epochs;
  tcfg.seed = a.seed;
  tcfg.threshold = a.threshold;
  tcfg.out_dir = a.out;

  const TrainResult result = train_model(mcfg, tcfg, data);
  for (const EpochLog& row : result.log)
    std::cout << "epoch " << row.epoch << ": train_loss "
              << fmt(row.train_loss, "%.6g") << ", test_accuracy "
              << fmt(row.test.accuracy, "%.4g") << "\n";
  std::cout << "checkpoint: " << result.checkpoint_path << "\n";
}

// ---- eval ----

struct EvalArgs {
  std::string manifest, checkpoint, split = "test", report;
  double threshold = 0.5;
};

void cmd_eval(const EvalArgs& a) {
  require(!a.manifest.empty(), "eval: --manifest is required");
  require(!a.checkpoint.empty(), "eval: --checkpoint is required");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  FeatureConfig fcfg;
  fcfg.fbank_dim = ck.cfg.fbank_dim;
  FeatureExtractor fx(fcfg);
  const FeatureDataset data =
      extract_dataset(a.manifest, fx, streams_for(ck.cfg.kind));

  std::string model_name;
  const Metrics m = evaluate_checkpoint(a.checkpoint, data, a.split,
                                        a.threshold, &model_name);
  const std::string report =
      format_report(model_name, a.split, data.segment_seconds, m);
  std::cout << report;
  if (!a.report.empty()) {
    open_out(a.report, "eval") << report;
    std::cerr << "report written to " << a.report << "\n";
  }
}

// ---- gradcheck ----

struct GradcheckArgs {
  std::string model = "all";
  double tolerance = 1e-4;
  std::uint64_t seed = 77;
};

void cmd_gradcheck(const GradcheckArgs& a) {
  std::vector<ModelKind> kinds;
  if (a.model == "all")
    kinds = {ModelKind::kBaseline, ModelKind::kBeamTransformer,
             ModelKind::kSpatialNet, ModelKind::kCombined};
  else
    kinds = {model_kind_from_name(a.model)};

  double worst = 0.0;
  for (ModelKind kind : kinds) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.fbank_dim = 8;
    cfg.frames = 8;
    cfg.model_dim = 8;
    cfg.num_heads = 2;
    cfg.pair_layers = 1;
    cfg.baseline_layers = 1;
    cfg.spatial_layers = 1;
    cfg.seed = a.seed;
    BuiltModel<double> m = build_model<double>(cfg);

    Rng rng(mix_seed(a.seed, 0xF00D));
    auto fill = [&](int id) {
      if (id < 0) return;
      for (double& v : m.graph->at(id).val) v = rng.uniform(-1.5, 1.5);
    };
    for (int id : m.beam_inputs) fill(id);
    fill(m.spatial_input);
    fill(m.single_input);
    m.graph->at(m.label).val[0] = 1.0;

    std::vector<int> nodes;
    for (int id : m.graph->params()) nodes.push_back(id);
    for (int id : m.beam_inputs) nodes.push_back(id);
    if (m.spatial_input >= 0) nodes.push_back(m.spatial_input);
    if (m.single_input >= 0) nodes.push_back(m.single_input);

    Rng pick(mix_seed(a.seed, 0xC0FFEE));
    const GradCheckResult r =
        grad_check(*m.graph, m.loss, nodes, 200, 1e-5, pick);
    worst = std::max(worst, r.max_rel_err);
    std::cout << model_kind_name(kind) << ": max_rel_err "
              << fmt(r.max_rel_err, "%.3e") << " over " << r.coords_checked
              << " coordinates\n";
  }
  if (worst > a.tolerance)
    throw NumericError("gradcheck: max relative error " + fmt(worst, "%.3e") +
                       " exceeds tolerance " + fmt(a.tolerance, "%.3e"));
  std::cout << "gradcheck passed (tolerance " << fmt(a.tolerance, "%.1e")
            << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overlapping speech detection on a circular microphone array"};
  app.require_subcommand(1);

  bool serial = false;
  std::string config_path;
  Bindings global;
  bind_opt(global, app.add_flag("--serial", serial,
                            "Force single-threaded deterministic execution"),
       serial, "serial");
  app.add_option("--config", config_path,
                 "JSON config overlay (flags take precedence)");

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "Synthesize a labeled dataset");
  Bindings b_sim = global;
  bind_opt(b_sim, c_sim->add_option("--out", sim.out, "Output directory"), sim.out, "out");
  bind_opt(b_sim, c_sim->add_option("--num", sim.num, "Number of segments"), sim.num, "num");
  bind_opt(b_sim, c_sim->add_option("--overlap-frac", sim.overlap_frac,
                                "Fraction of overlapping segments"),
       sim.overlap_frac, "overlap-frac");
  bind_opt(b_sim, c_sim->add_option("--seconds", sim.seconds, "Segment length (1 or 2)"),
       sim.seconds, "seconds");
  bind_opt(b_sim, c_sim->add_option("--seed", sim.seed, "RNG seed"), sim.seed, "seed");
  bind_opt(b_sim, c_sim->add_option("--min-sep", sim.min_sep,
                                "Minimum angular separation (deg)"),
       sim.min_sep, "min-sep");
  bind_opt(b_sim, c_sim->add_option("--test-fraction", sim.test_fraction,
                                "Held-out fraction"),
       sim.test_fraction, "test-fraction");

  FeaturesArgs fea;
  CLI::App* c_fea = app.add_subcommand("features", "Extract features from a WAV");
  Bindings b_fea = global;
  bind_opt(b_fea, c_fea->add_option("--wav", fea.wav, "Input 8-channel WAV"), fea.wav, "wav");
  bind_opt(b_fea, c_fea->add_option("--type", fea.type, "beams, spatial or single"),
       fea.type, "type");
  bind_opt(b_fea, c_fea->add_option("--fbank", fea.fbank, "Filterbank size (40 or 160)"),
       fea.fbank, "fbank");
  bind_opt(b_fea, c_fea->add_option("--out", fea.out, "Output BTNS file"), fea.out, "out");

  BeampatternArgs bp;
  CLI::App* c_bp = app.add_subcommand("beampattern", "Export a beampattern CSV");
  Bindings b_bp = global;
  bind_opt(b_bp, c_bp->add_option("--beam", bp.beam, "Beam index [0, 8)"), bp.beam, "beam");
  bind_opt(b_bp, c_bp->add_option("--freq", bp.freq, "Frequency in Hz"), bp.freq, "freq");
  bind_opt(b_bp, c_bp->add_option("--angles", bp.angles, "Angular resolution"),
       bp.angles, "angles");
  bind_opt(b_bp, c_bp->add_option("--out", bp.out, "Output CSV"), bp.out, "out");

  SrpArgs srp;
  CLI::App* c_srp = app.add_subcommand("srp", "Export per-frame SRP spectra");
  Bindings b_srp = global;
  bind_opt(b_srp, c_srp->add_option("--wav", srp.wav, "Input 8-channel WAV"), srp.wav, "wav");
  bind_opt(b_srp, c_srp->add_flag("--no-phat", srp.no_phat, "Disable PHAT weighting"),
       srp.no_phat, "no-phat");
  bind_opt(b_srp, c_srp->add_option("--smooth", srp.smooth, "DOA smoothing window"),
       srp.smooth, "smooth");
  bind_opt(b_srp, c_srp->add_option("--out", srp.out, "Output CSV"), srp.out, "out");

  TrainArgs tra;
  CLI::App* c_tra = app.add_subcommand("train", "Train a detector");
  Bindings b_tra = global;
  bind_opt(b_tra, c_tra->add_option("--manifest", tra.manifest, "Dataset manifest"),
       tra.manifest, "manifest");
  bind_opt(b_tra, c_tra->add_option("--model", tra.model,
                                "baseline, bt, spatial or combined"),
       tra.model, "model");
  bind_opt(b_tra, c_tra->add_option("--out", tra.out, "Artifact directory"), tra.out, "out");
  bind_opt(b_tra, c_tra->add_option("--epochs", tra.epochs, "Training epochs"),
       tra.epochs, "epochs");
  bind_opt(b_tra, c_tra->add_option("--batch", tra.batch, "Mini-batch size"),
       tra.batch, "batch");
  bind_opt(b_tra, c_tra->add_option("--lr", tra.lr, "Learning rate"), tra.lr, "lr");
  bind_opt(b_tra, c_tra->add_option("--seed", tra.seed, "RNG seed"), tra.seed, "seed");
  bind_opt(b_tra, c_tra->add_option("--fbank", tra.fbank, "Filterbank size"),
       tra.fbank, "fbank");
  bind_opt(b_tra, c_tra->add_option("--dim", tra.dim, "Model dimension D"), tra.dim, "dim");
  bind_opt(b_tra, c_tra->add_option("--heads", tra.heads, "Attention heads"),
       tra.heads, "heads");
  bind_opt(b_tra, c_tra->add_option("--layers", tra.layers,
                                "Encoder layers per pair / SpatialNet stack "
                                "(the baseline always uses 6)"),
       tra.layers, "layers");
  bind_opt(b_tra, c_tra->add_option("--threshold", tra.threshold, "Decision threshold"),
       tra.threshold, "threshold");

  EvalArgs eva;
  CLI::App* c_eva = app.add_subcommand("eval", "Evaluate a checkpoint");
  Bindings b_eva = global;
  bind_opt(b_eva, c_eva->add_option("--manifest", eva.manifest, "Dataset manifest"),
       eva.manifest, "manifest");
  bind_opt(b_eva, c_eva->add_option("--checkpoint", eva.checkpoint, "Checkpoint file"),
       eva.checkpoint, "checkpoint");
  bind_opt(b_eva, c_eva->add_option("--split", eva.split, "train or test"),
       eva.split, "split");
  bind_opt(b_eva, c_eva->add_option("--threshold", eva.threshold, "Decision threshold"),
       eva.threshold, "threshold");
  bind_opt(b_eva, c_eva->add_option("--report", eva.report, "Also write the JSON here"),
       eva.report, "report");

  GradcheckArgs grc;
  CLI::App* c_grc = app.add_subcommand("gradcheck",
                                       "Finite-difference gradient check");
  Bindings b_grc = global;
  bind_opt(b_grc, c_grc->add_option("--model", grc.model,
                                "Model kind or 'all'"),
       grc.model, "model");
  bind_opt(b_grc, c_grc->add_option("--tolerance", grc.tolerance,
                                "Max relative error allowed"),
       grc.tolerance, "tolerance");
  bind_opt(b_grc, c_grc->add_option("--seed", grc.seed, "RNG seed"), grc.seed, "seed");

  try {
    app.parse(argc, argv);

    const std::map<const CLI::App*, const Bindings*> by_sub = {
        {c_sim, &b_sim}, {c_fea, &b_fea}, {c_bp, &b_bp},  {c_srp, &b_srp},
        {c_tra, &b_tra}, {c_eva, &b_eva}, {c_grc, &b_grc}};
    CLI::App* active = app.get_subcommands().front();
    if (!config_path.empty()) apply_config(config_path, *by_sub.at(active));

    init_threads(serial);

    if (active == c_sim) cmd_simulate(sim);
    else if (active == c_fea) cmd_features(fea);
    else if (active == c_bp) cmd_beampattern(bp);
    else if (active == c_srp) cmd_srp(srp);
    else if (active == c_tra) cmd_train(tra);
    else if (active == c_eva) cmd_eval(eva);
    else cmd_gradcheck(grc);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ArgumentError& e) {
    std::cerr << "beamosd: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "beamosd: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "beamosd: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "beamosd: unexpected: " << e.what() << "\n";
    return 1;
  }
}
