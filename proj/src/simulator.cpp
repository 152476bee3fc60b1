#include "beamosd/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "beamosd/fft.hpp"
#include "beamosd/runtime.hpp"
#include "beamosd/wav.hpp"
#include "json.hpp"

namespace beamosd {

namespace {
// Keeps two-source scenes well below clipping after int16 quantization.
constexpr double kSourceRms = 0.05;

void normalize_rms(std::vector<double>& x, double target) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  double rms = std::sqrt(acc / x.size());
  if (rms <= 0.0) return;
  double g = target / rms;
  for (double& v : x) v *= g;
}
}  // namespace

void SceneSpec::validate() const {
  require(!sources.empty() && sources.size() <= 2,
          "SceneSpec: 1 or 2 sources required");
  require(duration_s > 0.0, "SceneSpec: duration must be positive");
  for (const auto& s : sources) {
    require(s.azimuth_deg >= 0.0 && s.azimuth_deg < 360.0,
            "SceneSpec: azimuth must be in [0, 360)");
    require(s.f0 > 0.0, "SceneSpec: f0 must be positive");
  }
}

std::vector<double> render_source(const SourceSpec& src, double duration_s,
                                  double sample_rate, std::uint64_t seed) {
  const int n = static_cast<int>(std::lround(duration_s * sample_rate));
  std::vector<double> x(n, 0.0);
  Rng rng(seed);

  if (src.kind == SourceKind::kHarmonicTone) {
    const double nyquist_cap = 0.45 * sample_rate;
    for (int p = 1; p <= src.partials; ++p) {
      const double f = p * src.f0;
      if (f > nyquist_cap) break;
      const double amp = 1.0 / p;
      const double phase = rng.uniform(0.0, kTwoPi);
      const double w = kTwoPi * f / sample_rate;
      for (int t = 0; t < n; ++t) x[t] += amp * std::sin(w * t + phase);
    }
  } else {
    // Pitched noise: feedback comb at f0 puts resonances on the harmonics,
    // then a band tilt and a slow amplitude modulation roughen it up.
    std::vector<double> noise(n);
    for (int t = 0; t < n; ++t) noise[t] = rng.normal();
    const int delay = std::max(1, static_cast<int>(std::lround(sample_rate / src.f0)));
    for (int t = 0; t < n; ++t) {
      x[t] = noise[t] + (t >= delay ? 0.85 * x[t - delay] : 0.0);
    }
    const int nfft = next_pow2(n);
    cvec spec = rfft(x, nfft);
    for (int k = 0; k < static_cast<int>(spec.size()); ++k) {
      const double f = k * sample_rate / nfft;
      double g = 1.0;
      if (f < 150.0) g *= f / 150.0;
      if (f > 3500.0) g *= std::exp(-(f - 3500.0) / 800.0);
      g *= 300.0 / (300.0 + f);  // soft spectral tilt
      spec[k] *= g;
    }
    x = irfft(spec, nfft);
    x.resize(n);
    const double mod_rate = rng.uniform(2.5, 4.5);
    const double mod_phase = rng.uniform(0.0, kTwoPi);
    for (int t = 0; t < n; ++t) {
      double env = 0.65 + 0.35 * std::cos(kTwoPi * mod_rate * t / sample_rate +
                                          mod_phase);
      x[t] *= env;
    }
  }
  normalize_rms(x, kSourceRms * std::pow(10.0, src.level_db / 20.0));
  return x;
}

std::vector<std::vector<double>> spatialize(const std::vector<double>& mono,
                                            double azimuth_deg,
                                            const ArrayGeometry& geom,
                                            double sample_rate) {
  const int n = static_cast<int>(mono.size());
  const int nfft = next_pow2(n);
  const double theta = deg_to_rad(azimuth_deg);
  cvec spec = rfft(mono, nfft);

  std::vector<std::vector<double>> out(geom.num_mics);
  for (int m = 0; m < geom.num_mics; ++m) {
    const double gain = element_gain(geom, m, theta);
    const double tau = geom.radius *
                       std::cos(theta - geom.mic_azimuths[m]) /
                       geom.speed_of_sound;
    cvec shifted(spec.size());
    for (int k = 0; k < static_cast<int>(spec.size()); ++k) {
      const double omega = kTwoPi * k * sample_rate / nfft;
      const double phase = omega * tau;
      shifted[k] = spec[k] * gain * cplx(std::cos(phase), std::sin(phase));
    }
    // A real spectrum at Nyquist keeps the inverse transform real.
    shifted.back() = cplx(shifted.back().real(), 0.0);
    std::vector<double> y = irfft(shifted, nfft);
    y.resize(n);
    out[m] = std::move(y);
  }
  return out;
}

std::vector<std::vector<double>> synthesize_scene(const SceneSpec& spec,
                                                  const ArrayGeometry& geom) {
  spec.validate();
  const int n = static_cast<int>(std::lround(spec.duration_s * spec.sample_rate));
  std::vector<std::vector<double>> mix(geom.num_mics,
                                       std::vector<double>(n, 0.0));

  for (size_t s = 0; s < spec.sources.size(); ++s) {
    std::vector<double> mono = render_source(
        spec.sources[s], spec.duration_s, spec.sample_rate,
        mix_seed(spec.seed, 0x50 + s));
    auto channels = spatialize(mono, spec.sources[s].azimuth_deg, geom,
                               spec.sample_rate);
    for (int m = 0; m < geom.num_mics; ++m)
      for (int t = 0; t < n; ++t) mix[m][t] += channels[m][t];
  }

  if (spec.snr_db < 200.0) {
    double power = 0.0;
    for (const auto& ch : mix)
      for (double v : ch) power += v * v;
    power /= static_cast<double>(geom.num_mics) * n;
    const double sigma = std::sqrt(power * std::pow(10.0, -spec.snr_db / 10.0));
    for (int m = 0; m < geom.num_mics; ++m) {
      Rng rng(mix_seed(spec.seed, 0xA0 + m));
      for (int t = 0; t < n; ++t) mix[m][t] += sigma * rng.normal();
    }
  }
  return mix;
}

SceneSpec dataset_scene(int index, int n_segments, const DatasetOptions& opts,
                        std::uint64_t seed) {
  require(index >= 0 && index < n_segments, "dataset_scene: index out of range");
  const int n_overlap =
      static_cast<int>(std::lround(n_segments * opts.overlap_fraction));
  const bool overlap = index < n_overlap;

  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(index)));
  SceneSpec scene;
  scene.duration_s = opts.duration_s;
  scene.seed = mix_seed(seed, 0x10000 + static_cast<std::uint64_t>(index));
  scene.snr_db = rng.uniform(opts.snr_lo_db, opts.snr_hi_db);

  auto draw_source = [&rng](double azimuth) {
    SourceSpec src;
    src.azimuth_deg = azimuth;
    src.kind = rng.uniform() < 0.5 ? SourceKind::kHarmonicTone
                                   : SourceKind::kSpeechlikeNoise;
    src.f0 = rng.uniform(140.0, 280.0);
    src.partials = 8 + static_cast<int>(rng.uniform_index(9));
    src.level_db = rng.uniform(-3.0, 3.0);
    return src;
  };

  const double az1 = rng.uniform(0.0, 360.0);
  scene.sources.push_back(draw_source(az1));
  if (overlap) {
    double az2;
    do {
      az2 = rng.uniform(0.0, 360.0);
    } while (std::abs(angle_diff(deg_to_rad(az2), deg_to_rad(az1))) <
             deg_to_rad(opts.min_separation_deg));
    SourceSpec second = draw_source(az2);
    // Distinct pitch keeps the two harmonic structures separable.
    while (std::abs(std::log(second.f0 / scene.sources[0].f0)) < 0.12)
      second.f0 = rng.uniform(140.0, 280.0);
    scene.sources.push_back(second);
  }
  return scene;
}

std::vector<LabeledSegment> generate_dataset(int n_segments,
                                             const DatasetOptions& opts,
                                             const std::string& out_dir,
                                             std::uint64_t seed,
                                             const ArrayGeometry& geom) {
  require(n_segments >= 1, "generate_dataset: need at least one segment");
  require(opts.overlap_fraction >= 0.0 && opts.overlap_fraction <= 1.0,
          "generate_dataset: overlap_fraction must be in [0, 1]");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "wav", ec);
  if (ec) throw DataError("generate_dataset: cannot create " + out_dir);

  const int n_overlap =
      static_cast<int>(std::lround(n_segments * opts.overlap_fraction));
  const int test_every =
      opts.test_fraction > 0.0
          ? std::max(2, static_cast<int>(std::lround(1.0 / opts.test_fraction)))
          : 0;

  std::vector<LabeledSegment> segments(n_segments);
  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_segments; ++i) {
    try {
      SceneSpec scene = dataset_scene(i, n_segments, opts, seed);
      auto mix = synthesize_scene(scene, geom);

      char name[32];
      std::snprintf(name, sizeof(name), "seg%05d", i);
      LabeledSegment seg;
      seg.id = name;
      seg.label = scene.sources.size() == 2 ? 1 : 0;
      seg.wav = std::string("wav/") + name + ".wav";
      for (const auto& s : scene.sources) seg.azimuths_deg.push_back(s.azimuth_deg);
      seg.duration_s = opts.duration_s;
      // Stratified split: every k-th segment within its class goes to test.
      const int class_rank = seg.label == 1 ? i : i - n_overlap;
      seg.split = (test_every > 0 && class_rank % test_every == 0) ? "test"
                                                                   : "train";

      Audio audio;
      audio.sample_rate = 16000.0;
      audio.channels = std::move(mix);
      write_wav((fs::path(out_dir) / seg.wav).string(), audio);
      segments[i] = std::move(seg);
    } catch (const std::exception& e) {
#pragma omp critical
      failure = e.what();
    }
  }
  if (!failure.empty()) throw DataError("generate_dataset: " + failure);

  write_manifest((fs::path(out_dir) / "manifest.jsonl").string(), segments);
  return segments;
}

void write_manifest(const std::string& path,
                    const std::vector<LabeledSegment>& segments) {
  std::ofstream fp(path, std::ios::trunc);
  if (!fp) throw DataError("write_manifest: cannot open " + path);
  for (const auto& seg : segments) {
    nlohmann::ordered_json j;
    j["id"] = seg.id;
    j["label"] = seg.label;
    j["wav"] = seg.wav;
    j["azimuths"] = seg.azimuths_deg;
    j["duration_s"] = seg.duration_s;
    j["split"] = seg.split;
    fp << j.dump() << "\n";
  }
}

std::vector<LabeledSegment> read_manifest(const std::string& path) {
  std::ifstream fp(path);
  if (!fp) throw DataError("read_manifest: cannot open " + path);
  std::vector<LabeledSegment> segments;
  std::string line;
  int line_no = 0;
  while (std::getline(fp, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      LabeledSegment seg;
      seg.id = j.at("id").get<std::string>();
      seg.label = j.at("label").get<int>();
      seg.wav = j.at("wav").get<std::string>();
      seg.azimuths_deg = j.at("azimuths").get<std::vector<double>>();
      seg.duration_s = j.at("duration_s").get<double>();
      seg.split = j.at("split").get<std::string>();
      segments.push_back(std::move(seg));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("read_manifest: " + path + " line " +
                      std::to_string(line_no) + ": " + e.what());
    }
  }
  return segments;
}

}  // namespace beamosd
