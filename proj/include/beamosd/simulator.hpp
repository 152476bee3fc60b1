#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beamosd/array.hpp"
#include "beamosd/common.hpp"

namespace beamosd {

enum class SourceKind { kHarmonicTone, kSpeechlikeNoise };

struct SourceSpec {
  double azimuth_deg = 0.0;  // [0, 360)
  SourceKind kind = SourceKind::kHarmonicTone;
  double f0 = 220.0;     // Hz
  int partials = 12;     // harmonic tones only
  double level_db = 0.0; // relative
};

struct SceneSpec {
  std::vector<SourceSpec> sources;  // 1 or 2
  double duration_s = 1.0;
  double snr_db = 20.0;  // diffuse noise; >= 200 means noiseless
  std::uint64_t seed = 0;
  double sample_rate = 16000.0;

  void validate() const;
};

// Far-field free-field synthesis: each source is rendered through the
// frequency-domain steering response (element gain x phase advance per mic),
// sources are summed, then independent white noise is added per mic at the
// requested SNR. Deterministic given the seed.
std::vector<std::vector<double>> synthesize_scene(const SceneSpec& spec,
                                                  const ArrayGeometry& geom);

// Mono source waveform before spatialization (exposed for power-attribution
// tests).
std::vector<double> render_source(const SourceSpec& src, double duration_s,
                                  double sample_rate, std::uint64_t seed);

// Spatialize one mono waveform arriving from `azimuth_deg`.
std::vector<std::vector<double>> spatialize(const std::vector<double>& mono,
                                            double azimuth_deg,
                                            const ArrayGeometry& geom,
                                            double sample_rate);

struct LabeledSegment {
  std::string id;
  int label = 0;  // 1 = overlap
  std::string wav;  // path relative to the manifest directory
  std::vector<double> azimuths_deg;
  double duration_s = 1.0;
  std::string split;  // "train" or "test"
};

struct DatasetOptions {
  double duration_s = 1.0;
  double overlap_fraction = 0.4;
  double min_separation_deg = 30.0;
  double snr_lo_db = 15.0;
  double snr_hi_db = 25.0;
  double test_fraction = 0.2;
};

// Writes wav/ segment files plus a JSON-lines manifest and returns the
// parsed entries. Per-segment RNG streams are derived from (seed, index),
// so parallel and serial runs produce identical output.
std::vector<LabeledSegment> generate_dataset(int n_segments,
                                             const DatasetOptions& opts,
                                             const std::string& out_dir,
                                             std::uint64_t seed,
                                             const ArrayGeometry& geom);

// Draws the scene for segment `index` without rendering it.
SceneSpec dataset_scene(int index, int n_segments, const DatasetOptions& opts,
                        std::uint64_t seed);

std::vector<LabeledSegment> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<LabeledSegment>& segments);

}  // namespace beamosd
