#pragma once

#include <string>
#include <vector>

#include "beamosd/beamformer.hpp"
#include "beamosd/dsp.hpp"
#include "beamosd/simulator.hpp"
#include "beamosd/wav.hpp"

namespace beamosd {

struct FeatureConfig {
  int fbank_dim = 40;
  StftConfig stft{};
  double band_lo = 300.0;   // beamformer design band, Hz
  double band_hi = 5000.0;
  double loading = 1e-9;
  bool phat = true;
  int num_angles = 120;  // localization grid

  void validate() const {
    require(fbank_dim >= 1, "FeatureConfig: fbank_dim must be >= 1");
    require(num_angles >= 2, "FeatureConfig: num_angles must be >= 2");
    stft.validate();
  }
};

// Shared front end: the 8-beam acoustic bank, the localization bank and the
// mel filterbanks are designed once and reused across segments. Extraction
// methods are const and safe to call from parallel workers.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const FeatureConfig& cfg);

  const FeatureConfig& config() const { return cfg_; }
  const ArrayGeometry& geometry() const { return geom_; }
  const BeamformerBank& acoustic_bank() const { return acoustic_; }
  const BeamformerBank& localization_bank() const { return localization_; }

  int num_frames(int num_samples) const {
    return cfg_.stft.num_frames(num_samples);
  }

  // Per-beam log-mel of the beamformed outputs, beam-major blocks of
  // [fbank_dim x L] row-major floats (8 blocks).
  std::vector<float> beam_features(const Audio& audio) const;
  // [128 x L]: SRP rows over the localization grid, then per-mic log
  // energies, time along columns.
  std::vector<float> spatial_features(const Audio& audio) const;
  // [fbank_dim x L]: log-mel of the reference microphone (channel 0).
  std::vector<float> single_features(const Audio& audio) const;

 private:
  std::vector<Stft> stft_channels(const Audio& audio) const;

  FeatureConfig cfg_;
  ArrayGeometry geom_;
  BeamformerBank acoustic_;
  BeamformerBank localization_;
  MelBank mel_beam_;    // clipped to the beamformer design band
  MelBank mel_single_;  // full band, no beamforming upstream
};

// Disk layout for beam features is [F x L x 8] with the beam index fastest;
// in memory the models want beam-major [8][F x L] blocks.
std::vector<float> interleave_beams(const std::vector<float>& beam_major,
                                    int fbank_dim, int frames);
std::vector<float> deinterleave_beams(const std::vector<float>& interleaved,
                                      int fbank_dim, int frames);

struct FeatureStreams {
  bool beams = false;
  bool spatial = false;
  bool single = false;
};

// Raw (un-normalized) features of one manifest segment.
struct SegmentFeatures {
  std::vector<float> beams;    // [8 * F * L] beam-major, empty if unrequested
  std::vector<float> spatial;  // [128 * L]
  std::vector<float> single;   // [F * L]
  int label = 0;
  std::string split;
  std::string id;
};

struct FeatureDataset {
  int fbank_dim = 0;
  int frames = 0;  // common L, trimmed to a multiple of 4
  double segment_seconds = 0.0;
  std::vector<SegmentFeatures> segments;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
};

// Reads every manifest segment, extracts the requested streams and trims all
// of them to a shared frame count divisible by 4 (the stride-2 prenet
// contract). Parallel over segments.
FeatureDataset extract_dataset(const std::string& manifest_path,
                               const FeatureExtractor& fx,
                               const FeatureStreams& streams);

}  // namespace beamosd
