#include "beamosd/features.hpp"

#include <algorithm>
#include <filesystem>

#include "beamosd/spatial.hpp"

namespace beamosd {

FeatureExtractor::FeatureExtractor(const FeatureConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const FrequencyGrid fg = cfg_.stft.freq_grid();
  acoustic_ = design_bank(geom_, default_look_angles(), fg, cfg_.band_lo,
                          cfg_.band_hi, cfg_.loading);
  AngleGrid grid(cfg_.num_angles, 360.0 / cfg_.num_angles);
  localization_ = design_bank(geom_, grid_look_angles(grid), fg, cfg_.band_lo,
                              cfg_.band_hi, cfg_.loading);
  mel_beam_ = make_mel_bank(cfg_.fbank_dim, cfg_.stft, cfg_.band_lo, cfg_.band_hi);
  mel_single_ = make_mel_bank(cfg_.fbank_dim, cfg_.stft, 0.0,
                              cfg_.stft.sample_rate / 2.0);
}

std::vector<Stft> FeatureExtractor::stft_channels(const Audio& audio) const {
  require(audio.num_channels() == geom_.num_mics,
          "FeatureExtractor: expected " + std::to_string(geom_.num_mics) +
              " channels, got " + std::to_string(audio.num_channels()));
  require(std::abs(audio.sample_rate - cfg_.stft.sample_rate) < 1e-6,
          "FeatureExtractor: sample rate mismatch");
  std::vector<Stft> out;
  out.reserve(audio.channels.size());
  for (const auto& ch : audio.channels) out.push_back(stft(ch, cfg_.stft));
  require(out[0].num_frames >= 1, "FeatureExtractor: audio shorter than one frame");
  return out;
}

namespace {

// channel STFTs -> one bin-major frame vector frame[k * M + m].
void gather_frame(const std::vector<Stft>& chans, int t, cvec& frame) {
  const int m_total = static_cast<int>(chans.size());
  const int bins = chans[0].num_bins;
  frame.resize(static_cast<size_t>(bins) * m_total);
  for (int m = 0; m < m_total; ++m) {
    const cplx* src = chans[m].frame(t);
    for (int k = 0; k < bins; ++k) frame[static_cast<size_t>(k) * m_total + m] = src[k];
  }
}

// Frame-major [L x F] doubles -> row-major [F x L] floats.
void transpose_to_rows(const std::vector<double>& frame_major, int frames,
                       int dim, float* out) {
  for (int t = 0; t < frames; ++t)
    for (int f = 0; f < dim; ++f)
      out[static_cast<size_t>(f) * frames + t] =
          static_cast<float>(frame_major[static_cast<size_t>(t) * dim + f]);
}

}  // namespace

std::vector<float> FeatureExtractor::beam_features(const Audio& audio) const {
  const std::vector<Stft> chans = stft_channels(audio);
  const int frames = chans[0].num_frames;
  const int bins = chans[0].num_bins;
  const int f_dim = cfg_.fbank_dim;

  std::vector<float> out(static_cast<size_t>(kNumAcousticBeams) * f_dim * frames);
  cvec frame;
  // Beamform every frame once, reusing the gathered bin-major spectra for
  // all 8 beams, then run the mel stage per beam.
  std::vector<Stft> beam_spec(kNumAcousticBeams);
  for (auto& s : beam_spec) {
    s.num_frames = frames;
    s.num_bins = bins;
    s.data.resize(static_cast<size_t>(frames) * bins);
  }
  for (int t = 0; t < frames; ++t) {
    gather_frame(chans, t, frame);
    for (int b = 0; b < kNumAcousticBeams; ++b) {
      cvec y = apply_beamformer(acoustic_, frame, b);
      std::copy(y.begin(), y.end(), beam_spec[b].frame(t));
    }
  }
  for (int b = 0; b < kNumAcousticBeams; ++b) {
    const std::vector<double> lm = log_mel(beam_spec[b], mel_beam_);
    transpose_to_rows(lm, frames, f_dim,
                      &out[static_cast<size_t>(b) * f_dim * frames]);
  }
  return out;
}

std::vector<float> FeatureExtractor::spatial_features(const Audio& audio) const {
  const std::vector<Stft> chans = stft_channels(audio);
  const int frames = chans[0].num_frames;
  std::vector<cvec> bin_major(frames);
  for (int t = 0; t < frames; ++t) gather_frame(chans, t, bin_major[t]);

  const std::vector<double> energies = log_energy(audio.channels, cfg_.stft);
  const std::vector<float> fm = spatial_feature(bin_major, energies,
                                                geom_.num_mics, localization_,
                                                cfg_.phat);
  const int dim = cfg_.num_angles + geom_.num_mics;
  std::vector<float> out(static_cast<size_t>(dim) * frames);
  for (int t = 0; t < frames; ++t)
    for (int d = 0; d < dim; ++d)
      out[static_cast<size_t>(d) * frames + t] =
          fm[static_cast<size_t>(t) * dim + d];
  return out;
}

std::vector<float> FeatureExtractor::single_features(const Audio& audio) const {
  require(audio.num_channels() >= 1, "FeatureExtractor: empty audio");
  const Stft spec = stft(audio.channels[0], cfg_.stft);
  require(spec.num_frames >= 1, "FeatureExtractor: audio shorter than one frame");
  const std::vector<double> lm = log_mel(spec, mel_single_);
  std::vector<float> out(static_cast<size_t>(cfg_.fbank_dim) * spec.num_frames);
  transpose_to_rows(lm, spec.num_frames, cfg_.fbank_dim, out.data());
  return out;
}

std::vector<float> interleave_beams(const std::vector<float>& beam_major,
                                    int fbank_dim, int frames) {
  const size_t plane = static_cast<size_t>(fbank_dim) * frames;
  require(beam_major.size() == plane * kNumAcousticBeams,
          "interleave_beams: size mismatch");
  std::vector<float> out(beam_major.size());
  for (int b = 0; b < kNumAcousticBeams; ++b)
    for (size_t i = 0; i < plane; ++i)
      out[i * kNumAcousticBeams + b] = beam_major[b * plane + i];
  return out;
}

std::vector<float> deinterleave_beams(const std::vector<float>& interleaved,
                                      int fbank_dim, int frames) {
  const size_t plane = static_cast<size_t>(fbank_dim) * frames;
  require(interleaved.size() == plane * kNumAcousticBeams,
          "deinterleave_beams: size mismatch");
  std::vector<float> out(interleaved.size());
  for (int b = 0; b < kNumAcousticBeams; ++b)
    for (size_t i = 0; i < plane; ++i)
      out[b * plane + i] = interleaved[i * kNumAcousticBeams + b];
  return out;
}

namespace {

// Keep the first `keep` of `total` columns of a row-major [rows x total]
// block, in place.
void trim_cols(std::vector<float>& data, int rows, int total, int keep) {
  if (data.empty() || keep == total) return;
  for (int r = 1; r < rows; ++r)
    std::copy(data.begin() + static_cast<size_t>(r) * total,
              data.begin() + static_cast<size_t>(r) * total + keep,
              data.begin() + static_cast<size_t>(r) * keep);
  data.resize(static_cast<size_t>(rows) * keep);
}

}  // namespace

FeatureDataset extract_dataset(const std::string& manifest_path,
                               const FeatureExtractor& fx,
                               const FeatureStreams& streams) {
  require(streams.beams || streams.spatial || streams.single,
          "extract_dataset: no feature streams requested");
  const std::vector<LabeledSegment> manifest = read_manifest(manifest_path);
  require(!manifest.empty(), "extract_dataset: empty manifest");
  const std::filesystem::path root =
      std::filesystem::path(manifest_path).parent_path();

  const int n = static_cast<int>(manifest.size());
  FeatureDataset ds;
  ds.fbank_dim = fx.config().fbank_dim;
  ds.segment_seconds = manifest[0].duration_s;
  ds.segments.resize(n);
  std::vector<int> raw_frames(n, 0);
  std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const Audio audio = read_wav((root / manifest[i].wav).string());
      SegmentFeatures& seg = ds.segments[i];
      seg.label = manifest[i].label;
      seg.split = manifest[i].split;
      seg.id = manifest[i].id;
      raw_frames[i] = fx.num_frames(audio.num_samples());
      if (streams.beams) seg.beams = fx.beam_features(audio);
      if (streams.spatial) seg.spatial = fx.spatial_features(audio);
      if (streams.single) seg.single = fx.single_features(audio);
    } catch (const std::exception& e) {
      errors[i] = manifest[i].id + ": " + e.what();
    }
  }
  for (const auto& err : errors)
    if (!err.empty()) throw DataError("extract_dataset: " + err);

  const int raw = *std::min_element(raw_frames.begin(), raw_frames.end());
  for (int i = 0; i < n; ++i)
    require(raw_frames[i] == raw,
            "extract_dataset: segment " + manifest[i].id + " has " +
                std::to_string(raw_frames[i]) + " frames, expected " +
                std::to_string(raw));
  const int keep = (raw / 4) * 4;
  require(keep >= 4, "extract_dataset: segments too short (" +
                         std::to_string(raw) + " frames)");
  ds.frames = keep;

  for (int i = 0; i < n; ++i) {
    SegmentFeatures& seg = ds.segments[i];
    trim_cols(seg.beams, kNumAcousticBeams * ds.fbank_dim, raw, keep);
    trim_cols(seg.spatial, fx.config().num_angles + fx.geometry().num_mics,
              raw, keep);
    trim_cols(seg.single, ds.fbank_dim, raw, keep);
    (seg.split == "test" ? ds.test_indices : ds.train_indices).push_back(i);
  }
  require(!ds.train_indices.empty(), "extract_dataset: no training segments");
  return ds;
}

}  // namespace beamosd
