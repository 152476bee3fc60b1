#include "beamosd/dsp.hpp"

#include <cmath>

#include "beamosd/fft.hpp"

namespace beamosd {

Stft stft(const std::vector<double>& signal, const StftConfig& cfg) {
  cfg.validate();
  require(static_cast<int>(signal.size()) >= cfg.win_len,
          "stft: signal shorter than one window");
  const int frames = cfg.num_frames(static_cast<int>(signal.size()));
  const int bins = cfg.num_bins();

  // Periodic Hann.
  std::vector<double> window(cfg.win_len);
  for (int i = 0; i < cfg.win_len; ++i)
    window[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / cfg.win_len);

  Stft out;
  out.num_frames = frames;
  out.num_bins = bins;
  out.data.resize(static_cast<size_t>(frames) * bins);

#pragma omp parallel for schedule(static)
  for (int t = 0; t < frames; ++t) {
    cvec buf(cfg.fft_size, cplx(0, 0));
    const double* src = signal.data() + static_cast<size_t>(t) * cfg.hop;
    for (int i = 0; i < cfg.win_len; ++i) buf[i] = cplx(src[i] * window[i], 0);
    fft_inplace(buf, false);
    cplx* dst = out.frame(t);
    for (int k = 0; k < bins; ++k) dst[k] = buf[k];
  }
  return out;
}

namespace {
double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}
}  // namespace

MelBank make_mel_bank(int num_mels, const StftConfig& cfg, double band_lo,
                      double band_hi) {
  require(num_mels >= 1, "make_mel_bank: num_mels must be >= 1");
  require(band_lo >= 0.0 && band_hi <= cfg.sample_rate / 2.0 && band_lo < band_hi,
          "make_mel_bank: band must lie within [0, sample_rate/2]");
  MelBank bank;
  bank.num_mels = num_mels;
  bank.num_bins = cfg.num_bins();
  bank.band_lo = band_lo;
  bank.band_hi = band_hi;
  bank.weights.assign(static_cast<size_t>(num_mels) * bank.num_bins, 0.0);
  bank.center_freqs.resize(num_mels);

  const double mel_lo = hz_to_mel(band_lo);
  const double mel_hi = hz_to_mel(band_hi);
  std::vector<double> edges(num_mels + 2);
  for (int i = 0; i < num_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (num_mels + 1));

  for (int f = 0; f < num_mels; ++f) {
    const double lo = edges[f], mid = edges[f + 1], hi = edges[f + 2];
    bank.center_freqs[f] = mid;
    double* w = &bank.weights[static_cast<size_t>(f) * bank.num_bins];
    for (int k = 0; k < bank.num_bins; ++k) {
      const double hz = k * cfg.sample_rate / cfg.fft_size;
      if (hz <= lo || hz >= hi) continue;
      w[k] = hz <= mid ? (hz - lo) / (mid - lo) : (hi - hz) / (hi - mid);
    }
  }
  return bank;
}

std::vector<double> log_mel(const Stft& spectra, const MelBank& bank) {
  require(spectra.num_bins == bank.num_bins,
          "log_mel: spectra/bank bin count mismatch");
  const int frames = spectra.num_frames;
  std::vector<double> out(static_cast<size_t>(frames) * bank.num_mels);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < frames; ++t) {
    const cplx* x = spectra.frame(t);
    std::vector<double> power(bank.num_bins);
    for (int k = 0; k < bank.num_bins; ++k) power[k] = std::norm(x[k]);
    for (int f = 0; f < bank.num_mels; ++f) {
      const double* w = bank.filter(f);
      double acc = 0.0;
      for (int k = 0; k < bank.num_bins; ++k) acc += w[k] * power[k];
      out[static_cast<size_t>(t) * bank.num_mels + f] = std::log(kLogFloor + acc);
    }
  }
  return out;
}

std::vector<double> log_energy(const std::vector<std::vector<double>>& channels,
                               const StftConfig& cfg) {
  cfg.validate();
  require(!channels.empty(), "log_energy: no channels");
  const size_t len = channels[0].size();
  for (const auto& ch : channels)
    require(ch.size() == len, "log_energy: channel length mismatch");
  require(static_cast<int>(len) >= cfg.win_len,
          "log_energy: signal shorter than one window");

  const int frames = cfg.num_frames(static_cast<int>(len));
  const int m = static_cast<int>(channels.size());
  std::vector<double> out(static_cast<size_t>(frames) * m);
  for (int t = 0; t < frames; ++t) {
    for (int c = 0; c < m; ++c) {
      const double* src = channels[c].data() + static_cast<size_t>(t) * cfg.hop;
      double acc = 0.0;
      for (int i = 0; i < cfg.win_len; ++i) acc += src[i] * src[i];
      out[static_cast<size_t>(t) * m + c] = std::log(kLogFloor + acc);
    }
  }
  return out;
}

}  // namespace beamosd
