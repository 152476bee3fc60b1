#pragma once

#include <vector>

#include "beamosd/array.hpp"
#include "beamosd/common.hpp"

namespace beamosd {

inline constexpr double kLogFloor = 1e-10;

struct StftConfig {
  double sample_rate = 16000.0;
  int win_len = 400;  // 25 ms
  int hop = 160;      // 10 ms
  int fft_size = 512;

  StftConfig() = default;
  StftConfig(double sr, int win, int hop_, int nfft)
      : sample_rate(sr), win_len(win), hop(hop_), fft_size(nfft) {
    validate();
  }
  void validate() const {
    require(win_len >= 1 && hop >= 1, "StftConfig: win_len and hop must be >= 1");
    require(win_len <= fft_size, "StftConfig: win_len must not exceed fft_size");
    require(hop <= win_len, "StftConfig: hop must not exceed win_len");
    require((fft_size & (fft_size - 1)) == 0,
            "StftConfig: fft_size must be a power of two");
  }

  int num_bins() const { return fft_size / 2 + 1; }
  int num_frames(int num_samples) const {
    return num_samples < win_len ? 0 : (num_samples - win_len) / hop + 1;
  }
  FrequencyGrid freq_grid() const { return FrequencyGrid{sample_rate, fft_size}; }
};

// Frame-major complex spectra: frames[t][k], k = 0..fft_size/2.
struct Stft {
  int num_frames = 0;
  int num_bins = 0;
  cvec data;  // data[t * num_bins + k]

  const cplx* frame(int t) const {
    return &data[static_cast<size_t>(t) * num_bins];
  }
  cplx* frame(int t) { return &data[static_cast<size_t>(t) * num_bins]; }
};

// Hann-windowed STFT; frame t covers samples [t*hop, t*hop + win_len).
Stft stft(const std::vector<double>& signal, const StftConfig& cfg);

// Triangular mel filterbank on HTK-style mel spacing.
struct MelBank {
  int num_mels = 40;
  int num_bins = 257;
  double band_lo = 0.0;
  double band_hi = 8000.0;
  std::vector<double> weights;       // [num_mels * num_bins]
  std::vector<double> center_freqs;  // Hz, strictly increasing

  const double* filter(int f) const {
    return &weights[static_cast<size_t>(f) * num_bins];
  }
};

MelBank make_mel_bank(int num_mels, const StftConfig& cfg, double band_lo,
                      double band_hi);

// log(floor + sum_k w[f,k] * |X[t,k]|^2), shape [num_frames * num_mels].
std::vector<double> log_mel(const Stft& spectra, const MelBank& bank);

// Per frame, per channel: log(floor + sum of squared samples in the frame
// window). Input channels[m] are equal-length sample vectors.
std::vector<double> log_energy(const std::vector<std::vector<double>>& channels,
                               const StftConfig& cfg);

}  // namespace beamosd
