#include "beamosd/spatial.hpp"

#include <cmath>

namespace beamosd {

namespace {

cvec phat_normalize(const cvec& frame) {
  cvec out(frame.size());
  for (size_t i = 0; i < frame.size(); ++i) {
    double mag = std::abs(frame[i]);
    out[i] = mag < kPhatFloor ? cplx(0, 0) : frame[i] / mag;
  }
  return out;
}

void check_frame(const cvec& frame, const BeamformerBank& bank) {
  require(static_cast<int>(frame.size()) ==
              bank.num_bins() * bank.geom.num_mics,
          "srp_frame: frame shape does not match bank");
}

}  // namespace

std::vector<double> srp_frame(const cvec& frame, const BeamformerBank& bank,
                              bool phat) {
  check_frame(frame, bank);
  const int num_angles = bank.num_beams();
  const int m = bank.geom.num_mics;
  const cvec x = phat ? phat_normalize(frame) : frame;

  std::vector<double> power(num_angles, 0.0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < num_angles; ++j) {
    double acc = 0.0;
    for (int k = bank.bin_lo; k <= bank.bin_hi; ++k) {
      const cplx* h = bank.beam_bin(j, k);
      const cplx* xk = &x[static_cast<size_t>(k) * m];
      double re = 0.0, im = 0.0;
      for (int i = 0; i < m; ++i) {
        // conj(x) * h
        re += xk[i].real() * h[i].real() + xk[i].imag() * h[i].imag();
        im += xk[i].real() * h[i].imag() - xk[i].imag() * h[i].real();
      }
      acc += re * re + im * im;
    }
    power[j] = acc;
  }
  return power;
}

std::vector<double> srp_frame_ref(const cvec& frame, const BeamformerBank& bank,
                                  bool phat) {
  check_frame(frame, bank);
  const int num_angles = bank.num_beams();
  const int m = bank.geom.num_mics;

  std::vector<double> power(num_angles, 0.0);
  for (int j = 0; j < num_angles; ++j) {
    for (int k = 0; k < bank.num_bins(); ++k) {
      cplx acc(0, 0);
      for (int i = 0; i < m; ++i) {
        cplx xi = frame[static_cast<size_t>(k) * m + i];
        if (phat) {
          double mag = std::abs(xi);
          xi = mag < kPhatFloor ? cplx(0, 0) : xi / mag;
        }
        acc += std::conj(xi) * bank.beam_bin(j, k)[i];
      }
      power[j] += std::norm(acc);
    }
  }
  return power;
}

int doa_estimate(const std::vector<double>& power) {
  require(!power.empty(), "doa_estimate: empty spectrum");
  int best = 0;
  for (int j = 1; j < static_cast<int>(power.size()); ++j)
    if (power[j] > power[best]) best = j;
  return best;
}

std::vector<double> smooth_doa(const std::vector<double>& doas_rad,
                               int window) {
  require(window >= 1, "smooth_doa: window must be >= 1");
  const int n = static_cast<int>(doas_rad.size());
  const int left = (window - 1) / 2;
  const int right = window / 2;
  std::vector<double> out(n);
  for (int t = 0; t < n; ++t) {
    double cx = 0.0, cy = 0.0;
    const int lo = std::max(0, t - left);
    const int hi = std::min(n - 1, t + right);
    for (int i = lo; i <= hi; ++i) {
      cx += std::cos(doas_rad[i]);
      cy += std::sin(doas_rad[i]);
    }
    // Degenerate mean vector: keep the raw estimate.
    out[t] = (cx * cx + cy * cy) < 1e-24 ? doas_rad[t]
                                         : wrap_angle(std::atan2(cy, cx));
  }
  return out;
}

SpatialSpectrum spatial_spectrum(const std::vector<cvec>& frames,
                                 const BeamformerBank& bank, bool phat,
                                 int smooth_window) {
  SpatialSpectrum spec;
  spec.num_frames = static_cast<int>(frames.size());
  spec.num_angles = bank.num_beams();
  spec.power.resize(static_cast<size_t>(spec.num_frames) * spec.num_angles);
  spec.doa_raw.resize(spec.num_frames);
  for (int t = 0; t < spec.num_frames; ++t) {
    std::vector<double> p = srp_frame(frames[t], bank, phat);
    std::copy(p.begin(), p.end(),
              spec.power.begin() + static_cast<size_t>(t) * spec.num_angles);
    spec.doa_raw[t] = bank.look_angles[doa_estimate(p)];
  }
  spec.doa_smoothed = smooth_doa(spec.doa_raw, smooth_window);
  return spec;
}

std::vector<float> spatial_feature(const std::vector<cvec>& frames,
                                   const std::vector<double>& energies,
                                   int num_mics, const BeamformerBank& bank,
                                   bool phat) {
  const int num_frames = static_cast<int>(frames.size());
  const int num_angles = bank.num_beams();
  require(static_cast<int>(energies.size()) == num_frames * num_mics,
          "spatial_feature: energy shape mismatch");
  const int dim = num_angles + num_mics;

  std::vector<float> out(static_cast<size_t>(num_frames) * dim);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < num_frames; ++t) {
    std::vector<double> p = srp_frame(frames[t], bank, phat);
    float* dst = &out[static_cast<size_t>(t) * dim];
    for (int j = 0; j < num_angles; ++j) dst[j] = static_cast<float>(p[j]);
    for (int m = 0; m < num_mics; ++m)
      dst[num_angles + m] =
          static_cast<float>(energies[static_cast<size_t>(t) * num_mics + m]);
  }
  return out;
}

}  // namespace beamosd
