#pragma once

#include <vector>

#include "beamosd/beamformer.hpp"
#include "beamosd/common.hpp"

namespace beamosd {

// Channel-magnitude floor below which a PHAT-normalized bin contributes zero.
inline constexpr double kPhatFloor = 1e-12;

// Steered response power across the bank's look angles for one frame.
// `frame` is bin-major multichannel spectra: frame[k * M + m]. With
// phat = true every (bin, channel) sample is normalized to unit modulus
// before the power sum. Parallel over angles.
std::vector<double> srp_frame(const cvec& frame, const BeamformerBank& bank,
                              bool phat);

// Serial reference: direct angle x bin x mic triple loop, kept as the
// equivalence oracle for the optimized kernel.
std::vector<double> srp_frame_ref(const cvec& frame, const BeamformerBank& bank,
                                  bool phat);

// Index of the spectrum maximum; lowest index wins ties.
int doa_estimate(const std::vector<double>& power);

// Circular smoothing: per frame, average unit vectors over a centered
// window (edge-truncated) and take the resulting direction.
std::vector<double> smooth_doa(const std::vector<double>& doas_rad, int window);

// SRP rows stacked over frames plus the per-frame DOA track.
struct SpatialSpectrum {
  int num_frames = 0;
  int num_angles = 0;
  std::vector<double> power;         // [num_frames * num_angles]
  std::vector<double> doa_raw;       // radians per frame
  std::vector<double> doa_smoothed;  // radians per frame
};

SpatialSpectrum spatial_spectrum(const std::vector<cvec>& frames,
                                 const BeamformerBank& bank, bool phat,
                                 int smooth_window);

// Per-frame feature: 120 SRP values followed by the 8 per-mic log energies.
// `energies` is [num_frames * num_mics].
std::vector<float> spatial_feature(const std::vector<cvec>& frames,
                                   const std::vector<double>& energies,
                                   int num_mics, const BeamformerBank& bank,
                                   bool phat);

}  // namespace beamosd
