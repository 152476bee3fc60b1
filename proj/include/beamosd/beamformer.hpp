#pragma once

#include <vector>

#include "beamosd/array.hpp"
#include "beamosd/common.hpp"
#include "beamosd/linalg.hpp"

namespace beamosd {

// Linear constraints on the beampattern: gain target_gains[n] at
// constraint_angles[n]. Row n of the constraint matrix R is the
// conjugate-transposed steering vector at constraint_angles[n].
struct ConstraintSet {
  std::vector<double> constraint_angles;  // radians
  cvec target_gains;

  // Unit gain at the look direction, hard null at the opposite direction.
  static ConstraintSet look_and_rear_null(double look_angle);

  int size() const { return static_cast<int>(constraint_angles.size()); }
  void validate(int num_mics) const;
};

// Designed weights for a set of beams over a frequency band. Bins outside
// [band_lo, band_hi] carry zero weights. Immutable after design; safe to
// share across threads.
struct BeamformerBank {
  ArrayGeometry geom;
  FrequencyGrid freq_grid;
  std::vector<double> look_angles;  // radians, one per beam
  double band_lo = 300.0;           // Hz
  double band_hi = 5000.0;          // Hz
  double diagonal_loading = 1e-9;
  int bin_lo = 0;  // first designed bin
  int bin_hi = 0;  // last designed bin (inclusive)

  // weights[(beam * num_bins + bin) * M + mic]
  cvec weights;

  int num_beams() const { return static_cast<int>(look_angles.size()); }
  int num_bins() const { return freq_grid.num_bins(); }
  bool bin_in_band(int k) const { return k >= bin_lo && k <= bin_hi; }

  const cplx* beam_bin(int beam, int bin) const {
    return &weights[(static_cast<size_t>(beam) * num_bins() + bin) *
                    geom.num_mics];
  }
};

// Eight beams at 45 degree spacing, matching the acoustic front-end.
inline constexpr int kNumAcousticBeams = 8;
std::vector<double> default_look_angles();
// One look direction per grid angle, for SRP localization.
std::vector<double> grid_look_angles(const AngleGrid& grid);

// h = R^H (R R^H + loading*I)^-1 c for an arbitrary wide constraint matrix;
// with loading = 0 this is the minimum-norm solution of R h = c.
cvec min_norm_solve(const CMat& r, const cvec& c, double loading);

// min_norm_solve on the steering-vector constraint matrix of `constraints`;
// a singular system raises NumericError naming the frequency.
cvec design_cddma(const ArrayGeometry& geom, const ConstraintSet& constraints,
                  double freq, double loading);

// Row n = steering_vector(constraint_angles[n])^H.
CMat constraint_matrix(const ArrayGeometry& geom, const ConstraintSet& cs,
                       double freq);

// Designs every (beam, in-band bin) pair; look-and-rear-null constraints per
// beam. Parallel over the (beam, bin) grid.
BeamformerBank design_bank(const ArrayGeometry& geom,
                           const std::vector<double>& look_angles,
                           const FrequencyGrid& freq_grid, double band_lo,
                           double band_hi, double loading);

// Per-bin beamformer outputs y_k = x_k^H h_k for one beam.
// `spectra` is bin-major: spectra[k * M + m].
cvec apply_beamformer(const BeamformerBank& bank, const cvec& spectra,
                      int beam);

// d(theta)^H h at the designed bin nearest `freq` (error outside the band).
cplx beampattern(const BeamformerBank& bank, int beam, double freq,
                 double theta);

// 10*log10(|h^H d(look)|^2 / h^H h): gain against spatially white noise.
double white_noise_gain(const BeamformerBank& bank, int beam, double freq);

// 10*log10(|B(look)|^2 / mean_j |B(theta_j)|^2): gain against a
// cylindrically isotropic field discretized on the grid.
double directivity_factor(const BeamformerBank& bank, int beam, double freq,
                          const AngleGrid& grid);

// Max constraint residual ||R h - c||_inf for one designed beam/bin.
double constraint_residual(const ArrayGeometry& geom,
                           const ConstraintSet& constraints, double freq,
                           const cvec& weights);

}  // namespace beamosd
