#include "beamosd/beamformer.hpp"

#include <cmath>
#include <string>

#include "beamosd/linalg.hpp"

namespace beamosd {

ConstraintSet ConstraintSet::look_and_rear_null(double look_angle) {
  ConstraintSet cs;
  cs.constraint_angles = {look_angle, look_angle + kPi};
  cs.target_gains = {cplx(1, 0), cplx(0, 0)};
  return cs;
}

void ConstraintSet::validate(int num_mics) const {
  require(size() >= 1, "ConstraintSet: empty");
  require(static_cast<int>(target_gains.size()) == size(),
          "ConstraintSet: angle/gain count mismatch");
  require(size() <= num_mics,
          "ConstraintSet: more constraints than microphones");
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j)
      require(std::abs(angle_diff(constraint_angles[i], constraint_angles[j])) >
                  1e-12,
              "ConstraintSet: constraint angles must be pairwise distinct");
}

std::vector<double> default_look_angles() {
  std::vector<double> angles(8);
  for (int b = 0; b < 8; ++b) angles[b] = deg_to_rad(45.0 * b);
  return angles;
}

std::vector<double> grid_look_angles(const AngleGrid& grid) {
  std::vector<double> angles(grid.num_angles);
  for (int j = 0; j < grid.num_angles; ++j) angles[j] = grid.angle_rad(j);
  return angles;
}

CMat constraint_matrix(const ArrayGeometry& geom, const ConstraintSet& cs,
                       double freq) {
  const int n = cs.size();
  CMat r(n, geom.num_mics);
  for (int row = 0; row < n; ++row) {
    cvec d = steering_vector(geom, freq, cs.constraint_angles[row]);
    for (int m = 0; m < geom.num_mics; ++m) r.at(row, m) = std::conj(d[m]);
  }
  return r;
}

cvec min_norm_solve(const CMat& r, const cvec& c, double loading) {
  require(static_cast<int>(c.size()) == r.rows,
          "min_norm_solve: gain count does not match constraint rows");
  require(loading >= 0.0, "min_norm_solve: loading must be nonnegative");
  CMat g = gram(r);
  for (int i = 0; i < g.rows; ++i) g.at(i, i) += loading;
  cvec y = lu_solve(g, c);
  return matvec_adjoint(r, y);
}

cvec design_cddma(const ArrayGeometry& geom, const ConstraintSet& constraints,
                  double freq, double loading) {
  constraints.validate(geom.num_mics);
  require(freq >= 0.0, "design_cddma: freq must be nonnegative");

  CMat r = constraint_matrix(geom, constraints, freq);
  try {
    return min_norm_solve(r, constraints.target_gains, loading);
  } catch (const NumericError&) {
    throw NumericError("design_cddma: ill-conditioned constraint system at " +
                       std::to_string(freq) + " Hz (retry with loading > 0)");
  }
}

BeamformerBank design_bank(const ArrayGeometry& geom,
                           const std::vector<double>& look_angles,
                           const FrequencyGrid& freq_grid, double band_lo,
                           double band_hi, double loading) {
  require(!look_angles.empty(), "design_bank: no look angles");
  require(band_lo >= 0.0 && band_hi <= freq_grid.sample_rate / 2.0 &&
              band_lo < band_hi,
          "design_bank: band must lie within [0, sample_rate/2]");

  BeamformerBank bank;
  bank.geom = geom;
  bank.freq_grid = freq_grid;
  bank.look_angles = look_angles;
  bank.band_lo = band_lo;
  bank.band_hi = band_hi;
  bank.diagonal_loading = loading;
  bank.bin_lo = static_cast<int>(
      std::ceil(band_lo * freq_grid.fft_size / freq_grid.sample_rate - 1e-9));
  bank.bin_hi = static_cast<int>(
      std::floor(band_hi * freq_grid.fft_size / freq_grid.sample_rate + 1e-9));
  const int num_beams = bank.num_beams();
  const int num_bins = bank.num_bins();
  const int m = geom.num_mics;
  bank.weights.assign(static_cast<size_t>(num_beams) * num_bins * m,
                      cplx(0, 0));

  const int in_band = bank.bin_hi - bank.bin_lo + 1;
  std::string failure;
#pragma omp parallel for schedule(static)
  for (int job = 0; job < num_beams * in_band; ++job) {
    const int beam = job / in_band;
    const int bin = bank.bin_lo + job % in_band;
    ConstraintSet cs = ConstraintSet::look_and_rear_null(look_angles[beam]);
    try {
      cvec h = design_cddma(geom, cs, freq_grid.bin_freq(bin), loading);
      cplx* dst = &bank.weights[(static_cast<size_t>(beam) * num_bins + bin) * m];
      for (int i = 0; i < m; ++i) dst[i] = h[i];
    } catch (const NumericError& e) {
#pragma omp critical
      failure = "design_bank: beam " + std::to_string(beam) + " bin " +
                std::to_string(bin) + ": " + e.what();
    }
  }
  if (!failure.empty()) throw NumericError(failure);
  return bank;
}

cvec apply_beamformer(const BeamformerBank& bank, const cvec& spectra,
                      int beam) {
  require(beam >= 0 && beam < bank.num_beams(),
          "apply_beamformer: beam index out of range");
  const int num_bins = bank.num_bins();
  const int m = bank.geom.num_mics;
  require(static_cast<int>(spectra.size()) == num_bins * m,
          "apply_beamformer: spectra shape does not match bank");
  cvec out(num_bins, cplx(0, 0));
  for (int k = bank.bin_lo; k <= bank.bin_hi; ++k) {
    const cplx* h = bank.beam_bin(beam, k);
    const cplx* x = &spectra[static_cast<size_t>(k) * m];
    cplx acc(0, 0);
    for (int i = 0; i < m; ++i) acc += std::conj(x[i]) * h[i];
    out[k] = acc;
  }
  return out;
}

namespace {

int band_bin_for_freq(const BeamformerBank& bank, double freq) {
  require(freq >= bank.band_lo && freq <= bank.band_hi,
          "frequency outside the designed band");
  int k = static_cast<int>(std::lround(freq * bank.freq_grid.fft_size /
                                       bank.freq_grid.sample_rate));
  k = std::max(bank.bin_lo, std::min(bank.bin_hi, k));
  return k;
}

}  // namespace

cplx beampattern(const BeamformerBank& bank, int beam, double freq,
                 double theta) {
  require(beam >= 0 && beam < bank.num_beams(),
          "beampattern: beam index out of range");
  const int k = band_bin_for_freq(bank, freq);
  const cplx* h = bank.beam_bin(beam, k);
  cvec d = steering_vector(bank.geom, bank.freq_grid.bin_freq(k), theta);
  cplx acc(0, 0);
  for (int m = 0; m < bank.geom.num_mics; ++m) acc += std::conj(d[m]) * h[m];
  return acc;
}

double white_noise_gain(const BeamformerBank& bank, int beam, double freq) {
  require(beam >= 0 && beam < bank.num_beams(),
          "white_noise_gain: beam index out of range");
  const int k = band_bin_for_freq(bank, freq);
  const cplx* h = bank.beam_bin(beam, k);
  cvec d = steering_vector(bank.geom, bank.freq_grid.bin_freq(k),
                           bank.look_angles[beam]);
  cplx num(0, 0);
  double den = 0.0;
  for (int m = 0; m < bank.geom.num_mics; ++m) {
    num += std::conj(h[m]) * d[m];
    den += std::norm(h[m]);
  }
  require(den > 0.0, "white_noise_gain: zero-norm weights");
  return 10.0 * std::log10(std::norm(num) / den);
}

double directivity_factor(const BeamformerBank& bank, int beam, double freq,
                          const AngleGrid& grid) {
  cplx look = beampattern(bank, beam, freq, bank.look_angles[beam]);
  double mean_power = 0.0;
  for (int j = 0; j < grid.num_angles; ++j)
    mean_power += std::norm(beampattern(bank, beam, freq, grid.angle_rad(j)));
  mean_power /= grid.num_angles;
  return 10.0 * std::log10(std::norm(look) / mean_power);
}

double constraint_residual(const ArrayGeometry& geom,
                           const ConstraintSet& constraints, double freq,
                           const cvec& weights) {
  CMat r = constraint_matrix(geom, constraints, freq);
  cvec rh = matvec(r, weights);
  double worst = 0.0;
  for (int n = 0; n < constraints.size(); ++n)
    worst = std::max(worst, std::abs(rh[n] - constraints.target_gains[n]));
  return worst;
}

}  // namespace beamosd
