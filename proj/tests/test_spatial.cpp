#include <cmath>
#include <vector>

#include "beamosd/runtime.hpp"
#include "beamosd/spatial.hpp"
#include "doctest.h"

using namespace beamosd;

namespace {

BeamformerBank localization_bank() {
  ArrayGeometry geom;
  FrequencyGrid fg;
  return design_bank(geom, grid_look_angles(AngleGrid{}), fg, 300.0, 5000.0,
                     1e-9);
}

// Bin-major multichannel frame carrying a unit plane wave from `theta`.
cvec plane_wave_frame(const BeamformerBank& bank, double theta) {
  const int m = bank.geom.num_mics;
  cvec frame(static_cast<size_t>(bank.num_bins()) * m, cplx(0, 0));
  for (int k = bank.bin_lo; k <= bank.bin_hi; ++k) {
    cvec d = steering_vector(bank.geom, bank.freq_grid.bin_freq(k), theta);
    for (int i = 0; i < m; ++i) frame[static_cast<size_t>(k) * m + i] = d[i];
  }
  return frame;
}

cvec random_frame(const BeamformerBank& bank, Rng& rng) {
  const int m = bank.geom.num_mics;
  cvec frame(static_cast<size_t>(bank.num_bins()) * m);
  for (cplx& v : frame) {
    // Magnitudes bounded away from the PHAT floor.
    double mag = rng.uniform(0.2, 1.0);
    double phase = rng.uniform(0.0, kTwoPi);
    v = std::polar(mag, phase);
  }
  return frame;
}

}  // namespace

TEST_CASE("srp of a zero frame is zero") {
  BeamformerBank bank = localization_bank();
  cvec frame(static_cast<size_t>(bank.num_bins()) * bank.geom.num_mics,
             cplx(0, 0));
  for (bool phat : {false, true}) {
    std::vector<double> p = srp_frame(frame, bank, phat);
    REQUIRE(static_cast<int>(p.size()) == 120);
    for (double v : p) CHECK(v == 0.0);
  }
}

TEST_CASE("srp peaks at the plane-wave direction") {
  BeamformerBank bank = localization_bank();
  // Grid angles aligned with the mic layout recover exactly; elsewhere the
  // element-gain weighting can bias the peak by one 3-degree bin.
  for (double az_deg : {45.0, 90.0}) {
    cvec frame = plane_wave_frame(bank, deg_to_rad(az_deg));
    for (bool phat : {false, true}) {
      std::vector<double> p = srp_frame(frame, bank, phat);
      CHECK(doa_estimate(p) == static_cast<int>(az_deg / 3.0));
      for (double v : p) CHECK(v >= 0.0);
    }
  }
  cvec frame = plane_wave_frame(bank, deg_to_rad(213.0));
  for (bool phat : {false, true}) {
    std::vector<double> p = srp_frame(frame, bank, phat);
    CHECK(std::abs(doa_estimate(p) - 71) <= 1);
  }
}

TEST_CASE("parallel srp matches the serial reference") {
  BeamformerBank bank = localization_bank();
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    cvec frame = random_frame(bank, rng);
    for (bool phat : {false, true}) {
      std::vector<double> fast = srp_frame(frame, bank, phat);
      std::vector<double> ref = srp_frame_ref(frame, bank, phat);
      REQUIRE(fast.size() == ref.size());
      for (size_t j = 0; j < fast.size(); ++j)
        CHECK(std::abs(fast[j] - ref[j]) <=
              1e-6 * std::max(1e-30, std::abs(ref[j])));
    }
  }
}

TEST_CASE("srp scaling: invariant with phat, quadratic without") {
  BeamformerBank bank = localization_bank();
  Rng rng(32);
  cvec frame = random_frame(bank, rng);
  cvec scaled(frame.size());
  const double c = 7.3;
  for (size_t i = 0; i < frame.size(); ++i) scaled[i] = c * frame[i];

  std::vector<double> base = srp_frame(frame, bank, true);
  std::vector<double> gained = srp_frame(scaled, bank, true);
  for (size_t j = 0; j < base.size(); ++j)
    CHECK(gained[j] == doctest::Approx(base[j]).epsilon(1e-10));

  std::vector<double> raw = srp_frame(frame, bank, false);
  std::vector<double> raw_gained = srp_frame(scaled, bank, false);
  for (size_t j = 0; j < raw.size(); ++j)
    CHECK(raw_gained[j] == doctest::Approx(c * c * raw[j]).epsilon(1e-10));
  CHECK(doa_estimate(raw_gained) == doa_estimate(raw));
}

TEST_CASE("srp validates the frame shape") {
  BeamformerBank bank = localization_bank();
  cvec bad(17, cplx(0, 0));
  CHECK_THROWS_AS(srp_frame(bad, bank, true), ArgumentError);
}

TEST_CASE("doa_estimate picks the max with lowest-index ties") {
  std::vector<double> p(120, 0.0);
  p[40] = 1.0;
  CHECK(doa_estimate(p) == 40);
  p[10] = 2.0;
  p[20] = 2.0;
  CHECK(doa_estimate(p) == 10);
  CHECK_THROWS_AS(doa_estimate({}), ArgumentError);
}

TEST_CASE("smooth_doa leaves constants alone and handles edges") {
  std::vector<double> constant(7, deg_to_rad(123.0));
  std::vector<double> s = smooth_doa(constant, 5);
  REQUIRE(s.size() == constant.size());
  for (double v : s)
    CHECK(std::abs(angle_diff(v, deg_to_rad(123.0))) <= 1e-12);

  std::vector<double> same = smooth_doa(constant, 1);
  for (size_t i = 0; i < same.size(); ++i) CHECK(same[i] == constant[i]);

  CHECK_THROWS_AS(smooth_doa(constant, 0), ArgumentError);
}

TEST_CASE("smooth_doa pulls an outlier toward the neighborhood") {
  // Hand-computed circular mean: four unit vectors at 0 deg plus one at
  // 90 deg average to atan2(0.2, 0.8) = 14.0362 deg for the center frame.
  std::vector<double> doas = {0.0, 0.0, deg_to_rad(90.0), 0.0, 0.0};
  std::vector<double> s = smooth_doa(doas, 5);
  CHECK(rad_to_deg(s[2]) == doctest::Approx(14.0362).epsilon(1e-3));
}

TEST_CASE("smooth_doa averages across the wraparound") {
  std::vector<double> doas = {deg_to_rad(358.0), deg_to_rad(2.0), 0.0};
  std::vector<double> s = smooth_doa(doas, 3);
  for (double v : s)
    CHECK(std::abs(angle_diff(v, 0.0)) < deg_to_rad(5.0));
}

TEST_CASE("smooth_doa keeps the raw value when vectors cancel") {
  std::vector<double> doas = {0.0, kPi};
  std::vector<double> s = smooth_doa(doas, 2);
  CHECK(s[0] == 0.0);
}

TEST_CASE("spatial_spectrum stacks per-frame srp and doa tracks") {
  BeamformerBank bank = localization_bank();
  std::vector<cvec> frames;
  for (double az : {90.0, 90.0, 93.0, 90.0})
    frames.push_back(plane_wave_frame(bank, deg_to_rad(az)));
  SpatialSpectrum spec = spatial_spectrum(frames, bank, true, 5);
  CHECK(spec.num_frames == 4);
  CHECK(spec.num_angles == 120);
  REQUIRE(spec.power.size() == 4u * 120u);
  REQUIRE(spec.doa_raw.size() == 4u);
  REQUIRE(spec.doa_smoothed.size() == 4u);
  for (int t = 0; t < 4; ++t) {
    std::vector<double> row(spec.power.begin() + t * 120,
                            spec.power.begin() + (t + 1) * 120);
    CHECK(std::abs(spec.doa_raw[t] - deg_to_rad(3.0 * doa_estimate(row))) <=
          1e-12);
    CHECK(std::abs(angle_diff(spec.doa_smoothed[t], deg_to_rad(90.0))) <=
          deg_to_rad(3.0));
  }
}

TEST_CASE("spatial_feature is 128 wide: srp then log energies") {
  BeamformerBank bank = localization_bank();
  const int m = bank.geom.num_mics;

  std::vector<cvec> frames(
      3, cvec(static_cast<size_t>(bank.num_bins()) * m, cplx(0, 0)));
  std::vector<double> energies(3 * m, std::log(1e-10));
  std::vector<float> feat = spatial_feature(frames, energies, m, bank, true);
  REQUIRE(feat.size() == 3u * 128u);
  for (int t = 0; t < 3; ++t) {
    for (int j = 0; j < 120; ++j) CHECK(feat[t * 128 + j] == 0.0f);
    for (int j = 0; j < 8; ++j)
      CHECK(feat[t * 128 + 120 + j] ==
            doctest::Approx(std::log(1e-10)).epsilon(1e-6));
  }

  frames[1] = plane_wave_frame(bank, deg_to_rad(90.0));
  feat = spatial_feature(frames, energies, m, bank, true);
  int best = 0;
  for (int j = 1; j < 120; ++j)
    if (feat[128 + j] > feat[128 + best]) best = j;
  CHECK(best == 30);

  CHECK_THROWS_AS(
      spatial_feature(frames, std::vector<double>(5, 0.0), m, bank, true),
      ArgumentError);
}
