#pragma once

#include <vector>

#include "beamosd/common.hpp"

namespace beamosd {

// Circular array of M outward-pointing first-order directional elements.
// Element m sits at azimuth psi_m = 2*pi*m/M on a circle of the given radius
// and has the pattern a_m(theta) = alpha + (1-alpha)*cos(theta - psi_m).
struct ArrayGeometry {
  int num_mics = 8;
  double radius = 0.04;           // meters
  double element_alpha = 0.5;     // 0.5 = cardioid
  double speed_of_sound = 343.0;  // m/s

  std::vector<double> mic_azimuths;  // radians, filled by validate()

  ArrayGeometry() { validate(); }
  ArrayGeometry(int m, double r, double alpha = 0.5, double c = 343.0)
      : num_mics(m), radius(r), element_alpha(alpha), speed_of_sound(c) {
    validate();
  }

  void validate();
};

// DFT bin frequencies for a given sample rate and FFT size.
struct FrequencyGrid {
  double sample_rate = 16000.0;
  int fft_size = 512;

  int num_bins() const { return fft_size / 2 + 1; }
  double bin_freq(int k) const { return k * sample_rate / fft_size; }
  double bin_omega(int k) const { return kTwoPi * bin_freq(k); }
};

// Uniform azimuth grid; the default 120 x 3 degrees is the SRP feature grid.
struct AngleGrid {
  int num_angles = 120;
  double step_deg = 3.0;

  AngleGrid() = default;
  AngleGrid(int n, double step) : num_angles(n), step_deg(step) {
    require(n >= 1, "AngleGrid: num_angles must be >= 1");
    require(std::abs(n * step - 360.0) < 1e-9,
            "AngleGrid: num_angles * step must cover 360 degrees");
  }

  double angle_rad(int j) const { return deg_to_rad(j * step_deg); }
  double angle_deg(int j) const { return j * step_deg; }
};

// First-order element pattern a_m(theta), 2*pi-periodic.
double element_gain(const ArrayGeometry& geom, int mic_index, double theta);

// Far-field steering vector at the array-center phase reference:
// component m = a_m(theta) * exp(+i * omega * r * cos(theta - psi_m) / c).
cvec steering_vector(const ArrayGeometry& geom, double freq, double theta);

}  // namespace beamosd
