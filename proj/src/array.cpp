#include "beamosd/array.hpp"

#include <cmath>

namespace beamosd {

void ArrayGeometry::validate() {
  require(num_mics >= 2, "ArrayGeometry: need at least 2 microphones");
  require(radius > 0.0, "ArrayGeometry: radius must be positive");
  require(element_alpha >= 0.0 && element_alpha <= 1.0,
          "ArrayGeometry: element_alpha must be in [0, 1]");
  require(speed_of_sound > 0.0, "ArrayGeometry: speed of sound must be positive");
  mic_azimuths.resize(num_mics);
  for (int m = 0; m < num_mics; ++m) mic_azimuths[m] = kTwoPi * m / num_mics;
}

double element_gain(const ArrayGeometry& geom, int mic_index, double theta) {
  require(mic_index >= 0 && mic_index < geom.num_mics,
          "element_gain: mic_index out of range");
  double a = geom.element_alpha;
  return a + (1.0 - a) * std::cos(theta - geom.mic_azimuths[mic_index]);
}

cvec steering_vector(const ArrayGeometry& geom, double freq, double theta) {
  require(freq >= 0.0, "steering_vector: freq must be nonnegative");
  const double omega = kTwoPi * freq;
  const double tau_scale = geom.radius / geom.speed_of_sound;
  cvec d(geom.num_mics);
  for (int m = 0; m < geom.num_mics; ++m) {
    double gain = element_gain(geom, m, theta);
    double phase = omega * tau_scale * std::cos(theta - geom.mic_azimuths[m]);
    d[m] = gain * cplx(std::cos(phase), std::sin(phase));
  }
  return d;
}

}  // namespace beamosd
