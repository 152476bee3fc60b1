#pragma once

#include <string>
#include <vector>

#include "beamosd/common.hpp"

namespace beamosd {

// Channels-major audio buffer in [-1, 1) doubles.
struct Audio {
  double sample_rate = 16000.0;
  std::vector<std::vector<double>> channels;

  int num_channels() const { return static_cast<int>(channels.size()); }
  int num_samples() const {
    return channels.empty() ? 0 : static_cast<int>(channels[0].size());
  }
};

// RIFF PCM 16-bit little-endian only.
void write_wav(const std::string& path, const Audio& audio);
Audio read_wav(const std::string& path);

}  // namespace beamosd
