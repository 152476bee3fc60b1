#pragma once

#include <vector>

#include "beamosd/common.hpp"

namespace beamosd {

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  // Zero-denominator cases report the metric as 0 with the flag cleared.
  bool precision_defined = true;
  bool recall_defined = true;
  bool fscore_defined = true;
};

// Confusion-matrix metrics with overlap (1) as the positive class.
Metrics compute_metrics(const std::vector<int>& predictions,
                        const std::vector<int>& labels);

}  // namespace beamosd
