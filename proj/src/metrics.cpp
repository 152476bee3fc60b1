#include "beamosd/metrics.hpp"

namespace beamosd {

Metrics compute_metrics(const std::vector<int>& predictions,
                        const std::vector<int>& labels) {
  require(!labels.empty(), "compute_metrics: empty input");
  require(predictions.size() == labels.size(),
          "compute_metrics: prediction/label count mismatch");

  Metrics m;
  for (size_t i = 0; i < labels.size(); ++i) {
    require((predictions[i] == 0 || predictions[i] == 1) &&
                (labels[i] == 0 || labels[i] == 1),
            "compute_metrics: entries must be 0 or 1");
    if (predictions[i] == 1)
      (labels[i] == 1 ? m.tp : m.fp)++;
    else
      (labels[i] == 0 ? m.tn : m.fn)++;
  }

  const long total = m.tp + m.fp + m.tn + m.fn;
  m.accuracy = static_cast<double>(m.tp + m.tn) / total;
  if (m.tp + m.fp > 0)
    m.precision = static_cast<double>(m.tp) / (m.tp + m.fp);
  else
    m.precision_defined = false;
  if (m.tp + m.fn > 0)
    m.recall = static_cast<double>(m.tp) / (m.tp + m.fn);
  else
    m.recall_defined = false;
  if (m.precision + m.recall > 0.0)
    m.fscore = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  else
    m.fscore_defined = false;
  return m;
}

}  // namespace beamosd
