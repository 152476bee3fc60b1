#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "beamosd/nn/graph.hpp"
#include "beamosd/runtime.hpp"

namespace beamosd {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int coords_checked = 0;
};

// Central finite differences against the tape gradients on a random
// coordinate subsample of the given nodes (all coordinates when there are
// fewer than min_coords). Relative error metric:
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// Meant for double graphs; float forward noise swamps the 1e-4 tolerance.
template <typename T>
GradCheckResult grad_check(Graph<T>& g, int loss, const std::vector<int>& nodes,
                           int min_coords, double eps, Rng& rng) {
  g.forward();
  g.zero_param_grads();
  g.backward(loss, T(1));

  std::vector<std::pair<int, int>> coords;  // (node, flat index)
  for (int id : nodes)
    for (int i = 0; i < g.at(id).size(); ++i) coords.emplace_back(id, i);
  require(!coords.empty(), "grad_check: no coordinates to test");

  if (static_cast<int>(coords.size()) > min_coords) {
    // Seeded partial Fisher-Yates keeps the subsample reproducible.
    for (int i = 0; i < min_coords; ++i) {
      const size_t j = i + rng.uniform_index(coords.size() - i);
      std::swap(coords[i], coords[j]);
    }
    coords.resize(min_coords);
  }

  std::vector<double> analytic(coords.size());
  for (size_t c = 0; c < coords.size(); ++c)
    analytic[c] = static_cast<double>(g.at(coords[c].first).grad[coords[c].second]);

  GradCheckResult result;
  result.coords_checked = static_cast<int>(coords.size());
  for (size_t c = 0; c < coords.size(); ++c) {
    auto [id, i] = coords[c];
    T& slot = g.at(id).val[i];
    const T saved = slot;
    slot = saved + static_cast<T>(eps);
    g.forward();
    const double f_plus = static_cast<double>(g.at(loss).val[0]);
    slot = saved - static_cast<T>(eps);
    g.forward();
    const double f_minus = static_cast<double>(g.at(loss).val[0]);
    slot = saved;

    const double numeric = (f_plus - f_minus) / (2.0 * eps);
    const double rel = std::abs(analytic[c] - numeric) /
                       std::max(1e-8, std::abs(analytic[c]) + std::abs(numeric));
    result.max_rel_err = std::max(result.max_rel_err, rel);
  }
  g.forward();  // restore clean values
  return result;
}

}  // namespace beamosd
