#include "beamosd/models.hpp"

namespace beamosd {

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBaseline: return "baseline";
    case ModelKind::kBeamTransformer: return "bt";
    case ModelKind::kSpatialNet: return "spatial";
    case ModelKind::kCombined: return "combined";
  }
  throw ArgumentError("model_kind_name: unknown kind");
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "baseline") return ModelKind::kBaseline;
  if (name == "bt") return ModelKind::kBeamTransformer;
  if (name == "spatial") return ModelKind::kSpatialNet;
  if (name == "combined") return ModelKind::kCombined;
  throw ArgumentError("unknown model '" + name +
                      "' (expected baseline, bt, spatial, or combined)");
}

}  // namespace beamosd
