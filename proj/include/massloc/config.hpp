#pragma once

#include "massloc/evalharness.hpp"
#include "massloc/network.hpp"
#include "massloc/synthdata.hpp"
#include "massloc/training.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace massloc {

/// Thrown for malformed or out-of-range configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainSection {
  Index hidden1 = 100;
  Index hidden2 = 10;
  Index classes = 2;
  StackedTrainConfig stages;
};

/// Top-level run configuration; every field is optional in the JSON file.
struct RunConfig {
  SynthConfig synth;
  TrainSection train;
  LocaliseConfig eval;  // also carries the cluster, regiongrow and occlusion sections

  /// Network shape for images of the configured synthetic size.
  NetworkDims dims() const { return dims_for(synth.width * synth.height); }
  NetworkDims dims_for(Index input) const { return {input, train.hidden1, train.hidden2, train.classes}; }

  /// Throws ConfigError on any invariant violation.
  void validate() const;
};

/// Parses a JSON document with optional sections synth, train, cluster,
/// regiongrow, occlusion and eval. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);

}  // namespace massloc
