#pragma once

#include <string>
#include <vector>

#include "protmeas/result_bundle.hpp"
#include "protmeas/scenario_config.hpp"

namespace protmeas {

struct ExperimentInfo {
  std::string name;
  std::string title;
};

const std::vector<ExperimentInfo>& list_experiments();

/// Runs the experiment named in the config. Deterministic given the config
/// and seed, independent of the thread count. Configuration problems found
/// while running surface as ValidationError; numerical failures as
/// NumericalIntegrityError, both prefixed with the experiment name.
ResultBundle run_scenario(const ScenarioConfig& config);

}  // namespace protmeas
