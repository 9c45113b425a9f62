#pragma once

#include <string>

#include "fescycle/scenario.hpp"

namespace fescycle {

// Baseline cycle-rider scenario.  The physical numbers are implementation
// choices (documented in the README) sized so the model passes geometry
// closure, property certification and the gain conditions; the controller
// gains are the certified set shipped in configs/default.json.
Scenario default_scenario();

// Reads a scenario from a JSON file.  Unknown keys are rejected with their
// full path, parse errors carry line:column, and "gains.epsilon" accepts
// either a number or the string "half-max" (half the peak transfer ratio).
// Throws ConfigError; the result always satisfies validate_scenario.
Scenario load_scenario(const std::string& path);

// Serializes a scenario to the JSON schema accepted by load_scenario.
std::string scenario_to_json(const Scenario& scenario);

}  // namespace fescycle
