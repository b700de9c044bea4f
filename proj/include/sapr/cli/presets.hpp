#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sapr/cli/config.hpp"

namespace sapr::cli {

struct Preset {
  std::string name;
  std::string claim;        // the statement the preset checks
  Command command;
  nlohmann::json parameters; // overrides on top of default_parameters(command)
};

const std::vector<Preset>& presets();
const Preset* find_preset(const std::string& name);

} // namespace sapr::cli
