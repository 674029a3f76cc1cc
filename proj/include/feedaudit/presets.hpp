#pragma once

#include <string>
#include <vector>

#include "feedaudit/scenario.hpp"

namespace feedaudit::puppet {

/// Interest hashtags shared by every persona preset.
const std::vector<std::string>& default_persona();

/// Presets 1-42 in id order. Failed scenarios carry excluded = true.
std::vector<Scenario> preset_scenarios();

/// Throws ConfigError for ids outside 1-42.
Scenario preset(int id);

}  // namespace feedaudit::puppet
