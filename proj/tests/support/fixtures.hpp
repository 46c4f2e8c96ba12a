#pragma once

#include <filesystem>
#include <string>

#include "sitescout/scenario.hpp"

namespace sitescout::fixture {

std::filesystem::path scenario_path(const std::string& name);
Scenario load(const std::string& name);
std::string read_text(const std::filesystem::path& p);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace sitescout::fixture
