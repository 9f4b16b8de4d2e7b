#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "nusim/scenario.hpp"

namespace nusim {

/// Parses a YAML scenario document and validates it. Throws ParseError (with
/// line and column) for malformed or empty text and ConfigError (with a field
/// path) for content errors.
Scenario parse_config(std::string_view text);

/// Reads and parses a file. Throws ConfigError if it cannot be read.
Scenario load_config(const std::filesystem::path& path);

/// YAML document that parses back to an identical scenario.
std::string export_config(const Scenario& sc);

/// Shortest decimal form that reads back to the same double; locale-independent.
std::string format_double(double x);

}  // namespace nusim
