#pragma once

#include "dynreg/pipeline.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dynreg {

/**
 * @brief Parse a flat `key = value` config.
 *
 * Keys use dotted section prefixes (e.g. `solver.acceptance_threshold`); `#`
 * starts a comment. A `preset = <name>` line is applied before every other
 * key regardless of its position. Unknown keys, duplicate keys and malformed
 * values raise ConfigurationError naming the line.
 */
PipelineConfig parse_config(std::string_view text, const std::string& source = "<memory>");
PipelineConfig load_config(const std::string& path);

/// Apply one setting; throws ConfigurationError for unknown keys or bad values.
void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value);

/// Every addressable key in registry order.
std::vector<std::string> config_keys();

/// Current value of `key` in the textual form parse_config accepts.
std::string config_value(const PipelineConfig& config, const std::string& key);

/// Full config text; parse_config(emit_config(c)) reproduces c.
std::string emit_config(const PipelineConfig& config);

/// Stable 64-bit hash of emit_config(config), as 16 hex digits.
std::string config_fingerprint(const PipelineConfig& config);

}  // namespace dynreg
