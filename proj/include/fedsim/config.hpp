#pragma once

#include <cstdint>
#include <string>

#include "fedsim/federation.hpp"

namespace fedsim {

// Flat "key = value" config with dotted sections, '#' comments. Unknown
// and duplicate keys are rejected; constraint violations name the key.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical serialisation: every key (defaults included) as sorted
// "key = value" lines. Two configs behave identically iff these match.
std::string canonical_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical form, 16 hex digits; names run outputs.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace fedsim
