#pragma once

#include <map>
#include <string>
#include <vector>

#include "genhints/common.hpp"

namespace genhints {

// Flat key=value config with dotted section prefixes and '#' comments.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap parse_config_file(const std::string& path);

// Sorted "key=value\n" serialization; hashing and provenance files use this.
std::string canonical_config_text(const ConfigMap& config);

// FNV-1a 64 over the canonical text, rendered as 16 hex digits.
std::string config_hash(const ConfigMap& config);

// Fills in defaults and rejects unknown keys (listing all offenders).
ConfigMap resolve_config(const ConfigMap& config);

ConfigMap default_config();

double config_double(const ConfigMap& c, const std::string& key);
long config_long(const ConfigMap& c, const std::string& key);
bool config_bool(const ConfigMap& c, const std::string& key);
std::vector<double> config_double_list(const ConfigMap& c, const std::string& key);
std::vector<uint64_t> config_seed_list(const ConfigMap& c, const std::string& key);

}  // namespace genhints
