#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mb2d {

/// Dotted paths of every non-object value ("train.adam.lr", ...).
std::vector<std::string> leaf_paths(const nlohmann::json& j, const std::string& prefix = {});

/// Candidate closest to `key` by edit distance.
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);

/// Replaces the value at an existing dotted path. Unknown paths raise
/// ConfigError naming the nearest valid key.
void set_path(nlohmann::json& j, const std::string& dotted, const nlohmann::json& value);

/// Recursively overlays `patch` on `base`; every key in `patch` must already
/// exist in `base`. Arrays and scalars are replaced whole.
void merge_strict(nlohmann::json& base, const nlohmann::json& patch, const std::string& prefix = {});

/// Leaf paths whose values differ between two documents of the same schema.
std::vector<std::string> diff_paths(const nlohmann::json& a, const nlohmann::json& b);

/// Parses "key=value"; the value is read as JSON and falls back to a string.
std::pair<std::string, nlohmann::json> parse_assignment(const std::string& text);

}  // namespace mb2d
