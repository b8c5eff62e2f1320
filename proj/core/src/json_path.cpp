#include "mb2d/json_path.hpp"

#include <algorithm>
#include <set>

#include "mb2d/errors.hpp"

namespace mb2d {

std::vector<std::string> leaf_paths(const nlohmann::json& j, const std::string& prefix) {
  std::vector<std::string> out;
  if (!j.is_object()) {
    if (!prefix.empty()) out.push_back(prefix);
    return out;
  }
  for (const auto& [k, v] : j.items()) {
    const auto sub = leaf_paths(v, prefix.empty() ? k : prefix + "." + k);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

namespace {

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

[[noreturn]] void unknown_key(const std::string& key, const std::vector<std::string>& valid) {
  std::string msg = "unknown config key '" + key + "'";
  if (!valid.empty()) msg += "; did you mean '" + nearest_key(key, valid) + "'?";
  throw ConfigError(msg);
}

}  // namespace

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void set_path(nlohmann::json& j, const std::string& dotted, const nlohmann::json& value) {
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) unknown_key(dotted, leaf_paths(j));
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw ConfigError("config key '" + dotted + "' is a section, not a value");
  *node = value;
}

void merge_strict(nlohmann::json& base, const nlohmann::json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (const auto& [k, v] : patch.items()) {
    const std::string path = prefix.empty() ? k : prefix + "." + k;
    if (!base.contains(k)) {
      std::vector<std::string> valid;
      for (const auto& p : leaf_paths(base)) valid.push_back(prefix.empty() ? p : prefix + "." + p);
      unknown_key(path, valid);
    }
    if (base[k].is_object())
      merge_strict(base[k], v, path);
    else
      base[k] = v;
  }
}

std::vector<std::string> diff_paths(const nlohmann::json& a, const nlohmann::json& b) {
  std::set<std::string> keys;
  for (const auto& p : leaf_paths(a)) keys.insert(p);
  for (const auto& p : leaf_paths(b)) keys.insert(p);
  std::vector<std::string> out;
  for (const auto& k : keys) {
    const nlohmann::json::json_pointer ptr("/" + [&] {
      std::string s = k;
      std::replace(s.begin(), s.end(), '.', '/');
      return s;
    }());
    const bool ha = a.contains(ptr), hb = b.contains(ptr);
    if (ha != hb || (ha && a.at(ptr) != b.at(ptr))) out.push_back(k);
  }
  return out;
}

std::pair<std::string, nlohmann::json> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' must look like key=value");
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  auto value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {key, value};
}

}  // namespace mb2d
