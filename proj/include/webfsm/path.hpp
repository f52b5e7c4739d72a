// Signature paths (`$.a.b.c`) and `<PLACEHOLDER>` tokens.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "webfsm/value.hpp"

namespace webfsm {

/// Splits `$.a.b` into {"a", "b"}. Returns nullopt when the path does not
/// start with `$.` or has an empty segment. Array indexing is not supported.
inline std::optional<std::vector<std::string>> split_path(std::string_view path) {
  if (path.size() < 3 || path.substr(0, 2) != "$.") return std::nullopt;
  std::vector<std::string> segments;
  std::string_view rest = path.substr(2);
  while (true) {
    auto dot = rest.find('.');
    std::string_view seg = rest.substr(0, dot);
    if (seg.empty()) return std::nullopt;
    if (seg.find_first_of("[]") != std::string_view::npos) return std::nullopt;
    segments.emplace_back(seg);
    if (dot == std::string_view::npos) break;
    rest = rest.substr(dot + 1);
  }
  return segments;
}

inline std::vector<std::string> require_path(std::string_view path) {
  auto segs = split_path(path);
  if (!segs) throw EvalError("malformed signature path '" + std::string(path) + "'");
  return *segs;
}

inline const Value* resolve_path(const Value& root, const std::vector<std::string>& segments) {
  const Value* cur = &root;
  for (const auto& seg : segments) {
    if (!cur->is_record()) return nullptr;
    auto it = cur->as_record().find(seg);
    if (it == cur->as_record().end()) return nullptr;
    cur = &it->second;
  }
  return cur;
}

inline Value* resolve_path_mut(Value& root, const std::vector<std::string>& segments) {
  Value* cur = &root;
  for (const auto& seg : segments) {
    if (!cur->is_record()) return nullptr;
    auto it = cur->as_record().find(seg);
    if (it == cur->as_record().end()) return nullptr;
    cur = &it->second;
  }
  return cur;
}

/// True when `s` is exactly one `<NAME>` token.
inline bool is_placeholder(std::string_view s) {
  if (s.size() < 3 || s.front() != '<' || s.back() != '>') return false;
  for (char c : s.substr(1, s.size() - 2))
    if (c == '<' || c == '>') return false;
  return true;
}

inline std::string placeholder_name(std::string_view token) {
  return std::string(token.substr(1, token.size() - 2));
}

/// Names of every `<NAME>` token embedded anywhere in `s`.
inline std::vector<std::string> placeholders_in(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = s.find('<', pos)) != std::string_view::npos) {
    auto close = s.find('>', pos + 1);
    if (close == std::string_view::npos) break;
    auto inner = s.substr(pos + 1, close - pos - 1);
    if (!inner.empty() && inner.find('<') == std::string_view::npos) {
      out.emplace_back(inner);
      pos = close + 1;
    } else {
      pos += 1;
    }
  }
  return out;
}

inline bool contains_placeholder(std::string_view s) { return !placeholders_in(s).empty(); }

/// Collects placeholder names from a JSON tree along with the depth at which
/// they sit (0 = the value itself is a placeholder string).
inline void collect_json_placeholders(const json& j, int depth, std::vector<std::pair<std::string, int>>& out) {
  if (j.is_string()) {
    for (auto& n : placeholders_in(j.get_ref<const std::string&>())) out.emplace_back(n, depth);
  } else if (j.is_array() || j.is_object()) {
    for (const auto& e : j) collect_json_placeholders(e, depth + 1, out);
  }
}

}  // namespace webfsm
