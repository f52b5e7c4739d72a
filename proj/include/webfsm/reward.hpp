// Composite reward for GUI-agent completions: action type, coordinate in
// box after rescaling, and tag format.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "webfsm/value.hpp"

namespace webfsm {

inline constexpr std::string_view kActionNames[] = {"click",  "hover", "drag", "type_text", "press_enter",
                                                    "scroll", "hotkey", "wait", "answer"};

inline bool is_action_name(std::string_view s) {
  for (auto n : kActionNames)
    if (n == s) return true;
  return false;
}

struct Coord {
  double x = 0, y = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
};

struct ActionPayload {
  std::string action;
  std::optional<Coord> coordinate;
  std::optional<Coord> from, to;
  std::optional<std::string> text, value;
};

struct ParsedCompletion {
  std::optional<std::string> think;
  std::optional<ActionPayload> action;
  bool format_ok = false;
};

struct PixelBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  bool well_formed() const { return x1 <= x2 && y1 <= y2; }
};

struct Scale {
  double sx = 1, sy = 1;
};

struct RewardInput {
  std::string completion;
  ActionPayload gold;
  PixelBox bbox;
  Scale scale;
};

struct RewardBreakdown {
  int r_act = 0, r_coord = 0, r_fmt = 0, total = 0;
  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

namespace detail {

// python-ish dict literal -> json text: 'x' strings, True/False/None
inline std::string pyish_to_json(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < s.size()) {
    char c = s[i];
    if (c == '"' || c == '\'') {
      char q = c;
      out += '"';
      ++i;
      while (i < s.size() && s[i] != q) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          if (s[i + 1] == '\'') out += '\'';
          else { out += s[i]; out += s[i + 1]; }
          i += 2;
          continue;
        }
        if (s[i] == '"') out += "\\\"";
        else out += s[i];
        ++i;
      }
      out += '"';
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && ident(s[j])) ++j;
      auto w = s.substr(i, j - i);
      if (w == "True") out += "true";
      else if (w == "False") out += "false";
      else if (w == "None") out += "null";
      else out += w;
      i = j;
      continue;
    }
    out += c;
    ++i;
  }
  return out;
}

inline std::optional<Coord> read_point(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) return std::nullopt;
  return Coord{j[0].get<double>(), j[1].get<double>()};
}

inline std::optional<std::string> read_str(const json& j, const char* key) {
  if (j.contains(key) && j.at(key).is_string()) return j.at(key).get<std::string>();
  return std::nullopt;
}

// <tag>body</tag> at pos, body not containing either tag
inline std::optional<std::string_view> take_block(std::string_view s, std::size_t& pos, std::string_view tag) {
  std::string open = "<" + std::string(tag) + ">";
  std::string close = "</" + std::string(tag) + ">";
  if (s.compare(pos, open.size(), open) != 0) return std::nullopt;
  std::size_t body = pos + open.size();
  std::size_t end = s.find(close, body);
  if (end == std::string_view::npos) return std::nullopt;
  auto inner = s.substr(body, end - body);
  if (inner.find(open) != std::string_view::npos) return std::nullopt;
  pos = end + close.size();
  return inner;
}

}  // namespace detail

/// Reads an action dict; single-quoted keys/strings and Python literals are
/// accepted. Returns nullopt when the body is not a dict with a known action.
inline std::optional<ActionPayload> parse_action_payload(std::string_view body) {
  json j = json::parse(detail::pyish_to_json(body), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto name = detail::read_str(j, "action");
  if (!name || !is_action_name(*name)) return std::nullopt;
  ActionPayload p;
  p.action = *name;
  if (j.contains("coordinate")) p.coordinate = detail::read_point(j.at("coordinate"));
  if (j.contains("from")) p.from = detail::read_point(j.at("from"));
  if (j.contains("to")) p.to = detail::read_point(j.at("to"));
  p.text = detail::read_str(j, "text");
  p.value = detail::read_str(j, "value");
  return p;
}

/// Template: <think>...</think> optional whitespace <action>...</action>, over
/// the whole string. Never throws.
inline ParsedCompletion parse_completion(std::string_view text) noexcept {
  ParsedCompletion out;
  try {
    std::size_t pos = 0;
    auto think = detail::take_block(text, pos, "think");
    if (think) out.think = std::string(*think);
    // action block is extracted even when the template fails
    std::size_t apos = text.find("<action>", think ? pos : 0);
    std::size_t scan = pos;
    while (scan < text.size() && std::isspace(static_cast<unsigned char>(text[scan]))) ++scan;
    std::optional<std::string_view> action;
    if (think && scan == apos) {
      std::size_t p2 = scan;
      action = detail::take_block(text, p2, "action");
      out.format_ok = action.has_value() && p2 == text.size();
    }
    if (!action && apos != std::string_view::npos) {
      std::size_t p2 = apos;
      action = detail::take_block(text, p2, "action");
    }
    if (action) out.action = parse_action_payload(*action);
  } catch (...) {
    out = ParsedCompletion{};
  }
  return out;
}

inline int reward_action(const ParsedCompletion& pred, const ActionPayload& gold) {
  return pred.action && pred.action->action == gold.action ? 1 : 0;
}

inline std::pair<double, double> map_coordinates(Coord c, Scale s) {
  if (!std::isfinite(c.x) || !std::isfinite(c.y) || !std::isfinite(s.sx) || !std::isfinite(s.sy))
    throw std::invalid_argument("non-finite coordinate or scale");
  if (s.sx <= 0 || s.sy <= 0) throw std::invalid_argument("scale must be positive");
  // products like 0.29 * 100 land a hair under the integer
  auto snap = [](double p) {
    double r = std::round(p);
    return std::fabs(p - r) <= 1e-9 * std::max(1.0, std::fabs(p)) ? r : std::floor(p);
  };
  return {snap(s.sx * c.x), snap(s.sy * c.y)};
}

inline int reward_coordinate(const ParsedCompletion& pred, const ActionPayload& gold, const PixelBox& box, Scale s) {
  if (!reward_action(pred, gold)) return 0;
  const auto& a = pred.action->action;
  if (a != "click" && a != "hover") return 1;
  if (!pred.action->coordinate) return 0;
  std::pair<double, double> p;
  try {
    p = map_coordinates(*pred.action->coordinate, s);
  } catch (const std::invalid_argument&) {
    return 0;
  }
  return box.x1 <= p.first && p.first <= box.x2 && box.y1 <= p.second && p.second <= box.y2 ? 1 : 0;
}

inline RewardBreakdown reward_total(const RewardInput& in) {
  auto pred = parse_completion(in.completion);
  RewardBreakdown b;
  b.r_act = reward_action(pred, in.gold);
  b.r_coord = reward_coordinate(pred, in.gold, in.bbox, in.scale);
  b.r_fmt = pred.format_ok ? 1 : 0;
  b.total = b.r_act + b.r_coord + b.r_fmt;
  return b;
}

// ---------------------------------------------------------------------------
// batch lines: {"completion", "gold", "bbox": [x1,y1,x2,y2], "scale": [sx,sy]}

inline ActionPayload payload_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("gold must be an object");
  auto p = parse_action_payload(j.dump());
  if (!p) throw std::invalid_argument("gold has no known action");
  return *p;
}

inline json payload_to_json(const ActionPayload& p) {
  json j;
  j["action"] = p.action;
  if (p.coordinate) j["coordinate"] = {p.coordinate->x, p.coordinate->y};
  if (p.from) j["from"] = {p.from->x, p.from->y};
  if (p.to) j["to"] = {p.to->x, p.to->y};
  if (p.text) j["text"] = *p.text;
  if (p.value) j["value"] = *p.value;
  return j;
}

inline RewardInput reward_input_from_json(const json& j) {
  RewardInput in;
  in.completion = j.at("completion").get<std::string>();
  in.gold = payload_from_json(j.at("gold"));
  const auto& b = j.at("bbox");
  if (!b.is_array() || b.size() != 4) throw std::invalid_argument("bbox must be [x1, y1, x2, y2]");
  in.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  if (!in.bbox.well_formed()) throw std::invalid_argument("bbox is not well formed");
  if (j.contains("scale")) {
    const auto& s = j.at("scale");
    if (!s.is_array() || s.size() != 2) throw std::invalid_argument("scale must be [sx, sy]");
    in.scale = {s[0].get<double>(), s[1].get<double>()};
  }
  if (!(in.scale.sx > 0) || !(in.scale.sy > 0) || !std::isfinite(in.scale.sx) || !std::isfinite(in.scale.sy))
    throw std::invalid_argument("scale components must be positive");
  return in;
}

struct BatchResult {
  std::vector<ordered_json> lines;  // one per input record, breakdown or error
  std::size_t n = 0;                // scored records
  double mean_act = 0, mean_coord = 0, mean_fmt = 0, mean_total = 0;
};

inline BatchResult reward_batch(std::string_view text) {
  BatchResult out;
  long sa = 0, sc = 0, sf = 0, st = 0;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    ordered_json rec;
    rec["line"] = line_no;
    try {
      auto b = reward_total(reward_input_from_json(json::parse(line)));
      rec["r_act"] = b.r_act;
      rec["r_coord"] = b.r_coord;
      rec["r_fmt"] = b.r_fmt;
      rec["total"] = b.total;
      sa += b.r_act;
      sc += b.r_coord;
      sf += b.r_fmt;
      st += b.total;
      ++out.n;
    } catch (const std::exception& e) {
      rec["error"] = e.what();
    }
    out.lines.push_back(std::move(rec));
  }
  if (out.n) {
    double n = static_cast<double>(out.n);
    out.mean_act = sa / n;
    out.mean_coord = sc / n;
    out.mean_fmt = sf / n;
    out.mean_total = st / n;
  }
  return out;
}

}  // namespace webfsm
