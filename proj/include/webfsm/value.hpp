// Signature value tree, canonical serialization and the 64-bit state digest.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace webfsm {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Raised for type mismatches, unbound placeholders, unresolvable paths and
/// other failures while evaluating FSM semantics.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SerializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Value;

/// Set members are literals (null, bool, number, string), kept sorted and
/// unique in canonical literal order.
using ValueSet = std::vector<Value>;
using Record = std::map<std::string, Value>;

/// Tagged tree: null | bool | number | string | set of literals | record.
/// Enum tokens are carried as strings.
class Value {
 public:
  enum class Kind : std::uint8_t { null, boolean, number, string, set, record };

  Value() = default;
  Value(std::nullptr_t) {}
  Value(bool b) : data_(b) {}
  Value(int n) : data_(static_cast<double>(n)) {}
  Value(std::int64_t n) : data_(static_cast<double>(n)) {}
  Value(double d) : data_(d) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(std::string_view s) : data_(std::string(s)) {}
  Value(Record r) : data_(std::move(r)) {}

  static Value make_set(std::vector<Value> members);
  static Value empty_record() { return Value(Record{}); }

  Kind kind() const { return static_cast<Kind>(data_.index()); }
  bool is_null() const { return kind() == Kind::null; }
  bool is_bool() const { return kind() == Kind::boolean; }
  bool is_number() const { return kind() == Kind::number; }
  bool is_string() const { return kind() == Kind::string; }
  bool is_set() const { return kind() == Kind::set; }
  bool is_record() const { return kind() == Kind::record; }
  bool is_literal() const { return kind() <= Kind::string; }

  bool as_bool() const { return std::get<bool>(data_); }
  double as_number() const { return std::get<double>(data_); }
  const std::string& as_string() const { return std::get<std::string>(data_); }
  const ValueSet& as_set() const { return std::get<SetBox>(data_).members; }
  const Record& as_record() const { return std::get<Record>(data_); }
  Record& as_record() { return std::get<Record>(data_); }

  /// Inserts keeping canonical order; returns false when already present.
  bool set_insert(const Value& member);
  bool set_erase(const Value& member);

  friend bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

 private:
  struct SetBox {
    ValueSet members;
    friend bool operator==(const SetBox& a, const SetBox& b) { return a.members == b.members; }
  };
  std::variant<std::monostate, bool, double, std::string, SetBox, Record> data_;
};

// ---------------------------------------------------------------------------
// Canonical ordering and serialization

namespace detail {

inline int kind_rank(const Value& v) { return static_cast<int>(v.kind()); }

inline void append_escaped(std::string& out, std::string_view s) {
  out.push_back('"');
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (c < 0x20) {
          static constexpr char hex[] = "0123456789abcdef";
          out += "\\u00";
          out.push_back(hex[c >> 4]);
          out.push_back(hex[c & 0xF]);
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  out.push_back('"');
}

}  // namespace detail

/// Integers print without a fraction; everything else uses the shortest
/// decimal form that round-trips.
inline std::string format_number(double d) {
  if (!std::isfinite(d)) throw SerializationError("non-finite number in signature");
  if (d == 0.0) return "0";
  char buf[64];
  if (std::trunc(d) == d && std::fabs(d) < 9007199254740992.0) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<std::int64_t>(d));
    return std::string(buf, p);
  }
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, p);
}

/// Total order on literals: null < bool < number < string, then by value.
inline int compare_literals(const Value& a, const Value& b) {
  int ra = detail::kind_rank(a), rb = detail::kind_rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a.kind()) {
    case Value::Kind::null: return 0;
    case Value::Kind::boolean: return static_cast<int>(a.as_bool()) - static_cast<int>(b.as_bool());
    case Value::Kind::number:
      return a.as_number() < b.as_number() ? -1 : (b.as_number() < a.as_number() ? 1 : 0);
    case Value::Kind::string: {
      int c = a.as_string().compare(b.as_string());
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    default: throw EvalError("set members must be literals");
  }
}

inline Value Value::make_set(std::vector<Value> members) {
  for (const auto& m : members)
    if (!m.is_literal()) throw EvalError("set members must be literals");
  std::sort(members.begin(), members.end(),
            [](const Value& a, const Value& b) { return compare_literals(a, b) < 0; });
  members.erase(std::unique(members.begin(), members.end()), members.end());
  Value v;
  v.data_ = SetBox{std::move(members)};
  return v;
}

inline bool Value::set_insert(const Value& member) {
  if (!member.is_literal()) throw EvalError("set members must be literals");
  auto& m = std::get<SetBox>(data_).members;
  auto it = std::lower_bound(m.begin(), m.end(), member,
                             [](const Value& a, const Value& b) { return compare_literals(a, b) < 0; });
  if (it != m.end() && *it == member) return false;
  m.insert(it, member);
  return true;
}

inline bool Value::set_erase(const Value& member) {
  auto& m = std::get<SetBox>(data_).members;
  auto it = std::find(m.begin(), m.end(), member);
  if (it == m.end()) return false;
  m.erase(it);
  return true;
}

inline void canonical_append(std::string& out, const Value& v) {
  switch (v.kind()) {
    case Value::Kind::null: out += "null"; break;
    case Value::Kind::boolean: out += v.as_bool() ? "true" : "false"; break;
    case Value::Kind::number: out += format_number(v.as_number()); break;
    case Value::Kind::string: detail::append_escaped(out, v.as_string()); break;
    case Value::Kind::set: {
      out.push_back('[');
      bool first = true;
      for (const auto& m : v.as_set()) {
        if (!first) out.push_back(',');
        first = false;
        canonical_append(out, m);
      }
      out.push_back(']');
      break;
    }
    case Value::Kind::record: {
      out.push_back('{');
      bool first = true;
      // std::map iterates in byte-lexicographic key order.
      for (const auto& [k, field] : v.as_record()) {
        if (!first) out.push_back(',');
        first = false;
        detail::append_escaped(out, k);
        out.push_back(':');
        canonical_append(out, field);
      }
      out.push_back('}');
      break;
    }
  }
}

/// Deterministic bytes: record keys sorted, set members in canonical literal
/// order, normalized numbers. The output is itself valid compact JSON.
inline std::string canonical_serialize(const Value& v) {
  std::string out;
  canonical_append(out, v);
  return out;
}

/// FNV-1a, 64-bit.
inline std::uint64_t digest64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

inline std::uint64_t parse_hex64(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("bad hex digest: " + std::string(s));
  return v;
}

// ---------------------------------------------------------------------------
// JSON conversion. Arrays become sets; objects become records.

inline Value value_from_json(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return Value();
    case json::value_t::boolean: return Value(j.get<bool>());
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
    case json::value_t::number_float: return Value(j.get<double>());
    case json::value_t::string: return Value(j.get<std::string>());
    case json::value_t::array: {
      std::vector<Value> members;
      members.reserve(j.size());
      for (const auto& e : j) members.push_back(value_from_json(e));
      return Value::make_set(std::move(members));
    }
    case json::value_t::object: {
      Record r;
      for (auto it = j.begin(); it != j.end(); ++it) r.emplace(it.key(), value_from_json(it.value()));
      return Value(std::move(r));
    }
    default: throw EvalError("unsupported JSON value in signature");
  }
}

inline Value value_from_json(const ordered_json& j) { return value_from_json(json::parse(j.dump())); }

inline json number_to_json(double d) {
  if (std::trunc(d) == d && std::fabs(d) < 9007199254740992.0) return json(static_cast<std::int64_t>(d));
  return json(d);
}

inline json value_to_json(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::null: return json(nullptr);
    case Value::Kind::boolean: return json(v.as_bool());
    case Value::Kind::number: return number_to_json(v.as_number());
    case Value::Kind::string: return json(v.as_string());
    case Value::Kind::set: {
      json arr = json::array();
      for (const auto& m : v.as_set()) arr.push_back(value_to_json(m));
      return arr;
    }
    case Value::Kind::record: {
      json obj = json::object();
      for (const auto& [k, f] : v.as_record()) obj[k] = value_to_json(f);
      return obj;
    }
  }
  return json();
}

inline std::string describe(const Value& v) { return canonical_serialize(v); }

}  // namespace webfsm
