// The fsm.json environment document and the item catalog.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "webfsm/path.hpp"
#include "webfsm/value.hpp"

namespace webfsm {

/// Malformed document (syntax) or a document that violates the fsm.json
/// layout (schema). Syntax errors carry the byte offset reported by the
/// JSON reader; schema errors carry the offending field path.
class SpecError : public std::runtime_error {
 public:
  enum class Kind { syntax, schema };

  SpecError(Kind kind, std::string where, const std::string& message, std::size_t byte_offset = 0)
      : std::runtime_error(format(kind, where, message, byte_offset)),
        kind_(kind),
        where_(std::move(where)),
        byte_offset_(byte_offset) {}

  Kind kind() const { return kind_; }
  const std::string& field_path() const { return where_; }
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  static std::string format(Kind kind, const std::string& where, const std::string& message, std::size_t off) {
    if (kind == Kind::syntax) return "parse error at byte " + std::to_string(off) + ": " + message;
    return "schema error at '" + where + "': " + message;
  }
  Kind kind_;
  std::string where_;
  std::size_t byte_offset_;
};

enum class CondOp { eq, ne, lt, le, gt, ge, in, contains };
enum class EffectOp { assign, increment, decrement, toggle, enum_switch, set_insert, set_delete };
enum class GuiOp { click, hover, drag, type_text, press_enter, scroll, scroll_until_visible, hotkey, wait };

inline constexpr std::string_view to_string(CondOp op) {
  constexpr std::string_view names[] = {"==", "!=", "<", "<=", ">", ">=", "in", "contains"};
  return names[static_cast<int>(op)];
}
inline constexpr std::string_view to_string(EffectOp op) {
  constexpr std::string_view names[] = {"assign",      "increment",  "decrement", "toggle",
                                        "enum_switch", "set_insert", "set_delete"};
  return names[static_cast<int>(op)];
}
inline constexpr std::string_view to_string(GuiOp op) {
  constexpr std::string_view names[] = {"click",  "hover",  "drag",   "type_text", "press_enter",
                                        "scroll", "scroll_until_visible", "hotkey", "wait"};
  return names[static_cast<int>(op)];
}

template <typename E, std::size_t N>
std::optional<E> enum_from_string(std::string_view s, const std::string_view (&names)[N]) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  return std::nullopt;
}

inline std::optional<CondOp> cond_op_from_string(std::string_view s) {
  static constexpr std::string_view names[] = {"==", "!=", "<", "<=", ">", ">=", "in", "contains"};
  return enum_from_string<CondOp>(s, names);
}
inline std::optional<EffectOp> effect_op_from_string(std::string_view s) {
  static constexpr std::string_view names[] = {"assign",      "increment",  "decrement", "toggle",
                                               "enum_switch", "set_insert", "set_delete"};
  return enum_from_string<EffectOp>(s, names);
}
inline std::optional<GuiOp> gui_op_from_string(std::string_view s) {
  static constexpr std::string_view names[] = {"click",  "hover",  "drag",   "type_text", "press_enter",
                                               "scroll", "scroll_until_visible", "hotkey", "wait"};
  return enum_from_string<GuiOp>(s, names);
}

struct Condition {
  std::string path;
  CondOp op = CondOp::eq;
  json value;
};

struct Effect {
  std::string path;
  EffectOp op = EffectOp::assign;
  json value;
  bool has_value = false;  // toggle/increment/decrement carry no value
  std::optional<std::vector<json>> options;  // declared enum domain for enum_switch
  json extra = json::object();
};

struct UiOption {
  json value;
  std::string selector;
};

struct UiElements {
  std::string container;
  std::vector<UiOption> options;
};

/// `repeat` bounds page-next style loops. kUnboundedRepeat marks a loop the
/// document left open-ended; the validator rejects it.
inline constexpr std::int64_t kUnboundedRepeat = -1;
inline constexpr std::int64_t kMaxRepeat = 100;

struct GuiStep {
  GuiOp op = GuiOp::click;
  std::optional<std::string> selector;
  std::optional<std::string> to_selector;  // drag target
  std::optional<std::string> text;
  std::optional<std::string> value;  // scroll direction / hotkey chord
  std::optional<UiElements> ui_elements;
  std::optional<std::int64_t> repeat;
  json extra = json::object();

  std::int64_t repeat_count() const { return repeat.value_or(1); }
};

struct ActionSpec {
  std::string id;
  std::string name;
  std::string from;
  std::string to;
  bool is_navigation = false;
  std::optional<std::string> to_page_id;
  json params = json::object();  // param-name -> placeholder or literal
  std::vector<Condition> preconditions;
  std::vector<Effect> effects;
  std::vector<GuiStep> gui_procedure;
  std::optional<bool> resets_results;
  json param_sources = json::object();  // param-name -> {collection, field}
  json extra = json::object();
};

struct PageSpec {
  std::string id;
  std::string page_name;
  Value signature_defaults = Value::empty_record();
  std::vector<std::string> actions;
  json extra = json::object();
};

struct NavEdge {
  std::string from;
  std::string to;
  std::string via;

  friend auto operator<=>(const NavEdge&, const NavEdge&) = default;
};

struct NavSkeleton {
  std::vector<std::string> nodes;
  std::vector<NavEdge> edges;
};

struct Meta {
  std::string initial_page_id;
  std::vector<std::string> terminal_pages;
  json complexity_profile = json::object();  // parsed, never interpreted
  json extra = json::object();
};

struct FsmSpec {
  Meta meta;
  std::map<std::string, PageSpec> pages;
  std::map<std::string, ActionSpec> actions;
  std::optional<NavSkeleton> nav_skeleton;  // as shipped in the document
  json extra = json::object();

  const PageSpec& page(const std::string& id) const {
    auto it = pages.find(id);
    if (it == pages.end()) throw EvalError("unknown page '" + id + "'");
    return it->second;
  }
  const ActionSpec& action(const std::string& id) const {
    auto it = actions.find(id);
    if (it == actions.end()) throw EvalError("unknown action '" + id + "'");
    return it->second;
  }
  bool is_terminal(const std::string& page_id) const {
    return std::find(meta.terminal_pages.begin(), meta.terminal_pages.end(), page_id) != meta.terminal_pages.end();
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline json take_extra(const json& obj, std::initializer_list<std::string_view> known) {
  json extra = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool is_known = false;
    for (auto k : known)
      if (it.key() == k) is_known = true;
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

inline const json& require_field(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SpecError(SpecError::Kind::schema, where + "." + key, key + " missing");
  return *it;
}

inline std::string require_string(const json& obj, const std::string& key, const std::string& where) {
  const json& v = require_field(obj, key, where);
  if (!v.is_string()) throw SpecError(SpecError::Kind::schema, where + "." + key, key + " must be a string");
  return v.get<std::string>();
}

inline void require_object(const json& v, const std::string& where) {
  if (!v.is_object()) throw SpecError(SpecError::Kind::schema, where, "expected an object");
}

inline void require_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw SpecError(SpecError::Kind::schema, where, "expected an array");
}

inline std::optional<std::string> opt_string(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SpecError(SpecError::Kind::schema, where + "." + key, key + " must be a string");
  return it->get<std::string>();
}

inline Condition parse_condition(const json& j, const std::string& where) {
  require_object(j, where);
  Condition c;
  c.path = require_string(j, "path", where);
  auto op = require_string(j, "op", where);
  auto parsed = cond_op_from_string(op);
  if (!parsed) throw SpecError(SpecError::Kind::schema, where + ".op", "unknown condition operator '" + op + "'");
  c.op = *parsed;
  c.value = j.contains("value") ? j.at("value") : json();
  return c;
}

inline Effect parse_effect(const json& j, const std::string& where) {
  require_object(j, where);
  Effect e;
  e.path = require_string(j, "path", where);
  auto op = require_string(j, "op", where);
  auto parsed = effect_op_from_string(op);
  if (!parsed) throw SpecError(SpecError::Kind::schema, where + ".op", "unknown effect operator '" + op + "'");
  e.op = *parsed;
  if (j.contains("value")) {
    e.value = j.at("value");
    e.has_value = true;
  }
  if (j.contains("options")) {
    require_array(j.at("options"), where + ".options");
    e.options = j.at("options").get<std::vector<json>>();
  }
  e.extra = take_extra(j, {"path", "op", "value", "options"});
  return e;
}

inline GuiStep parse_gui_step(const json& j, const std::string& where) {
  require_object(j, where);
  GuiStep s;
  auto op = require_string(j, "op", where);
  auto parsed = gui_op_from_string(op);
  if (!parsed) throw SpecError(SpecError::Kind::schema, where + ".op", "unknown gui op '" + op + "'");
  s.op = *parsed;
  s.selector = opt_string(j, "selector", where);
  s.to_selector = opt_string(j, "to_selector", where);
  s.text = opt_string(j, "text", where);
  if (j.contains("value")) {
    const auto& v = j.at("value");
    if (!v.is_string()) throw SpecError(SpecError::Kind::schema, where + ".value", "value must be a string");
    s.value = v.get<std::string>();
  }
  if (j.contains("ui_elements")) {
    const auto& u = j.at("ui_elements");
    const std::string uw = where + ".ui_elements";
    require_object(u, uw);
    UiElements ui;
    ui.container = require_string(u, "container", uw);
    const auto& opts = require_field(u, "options", uw);
    require_array(opts, uw + ".options");
    for (std::size_t i = 0; i < opts.size(); ++i) {
      const std::string ow = uw + ".options[" + std::to_string(i) + "]";
      require_object(opts[i], ow);
      ui.options.push_back(UiOption{require_field(opts[i], "value", ow), require_string(opts[i], "selector", ow)});
    }
    s.ui_elements = std::move(ui);
  }
  if (j.contains("repeat")) {
    const auto& r = j.at("repeat");
    if (r.is_number_integer()) {
      s.repeat = r.get<std::int64_t>();
    } else if (r.is_string() || r.is_null()) {
      s.repeat = kUnboundedRepeat;
    } else {
      throw SpecError(SpecError::Kind::schema, where + ".repeat", "repeat must be an integer");
    }
  }
  s.extra = take_extra(j, {"op", "selector", "to_selector", "text", "value", "ui_elements", "repeat"});

  switch (s.op) {
    case GuiOp::click:
    case GuiOp::hover:
    case GuiOp::scroll_until_visible:
      if (!s.selector) throw SpecError(SpecError::Kind::schema, where + ".selector", std::string(op) + " requires a selector");
      break;
    case GuiOp::type_text:
      if (!s.text) throw SpecError(SpecError::Kind::schema, where + ".text", "type_text requires text");
      break;
    default: break;
  }
  return s;
}

inline ActionSpec parse_action(const std::string& id, const json& j, const std::string& where) {
  require_object(j, where);
  ActionSpec a;
  a.id = id;
  a.name = opt_string(j, "name", where).value_or("");
  a.from = require_string(j, "from", where);
  a.to = require_string(j, "to", where);
  const auto& nav = require_field(j, "is_navigation", where);
  if (!nav.is_boolean()) throw SpecError(SpecError::Kind::schema, where + ".is_navigation", "is_navigation must be a boolean");
  a.is_navigation = nav.get<bool>();
  a.to_page_id = opt_string(j, "to_page_id", where);
  if (a.is_navigation && !a.to_page_id)
    throw SpecError(SpecError::Kind::schema, where + ".to_page_id", "navigation action requires to_page_id");
  if (j.contains("params")) {
    require_object(j.at("params"), where + ".params");
    a.params = j.at("params");
  }
  if (j.contains("preconditions")) {
    const auto& pre = j.at("preconditions");
    require_array(pre, where + ".preconditions");
    for (std::size_t i = 0; i < pre.size(); ++i)
      a.preconditions.push_back(parse_condition(pre[i], where + ".preconditions[" + std::to_string(i) + "]"));
  }
  if (j.contains("effects")) {
    const auto& eff = j.at("effects");
    require_array(eff, where + ".effects");
    for (std::size_t i = 0; i < eff.size(); ++i)
      a.effects.push_back(parse_effect(eff[i], where + ".effects[" + std::to_string(i) + "]"));
  }
  if (j.contains("gui_procedure")) {
    const auto& gp = j.at("gui_procedure");
    require_array(gp, where + ".gui_procedure");
    for (std::size_t i = 0; i < gp.size(); ++i)
      a.gui_procedure.push_back(parse_gui_step(gp[i], where + ".gui_procedure[" + std::to_string(i) + "]"));
  }
  if (j.contains("resets_results")) {
    if (!j.at("resets_results").is_boolean())
      throw SpecError(SpecError::Kind::schema, where + ".resets_results", "resets_results must be a boolean");
    a.resets_results = j.at("resets_results").get<bool>();
  }
  if (j.contains("param_sources")) {
    require_object(j.at("param_sources"), where + ".param_sources");
    a.param_sources = j.at("param_sources");
  }
  a.extra = take_extra(j, {"name", "from", "to", "is_navigation", "to_page_id", "params", "preconditions", "effects",
                           "gui_procedure", "resets_results", "param_sources"});
  return a;
}

inline PageSpec parse_page(const std::string& id, const json& j, const std::string& where) {
  require_object(j, where);
  PageSpec p;
  p.id = id;
  p.page_name = opt_string(j, "page_name", where).value_or("");
  const auto& sig = require_field(j, "signature", where);
  if (!sig.is_object()) throw SpecError(SpecError::Kind::schema, where + ".signature", "signature must be an object");
  try {
    p.signature_defaults = value_from_json(sig);
  } catch (const EvalError& e) {
    throw SpecError(SpecError::Kind::schema, where + ".signature", e.what());
  }
  const auto& acts = require_field(j, "actions", where);
  require_array(acts, where + ".actions");
  for (std::size_t i = 0; i < acts.size(); ++i) {
    if (!acts[i].is_string())
      throw SpecError(SpecError::Kind::schema, where + ".actions[" + std::to_string(i) + "]", "action id must be a string");
    p.actions.push_back(acts[i].get<std::string>());
  }
  p.extra = take_extra(j, {"page_name", "signature", "actions"});
  return p;
}

inline NavSkeleton parse_nav_skeleton(const json& j) {
  const std::string where = "nav_skeleton";
  require_object(j, where);
  NavSkeleton nav;
  if (j.contains("nodes")) {
    require_array(j.at("nodes"), where + ".nodes");
    for (const auto& n : j.at("nodes")) {
      if (!n.is_string()) throw SpecError(SpecError::Kind::schema, where + ".nodes", "node must be a page id");
      nav.nodes.push_back(n.get<std::string>());
    }
  }
  if (j.contains("edges")) {
    const auto& edges = j.at("edges");
    require_array(edges, where + ".edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string ew = where + ".edges[" + std::to_string(i) + "]";
      require_object(edges[i], ew);
      nav.edges.push_back(
          NavEdge{require_string(edges[i], "from", ew), require_string(edges[i], "to", ew), require_string(edges[i], "via", ew)});
    }
  }
  return nav;
}

}  // namespace detail

/// Parses an fsm.json document. Unknown fields are kept as opaque extras.
inline FsmSpec parse_spec(std::string_view document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw SpecError(SpecError::Kind::syntax, "", e.what(), e.byte);
  }
  if (!root.is_object()) throw SpecError(SpecError::Kind::schema, "$", "document must be an object");

  FsmSpec spec;
  const auto& meta = detail::require_field(root, "meta", "$");
  detail::require_object(meta, "meta");
  spec.meta.initial_page_id = detail::require_string(meta, "initial_page_id", "meta");
  const auto& terms = detail::require_field(meta, "terminal_pages", "meta");
  detail::require_array(terms, "meta.terminal_pages");
  for (const auto& t : terms) {
    if (!t.is_string()) throw SpecError(SpecError::Kind::schema, "meta.terminal_pages", "terminal page must be a page id");
    spec.meta.terminal_pages.push_back(t.get<std::string>());
  }
  if (meta.contains("complexity_profile")) spec.meta.complexity_profile = meta.at("complexity_profile");
  spec.meta.extra = detail::take_extra(meta, {"initial_page_id", "terminal_pages", "complexity_profile"});

  const auto& pages = detail::require_field(root, "pages", "$");
  detail::require_object(pages, "pages");
  for (auto it = pages.begin(); it != pages.end(); ++it)
    spec.pages.emplace(it.key(), detail::parse_page(it.key(), it.value(), "pages." + it.key()));

  const auto& actions = detail::require_field(root, "actions", "$");
  detail::require_object(actions, "actions");
  for (auto it = actions.begin(); it != actions.end(); ++it)
    spec.actions.emplace(it.key(), detail::parse_action(it.key(), it.value(), "actions." + it.key()));

  if (root.contains("nav_skeleton")) spec.nav_skeleton = detail::parse_nav_skeleton(root.at("nav_skeleton"));
  spec.extra = detail::take_extra(root, {"meta", "pages", "actions", "nav_skeleton"});
  return spec;
}

// ---------------------------------------------------------------------------
// Serialization (fsm.json layout, fixed key order)

inline ordered_json gui_step_to_json(const GuiStep& s) {
  ordered_json j;
  j["op"] = std::string(to_string(s.op));
  if (s.selector) j["selector"] = *s.selector;
  if (s.to_selector) j["to_selector"] = *s.to_selector;
  if (s.text) j["text"] = *s.text;
  if (s.value) j["value"] = *s.value;
  if (s.ui_elements) {
    ordered_json ui;
    ui["container"] = s.ui_elements->container;
    ordered_json opts = ordered_json::array();
    for (const auto& o : s.ui_elements->options) {
      ordered_json oj;
      oj["value"] = ordered_json::parse(o.value.dump());
      oj["selector"] = o.selector;
      opts.push_back(std::move(oj));
    }
    ui["options"] = std::move(opts);
    j["ui_elements"] = std::move(ui);
  }
  if (s.repeat) {
    if (*s.repeat == kUnboundedRepeat)
      j["repeat"] = "unbounded";
    else
      j["repeat"] = *s.repeat;
  }
  for (auto it = s.extra.begin(); it != s.extra.end(); ++it) j[it.key()] = ordered_json::parse(it.value().dump());
  return j;
}

inline json spec_to_json(const FsmSpec& spec) {
  json root = spec.extra;
  json meta = spec.meta.extra;
  meta["initial_page_id"] = spec.meta.initial_page_id;
  meta["terminal_pages"] = spec.meta.terminal_pages;
  meta["complexity_profile"] = spec.meta.complexity_profile;
  root["meta"] = meta;

  json pages = json::object();
  for (const auto& [id, p] : spec.pages) {
    json pj = p.extra;
    pj["page_name"] = p.page_name;
    pj["signature"] = value_to_json(p.signature_defaults);
    pj["actions"] = p.actions;
    pages[id] = pj;
  }
  root["pages"] = pages;

  json actions = json::object();
  for (const auto& [id, a] : spec.actions) {
    json aj = a.extra;
    aj["name"] = a.name;
    aj["from"] = a.from;
    aj["to"] = a.to;
    aj["is_navigation"] = a.is_navigation;
    if (a.to_page_id) aj["to_page_id"] = *a.to_page_id;
    aj["params"] = a.params;
    json pre = json::array();
    for (const auto& c : a.preconditions) pre.push_back({{"path", c.path}, {"op", to_string(c.op)}, {"value", c.value}});
    aj["preconditions"] = pre;
    json eff = json::array();
    for (const auto& e : a.effects) {
      json ej = e.extra;
      ej["path"] = e.path;
      ej["op"] = to_string(e.op);
      if (e.has_value) ej["value"] = e.value;
      if (e.options) ej["options"] = *e.options;
      eff.push_back(ej);
    }
    aj["effects"] = eff;
    json gp = json::array();
    for (const auto& s : a.gui_procedure) gp.push_back(json::parse(gui_step_to_json(s).dump()));
    aj["gui_procedure"] = gp;
    if (a.resets_results) aj["resets_results"] = *a.resets_results;
    if (!a.param_sources.empty()) aj["param_sources"] = a.param_sources;
    actions[id] = aj;
  }
  root["actions"] = actions;

  if (spec.nav_skeleton) {
    json nav;
    nav["nodes"] = spec.nav_skeleton->nodes;
    json edges = json::array();
    for (const auto& e : spec.nav_skeleton->edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"via", e.via}});
    nav["edges"] = edges;
    root["nav_skeleton"] = nav;
  }
  return root;
}

inline std::string serialize_spec(const FsmSpec& spec) { return spec_to_json(spec).dump(2); }

/// Digest embedded in every derived artifact so downstream commands can
/// refuse inputs produced from a different environment.
inline std::string spec_digest(const FsmSpec& spec) { return hex64(digest64(spec_to_json(spec).dump())); }

// ---------------------------------------------------------------------------
// Catalog

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CatalogItem {
  std::string id;
  ordered_json fields;  // flat record, document key order

  std::optional<Value> get(const std::string& field) const {
    auto it = fields.find(field);
    if (it == fields.end()) return std::nullopt;
    return value_from_json(json::parse(it->dump()));
  }
};

struct Collection {
  std::string name;
  std::vector<CatalogItem> items;
};

struct DataCatalog {
  std::vector<Collection> collections;  // document order

  const Collection* find(const std::string& name) const {
    for (const auto& c : collections)
      if (c.name == name) return &c;
    return nullptr;
  }
  /// First item with this id in any collection, with its 1-based position.
  std::optional<std::pair<const CatalogItem*, std::size_t>> find_item(const std::string& id) const {
    for (const auto& c : collections)
      for (std::size_t i = 0; i < c.items.size(); ++i)
        if (c.items[i].id == id) return std::make_pair(&c.items[i], i + 1);
    return std::nullopt;
  }
  bool empty() const { return collections.empty(); }
};

/// Loads a catalog document: an object mapping collection name to an array
/// of flat item records. A store wrapper of the form {"id": ..., "state":
/// {collections...}, ...} is unwrapped first.
inline DataCatalog load_catalog(std::string_view document) {
  ordered_json root;
  try {
    root = ordered_json::parse(document);
  } catch (const ordered_json::parse_error& e) {
    throw CatalogError("catalog parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!root.is_object()) throw CatalogError("catalog must be an object of collections");
  if (root.contains("state") && root.at("state").is_object()) {
    ordered_json inner = root.at("state");
    root = std::move(inner);
  }
  DataCatalog cat;
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (!it.value().is_array()) throw CatalogError("collection '" + it.key() + "' must be an array");
    Collection c{it.key(), {}};
    std::vector<std::string> seen;
    for (const auto& item : it.value()) {
      if (!item.is_object()) throw CatalogError("collection '" + it.key() + "' contains a non-object item");
      auto id = item.find("id");
      if (id == item.end()) throw CatalogError("item without id in collection '" + it.key() + "'");
      std::string id_str = id->is_string() ? id->get<std::string>() : id->dump();
      for (auto f = item.begin(); f != item.end(); ++f)
        if (f.value().is_structured())
          throw CatalogError("item '" + id_str + "' field '" + f.key() + "' is not a literal");
      if (std::find(seen.begin(), seen.end(), id_str) != seen.end())
        throw CatalogError("duplicate item id '" + id_str + "' in collection '" + it.key() + "'");
      seen.push_back(id_str);
      c.items.push_back(CatalogItem{id_str, item});
    }
    cat.collections.push_back(std::move(c));
  }
  return cat;
}

}  // namespace webfsm
