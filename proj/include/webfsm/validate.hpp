// Deterministic well-formedness checks over a parsed FsmSpec.
//
//   C1  every terminal page is reachable from the initial page over
//       navigation edges
//   C2  preconditions reference `$.` signature paths that resolve on the
//       source page and contain no placeholders
//   C3  effects are deterministic local updates: declared paths only, no
//       overlapping writes, type-compatible ops, leaf-only placeholders
//   C4  navigation and procedures are well-defined: pages and actions exist,
//       from/to agree with is_navigation, the shipped nav_skeleton matches the
//       derived one, gui procedures are non-empty, bounded and executable
//   C5  result-set-changing actions reset their page's pagination fields
#pragma once

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "webfsm/engine.hpp"
#include "webfsm/spec.hpp"

namespace webfsm {

enum class Severity { error, warning };

inline std::string_view to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

struct Finding {
  std::string check;  // "C1".."C5"
  Severity severity = Severity::error;
  std::string location;
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Finding> findings;

  std::size_t count(std::string_view check) const {
    return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [&](const Finding& f) {
      return f.check == check && f.severity == Severity::error;
    }));
  }
};

/// Cross-page edges induced by navigation actions, sorted by (from, to, via).
/// Nodes are all page ids.
inline NavSkeleton derive_nav_skeleton(const FsmSpec& spec) {
  NavSkeleton nav;
  for (const auto& [id, page] : spec.pages) nav.nodes.push_back(id);
  for (const auto& [id, a] : spec.actions)
    if (a.is_navigation && a.to_page_id) nav.edges.push_back(NavEdge{a.from, *a.to_page_id, id});
  std::sort(nav.edges.begin(), nav.edges.end());
  return nav;
}

/// Pages reachable from `start` over the given edges (breadth-first).
inline std::set<std::string> reachable_pages(const std::string& start, const std::vector<NavEdge>& edges) {
  std::set<std::string> seen{start};
  std::deque<std::string> queue{start};
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    for (const auto& e : edges)
      if (e.from == cur && seen.insert(e.to).second) queue.push_back(e.to);
  }
  return seen;
}

namespace detail {

class ReportBuilder {
 public:
  void error(std::string check, std::string location, std::string message) {
    findings_.push_back({std::move(check), Severity::error, std::move(location), std::move(message)});
  }
  void warning(std::string check, std::string location, std::string message) {
    findings_.push_back({std::move(check), Severity::warning, std::move(location), std::move(message)});
  }
  ValidationReport finish() {
    std::stable_sort(findings_.begin(), findings_.end(),
                     [](const Finding& a, const Finding& b) { return a.check < b.check; });
    ValidationReport r;
    r.findings = std::move(findings_);
    r.ok = std::none_of(r.findings.begin(), r.findings.end(),
                        [](const Finding& f) { return f.severity == Severity::error; });
    return r;
  }

 private:
  std::vector<Finding> findings_;
};

inline bool is_pagination_segment(const std::string& s) {
  return s == "pagination" || s == "page_index" || s == "page" || s == "page_number" || s == "offset" ||
         s == "cursor";
}

inline void collect_pagination_leaves(const Value& v, std::vector<std::string>& prefix, bool under,
                                      std::vector<std::pair<std::string, Value>>& out) {
  if (v.is_record()) {
    for (const auto& [k, f] : v.as_record()) {
      prefix.push_back(k);
      collect_pagination_leaves(f, prefix, under || is_pagination_segment(k), out);
      prefix.pop_back();
    }
    return;
  }
  if (!under) return;
  std::string path = "$";
  for (const auto& s : prefix) path += "." + s;
  out.emplace_back(path, v);
}

inline bool path_is_prefix(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

/// Schema an action's effects may touch: the source page's defaults, plus
/// target-only fields for navigation actions.
inline Value effect_schema(const FsmSpec& spec, const ActionSpec& a) {
  auto src = spec.pages.find(a.from);
  Value schema = src != spec.pages.end() ? src->second.signature_defaults : Value::empty_record();
  if (a.is_navigation && a.to_page_id) {
    auto dst = spec.pages.find(*a.to_page_id);
    if (dst != spec.pages.end() && dst->second.signature_defaults.is_record() && schema.is_record())
      for (const auto& [k, f] : dst->second.signature_defaults.as_record()) schema.as_record().try_emplace(k, f);
  }
  return schema;
}

inline void check_reachability(const FsmSpec& spec, ReportBuilder& rb) {
  if (!spec.pages.count(spec.meta.initial_page_id)) {
    rb.error("C1", "meta.initial_page_id", "initial page '" + spec.meta.initial_page_id + "' does not exist");
    return;
  }
  if (spec.meta.terminal_pages.empty()) rb.error("C1", "meta.terminal_pages", "no terminal pages declared");
  auto reach = reachable_pages(spec.meta.initial_page_id, derive_nav_skeleton(spec).edges);
  for (const auto& t : spec.meta.terminal_pages) {
    if (!spec.pages.count(t))
      rb.error("C1", t, "terminal page does not exist");
    else if (!reach.count(t))
      rb.error("C1", t, "terminal page unreachable from '" + spec.meta.initial_page_id + "'");
  }
}

inline void check_preconditions(const FsmSpec& spec, const ActionSpec& a, ReportBuilder& rb) {
  auto src = spec.pages.find(a.from);
  for (std::size_t i = 0; i < a.preconditions.size(); ++i) {
    const auto& c = a.preconditions[i];
    const std::string where = a.id + ".preconditions[" + std::to_string(i) + "]";
    auto segs = split_path(c.path);
    if (!segs) {
      rb.error("C2", where, "path '" + c.path + "' is not a '$.' signature path");
      continue;
    }
    if (contains_placeholder(c.path)) {
      rb.error("C2", where, "path '" + c.path + "' contains a placeholder");
      continue;
    }
    std::vector<std::pair<std::string, int>> ph;
    collect_json_placeholders(c.value, 0, ph);
    if (!ph.empty()) rb.error("C2", where, "value contains placeholder <" + ph.front().first + ">");
    if (src != spec.pages.end() && !resolve_path(src->second.signature_defaults, *segs))
      rb.error("C2", where, "path '" + c.path + "' does not resolve on page '" + a.from + "'");
  }
}

inline void check_effects(const FsmSpec& spec, const ActionSpec& a, ReportBuilder& rb) {
  const Value schema = effect_schema(spec, a);
  const auto plan = placeholder_plan(a);
  std::vector<std::vector<std::string>> written;
  for (std::size_t i = 0; i < a.effects.size(); ++i) {
    const auto& e = a.effects[i];
    const std::string where = a.id + ".effects[" + std::to_string(i) + "]";
    auto segs = split_path(e.path);
    if (!segs) {
      rb.error("C3", where, "path '" + e.path + "' is not a '$.' signature path");
      continue;
    }
    if (contains_placeholder(e.path)) rb.error("C3", where, "path '" + e.path + "' contains a placeholder");

    for (const auto& prev : written)
      if (path_is_prefix(prev, *segs) || path_is_prefix(*segs, prev)) {
        rb.error("C3", where, "path '" + e.path + "' overlaps an earlier effect of the same action");
        break;
      }
    written.push_back(*segs);

    const Value* target = resolve_path(schema, *segs);
    if (!target) {
      std::vector<std::string> parent(segs->begin(), segs->end() - 1);
      const Value* p = resolve_path(schema, parent);
      bool open_map_assign = e.op == EffectOp::assign && segs->size() >= 2 && p && p->is_record();
      if (!open_map_assign) rb.error("C3", where, "path '" + e.path + "' is not a declared signature field");
    } else {
      bool type_ok = true;
      switch (e.op) {
        case EffectOp::increment:
        case EffectOp::decrement: type_ok = target->is_number(); break;
        case EffectOp::toggle: type_ok = target->is_bool(); break;
        case EffectOp::set_insert:
        case EffectOp::set_delete: type_ok = target->is_set(); break;
        default: break;
      }
      if (!type_ok) rb.error("C3", where, std::string(to_string(e.op)) + " is incompatible with the field's default type");
    }

    bool needs_value = e.op == EffectOp::assign || e.op == EffectOp::enum_switch || e.op == EffectOp::set_insert ||
                       e.op == EffectOp::set_delete;
    if (needs_value && !e.has_value) rb.error("C3", where, std::string(to_string(e.op)) + " requires a value");

    std::vector<std::pair<std::string, int>> ph;
    collect_json_placeholders(e.value, 0, ph);
    for (const auto& [name, depth] : ph)
      if (depth > 0) rb.error("C3", where, "placeholder <" + name + "> is nested inside a structured value");

    if (e.op == EffectOp::enum_switch && e.options && e.value.is_string() && !is_placeholder(e.value.get<std::string>())) {
      if (std::find(e.options->begin(), e.options->end(), e.value) == e.options->end())
        rb.error("C3", where, "enum_switch value is not among the declared options");
    }
  }
  for (const auto& name : plan.unbindable) rb.error("C3", a.id, "placeholder <" + name + "> has no binding source");
}

inline void check_procedure(const ActionSpec& a, ReportBuilder& rb) {
  if (a.gui_procedure.empty()) rb.error("C4", a.id, "empty gui_procedure");
  std::vector<std::string> acted;
  for (std::size_t i = 0; i < a.gui_procedure.size(); ++i) {
    const auto& s = a.gui_procedure[i];
    const std::string where = a.id + ".gui_procedure[" + std::to_string(i) + "]";
    if (s.repeat && (*s.repeat == kUnboundedRepeat || *s.repeat < 1 || *s.repeat > kMaxRepeat))
      rb.error("C4", where, "loop repeat count must be an integer in [1, " + std::to_string(kMaxRepeat) + "]");
    if (s.op == GuiOp::drag && !s.selector) rb.error("C4", where, "drag requires a source selector");
    if (s.ui_elements) {
      const auto& ui = *s.ui_elements;
      if (std::find(acted.begin(), acted.end(), ui.container) == acted.end())
        rb.error("C4", where, "option container '" + ui.container + "' is not opened earlier in the procedure");
      if (ui.options.empty()) rb.error("C4", where, "ui_elements declares no options");
      bool listed = s.selector && (is_placeholder(*s.selector) ||
                                   std::any_of(ui.options.begin(), ui.options.end(),
                                               [&](const UiOption& o) { return o.selector == *s.selector; }));
      if (!listed) rb.error("C4", where, "selected option is not one of the declared options");
    }
    if ((s.op == GuiOp::click || s.op == GuiOp::hover) && s.selector) acted.push_back(*s.selector);
  }
}

inline void check_navigation(const FsmSpec& spec, ReportBuilder& rb) {
  for (const auto& [pid, page] : spec.pages) {
    for (const auto& aid : page.actions) {
      auto it = spec.actions.find(aid);
      if (it == spec.actions.end())
        rb.error("C4", pid, "page lists unknown action '" + aid + "'");
      else if (it->second.from != pid)
        rb.error("C4", pid, "page lists action '" + aid + "' whose source page is '" + it->second.from + "'");
    }
    if (!page.signature_defaults.is_record()) rb.error("C4", pid, "signature defaults must be a record");
  }
  for (const auto& [aid, a] : spec.actions) {
    auto src = spec.pages.find(a.from);
    if (src == spec.pages.end()) {
      rb.error("C4", aid, "source page '" + a.from + "' does not exist");
    } else if (std::find(src->second.actions.begin(), src->second.actions.end(), aid) == src->second.actions.end()) {
      rb.warning("C4", aid, "action is not listed on its source page and can never fire");
    }
    if (!spec.pages.count(a.to)) rb.error("C4", aid, "target page '" + a.to + "' does not exist");
    if (a.is_navigation) {
      if (!a.to_page_id || !spec.pages.count(*a.to_page_id))
        rb.error("C4", aid, "to_page_id '" + a.to_page_id.value_or("") + "' does not exist");
      else if (*a.to_page_id != a.to)
        rb.error("C4", aid, "to_page_id '" + *a.to_page_id + "' disagrees with to '" + a.to + "'");
    } else if (a.from != a.to) {
      rb.error("C4", aid, "in-page action has from '" + a.from + "' != to '" + a.to + "'");
    }
    check_procedure(a, rb);
  }

  if (spec.nav_skeleton) {
    auto derived = derive_nav_skeleton(spec);
    std::set<NavEdge> want(derived.edges.begin(), derived.edges.end());
    std::set<NavEdge> have(spec.nav_skeleton->edges.begin(), spec.nav_skeleton->edges.end());
    auto edge_str = [](const NavEdge& e) { return e.from + "->" + e.to + " via " + e.via; };
    for (const auto& e : have) {
      auto it = spec.actions.find(e.via);
      if (it == spec.actions.end() || !it->second.is_navigation)
        rb.error("C4", "nav_skeleton", "edge " + edge_str(e) + " does not reference a navigation action");
      else if (!want.count(e))
        rb.error("C4", "nav_skeleton", "edge " + edge_str(e) + " disagrees with its action");
    }
    for (const auto& e : want)
      if (!have.count(e)) rb.error("C4", "nav_skeleton", "missing edge " + edge_str(e));
    for (const auto& n : spec.nav_skeleton->nodes)
      if (!spec.pages.count(n)) rb.error("C4", "nav_skeleton", "node '" + n + "' is not a page");
  }
}

inline bool changes_result_set(const ActionSpec& a) {
  if (a.resets_results) return *a.resets_results;
  return a.name == "search" || a.name == "filter" || a.name == "sort";
}

inline void check_pagination_reset(const FsmSpec& spec, const ActionSpec& a, ReportBuilder& rb) {
  if (!changes_result_set(a)) return;
  auto src = spec.pages.find(a.from);
  if (src == spec.pages.end()) return;
  std::vector<std::pair<std::string, Value>> leaves;
  std::vector<std::string> prefix;
  collect_pagination_leaves(src->second.signature_defaults, prefix, false, leaves);
  for (const auto& [path, def] : leaves) {
    auto leaf = *split_path(path);
    bool reset = std::any_of(a.effects.begin(), a.effects.end(), [&](const Effect& e) {
      auto segs = split_path(e.path);
      if (!segs || e.op != EffectOp::assign || !path_is_prefix(*segs, leaf)) return false;
      try {
        Value assigned = value_from_json(e.value);
        std::vector<std::string> rest(leaf.begin() + static_cast<std::ptrdiff_t>(segs->size()), leaf.end());
        const Value* v = resolve_path(assigned, rest);
        return v && *v == def;
      } catch (const EvalError&) {
        return false;
      }
    });
    if (!reset) rb.error("C5", a.id, "result-set-changing action does not reset '" + path + "'");
  }
}

}  // namespace detail

/// Runs C1-C5. Violations are findings, never exceptions.
inline ValidationReport validate_spec(const FsmSpec& spec) {
  detail::ReportBuilder rb;
  detail::check_reachability(spec, rb);
  for (const auto& [id, a] : spec.actions) {
    detail::check_preconditions(spec, a, rb);
    detail::check_effects(spec, a, rb);
    detail::check_pagination_reset(spec, a, rb);
  }
  detail::check_navigation(spec, rb);
  return rb.finish();
}

/// One line per finding: CHECK_ID<TAB>severity<TAB>location<TAB>message
inline std::string format_report_text(const ValidationReport& r) {
  std::ostringstream os;
  for (const auto& f : r.findings) os << f.check << '\t' << to_string(f.severity) << '\t' << f.location << '\t' << f.message << '\n';
  return os.str();
}

inline ordered_json report_to_json(const ValidationReport& r) {
  ordered_json j;
  j["format_version"] = 1;
  j["ok"] = r.ok;
  ordered_json arr = ordered_json::array();
  for (const auto& f : r.findings) {
    ordered_json fj;
    fj["check"] = f.check;
    fj["severity"] = std::string(to_string(f.severity));
    fj["location"] = f.location;
    fj["message"] = f.message;
    arr.push_back(std::move(fj));
  }
  j["findings"] = std::move(arr);
  return j;
}

}  // namespace webfsm
