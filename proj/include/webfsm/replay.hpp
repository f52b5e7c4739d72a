// Grounding semantic trajectories into atomic GUI operations and replaying
// them against a deterministic headless page model.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "webfsm/engine.hpp"
#include "webfsm/search.hpp"
#include "webfsm/spec.hpp"

namespace webfsm {

/// Normalized box, 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1.
struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double cx() const { return (x1 + x2) / 2; }
  double cy() const { return (y1 + y2) / 2; }
  bool strictly_contains(double x, double y) const { return x1 < x && x < x2 && y1 < y && y < y2; }
  bool well_formed() const { return 0 <= x1 && x1 < x2 && x2 <= 1 && 0 <= y1 && y1 < y2 && y2 <= 1; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Point {
  double x = 0, y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Availability {
  enum class Kind { always, requires_container_open, gated };
  Kind kind = Kind::always;
  std::string container;              // requires_container_open
  std::vector<Condition> conditions;  // gated on the current signature
};

struct SelectorInfo {
  BBox box;
  Availability availability;
};

/// Per page: every selector harvested from the page's action procedures
/// (option selectors included), each with a synthetic box and an
/// availability rule.
struct PageModel {
  std::map<std::string, std::map<std::string, SelectorInfo>> pages;
  std::uint64_t layout_seed = 0;

  const SelectorInfo* find(const std::string& page, const std::string& selector) const {
    auto p = pages.find(page);
    if (p == pages.end()) return nullptr;
    auto s = p->second.find(selector);
    return s == p->second.end() ? nullptr : &s->second;
  }
};

inline constexpr int kLayoutGrid = 40;  // 40 x 40 cells of 0.025
inline constexpr double kMinBoxSize = 0.02;

namespace detail {

/// Option-selector placeholders never name a concrete element; they resolve to
/// the option selectors, which are registered separately.
inline std::set<std::string> option_placeholder_selectors(const ActionSpec& a) {
  std::set<std::string> out;
  auto plan = placeholder_plan(a);
  if (plan.option_selector) out.insert("<" + *plan.option_selector + ">");
  return out;
}

}  // namespace detail

/// Deterministic boxes from a digest of (page, selector, seed): each selector
/// claims a grid cell (linear probing on collision, selectors in sorted
/// order) and gets a box of side in [0.020, 0.025] centered in that cell, so
/// centers are unique per page.
inline PageModel build_page_model(const FsmSpec& spec, std::uint64_t layout_seed) {
  PageModel model;
  model.layout_seed = layout_seed;
  for (const auto& [pid, page] : spec.pages) {
    std::map<std::string, Availability> rules;
    auto add = [&](const std::string& sel) { rules.try_emplace(sel, Availability{}); };
    for (const auto& [aid, a] : spec.actions) {
      if (a.from != pid) continue;
      auto skip = detail::option_placeholder_selectors(a);
      for (const auto& st : a.gui_procedure) {
        if (st.ui_elements) {
          add(st.ui_elements->container);
          for (const auto& o : st.ui_elements->options) {
            auto& r = rules[o.selector];
            r.kind = Availability::Kind::requires_container_open;
            r.container = st.ui_elements->container;
          }
        }
        if (st.selector && !skip.count(*st.selector)) add(*st.selector);
        if (st.to_selector) add(*st.to_selector);
      }
    }
    if (rules.size() > static_cast<std::size_t>(kLayoutGrid * kLayoutGrid))
      throw std::length_error("page '" + pid + "' has more selectors than layout cells");

    std::vector<bool> taken(kLayoutGrid * kLayoutGrid, false);
    const double cell = 1.0 / kLayoutGrid;
    auto& out = model.pages[pid];
    for (const auto& [sel, rule] : rules) {
      std::uint64_t h = digest64(pid + '\x1f' + sel + '\x1f' + std::to_string(layout_seed));
      std::size_t c = static_cast<std::size_t>(h % taken.size());
      while (taken[c]) c = (c + 1) % taken.size();
      taken[c] = true;
      const double cx = (static_cast<double>(c % kLayoutGrid) + 0.5) * cell;
      const double cy = (static_cast<double>(c / kLayoutGrid) + 0.5) * cell;
      const double w = kMinBoxSize + static_cast<double>((h >> 24) % 6) * 0.001;
      const double hgt = kMinBoxSize + static_cast<double>((h >> 40) % 6) * 0.001;
      out.emplace(sel, SelectorInfo{BBox{cx - w / 2, cy - hgt / 2, cx + w / 2, cy + hgt / 2}, rule});
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Grounding

class GroundingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GroundedStep {
  std::size_t action_index = 0;
  std::string action_id;
  std::string page;  // page the step executes on
  GuiOp op = GuiOp::click;
  std::optional<std::string> selector;     // resolved
  std::optional<std::string> registered;   // registry entry backing the selector
  std::optional<BBox> box;
  std::optional<Point> point;
  std::optional<std::string> to_selector;
  std::optional<std::string> to_registered;
  std::optional<Point> to_point;
  std::optional<std::string> text;
  std::optional<std::string> value;
  std::optional<std::string> container;  // option steps: dropdown that must be open
};

struct GroundedTrajectory {
  SemanticTrajectory semantic;
  std::vector<GroundedStep> steps;
};

namespace detail {

inline std::pair<std::string, const SelectorInfo*> resolve_selector(const PageModel& model, const std::string& page,
                                                                     const std::string& raw,
                                                                     const ParamBinding& binding) {
  std::string resolved = substitute_text(raw, binding);
  if (const auto* info = model.find(page, resolved)) return {resolved, info};
  // Parameterized selectors (e.g. an item card) share the template's entry.
  if (const auto* info = model.find(page, raw)) return {raw, info};
  throw GroundingError("selector '" + resolved + "' is not registered on page '" + page + "'");
}

}  // namespace detail

/// Expands each action's gui_procedure with its binding substituted and
/// every selector resolved to its box center.
inline GroundedTrajectory ground_trajectory(const SemanticTrajectory& traj, const FsmSpec& spec, const PageModel& model) {
  GroundedTrajectory g;
  g.semantic = traj;
  for (std::size_t i = 0; i < traj.actions.size(); ++i) {
    const auto& sa = traj.actions[i];
    const ActionSpec& a = spec.action(sa.action_id);
    const std::string& page = traj.states[i].page;
    for (const auto& st : a.gui_procedure) {
      GroundedStep gs;
      gs.action_index = i;
      gs.action_id = sa.action_id;
      gs.page = page;
      gs.op = st.op;
      try {
        if (st.selector) {
          auto [reg, info] = detail::resolve_selector(model, page, *st.selector, sa.binding);
          gs.selector = substitute_text(*st.selector, sa.binding);
          gs.registered = reg;
          gs.box = info->box;
          gs.point = Point{info->box.cx(), info->box.cy()};
        }
        if (st.to_selector) {
          auto [reg, info] = detail::resolve_selector(model, page, *st.to_selector, sa.binding);
          gs.to_selector = substitute_text(*st.to_selector, sa.binding);
          gs.to_registered = reg;
          gs.to_point = Point{info->box.cx(), info->box.cy()};
        }
        if (st.text) gs.text = substitute_text(*st.text, sa.binding);
        if (st.value) gs.value = substitute_text(*st.value, sa.binding);
      } catch (const EvalError& e) {
        throw GroundingError("action '" + sa.action_id + "': " + e.what());
      }
      if (st.ui_elements) gs.container = st.ui_elements->container;
      for (std::int64_t r = 0; r < std::max<std::int64_t>(1, st.repeat_count()); ++r) g.steps.push_back(gs);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Defects and replay

struct Defect {
  enum class Kind { missing, non_functional };
  std::string page;
  std::string selector;
  Kind kind = Kind::missing;

  friend bool operator==(const Defect&, const Defect&) = default;
};

/// Simulated front-end mismatches. `missing`: the element is not rendered.
/// `non_functional`: the element renders but does nothing when used, so a
/// dropdown container stays closed.
struct DefectSet {
  std::vector<Defect> defects;

  std::optional<Defect::Kind> lookup(const std::string& page, const std::optional<std::string>& resolved,
                                     const std::optional<std::string>& registered) const {
    for (const auto& d : defects)
      if (d.page == page && ((resolved && d.selector == *resolved) || (registered && d.selector == *registered)))
        return d.kind;
    return std::nullopt;
  }
};

inline DefectSet load_defects(std::string_view document) {
  json j = json::parse(document);
  const json& list = j.is_object() ? j.at("defects") : j;
  DefectSet ds;
  for (const auto& d : list) {
    Defect def{d.at("page").get<std::string>(), d.at("selector").get<std::string>(), Defect::Kind::missing};
    auto kind = d.value("kind", std::string("missing"));
    if (kind == "non_functional")
      def.kind = Defect::Kind::non_functional;
    else if (kind != "missing")
      throw std::invalid_argument("unknown defect kind '" + kind + "'");
    ds.defects.push_back(std::move(def));
  }
  return ds;
}

enum class FailureReason { selector_missing, availability_unsatisfied, engine_error };

inline std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::selector_missing: return "selector-missing";
    case FailureReason::availability_unsatisfied: return "availability-unsatisfied";
    case FailureReason::engine_error: return "engine-error";
  }
  return "";
}

struct StepSnapshot {
  std::size_t step = 0;
  StateKey state;  // semantic state after the step
};

struct ReplayVerdict {
  bool accepted = true;
  std::optional<std::size_t> failed_step;
  std::optional<FailureReason> reason;
  std::string detail;
  std::vector<StepSnapshot> snapshots;  // one per executed step
};

/// Executes every grounded step in order. The semantic state advances through
/// the transition engine at each action boundary. The first failing step
/// stops replay; acceptance requires every step to succeed.
inline ReplayVerdict replay_trajectory(const GroundedTrajectory& grounded, const FsmSpec& spec, const PageModel& model,
                                       const DefectSet& defects) {
  ReplayVerdict v;
  const auto& sem = grounded.semantic;
  State state = sem.states.empty() ? initial_state(spec) : sem.states.front();
  auto fail = [&](std::size_t idx, FailureReason r, std::string why) {
    v.accepted = false;
    v.failed_step = idx;
    v.reason = r;
    v.detail = std::move(why);
    return v;
  };

  std::size_t idx = 0;
  for (std::size_t ai = 0; ai < sem.actions.size(); ++ai) {
    std::set<std::string> opened;  // containers opened within this procedure
    std::vector<std::size_t> own;
    while (idx + own.size() < grounded.steps.size() && grounded.steps[idx + own.size()].action_index == ai)
      own.push_back(idx + own.size());

    for (std::size_t k = 0; k < own.size(); ++k) {
      const std::size_t si = own[k];
      const GroundedStep& s = grounded.steps[si];
      if (s.page != state.page)
        return fail(si, FailureReason::engine_error, "step expects page '" + s.page + "', replay is on '" + state.page + "'");

      bool functional = true;
      if (s.selector) {
        const SelectorInfo* info = model.find(state.page, s.registered.value_or(*s.selector));
        if (!info) return fail(si, FailureReason::selector_missing, "'" + *s.selector + "' not on page");
        auto d = defects.lookup(state.page, s.selector, s.registered);
        if (d == Defect::Kind::missing) return fail(si, FailureReason::selector_missing, "'" + *s.selector + "' missing");

        const auto& rule = info->availability;
        if (rule.kind == Availability::Kind::requires_container_open && !opened.count(rule.container))
          return fail(si, FailureReason::availability_unsatisfied, "container '" + rule.container + "' is not open");
        if (rule.kind == Availability::Kind::gated) {
          try {
            if (!eval_conditions(state.signature, rule.conditions))
              return fail(si, FailureReason::availability_unsatisfied, "'" + *s.selector + "' is gated off");
          } catch (const EvalError& e) {
            return fail(si, FailureReason::engine_error, e.what());
          }
        }
        if (d == Defect::Kind::non_functional) {
          // A dead dropdown container surfaces at the option that needs it.
          bool is_container = false;
          for (std::size_t m = k + 1; m < own.size(); ++m)
            if (grounded.steps[own[m]].container == s.registered.value_or(*s.selector)) is_container = true;
          if (!is_container)
            return fail(si, FailureReason::availability_unsatisfied, "'" + *s.selector + "' does not respond");
          functional = false;
        }
      }
      if (s.to_selector) {
        if (!model.find(state.page, s.to_registered.value_or(*s.to_selector)))
          return fail(si, FailureReason::selector_missing, "'" + *s.to_selector + "' not on page");
        auto d = defects.lookup(state.page, s.to_selector, s.to_registered);
        if (d == Defect::Kind::missing) return fail(si, FailureReason::selector_missing, "'" + *s.to_selector + "' missing");
        if (d == Defect::Kind::non_functional)
          return fail(si, FailureReason::availability_unsatisfied, "'" + *s.to_selector + "' does not respond");
      }
      if (functional && s.selector && (s.op == GuiOp::click || s.op == GuiOp::hover))
        opened.insert(s.registered.value_or(*s.selector));

      if (k + 1 == own.size()) {
        const auto& sa = sem.actions[ai];
        try {
          auto r = step(spec, state, spec.action(sa.action_id), sa.binding);
          if (r.invalid) return fail(si, FailureReason::engine_error, "preconditions of '" + sa.action_id + "' do not hold");
          state = std::move(r.state);
        } catch (const EvalError& e) {
          return fail(si, FailureReason::engine_error, e.what());
        }
        if (ai + 1 < sem.states.size() && state != sem.states[ai + 1])
          return fail(si, FailureReason::engine_error, "state diverges from the recorded trajectory");
      }
      v.snapshots.push_back(StepSnapshot{si, state_key(state)});
    }
    if (own.empty()) return fail(idx, FailureReason::engine_error, "action '" + sem.actions[ai].action_id + "' has no steps");
    idx += own.size();
  }
  if (idx != grounded.steps.size()) return fail(idx, FailureReason::engine_error, "steps do not partition into actions");
  return v;
}

struct FilterResult {
  std::vector<GroundedTrajectory> accepted;
  std::vector<std::pair<GroundedTrajectory, ReplayVerdict>> rejected;
};

/// Partitions by replay verdict, preserving input order in each part.
inline FilterResult filter_trajectories(const std::vector<GroundedTrajectory>& grounded, const FsmSpec& spec,
                                        const PageModel& model, const DefectSet& defects) {
  FilterResult out;
  for (const auto& g : grounded) {
    auto v = replay_trajectory(g, spec, model, defects);
    if (v.accepted)
      out.accepted.push_back(g);
    else
      out.rejected.emplace_back(g, std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Documents

inline ordered_json bbox_to_json(const BBox& b) { return ordered_json::array({b.x1, b.y1, b.x2, b.y2}); }
inline ordered_json point_to_json(const Point& p) { return ordered_json::array({p.x, p.y}); }

inline ordered_json grounded_step_to_json(const GroundedStep& s) {
  ordered_json j;
  j["action_index"] = s.action_index;
  j["action_id"] = s.action_id;
  j["page"] = s.page;
  j["op"] = std::string(to_string(s.op));
  if (s.selector) j["selector"] = *s.selector;
  if (s.registered && s.registered != s.selector) j["registered"] = *s.registered;
  if (s.box) j["bbox"] = bbox_to_json(*s.box);
  if (s.point) j["point"] = point_to_json(*s.point);
  if (s.to_selector) j["to_selector"] = *s.to_selector;
  if (s.to_registered && s.to_registered != s.to_selector) j["to_registered"] = *s.to_registered;
  if (s.to_point) j["to_point"] = point_to_json(*s.to_point);
  if (s.text) j["text"] = *s.text;
  if (s.value) j["value"] = *s.value;
  if (s.container) j["container"] = *s.container;
  return j;
}

inline GroundedStep grounded_step_from_json(const json& j) {
  GroundedStep s;
  s.action_index = j.at("action_index").get<std::size_t>();
  s.action_id = j.at("action_id").get<std::string>();
  s.page = j.at("page").get<std::string>();
  auto op = gui_op_from_string(j.at("op").get<std::string>());
  if (!op) throw std::invalid_argument("unknown gui op in grounded step");
  s.op = *op;
  auto opt_str = [&](const char* k) -> std::optional<std::string> {
    if (!j.contains(k)) return std::nullopt;
    return j.at(k).get<std::string>();
  };
  auto opt_pt = [&](const char* k) -> std::optional<Point> {
    if (!j.contains(k)) return std::nullopt;
    return Point{j.at(k).at(0).get<double>(), j.at(k).at(1).get<double>()};
  };
  s.selector = opt_str("selector");
  s.registered = j.contains("registered") ? opt_str("registered") : s.selector;
  if (j.contains("bbox")) {
    const auto& b = j.at("bbox");
    s.box = BBox{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
  }
  s.point = opt_pt("point");
  s.to_selector = opt_str("to_selector");
  s.to_registered = j.contains("to_registered") ? opt_str("to_registered") : s.to_selector;
  s.to_point = opt_pt("to_point");
  s.text = opt_str("text");
  s.value = opt_str("value");
  s.container = opt_str("container");
  return s;
}

inline ordered_json grounded_to_json(const GroundedTrajectory& g) {
  ordered_json j;
  j["semantic"] = trajectory_to_json(g.semantic);
  ordered_json steps = ordered_json::array();
  for (const auto& s : g.steps) steps.push_back(grounded_step_to_json(s));
  j["steps"] = std::move(steps);
  return j;
}

inline GroundedTrajectory grounded_from_json(const json& j) {
  GroundedTrajectory g;
  g.semantic = trajectory_from_json(j.at("semantic"));
  for (const auto& s : j.at("steps")) g.steps.push_back(grounded_step_from_json(s));
  return g;
}

inline ordered_json verdict_to_json(const ReplayVerdict& v) {
  ordered_json j;
  j["accepted"] = v.accepted;
  j["failed_step"] = v.failed_step ? ordered_json(*v.failed_step) : ordered_json(nullptr);
  j["reason"] = v.reason ? ordered_json(std::string(to_string(*v.reason))) : ordered_json(nullptr);
  if (!v.detail.empty()) j["detail"] = v.detail;
  ordered_json snaps = ordered_json::array();
  for (const auto& s : v.snapshots) snaps.push_back(ordered_json::array({s.step, s.state.to_string()}));
  j["snapshots"] = std::move(snaps);
  return j;
}

}  // namespace webfsm
