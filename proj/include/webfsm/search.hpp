// Breadth-first enumeration of the semantic state graph.
#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "webfsm/engine.hpp"
#include "webfsm/spec.hpp"

namespace webfsm {

struct SearchConfig {
  int max_depth = 8;
  std::size_t max_nodes = 100000;
  std::optional<std::size_t> per_goal_cap;  // expanded-node cap for this goal
  std::size_t param_instantiation_cap = 4;  // bindings per parameterized action
  unsigned threads = 1;                     // 1 = sequential reference mode
};

/// Either terminal-page membership or a conjunction of signature
/// constraints. `pages`, when non-empty, scopes a constraint goal: states on
/// other pages never satisfy it and are not evaluated.
struct GoalPredicate {
  enum class Kind { terminal_page, signature_constraints };
  Kind kind = Kind::terminal_page;
  std::vector<std::string> terminal;
  std::vector<Condition> constraints;
  std::vector<std::string> pages;

  static GoalPredicate terminal_pages(std::vector<std::string> pages) {
    GoalPredicate g;
    g.terminal = std::move(pages);
    return g;
  }
  static GoalPredicate signature(std::vector<Condition> conds, std::vector<std::string> scope = {}) {
    GoalPredicate g;
    g.kind = Kind::signature_constraints;
    g.constraints = std::move(conds);
    g.pages = std::move(scope);
    return g;
  }
};

inline ordered_json goal_to_json(const GoalPredicate& g) {
  ordered_json j;
  if (g.kind == GoalPredicate::Kind::terminal_page) {
    j["kind"] = "terminal_page";
    j["pages"] = g.terminal;
  } else {
    j["kind"] = "signature_constraints";
    ordered_json cs = ordered_json::array();
    for (const auto& c : g.constraints) {
      ordered_json cj;
      cj["path"] = c.path;
      cj["op"] = std::string(to_string(c.op));
      cj["value"] = ordered_json::parse(c.value.dump());
      cs.push_back(std::move(cj));
    }
    j["constraints"] = std::move(cs);
    j["pages"] = g.pages;
  }
  return j;
}

inline GoalPredicate goal_from_json(const json& j) {
  GoalPredicate g;
  auto kind = j.at("kind").get<std::string>();
  if (kind == "terminal_page") {
    g.terminal = j.at("pages").get<std::vector<std::string>>();
  } else if (kind == "signature_constraints") {
    g.kind = GoalPredicate::Kind::signature_constraints;
    const auto& cs = j.at("constraints");
    for (std::size_t i = 0; i < cs.size(); ++i)
      g.constraints.push_back(detail::parse_condition(cs[i], "goal.constraints[" + std::to_string(i) + "]"));
    if (j.contains("pages")) g.pages = j.at("pages").get<std::vector<std::string>>();
    for (const auto& c : g.constraints)
      if (!split_path(c.path) || contains_placeholder(c.path))
        throw SpecError(SpecError::Kind::schema, "goal.constraints", "goal path '" + c.path + "' is not a '$.' signature path");
  } else {
    throw SpecError(SpecError::Kind::schema, "goal.kind", "unknown goal kind '" + kind + "'");
  }
  return g;
}

/// Deterministic; never looks at anything but the semantic state.
inline bool check_goal(const State& state, const GoalPredicate& goal) {
  if (goal.kind == GoalPredicate::Kind::terminal_page)
    return std::find(goal.terminal.begin(), goal.terminal.end(), state.page) != goal.terminal.end();
  if (!goal.pages.empty() && std::find(goal.pages.begin(), goal.pages.end(), state.page) == goal.pages.end())
    return false;
  return eval_conditions(state.signature, goal.constraints);
}

// ---------------------------------------------------------------------------
// Parameter instantiation

namespace detail {

inline bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Distinct catalog values for a parameter, in catalog order. The source is
/// the action's declared param_sources entry, else: `query` draws item names,
/// `id`/`*_id` draws item ids, anything else draws the same-named field from
/// the first collection that has it.
inline std::vector<Value> param_candidates(const ActionSpec& a, const std::string& param, const DataCatalog& catalog) {
  std::string field;
  std::string collection;
  if (a.param_sources.contains(param)) {
    const auto& src = a.param_sources.at(param);
    field = src.value("field", std::string());
    collection = src.value("collection", std::string());
  }
  if (field.empty()) field = param == "query" ? "name" : (param == "id" || ends_with(param, "_id")) ? "id" : param;

  const Collection* coll = nullptr;
  if (!collection.empty()) {
    coll = catalog.find(collection);
  } else {
    for (const auto& c : catalog.collections) {
      bool has = std::any_of(c.items.begin(), c.items.end(), [&](const CatalogItem& it) { return it.fields.contains(field); });
      if (has) {
        coll = &c;
        break;
      }
    }
  }
  std::vector<Value> out;
  if (!coll) return out;
  for (const auto& item : coll->items) {
    auto v = item.get(field);
    if (!v) continue;
    if (std::find(out.begin(), out.end(), *v) == out.end()) out.push_back(*v);
  }
  return out;
}

}  // namespace detail

/// Bounded bindings for an action: the cartesian product of each slot's
/// candidates (catalog order, first slot outermost), truncated to `cap`.
/// Actions without placeholders get a single empty binding; actions with an
/// empty slot get none.
inline std::vector<ParamBinding> enumerate_bindings(const ActionSpec& action, const DataCatalog& catalog, std::size_t cap) {
  const auto plan = placeholder_plan(action);
  if (!plan.unbindable.empty()) return {};

  // Each slot contributes a list of partial bindings.
  std::vector<std::vector<ParamBinding>> slots;
  for (const auto& slot : plan.params) {
    std::vector<ParamBinding> options;
    for (auto& v : detail::param_candidates(action, slot.param, catalog)) {
      if (options.size() >= cap) break;
      options.push_back(ParamBinding{{slot.placeholder, v}});
    }
    slots.push_back(std::move(options));
  }
  if (plan.option_step && (!plan.option_values.empty() || plan.option_selector)) {
    std::vector<ParamBinding> options;
    for (const auto& o : action.gui_procedure[*plan.option_step].ui_elements->options) {
      ParamBinding b;
      for (const auto& name : plan.option_values) b[name] = value_from_json(o.value);
      if (plan.option_selector) b[*plan.option_selector] = Value(o.selector);
      options.push_back(std::move(b));
    }
    slots.push_back(std::move(options));
  }

  std::vector<ParamBinding> out{ParamBinding{}};
  for (const auto& slot : slots) {
    std::vector<ParamBinding> next;
    for (const auto& partial : out)
      for (const auto& choice : slot) {
        if (next.size() >= cap) break;
        ParamBinding b = partial;
        b.insert(choice.begin(), choice.end());
        next.push_back(std::move(b));
      }
    out = std::move(next);
    if (out.empty()) break;
  }
  if (out.size() > cap) out.resize(cap);
  return out;
}

// ---------------------------------------------------------------------------
// State graph

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParentLink {
  std::size_t node = 0;
  std::string action_id;
  ParamBinding binding;
};

struct GraphNode {
  StateKey key;
  State state;
  int depth = 0;
  std::optional<ParentLink> parent;
};

struct StateGraph {
  std::vector<GraphNode> nodes;  // discovery (BFS) order
  std::unordered_map<StateKey, std::size_t, StateKeyHash> index;
  std::vector<StateKey> goal_hits;  // dequeue order
  std::size_t expanded = 0;
  bool truncated = false;

  const GraphNode& node(const StateKey& k) const {
    auto it = index.find(k);
    if (it == index.end()) throw SearchError("state " + k.to_string() + " is not in the graph");
    return nodes[it->second];
  }
};

struct Successor {
  std::string action_id;
  ParamBinding binding;
  State state;
};

/// All valid successors of a state, in page-declared action order and
/// catalog binding order.
inline std::vector<Successor> expand(const FsmSpec& spec, const DataCatalog& catalog, const State& state,
                                     std::size_t param_cap) {
  std::vector<Successor> out;
  for (const auto& aid : spec.page(state.page).actions) {
    const ActionSpec& action = spec.action(aid);
    for (auto& binding : enumerate_bindings(action, catalog, param_cap)) {
      StepResult r;
      try {
        r = step(spec, state, action, binding);
      } catch (const EvalError& e) {
        throw SearchError("evaluation failed at state " + state_key(state).to_string() + " action '" + aid +
                          "': " + e.what());
      }
      if (!r.invalid) out.push_back(Successor{aid, std::move(binding), std::move(r.state)});
    }
  }
  return out;
}

/// Layered BFS from the initial state. Goals are checked on dequeue; goal
/// states are still expanded. Children are deduplicated by StateKey, so parent
/// links give shortest paths. With config.threads > 1 each layer's successor
/// lists are computed concurrently and merged in node order, which yields
/// the same graph as the sequential mode.
inline StateGraph enumerate(const FsmSpec& spec, const DataCatalog& catalog, const GoalPredicate& goal,
                            const SearchConfig& config) {
  if (config.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  StateGraph g;
  State root = initial_state(spec);
  StateKey root_key = state_key(root);
  g.nodes.push_back(GraphNode{root_key, std::move(root), 0, std::nullopt});
  g.index.emplace(root_key, 0);

  std::size_t layer_begin = 0;
  bool stop_expanding = false;
  while (layer_begin < g.nodes.size()) {
    const std::size_t layer_end = g.nodes.size();
    const std::size_t n = layer_end - layer_begin;
    const bool expandable = g.nodes[layer_begin].depth < config.max_depth && !stop_expanding;

    std::vector<std::vector<Successor>> succ(n);
    std::vector<std::exception_ptr> errors(n);
    if (expandable) {
      auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          try {
            succ[i] = expand(spec, catalog, g.nodes[layer_begin + i].state, config.param_instantiation_cap);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      };
      const unsigned t = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(n)));
      if (t == 1) {
        work(0, n);
      } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + t - 1) / t;
        for (unsigned k = 0; k < t; ++k) {
          std::size_t lo = k * chunk, hi = std::min(n, lo + chunk);
          if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (auto& th : pool) th.join();
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t idx = layer_begin + i;
      bool hit;
      try {
        hit = check_goal(g.nodes[idx].state, goal);
      } catch (const EvalError& e) {
        throw SearchError("goal evaluation failed at state " + g.nodes[idx].key.to_string() + ": " + e.what());
      }
      if (hit) g.goal_hits.push_back(g.nodes[idx].key);
      if (!expandable) continue;
      if (config.per_goal_cap && g.expanded >= *config.per_goal_cap) {
        g.truncated = true;
        stop_expanding = true;
        continue;
      }
      if (stop_expanding) continue;
      if (errors[i]) std::rethrow_exception(errors[i]);
      ++g.expanded;
      const int child_depth = g.nodes[idx].depth + 1;
      for (auto& s : succ[i]) {
        StateKey k = state_key(s.state);
        if (g.index.count(k)) continue;
        if (g.nodes.size() >= config.max_nodes) {
          g.truncated = true;
          continue;
        }
        g.index.emplace(k, g.nodes.size());
        g.nodes.push_back(GraphNode{k, std::move(s.state), child_depth, ParentLink{idx, s.action_id, std::move(s.binding)}});
      }
    }
    layer_begin = layer_end;
  }
  return g;
}

inline ordered_json graph_to_json(const StateGraph& g) {
  ordered_json j;
  j["node_count"] = g.nodes.size();
  j["expanded"] = g.expanded;
  j["truncated"] = g.truncated;
  ordered_json nodes = ordered_json::array();
  for (const auto& n : g.nodes) {
    ordered_json nj;
    nj["key"] = n.key.to_string();
    nj["depth"] = n.depth;
    if (n.parent) {
      nj["parent"] = g.nodes[n.parent->node].key.to_string();
      nj["action"] = n.parent->action_id;
      nj["binding"] = ordered_json::parse(binding_to_json(n.parent->binding).dump());
    }
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  ordered_json hits = ordered_json::array();
  for (const auto& k : g.goal_hits) hits.push_back(k.to_string());
  j["goal_hits"] = std::move(hits);
  return j;
}

// ---------------------------------------------------------------------------
// Trajectories

struct SemanticAction {
  std::string action_id;
  ParamBinding binding;

  friend bool operator==(const SemanticAction&, const SemanticAction&) = default;
};

struct SemanticTrajectory {
  std::vector<SemanticAction> actions;
  std::vector<State> states;  // actions.size() + 1
  GoalPredicate goal;
  bool shortest = false;

  StateKey final_key() const { return state_key(states.back()); }
  std::size_t length() const { return actions.size(); }
};

/// Walks parent links from `hit` back to the root.
inline SemanticTrajectory extract_trajectory(const StateGraph& g, const StateKey& hit, const GoalPredicate& goal) {
  auto it = g.index.find(hit);
  if (it == g.index.end()) throw SearchError("goal hit " + hit.to_string() + " is not in the graph");
  std::vector<std::size_t> chain{it->second};
  while (g.nodes[chain.back()].parent) {
    std::size_t p = g.nodes[chain.back()].parent->node;
    if (p >= g.nodes.size() || g.nodes[p].depth != g.nodes[chain.back()].depth - 1)
      throw SearchError("dangling parent link at " + g.nodes[chain.back()].key.to_string());
    chain.push_back(p);
  }
  if (g.nodes[chain.back()].depth != 0) throw SearchError("parent chain does not reach the root");
  std::reverse(chain.begin(), chain.end());

  SemanticTrajectory t;
  t.goal = goal;
  t.shortest = true;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& n = g.nodes[chain[i]];
    if (i > 0) t.actions.push_back(SemanticAction{n.parent->action_id, n.parent->binding});
    t.states.push_back(n.state);
  }
  return t;
}

/// Up to k hits with pairwise-distinct final keys, ordered by depth then
/// (page, sig_hash).
inline std::vector<SemanticTrajectory> sample_diverse(const StateGraph& g, const GoalPredicate& goal, std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::vector<StateKey> hits = g.goal_hits;
  std::sort(hits.begin(), hits.end(), [&](const StateKey& a, const StateKey& b) {
    int da = g.node(a).depth, db = g.node(b).depth;
    if (da != db) return da < db;
    return a < b;
  });
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  std::vector<SemanticTrajectory> out;
  for (const auto& h : hits) {
    if (out.size() >= k) break;
    out.push_back(extract_trajectory(g, h, goal));
  }
  return out;
}

/// Re-executes every action and checks the recorded states, then the goal.
inline bool verify_trajectory(const FsmSpec& spec, const SemanticTrajectory& t, bool require_goal = true) {
  if (t.states.size() != t.actions.size() + 1) return false;
  if (t.states.front() != initial_state(spec)) return false;
  for (std::size_t i = 0; i < t.actions.size(); ++i) {
    auto r = step(spec, t.states[i], spec.action(t.actions[i].action_id), t.actions[i].binding);
    if (r.invalid || r.state != t.states[i + 1]) return false;
  }
  return !require_goal || check_goal(t.states.back(), t.goal);
}

struct NegativeTrajectory {
  enum class Mode { truncated, forced_invalid };
  struct InvalidStep {
    std::string action_id;
    std::string reason;
  };
  SemanticTrajectory base;
  Mode mode = Mode::truncated;
  std::optional<InvalidStep> invalid_step;
};

inline std::string_view to_string(NegativeTrajectory::Mode m) {
  return m == NegativeTrajectory::Mode::truncated ? "truncated" : "forced_invalid";
}

class NotConstructible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Truncated: drops actions from the end until the goal no longer holds.
/// Forced-invalid: appends the first action on the final page whose
/// preconditions are false, recorded as invalid with the state unchanged.
inline NegativeTrajectory make_negatives(const SemanticTrajectory& traj, NegativeTrajectory::Mode mode,
                                         const FsmSpec& spec) {
  if (traj.actions.empty()) throw std::invalid_argument("negative trajectories need a positive trajectory of length >= 1");
  NegativeTrajectory neg;
  neg.mode = mode;
  neg.base = traj;
  neg.base.shortest = false;
  if (mode == NegativeTrajectory::Mode::truncated) {
    do {
      neg.base.actions.pop_back();
      neg.base.states.pop_back();
    } while (!neg.base.actions.empty() && check_goal(neg.base.states.back(), traj.goal));
    if (check_goal(neg.base.states.back(), traj.goal))
      throw NotConstructible("goal already holds at the initial state");
    return neg;
  }

  const State& last = traj.states.back();
  for (const auto& aid : spec.page(last.page).actions) {
    const ActionSpec& a = spec.action(aid);
    bool holds;
    try {
      holds = eval_preconditions(last, a);
    } catch (const EvalError&) {
      continue;
    }
    if (holds) continue;
    neg.base.actions.push_back(SemanticAction{aid, {}});
    neg.base.states.push_back(last);
    neg.invalid_step = NegativeTrajectory::InvalidStep{aid, "preconditions not satisfied"};
    return neg;
  }
  throw NotConstructible("no action with unsatisfied preconditions on page '" + last.page + "'");
}

/// Keeps the first `keep` actions.
inline SemanticTrajectory truncate_to(const SemanticTrajectory& traj, std::size_t keep) {
  if (keep > traj.actions.size()) throw std::invalid_argument("cannot extend a trajectory by truncation");
  SemanticTrajectory t = traj;
  t.actions.resize(keep);
  t.states.resize(keep + 1);
  t.shortest = false;
  return t;
}

// ---------------------------------------------------------------------------
// Documents

inline ordered_json trajectory_to_json(const SemanticTrajectory& t) {
  ordered_json j;
  ordered_json acts = ordered_json::array();
  for (const auto& a : t.actions) {
    ordered_json aj;
    aj["id"] = a.action_id;
    aj["binding"] = ordered_json::parse(binding_to_json(a.binding).dump());
    acts.push_back(std::move(aj));
  }
  j["actions"] = std::move(acts);
  ordered_json states = ordered_json::array();
  for (const auto& s : t.states) states.push_back(ordered_json::parse(state_to_json(s).dump()));
  j["states"] = std::move(states);
  j["goal"] = goal_to_json(t.goal);
  j["shortest"] = t.shortest;
  j["final_key"] = t.final_key().to_string();
  return j;
}

inline SemanticTrajectory trajectory_from_json(const json& j) {
  SemanticTrajectory t;
  for (const auto& a : j.at("actions")) t.actions.push_back(SemanticAction{a.at("id").get<std::string>(), binding_from_json(a.at("binding"))});
  for (const auto& s : j.at("states")) t.states.push_back(state_from_json(s));
  t.goal = goal_from_json(j.at("goal"));
  t.shortest = j.value("shortest", false);
  if (t.states.size() != t.actions.size() + 1) throw SearchError("trajectory has misaligned states");
  return t;
}

inline ordered_json negative_to_json(const NegativeTrajectory& n) {
  ordered_json j;
  j["mode"] = std::string(to_string(n.mode));
  j["trajectory"] = trajectory_to_json(n.base);
  if (n.invalid_step) {
    ordered_json inv;
    inv["action"] = n.invalid_step->action_id;
    inv["reason"] = n.invalid_step->reason;
    j["invalid_step"] = std::move(inv);
  }
  return j;
}

}  // namespace webfsm
