// Dataset synthesis from accepted trajectories: query instances, bfs.json,
// line-delimited dataset records and the statistics manifest.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "webfsm/engine.hpp"
#include "webfsm/replay.hpp"
#include "webfsm/search.hpp"
#include "webfsm/spec.hpp"

namespace webfsm {

inline constexpr int kFormatVersion = 1;

enum class QueryFamily { bfs_driven, visual_grounded, screenshot_qa };
enum class InteractionMode { search, scroll, slider, sort, checkbox };

inline constexpr InteractionMode kAllModes[] = {InteractionMode::search, InteractionMode::scroll,
                                                InteractionMode::slider, InteractionMode::sort,
                                                InteractionMode::checkbox};
inline constexpr QueryFamily kAllFamilies[] = {QueryFamily::bfs_driven, QueryFamily::visual_grounded,
                                               QueryFamily::screenshot_qa};

inline std::string_view to_string(QueryFamily f) {
  switch (f) {
    case QueryFamily::bfs_driven: return "bfs_driven";
    case QueryFamily::visual_grounded: return "visual_grounded";
    case QueryFamily::screenshot_qa: return "screenshot_qa";
  }
  return "";
}

inline std::string_view to_string(InteractionMode m) {
  switch (m) {
    case InteractionMode::search: return "search";
    case InteractionMode::scroll: return "scroll";
    case InteractionMode::slider: return "slider";
    case InteractionMode::sort: return "sort";
    case InteractionMode::checkbox: return "checkbox";
  }
  return "";
}

inline std::optional<InteractionMode> mode_from_string(std::string_view s) {
  for (auto m : kAllModes)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

inline std::optional<QueryFamily> family_from_string(std::string_view s) {
  for (auto f : kAllFamilies)
    if (to_string(f) == s) return f;
  return std::nullopt;
}

class UnsupportedFamily : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QueryInstance {
  std::string id;
  QueryFamily family = QueryFamily::bfs_driven;
  InteractionMode mode = InteractionMode::search;
  std::string text;
  ordered_json template_params = ordered_json::object();
  std::string trajectory_ref;
  GoalPredicate goal;
};

/// One accepted trajectory at both levels plus per-step state snapshots.
struct TrajectoryRecord {
  std::string id;
  std::string website;
  GoalPredicate goal;
  std::vector<SemanticAction> actions;
  std::vector<GroundedStep> steps;
  std::vector<StateKey> snapshots;   // state after each grounded step
  std::optional<State> final_state;  // in-memory only; not exported

  StateKey final_key() const { return final_state ? state_key(*final_state) : snapshots.back(); }
};

inline TrajectoryRecord make_record(std::string id, std::string website, const GroundedTrajectory& g) {
  TrajectoryRecord r;
  r.id = std::move(id);
  r.website = std::move(website);
  r.goal = g.semantic.goal;
  r.actions = g.semantic.actions;
  r.steps = g.steps;
  r.final_state = g.semantic.states.back();
  for (std::size_t i = 0; i < g.steps.size(); ++i) {
    bool last_of_action = i + 1 == g.steps.size() || g.steps[i + 1].action_index != g.steps[i].action_index;
    std::size_t state_idx = g.steps[i].action_index + (last_of_action ? 1 : 0);
    r.snapshots.push_back(state_key(g.semantic.states[state_idx]));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Query instantiation

namespace detail {

inline std::string ordinal(long n) {
  long mod100 = n % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (n % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
      default: break;
    }
  }
  return std::to_string(n) + suffix;
}

inline ordered_json literal_json(const Value& v) { return ordered_json::parse(value_to_json(v).dump()); }

inline bool is_sort_widget(const ActionSpec& a, const GuiStep& st) {
  if (a.name == "sort") return true;
  if (a.params.contains("widget") && a.params.at("widget") == "sort") return true;
  return st.ui_elements && st.ui_elements->container.find("sort") != std::string::npos;
}

inline std::string goal_phrase(const FsmSpec& spec, const TrajectoryRecord& r) {
  if (r.final_state) {
    auto it = spec.pages.find(r.final_state->page);
    if (it != spec.pages.end() && !it->second.page_name.empty()) return "until you reach " + it->second.page_name;
    return "until you reach " + r.final_state->page;
  }
  return "until the task is complete";
}

}  // namespace detail

/// One instance per requested mode whose trigger occurs in the trajectory:
///   search    an action named `search` or taking a `query` param
///   scroll    an action bound to a catalog item id (the n-th item)
///   slider    an action with a numeric parameter value
///   sort      a dropdown option chosen from a sort widget
///   checkbox  a set insert/delete or boolean toggle effect
/// Modes without a trigger are skipped.
inline std::vector<QueryInstance> instantiate_queries(const TrajectoryRecord& rec, const FsmSpec& spec,
                                                      const DataCatalog& catalog,
                                                      const std::vector<InteractionMode>& modes,
                                                      QueryFamily family = QueryFamily::bfs_driven) {
  if (family != QueryFamily::bfs_driven)
    throw UnsupportedFamily("query family '" + std::string(to_string(family)) + "' is not supported");
  std::vector<QueryInstance> out;
  const std::string tail = detail::goal_phrase(spec, rec);

  for (auto mode : kAllModes) {
    if (std::find(modes.begin(), modes.end(), mode) == modes.end()) continue;
    std::optional<QueryInstance> q;
    for (std::size_t ai = 0; ai < rec.actions.size() && !q; ++ai) {
      const auto& sa = rec.actions[ai];
      const ActionSpec& a = spec.action(sa.action_id);
      const auto plan = placeholder_plan(a);
      auto bound = [&](const std::string& param) -> std::optional<Value> {
        for (const auto& slot : plan.params)
          if (slot.param == param) {
            auto it = sa.binding.find(slot.placeholder);
            if (it != sa.binding.end()) return it->second;
          }
        if (a.params.contains(param) && !a.params.at(param).is_string()) return value_from_json(a.params.at(param));
        return std::nullopt;
      };

      switch (mode) {
        case InteractionMode::search: {
          if (a.name != "search" && !a.params.contains("query")) break;
          auto v = bound("query");
          if (!v) break;
          QueryInstance qi;
          qi.template_params["query"] = detail::literal_json(*v);
          qi.text = "Search for \"" + literal_text(*v) + "\", then continue " + tail + ".";
          q = std::move(qi);
          break;
        }
        case InteractionMode::scroll: {
          for (const auto& slot : plan.params) {
            if (slot.param != "id" && !detail::ends_with(slot.param, "_id")) continue;
            auto it = sa.binding.find(slot.placeholder);
            if (it == sa.binding.end() || !it->second.is_string()) continue;
            auto found = catalog.find_item(it->second.as_string());
            if (!found) continue;
            auto name = found->first->get("name");
            std::string item_name = name ? literal_text(*name) : found->first->id;
            QueryInstance qi;
            qi.template_params["n"] = found->second;
            qi.template_params["item_id"] = found->first->id;
            qi.template_params["item_name"] = item_name;
            qi.text = "Scroll to the " + detail::ordinal(static_cast<long>(found->second)) + " item, \"" + item_name +
                      "\", open it and continue " + tail + ".";
            q = std::move(qi);
            break;
          }
          break;
        }
        case InteractionMode::slider: {
          for (auto it = a.params.begin(); it != a.params.end() && !q; ++it) {
            auto v = bound(it.key());
            if (!v || !v->is_number()) continue;
            QueryInstance qi;
            qi.template_params["field"] = it.key();
            qi.template_params["threshold"] = detail::literal_json(*v);
            qi.text = "Set the " + it.key() + " slider to " + literal_text(*v) + ", then continue " + tail + ".";
            q = std::move(qi);
          }
          break;
        }
        case InteractionMode::sort: {
          for (const auto& st : a.gui_procedure) {
            if (!st.ui_elements || !detail::is_sort_widget(a, st) || !st.selector) continue;
            std::string chosen = substitute_text(*st.selector, sa.binding);
            for (const auto& o : st.ui_elements->options) {
              if (o.selector != chosen) continue;
              QueryInstance qi;
              qi.template_params["sort_key"] = ordered_json::parse(o.value.dump());
              qi.text = "Sort the list by " + (o.value.is_string() ? o.value.get<std::string>() : o.value.dump()) +
                        ", then continue " + tail + ".";
              q = std::move(qi);
              break;
            }
            if (q) break;
          }
          break;
        }
        case InteractionMode::checkbox: {
          for (const auto& e : a.effects) {
            if (e.op != EffectOp::set_insert && e.op != EffectOp::set_delete && e.op != EffectOp::toggle) continue;
            QueryInstance qi;
            qi.template_params["path"] = e.path;
            qi.template_params["op"] = std::string(to_string(e.op));
            std::string what;
            if (e.op == EffectOp::toggle) {
              what = "Toggle " + e.path.substr(2);
            } else {
              Value member = substitute_value(e.value, sa.binding);
              qi.template_params["value"] = detail::literal_json(member);
              what = std::string(e.op == EffectOp::set_insert ? "Check " : "Uncheck ") + "\"" + literal_text(member) +
                     "\" under " + e.path.substr(2);
            }
            qi.text = what + ", then continue " + tail + ".";
            q = std::move(qi);
            break;
          }
          break;
        }
      }
    }
    if (!q) continue;
    q->id = rec.id + "-" + std::string(to_string(mode));
    q->family = family;
    q->mode = mode;
    q->trajectory_ref = rec.id;
    q->goal = rec.goal;
    out.push_back(std::move(*q));
  }
  return out;
}

/// Keeps one record per goal: the one with the smallest final StateKey.
inline std::vector<TrajectoryRecord> dedup_parallel(const std::vector<TrajectoryRecord>& records) {
  std::map<std::string, std::size_t> best;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto g = goal_to_json(records[i].goal).dump();
    auto it = best.find(g);
    if (it == best.end() || records[i].final_key() < records[it->second].final_key()) best[g] = i;
  }
  std::vector<std::size_t> keep;
  for (const auto& [g, i] : best) keep.push_back(i);
  std::sort(keep.begin(), keep.end());
  std::vector<TrajectoryRecord> out;
  for (auto i : keep) out.push_back(records[i]);
  return out;
}

// ---------------------------------------------------------------------------
// bfs.json

/// {"format_version", "spec_digest", "trajectory": [{id, gui_procedure}]}.
/// Procedures are the spec's, with the action's binding substituted into
/// selectors and text; ui_elements blocks are copied verbatim.
inline std::string export_bfs_json(const TrajectoryRecord& rec, const FsmSpec& spec) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["spec_digest"] = spec_digest(spec);
  ordered_json arr = ordered_json::array();
  for (const auto& sa : rec.actions) {
    const ActionSpec& a = spec.action(sa.action_id);
    ordered_json entry;
    entry["id"] = sa.action_id;
    ordered_json proc = ordered_json::array();
    for (GuiStep st : a.gui_procedure) {
      if (st.selector) st.selector = substitute_text(*st.selector, sa.binding);
      if (st.to_selector) st.to_selector = substitute_text(*st.to_selector, sa.binding);
      if (st.text) st.text = substitute_text(*st.text, sa.binding);
      if (st.value) st.value = substitute_text(*st.value, sa.binding);
      proc.push_back(gui_step_to_json(st));
    }
    entry["gui_procedure"] = std::move(proc);
    arr.push_back(std::move(entry));
  }
  doc["trajectory"] = std::move(arr);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Dataset lines

inline ordered_json step_line(const TrajectoryRecord& r, std::size_t i) {
  const auto& s = r.steps[i];
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "step";
  j["trajectory_id"] = r.id;
  j["website"] = r.website;
  j["step_index"] = i;
  j["step_count"] = r.steps.size();
  j["action_count"] = r.actions.size();
  j["binding"] = ordered_json::parse(binding_to_json(r.actions[s.action_index].binding).dump());
  auto body = grounded_step_to_json(s);
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  j["snapshot"] = r.snapshots[i].to_string();
  j["goal"] = goal_to_json(r.goal);
  return j;
}

inline ordered_json query_line(const QueryInstance& q) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "query";
  j["query_id"] = q.id;
  j["trajectory_id"] = q.trajectory_ref;
  j["step_index"] = 0;
  j["family"] = std::string(to_string(q.family));
  j["mode"] = std::string(to_string(q.mode));
  j["text"] = q.text;
  j["template_params"] = q.template_params;
  j["goal"] = goal_to_json(q.goal);
  return j;
}

/// One line per grounded step, then one per query instance.
inline std::string export_dataset(const std::vector<TrajectoryRecord>& records, const std::vector<QueryInstance>& queries) {
  std::vector<std::string> ids;
  for (const auto& r : records) {
    if (r.steps.empty()) throw ExportError("trajectory '" + r.id + "' has no grounded steps");
    if (r.snapshots.size() != r.steps.size()) throw ExportError("trajectory '" + r.id + "' has misaligned snapshots");
    ids.push_back(r.id);
  }
  for (const auto& q : queries)
    if (std::find(ids.begin(), ids.end(), q.trajectory_ref) == ids.end())
      throw ExportError("query '" + q.id + "' references unknown trajectory '" + q.trajectory_ref + "'");
  std::string out;
  for (const auto& r : records)
    for (std::size_t i = 0; i < r.steps.size(); ++i) out += step_line(r, i).dump() + "\n";
  for (const auto& q : queries) out += query_line(q).dump() + "\n";
  return out;
}

struct DatasetContents {
  std::vector<TrajectoryRecord> records;
  std::vector<QueryInstance> queries;
  std::vector<std::pair<std::size_t, std::string>> errors;  // 1-based line, message
};

inline StateKey parse_state_key(const std::string& s) {
  auto hash = s.rfind('#');
  if (hash == std::string::npos) throw std::invalid_argument("bad state key '" + s + "'");
  return StateKey{s.substr(0, hash), parse_hex64(s.substr(hash + 1))};
}

/// Re-ingests export_dataset output. Corrupt lines are reported and skipped.
inline DatasetContents ingest_dataset(std::string_view text) {
  DatasetContents out;
  std::map<std::string, std::size_t> by_id;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      if (j.at("format_version").get<int>() != kFormatVersion) throw std::invalid_argument("unsupported format_version");
      auto kind = j.at("kind").get<std::string>();
      if (kind == "step") {
        auto id = j.at("trajectory_id").get<std::string>();
        auto it = by_id.find(id);
        if (it == by_id.end()) {
          TrajectoryRecord r;
          r.id = id;
          r.website = j.at("website").get<std::string>();
          r.goal = goal_from_json(j.at("goal"));
          it = by_id.emplace(id, out.records.size()).first;
          out.records.push_back(std::move(r));
        }
        auto& r = out.records[it->second];
        if (j.at("step_index").get<std::size_t>() != r.steps.size()) throw std::invalid_argument("step out of order");
        GroundedStep s = grounded_step_from_json(j);
        if (s.action_index == r.actions.size())
          r.actions.push_back(SemanticAction{s.action_id, binding_from_json(j.at("binding"))});
        else if (s.action_index + 1 != r.actions.size())
          throw std::invalid_argument("action index out of order");
        r.steps.push_back(std::move(s));
        r.snapshots.push_back(parse_state_key(j.at("snapshot").get<std::string>()));
      } else if (kind == "query") {
        QueryInstance q;
        q.id = j.at("query_id").get<std::string>();
        q.trajectory_ref = j.at("trajectory_id").get<std::string>();
        auto fam = family_from_string(j.at("family").get<std::string>());
        auto mode = mode_from_string(j.at("mode").get<std::string>());
        if (!fam || !mode) throw std::invalid_argument("unknown family or mode");
        q.family = *fam;
        q.mode = *mode;
        q.text = j.at("text").get<std::string>();
        q.template_params = ordered_json::parse(std::string(line)).at("template_params");
        q.goal = goal_from_json(j.at("goal"));
        out.queries.push_back(std::move(q));
      } else {
        throw std::invalid_argument("unknown record kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      out.errors.emplace_back(line_no, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

struct StatsManifest {
  std::size_t trajectory_count = 0;
  std::size_t query_count = 0;
  std::size_t total_grounded_steps = 0;
  std::size_t total_semantic_actions = 0;
  double mean_grounded_steps = 0;
  double mean_semantic_actions = 0;
  std::size_t max_depth = 0;
  std::map<std::string, std::size_t> family_counts;
  std::map<std::string, std::size_t> mode_counts;
  ordered_json records = ordered_json::array();  // per-query attributes

  friend bool operator==(const StatsManifest&, const StatsManifest&) = default;
};

inline StatsManifest build_manifest(const std::vector<TrajectoryRecord>& records, const std::vector<QueryInstance>& queries) {
  StatsManifest m;
  for (auto f : kAllFamilies) m.family_counts[std::string(to_string(f))] = 0;
  for (auto md : kAllModes) m.mode_counts[std::string(to_string(md))] = 0;
  m.trajectory_count = records.size();
  for (const auto& r : records) {
    m.total_grounded_steps += r.steps.size();
    m.total_semantic_actions += r.actions.size();
    m.max_depth = std::max(m.max_depth, r.actions.size());
  }
  if (m.trajectory_count) {
    m.mean_grounded_steps = static_cast<double>(m.total_grounded_steps) / static_cast<double>(m.trajectory_count);
    m.mean_semantic_actions = static_cast<double>(m.total_semantic_actions) / static_cast<double>(m.trajectory_count);
  }
  m.query_count = queries.size();
  for (const auto& q : queries) {
    ++m.family_counts[std::string(to_string(q.family))];
    ++m.mode_counts[std::string(to_string(q.mode))];
    ordered_json rj;
    rj["query_id"] = q.id;
    rj["trajectory_id"] = q.trajectory_ref;
    rj["family"] = std::string(to_string(q.family));
    rj["mode"] = std::string(to_string(q.mode));
    rj["template_params"] = q.template_params;
    m.records.push_back(std::move(rj));
  }
  return m;
}

inline ordered_json manifest_to_json(const StatsManifest& m) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["trajectory_count"] = m.trajectory_count;
  j["query_count"] = m.query_count;
  j["total_grounded_steps"] = m.total_grounded_steps;
  j["total_semantic_actions"] = m.total_semantic_actions;
  j["mean_grounded_steps"] = m.mean_grounded_steps;
  j["mean_semantic_actions"] = m.mean_semantic_actions;
  j["max_depth"] = m.max_depth;
  j["family_counts"] = m.family_counts;
  j["mode_counts"] = m.mode_counts;
  j["records"] = m.records;
  return j;
}

inline StatsManifest manifest_from_json(const ordered_json& j) {
  if (j.at("format_version").get<int>() != kFormatVersion) throw std::invalid_argument("unsupported manifest format_version");
  StatsManifest m;
  m.trajectory_count = j.at("trajectory_count").get<std::size_t>();
  m.query_count = j.at("query_count").get<std::size_t>();
  m.total_grounded_steps = j.at("total_grounded_steps").get<std::size_t>();
  m.total_semantic_actions = j.at("total_semantic_actions").get<std::size_t>();
  m.mean_grounded_steps = j.at("mean_grounded_steps").get<double>();
  m.mean_semantic_actions = j.at("mean_semantic_actions").get<double>();
  m.max_depth = j.at("max_depth").get<std::size_t>();
  m.family_counts = j.at("family_counts").get<std::map<std::string, std::size_t>>();
  m.mode_counts = j.at("mode_counts").get<std::map<std::string, std::size_t>>();
  m.records = j.at("records");
  return m;
}

/// Names of manifest fields that disagree between two manifests.
inline std::vector<std::string> manifest_mismatches(const StatsManifest& a, const StatsManifest& b) {
  std::vector<std::string> out;
  if (a.trajectory_count != b.trajectory_count) out.push_back("trajectory_count");
  if (a.query_count != b.query_count) out.push_back("query_count");
  if (a.total_grounded_steps != b.total_grounded_steps) out.push_back("total_grounded_steps");
  if (a.total_semantic_actions != b.total_semantic_actions) out.push_back("total_semantic_actions");
  if (a.mean_grounded_steps != b.mean_grounded_steps) out.push_back("mean_grounded_steps");
  if (a.mean_semantic_actions != b.mean_semantic_actions) out.push_back("mean_semantic_actions");
  if (a.max_depth != b.max_depth) out.push_back("max_depth");
  if (a.family_counts != b.family_counts) out.push_back("family_counts");
  if (a.mode_counts != b.mode_counts) out.push_back("mode_counts");
  if (a.records != b.records) out.push_back("records");
  return out;
}

}  // namespace webfsm
