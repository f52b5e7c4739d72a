// Batch commands behind the webfsm executable. Each command reads its inputs,
// writes artifacts atomically under an output directory and returns an exit
// code: 0 success, 1 domain failure, 2 I/O or usage.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "webfsm/webfsm.hpp"

namespace webfsm::cli {

namespace fs = std::filesystem;

struct RunConfig {
  std::string spec_path;
  std::string catalog_path;
  std::string goal;  // empty = meta terminal pages; inline JSON or a file path
  std::string input_path;     // trajectories / grounded / accepted / batch / dataset
  std::string defects_path;
  std::string manifest_path;
  std::string out_dir = "out";
  std::string website;
  std::vector<std::string> modes;  // empty = all five
  SearchConfig search;
  std::size_t diverse_k = 16;
  std::uint64_t seed = 0;
  bool negatives = false;
  bool dedup = false;
  bool json_report = false;
};

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a sibling temp file and rename, so readers never see a partial file.
inline void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw IoFailure("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoFailure("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

inline json read_json_file(const std::string& path) {
  auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DomainFailure("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline FsmSpec load_spec(const std::string& path) {
  auto text = read_file(path);
  try {
    return parse_spec(text);
  } catch (const SpecError& e) {
    throw DomainFailure("'" + path + "': " + e.what());
  }
}

inline DataCatalog load_catalog_file(const std::string& path) {
  if (path.empty()) return DataCatalog{};
  auto text = read_file(path);
  try {
    return load_catalog(text);
  } catch (const std::exception& e) {
    throw DomainFailure("'" + path + "': " + e.what());
  }
}

inline GoalPredicate resolve_goal(const FsmSpec& spec, const std::string& goal) {
  if (goal.empty() || goal == "terminal") return GoalPredicate::terminal_pages(spec.meta.terminal_pages);
  std::string text = goal.front() == '{' ? goal : read_file(goal);
  try {
    return goal_from_json(json::parse(text));
  } catch (const std::exception& e) {
    throw DomainFailure(std::string("bad goal: ") + e.what());
  }
}

inline void require_digest(const json& doc, const FsmSpec& spec, const std::string& path) {
  auto want = spec_digest(spec);
  if (!doc.is_object() || !doc.contains("spec_digest"))
    throw DomainFailure("'" + path + "' carries no spec_digest");
  if (doc.at("spec_digest") != want)
    throw DomainFailure("'" + path + "' was produced from a different spec (digest " +
                        doc.at("spec_digest").get<std::string>() + ", expected " + want + ")");
}

inline std::string dump_doc(const ordered_json& j) { return j.dump(2) + "\n"; }

inline std::string fixed(double d, int prec = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(prec) << d;
  return ss.str();
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const IoFailure& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// reads semantic trajectories from enumerate, ground or replay output
inline std::vector<std::pair<std::string, SemanticTrajectory>> read_trajectories(const json& doc) {
  std::vector<std::pair<std::string, SemanticTrajectory>> out;
  if (doc.contains("trajectories")) {
    for (const auto& t : doc.at("trajectories")) out.emplace_back(t.at("id").get<std::string>(), trajectory_from_json(t));
  } else if (doc.contains("grounded")) {
    for (const auto& g : doc.at("grounded"))
      out.emplace_back(g.at("id").get<std::string>(), trajectory_from_json(g.at("semantic")));
  } else {
    throw DomainFailure("document holds neither 'trajectories' nor 'grounded'");
  }
  return out;
}

inline ordered_json grounded_doc(const FsmSpec& spec, std::uint64_t seed,
                                 const std::vector<std::pair<std::string, GroundedTrajectory>>& items) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["spec_digest"] = spec_digest(spec);
  doc["layout_seed"] = seed;
  ordered_json arr = ordered_json::array();
  for (const auto& [id, g] : items) {
    ordered_json gj;
    gj["id"] = id;
    auto body = grounded_to_json(g);
    gj["semantic"] = body["semantic"];
    gj["steps"] = body["steps"];
    arr.push_back(std::move(gj));
  }
  doc["grounded"] = std::move(arr);
  return doc;
}

// ---------------------------------------------------------------------------

inline int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto spec = load_spec(cfg.spec_path);
    auto report = validate_spec(spec);
    if (cfg.json_report)
      out << dump_doc(report_to_json(report));
    else
      out << format_report_text(report);
    if (!cfg.out_dir.empty() && cfg.out_dir != "-") {
      write_atomic(fs::path(cfg.out_dir) / "validation.json", dump_doc(report_to_json(report)));
    }
    out << (report.ok ? "ok" : "invalid") << "\n";
    return report.ok ? 0 : 1;
  });
}

inline int cmd_enumerate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto spec = load_spec(cfg.spec_path);
    auto report = validate_spec(spec);
    if (!report.ok) {
      err << format_report_text(report);
      throw DomainFailure("spec does not validate; refusing to enumerate");
    }
    auto catalog = load_catalog_file(cfg.catalog_path);
    auto goal = resolve_goal(spec, cfg.goal);
    auto graph = enumerate(spec, catalog, goal, cfg.search);
    auto trajs = sample_diverse(graph, goal, cfg.diverse_k);

    ordered_json doc;
    doc["format_version"] = kFormatVersion;
    doc["spec_digest"] = spec_digest(spec);
    doc["goal"] = goal_to_json(goal);
    ordered_json summary;
    summary["node_count"] = graph.nodes.size();
    summary["expanded"] = graph.expanded;
    summary["goal_hits"] = graph.goal_hits.size();
    summary["truncated"] = graph.truncated;
    doc["graph"] = summary;
    ordered_json arr = ordered_json::array();
    ordered_json negs = ordered_json::array();
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "traj-%04zu", i + 1);
      ordered_json tj;
      tj["id"] = id;
      auto body = trajectory_to_json(trajs[i]);
      for (auto it = body.begin(); it != body.end(); ++it) tj[it.key()] = it.value();
      arr.push_back(std::move(tj));
      if (cfg.negatives && !trajs[i].actions.empty()) {
        for (auto mode : {NegativeTrajectory::Mode::truncated, NegativeTrajectory::Mode::forced_invalid}) {
          try {
            auto n = negative_to_json(make_negatives(trajs[i], mode, spec));
            n["source"] = id;
            negs.push_back(std::move(n));
          } catch (const NotConstructible&) {
          }
        }
      }
    }
    doc["trajectories"] = std::move(arr);
    fs::path dir(cfg.out_dir);
    write_atomic(dir / "trajectories.json", dump_doc(doc));
    if (cfg.negatives) {
      ordered_json nd;
      nd["format_version"] = kFormatVersion;
      nd["spec_digest"] = spec_digest(spec);
      nd["negatives"] = std::move(negs);
      write_atomic(dir / "negatives.json", dump_doc(nd));
    }
    out << "nodes " << graph.nodes.size() << ", goal hits " << graph.goal_hits.size() << ", trajectories "
        << trajs.size();
    if (!trajs.empty()) out << ", shortest length " << trajs.front().length();
    if (graph.truncated) out << " (truncated)";
    out << "\n";
    return 0;
  });
}

inline int cmd_ground(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto spec = load_spec(cfg.spec_path);
    auto doc = read_json_file(cfg.input_path);
    require_digest(doc, spec, cfg.input_path);
    auto model = build_page_model(spec, cfg.seed);
    std::vector<std::pair<std::string, GroundedTrajectory>> items;
    std::size_t steps = 0;
    for (auto& [id, t] : read_trajectories(doc)) {
      items.emplace_back(id, ground_trajectory(t, spec, model));
      steps += items.back().second.steps.size();
    }
    write_atomic(fs::path(cfg.out_dir) / "grounded.json", dump_doc(grounded_doc(spec, cfg.seed, items)));
    out << "grounded " << items.size() << " trajectories, " << steps << " atomic steps\n";
    return 0;
  });
}

inline int cmd_replay(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto spec = load_spec(cfg.spec_path);
    auto doc = read_json_file(cfg.input_path);
    require_digest(doc, spec, cfg.input_path);
    DefectSet defects;
    if (!cfg.defects_path.empty()) {
      auto text = read_file(cfg.defects_path);
      try {
        defects = load_defects(text);
      } catch (const std::exception& e) {
        throw DomainFailure("'" + cfg.defects_path + "': " + e.what());
      }
    }
    auto model = build_page_model(spec, cfg.seed);
    std::vector<std::pair<std::string, GroundedTrajectory>> accepted;
    ordered_json verdicts = ordered_json::array();
    ordered_json rejected = ordered_json::array();
    std::size_t total = 0;
    for (auto& [id, t] : read_trajectories(doc)) {
      ++total;
      auto g = ground_trajectory(t, spec, model);
      auto v = replay_trajectory(g, spec, model, defects);
      ordered_json vj;
      vj["id"] = id;
      vj["verdict"] = verdict_to_json(v);
      verdicts.push_back(vj);
      if (v.accepted) {
        accepted.emplace_back(id, std::move(g));
      } else {
        ordered_json rj;
        rj["id"] = id;
        rj["verdict"] = verdict_to_json(v);
        rj["grounded"] = grounded_to_json(g);
        rejected.push_back(std::move(rj));
      }
    }
    fs::path dir(cfg.out_dir);
    ordered_json vd;
    vd["format_version"] = kFormatVersion;
    vd["spec_digest"] = spec_digest(spec);
    vd["layout_seed"] = cfg.seed;
    vd["total"] = total;
    vd["accepted"] = accepted.size();
    vd["verdicts"] = std::move(verdicts);
    write_atomic(dir / "verdicts.json", dump_doc(vd));
    write_atomic(dir / "accepted.json", dump_doc(grounded_doc(spec, cfg.seed, accepted)));
    ordered_json rd;
    rd["format_version"] = kFormatVersion;
    rd["spec_digest"] = spec_digest(spec);
    rd["rejected"] = std::move(rejected);
    write_atomic(dir / "rejected.json", dump_doc(rd));
    out << "accepted " << accepted.size() << "/" << total;
    if (total) out << " (" << fixed(100.0 * static_cast<double>(accepted.size()) / static_cast<double>(total), 1) << "%)";
    out << "\n";
    return 0;
  });
}

inline std::vector<InteractionMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<InteractionMode> modes;
  if (names.empty()) return {std::begin(kAllModes), std::end(kAllModes)};
  for (const auto& n : names) {
    auto m = mode_from_string(n);
    if (!m) throw IoFailure("unknown mode '" + n + "'");
    modes.push_back(*m);
  }
  return modes;
}

inline int cmd_export(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto spec = load_spec(cfg.spec_path);
    auto catalog = load_catalog_file(cfg.catalog_path);
    auto modes = parse_modes(cfg.modes);
    auto doc = read_json_file(cfg.input_path);
    require_digest(doc, spec, cfg.input_path);
    std::string website = cfg.website;
    if (website.empty()) website = spec.meta.extra.contains("app") && spec.meta.extra.at("app").is_string()
                                       ? spec.meta.extra.at("app").get<std::string>()
                                       : std::string("site");
    std::uint64_t seed = doc.value("layout_seed", cfg.seed);
    auto model = build_page_model(spec, seed);

    std::vector<TrajectoryRecord> records;
    for (auto& [id, t] : read_trajectories(doc)) {
      if (t.actions.empty()) continue;  // nothing to navigate
      records.push_back(make_record(id, website, ground_trajectory(t, spec, model)));
    }
    if (cfg.dedup) records = dedup_parallel(records);
    std::vector<QueryInstance> queries;
    for (const auto& r : records)
      for (auto& q : instantiate_queries(r, spec, catalog, modes)) queries.push_back(std::move(q));

    std::string dataset;
    try {
      dataset = export_dataset(records, queries);
    } catch (const ExportError& e) {
      throw DomainFailure(e.what());
    }
    fs::path dir(cfg.out_dir);
    fs::path bfs_dir = dir / "bfs";
    std::error_code ec;
    if (fs::exists(bfs_dir, ec))
      for (const auto& entry : fs::directory_iterator(bfs_dir))
        if (entry.path().extension() == ".json") fs::remove(entry.path(), ec);
    for (const auto& r : records) write_atomic(bfs_dir / (r.id + ".json"), export_bfs_json(r, spec));
    write_atomic(dir / "dataset.jsonl", dataset);
    auto manifest = manifest_to_json(build_manifest(records, queries));
    manifest["spec_digest"] = spec_digest(spec);
    write_atomic(dir / "manifest.json", dump_doc(manifest));
    out << "exported " << records.size() << " trajectories, " << queries.size() << " queries\n";
    return 0;
  });
}

inline int cmd_reward(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto text = read_file(cfg.input_path);
    auto res = reward_batch(text);
    std::string lines;
    for (const auto& l : res.lines) lines += l.dump() + "\n";
    write_atomic(fs::path(cfg.out_dir) / "rewards.jsonl", lines);
    ordered_json summary;
    summary["n"] = res.n;
    summary["errors"] = res.lines.size() - res.n;
    if (res.n) {
      summary["mean_r_act"] = res.mean_act;
      summary["mean_r_coord"] = res.mean_coord;
      summary["mean_r_fmt"] = res.mean_fmt;
      summary["mean_total"] = res.mean_total;
    }
    write_atomic(fs::path(cfg.out_dir) / "rewards_summary.json", dump_doc(summary));
    for (const auto& l : res.lines)
      if (l.contains("error")) err << "line " << l.at("line").get<std::size_t>() << ": " << l.at("error").get<std::string>() << "\n";
    if (res.n == 0) {
      out << "n=0 (means undefined)\n";
    } else {
      out << "n=" << res.n << " r_act=" << fixed(res.mean_act) << " r_coord=" << fixed(res.mean_coord)
          << " r_fmt=" << fixed(res.mean_fmt) << " total=" << fixed(res.mean_total) << "\n";
    }
    return 0;
  });
}

inline int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto text = read_file(cfg.input_path);
    auto contents = ingest_dataset(text);
    for (const auto& [line, msg] : contents.errors) err << "line " << line << ": " << msg << "\n";
    auto m = build_manifest(contents.records, contents.queries);
    out << "trajectories " << m.trajectory_count << "\n";
    out << "queries " << m.query_count << "\n";
    out << "grounded_steps " << m.total_grounded_steps << " (mean " << fixed(m.mean_grounded_steps, 2) << ")\n";
    out << "semantic_actions " << m.total_semantic_actions << " (mean " << fixed(m.mean_semantic_actions, 2) << ")\n";
    out << "max_depth " << m.max_depth << "\n";
    for (const auto& [k, v] : m.family_counts) out << "family " << k << " " << v << "\n";
    for (const auto& [k, v] : m.mode_counts) out << "mode " << k << " " << v << "\n";
    int rc = contents.errors.empty() ? 0 : 1;
    if (!cfg.manifest_path.empty()) {
      auto mj = ordered_json::parse(read_file(cfg.manifest_path), nullptr, false);
      if (mj.is_discarded()) throw DomainFailure("'" + cfg.manifest_path + "' is not valid JSON");
      StatsManifest shipped;
      try {
        shipped = manifest_from_json(mj);
      } catch (const std::exception& e) {
        throw DomainFailure("'" + cfg.manifest_path + "': " + e.what());
      }
      auto bad = manifest_mismatches(shipped, m);
      for (const auto& f : bad) err << "manifest mismatch: " << f << "\n";
      if (!bad.empty()) rc = 1;
      else out << "manifest consistent\n";
    }
    return rc;
  });
}

}  // namespace webfsm::cli
