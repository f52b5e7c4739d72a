// Shared helpers for the test binaries: fixture loading, a random spec
// generator and brute-force oracles.
#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "webfsm/webfsm.hpp"

namespace testsupport {

using namespace webfsm;

inline std::string fixture_path(const std::string& name) { return std::string(WEBFSM_FIXTURES) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline FsmSpec load_fixture(const std::string& name) { return parse_spec(read_text(fixture_path(name))); }
inline DataCatalog healthcare() { return load_catalog(read_text(fixture_path("healthcare_catalog.json"))); }

// FNV-1a 64 written out independently of value.hpp
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Random specs: <= 8 pages, <= 30 actions, <= 3 bindings per action.
// Every page has a numeric counter, a boolean flag, a string mode and a set
// of tags; a chain of navigation actions guarantees the terminal is
// reachable. Generated specs always validate.

struct RandomSpec {
  json doc;
  DataCatalog catalog;
};

inline RandomSpec random_spec(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  const int n_pages = pick(2, 8);
  const int n_items = pick(1, 3);
  std::vector<std::string> pages;
  for (int i = 0; i < n_pages; ++i) pages.push_back("P" + std::to_string(i));
  const std::vector<std::string> modes{"a", "b", "c"};

  json doc;
  doc["meta"] = {{"initial_page_id", "P0"}, {"terminal_pages", {pages.back()}}};
  doc["pages"] = json::object();
  doc["actions"] = json::object();
  for (int i = 0; i < n_pages; ++i) {
    json sig = {{"counter", pick(0, 2)}, {"flag", pick(0, 1) == 1}, {"mode", modes[pick(0, 2)]}, {"tags", json::array()}};
    if (pick(0, 1)) sig["shared"] = pick(0, 3);  // carried between pages that both declare it
    if (pick(0, 2) == 0) sig["picked"] = nullptr;
    doc["pages"][pages[i]] = {{"page_name", "Page " + std::to_string(i)}, {"signature", sig}, {"actions", json::array()}};
  }

  int action_no = 0;
  auto add_action = [&](const std::string& from, const std::string& to, json effects, json pre, json params) {
    std::string id = "A" + std::to_string(action_no++);
    json a = {{"name", "act_" + id},
              {"from", from},
              {"to", to},
              {"is_navigation", from != to},
              {"params", params},
              {"preconditions", pre},
              {"effects", effects},
              {"gui_procedure", json::array({{{"op", "click"}, {"selector", "#" + id}}})}};
    if (from != to) a["to_page_id"] = to;
    doc["actions"][id] = a;
    doc["pages"][from]["actions"].push_back(id);
  };

  auto sig_of = [&](const std::string& p) -> json& { return doc["pages"][p]["signature"]; };
  auto random_pre = [&](const std::string& p) {
    json pre = json::array();
    int n = pick(0, 2);
    for (int k = 0; k < n; ++k) {
      switch (pick(0, 3)) {
        case 0: pre.push_back({{"path", "$.counter"}, {"op", "<"}, {"value", pick(1, 4)}}); break;
        case 1: pre.push_back({{"path", "$.flag"}, {"op", "=="}, {"value", pick(0, 1) == 1}}); break;
        case 2: pre.push_back({{"path", "$.mode"}, {"op", "!="}, {"value", modes[pick(0, 2)]}}); break;
        default: pre.push_back({{"path", "$.tags"}, {"op", "contains"}, {"value", "t" + std::to_string(pick(0, 1))}}); break;
      }
    }
    (void)p;
    return pre;
  };
  auto random_effects = [&](const std::string& p, bool& uses_param) {
    json eff = json::array();
    std::set<std::string> used;
    int n = pick(0, 2);
    for (int k = 0; k < n; ++k) {
      int kind = pick(0, 5);
      std::string field = kind <= 1 ? "counter" : kind == 2 ? "flag" : kind == 3 ? "mode" : kind == 4 ? "tags" : "picked";
      if (field == "picked" && !sig_of(p).contains("picked")) field = "mode";
      if (used.count(field)) continue;
      used.insert(field);
      if (field == "counter") eff.push_back({{"path", "$.counter"}, {"op", kind == 0 ? "increment" : "decrement"}});
      else if (field == "flag") eff.push_back({{"path", "$.flag"}, {"op", "toggle"}});
      else if (field == "mode") eff.push_back({{"path", "$.mode"}, {"op", "assign"}, {"value", modes[pick(0, 2)]}});
      else if (field == "tags")
        eff.push_back({{"path", "$.tags"}, {"op", pick(0, 1) ? "set_insert" : "set_delete"}, {"value", "t" + std::to_string(pick(0, 1))}});
      else {
        eff.push_back({{"path", "$.picked"}, {"op", "assign"}, {"value", "<ITEM>"}});
        uses_param = true;
      }
    }
    return eff;
  };

  // chain guarantees reachability of the terminal
  for (int i = 0; i + 1 < n_pages; ++i) add_action(pages[i], pages[i + 1], json::array(), json::array(), json::object());
  const int extra = pick(0, 30 - action_no);
  for (int k = 0; k < extra; ++k) {
    std::string from = pages[pick(0, n_pages - 2)];
    bool nav = pick(0, 3) == 0;
    std::string to = nav ? pages[pick(0, n_pages - 1)] : from;
    bool uses_param = false;
    json eff = random_effects(from, uses_param);
    json params = uses_param ? json{{"item_id", "<ITEM>"}} : json::object();
    add_action(from, to, eff, random_pre(from), params);
  }

  RandomSpec out;
  out.doc = doc;
  json cat = {{"items", json::array()}};
  for (int i = 0; i < n_items; ++i) cat["items"].push_back({{"id", "it" + std::to_string(i)}, {"name", "Item " + std::to_string(i)}});
  out.catalog = load_catalog(cat.dump());
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive depth-bounded DFS: best depth for every reachable key.

struct OracleResult {
  std::map<StateKey, int> best;
  std::map<StateKey, State> states;
};

inline OracleResult dfs_oracle(const FsmSpec& spec, const DataCatalog& catalog, int max_depth, std::size_t cap) {
  OracleResult r;
  std::function<void(const State&, int)> dfs = [&](const State& s, int d) {
    auto k = state_key(s);
    auto it = r.best.find(k);
    if (it != r.best.end() && it->second <= d) return;
    r.best[k] = d;
    r.states[k] = s;
    if (d == max_depth) return;
    for (const auto& aid : spec.page(s.page).actions) {
      const auto& a = spec.action(aid);
      for (const auto& b : enumerate_bindings(a, catalog, cap)) {
        auto res = step(spec, s, a, b);
        if (!res.invalid) dfs(res.state, d + 1);
      }
    }
  };
  dfs(initial_state(spec), 0);
  return r;
}

/// A goal that holds everywhere: every node becomes a hit.
inline GoalPredicate everywhere() { return GoalPredicate::signature({}); }

}  // namespace testsupport
