#include <iostream>

#include "CLI11.hpp"
#include "webfsm/cli.hpp"

namespace cli = webfsm::cli;

int main(int argc, char** argv) {
  CLI::App app{"webfsm: FSM specs to verified GUI-agent trajectories"};
  app.require_subcommand(1);
  cli::RunConfig cfg;
  std::optional<std::size_t> per_goal_cap;

  auto add_common = [&](CLI::App* sc) {
    sc->add_option("-o,--out", cfg.out_dir, "output directory")->capture_default_str();
  };
  auto add_spec = [&](CLI::App* sc) { sc->add_option("--spec", cfg.spec_path, "fsm.json")->required()->check(CLI::ExistingFile); };

  auto* validate = app.add_subcommand("validate", "check a spec and print findings");
  validate->add_option("spec", cfg.spec_path, "fsm.json")->required();
  validate->add_flag("--json", cfg.json_report, "print the machine-readable report");
  validate->add_option("-o,--out", cfg.out_dir, "also write validation.json here ('-' for none)");
  cfg.out_dir = "-";

  auto* enumerate = app.add_subcommand("enumerate", "BFS over the state graph");
  add_spec(enumerate);
  enumerate->add_option("--catalog", cfg.catalog_path, "item catalog");
  enumerate->add_option("--goal", cfg.goal, "goal JSON inline or a file (default: meta terminal pages)");
  enumerate->add_option("--max-depth", cfg.search.max_depth)->check(CLI::PositiveNumber);
  enumerate->add_option("--max-nodes", cfg.search.max_nodes);
  enumerate->add_option("--per-goal-cap", per_goal_cap);
  enumerate->add_option("--param-cap", cfg.search.param_instantiation_cap);
  enumerate->add_option("--threads", cfg.search.threads);
  enumerate->add_option("-k,--diverse", cfg.diverse_k, "max trajectories with distinct final states");
  enumerate->add_flag("--negatives", cfg.negatives, "also write truncated / forced-invalid negatives");
  add_common(enumerate);

  auto* ground = app.add_subcommand("ground", "expand trajectories into atomic GUI steps");
  add_spec(ground);
  ground->add_option("--trajectories", cfg.input_path)->required();
  ground->add_option("--seed", cfg.seed, "layout seed");
  add_common(ground);

  auto* replay = app.add_subcommand("replay", "replay against the page model and filter");
  add_spec(replay);
  replay->add_option("--trajectories", cfg.input_path)->required();
  replay->add_option("--defects", cfg.defects_path);
  replay->add_option("--seed", cfg.seed, "layout seed");
  add_common(replay);

  auto* exp = app.add_subcommand("export", "write bfs.json files, dataset and manifest");
  add_spec(exp);
  exp->add_option("--accepted", cfg.input_path)->required();
  exp->add_option("--catalog", cfg.catalog_path);
  exp->add_option("--modes", cfg.modes, "search scroll slider sort checkbox")->delimiter(',');
  exp->add_option("--website", cfg.website);
  exp->add_option("--seed", cfg.seed, "layout seed when the input does not carry one");
  exp->add_flag("--dedup", cfg.dedup, "keep one trajectory per goal");
  add_common(exp);

  auto* reward = app.add_subcommand("reward", "score a batch of completions");
  reward->add_option("batch", cfg.input_path, "JSONL of {completion, gold, bbox, scale}")->required();
  add_common(reward);

  auto* stats = app.add_subcommand("stats", "recompute dataset aggregates");
  stats->add_option("dataset", cfg.input_path)->required();
  stats->add_option("--manifest", cfg.manifest_path, "manifest to check against");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (cfg.out_dir == "-" && !validate->parsed()) cfg.out_dir = "out";
  if (per_goal_cap) cfg.search.per_goal_cap = per_goal_cap;

  if (validate->parsed()) return cli::cmd_validate(cfg, std::cout, std::cerr);
  if (enumerate->parsed()) return cli::cmd_enumerate(cfg, std::cout, std::cerr);
  if (ground->parsed()) return cli::cmd_ground(cfg, std::cout, std::cerr);
  if (replay->parsed()) return cli::cmd_replay(cfg, std::cout, std::cerr);
  if (exp->parsed()) return cli::cmd_export(cfg, std::cout, std::cerr);
  if (reward->parsed()) return cli::cmd_reward(cfg, std::cout, std::cerr);
  if (stats->parsed()) return cli::cmd_stats(cfg, std::cout, std::cerr);
  return 2;
}
