#include <gtest/gtest.h>

#include "support.hpp"

using namespace webfsm;
using testsupport::healthcare;
using testsupport::load_fixture;

namespace {

SemanticTrajectory automation_shortest(const FsmSpec& spec) {
  auto goal = GoalPredicate::terminal_pages(spec.meta.terminal_pages);
  SearchConfig cfg;
  cfg.max_depth = 12;
  auto g = enumerate(spec, DataCatalog{}, goal, cfg);
  return extract_trajectory(g, g.goal_hits.front(), goal);
}

DefectSet one(const std::string& page, const std::string& sel, Defect::Kind k = Defect::Kind::missing) {
  return DefectSet{{Defect{page, sel, k}}};
}

}  // namespace

TEST(PageModel, DeterministicAndDistinctCenters) {
  auto spec = load_fixture("automation_env.json");
  auto a = build_page_model(spec, 7), b = build_page_model(spec, 7);
  ASSERT_EQ(a.pages.size(), b.pages.size());
  for (const auto& [pid, sels] : a.pages)
    for (const auto& [sel, info] : sels) EXPECT_EQ(info.box, b.find(pid, sel)->box);
  for (const auto& [pid, sels] : a.pages) {
    std::vector<std::pair<double, double>> centers;
    for (const auto& [sel, info] : sels) {
      EXPECT_TRUE(info.box.well_formed()) << sel;
      EXPECT_TRUE(info.box.strictly_contains(info.box.cx(), info.box.cy()));
      centers.emplace_back(info.box.cx(), info.box.cy());
    }
    for (std::size_t i = 0; i < centers.size(); ++i)
      for (std::size_t j = i + 1; j < centers.size(); ++j) EXPECT_NE(centers[i], centers[j]) << pid;
  }
  EXPECT_NE(build_page_model(spec, 8).find("HOME", "#cookie-accept")->box, a.find("HOME", "#cookie-accept")->box);
}

TEST(PageModel, OptionSelectorsNeedTheirContainer) {
  auto model = build_page_model(load_fixture("automation_env.json"), 0);
  const auto* opt = model.find("BASES", "#bases-sort-recent-desc");
  ASSERT_NE(opt, nullptr);
  EXPECT_EQ(opt->availability.kind, Availability::Kind::requires_container_open);
  EXPECT_EQ(opt->availability.container, "#bases-sort-dropdown");
  EXPECT_EQ(model.find("BASES", "#bases-sort-dropdown")->availability.kind, Availability::Kind::always);
}

TEST(Grounding, CookieStepAtBoxCenter) {
  auto spec = load_fixture("automation_env.json");
  auto model = build_page_model(spec, 0);
  auto g = ground_trajectory(automation_shortest(spec), spec, model);
  ASSERT_EQ(g.steps.size(), 15u);
  const auto& s0 = g.steps[0];
  EXPECT_EQ(s0.action_id, "ACT_HOME_ACCEPT_COOKIES");
  EXPECT_EQ(s0.op, GuiOp::click);
  EXPECT_EQ(*s0.selector, "#cookie-accept");
  auto box = model.find("HOME", "#cookie-accept")->box;
  EXPECT_EQ(*s0.point, (Point{box.cx(), box.cy()}));
  EXPECT_EQ(g.steps[1].op, GuiOp::hover);
}

TEST(Grounding, SearchProcedureWithBinding) {
  auto spec = load_fixture("portal_skeleton.json");
  auto model = build_page_model(spec, 0);
  SemanticTrajectory t;
  t.states.push_back(initial_state(spec));
  auto nav = step(spec, t.states.back(), spec.action("ACT_ID_NAV_1"), {});
  t.actions.push_back({"ACT_ID_NAV_1", {}});
  t.states.push_back(nav.state);
  ParamBinding b{{"QUERY_PLACEHOLDER", Value("laptop")}};
  t.actions.push_back({"ACT_ID_SEARCH", b});
  t.states.push_back(step(spec, nav.state, spec.action("ACT_ID_SEARCH"), b).state);
  auto g = ground_trajectory(t, spec, model);
  ASSERT_EQ(g.steps.size(), 4u);
  EXPECT_EQ(g.steps[1].op, GuiOp::click);
  EXPECT_EQ(*g.steps[1].selector, "#search-box");
  EXPECT_EQ(g.steps[2].op, GuiOp::type_text);
  EXPECT_EQ(*g.steps[2].text, "laptop");
  EXPECT_EQ(*g.steps[3].selector, "#search-submit");
  EXPECT_TRUE(replay_trajectory(g, spec, model, {}).accepted);
}

TEST(Grounding, EmptyTrajectoryAndUnknownSelector) {
  auto spec = load_fixture("portal_skeleton.json");
  auto model = build_page_model(spec, 0);
  SemanticTrajectory t;
  t.states.push_back(initial_state(spec));
  EXPECT_TRUE(ground_trajectory(t, spec, model).steps.empty());
  model.pages["HOME"].erase("#nav-providers");
  t.actions.push_back({"ACT_ID_NAV_1", {}});
  t.states.push_back(step(spec, t.states[0], spec.action("ACT_ID_NAV_1"), {}).state);
  EXPECT_THROW(ground_trajectory(t, spec, model), GroundingError);
}

TEST(Grounding, ItemCardsShareTheTemplateEntry) {
  auto spec = load_fixture("portal_skeleton.json");
  auto goal = GoalPredicate::terminal_pages({"SUCCESS_1"});
  auto g = enumerate(spec, healthcare(), goal, SearchConfig{});
  auto gt = ground_trajectory(extract_trajectory(g, g.goal_hits.front(), goal), spec, build_page_model(spec, 0));
  ASSERT_EQ(gt.steps.size(), 4u);
  EXPECT_EQ(*gt.steps[1].selector, "#item-card-prov_1");
  EXPECT_EQ(*gt.steps[1].registered, "#item-card-<ITEM_ID_PLACEHOLDER>");
  EXPECT_EQ(gt.steps[1].op, GuiOp::scroll_until_visible);
}

TEST(Replay, AutomationAcceptedWithEmptyDefects) {
  auto spec = load_fixture("automation_env.json");
  auto model = build_page_model(spec, 0);
  auto g = ground_trajectory(automation_shortest(spec), spec, model);
  auto v = replay_trajectory(g, spec, model, {});
  EXPECT_TRUE(v.accepted) << v.detail;
  EXPECT_EQ(v.snapshots.size(), 15u);
  EXPECT_EQ(v.snapshots.back().state, g.semantic.final_key());
  auto again = replay_trajectory(g, spec, model, {});
  EXPECT_EQ(verdict_to_json(again).dump(), verdict_to_json(v).dump());
}

TEST(Replay, CookieDefectRejectsAtFirstStep) {
  auto spec = load_fixture("automation_env.json");
  auto model = build_page_model(spec, 0);
  auto g = ground_trajectory(automation_shortest(spec), spec, model);
  auto v = replay_trajectory(g, spec, model, one("HOME", "#cookie-accept"));
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.failed_step, std::optional<std::size_t>(0));
  EXPECT_EQ(v.reason, FailureReason::selector_missing);
  EXPECT_TRUE(v.snapshots.empty());
}

TEST(Replay, DeadDropdownBlocksItsOption) {
  auto spec = load_fixture("automation_env.json");
  auto model = build_page_model(spec, 0);
  auto g = ground_trajectory(automation_shortest(spec), spec, model);
  std::size_t option = 0;
  for (std::size_t i = 0; i < g.steps.size(); ++i)
    if (g.steps[i].selector == "#bases-sort-recent-desc") option = i;
  ASSERT_GT(option, 0u);
  auto v = replay_trajectory(g, spec, model, one("BASES", "#bases-sort-dropdown", Defect::Kind::non_functional));
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.reason, FailureReason::availability_unsatisfied);
  EXPECT_EQ(v.failed_step, std::optional<std::size_t>(option));
  auto missing = replay_trajectory(g, spec, model, one("BASES", "#bases-sort-dropdown"));
  EXPECT_EQ(missing.reason, FailureReason::selector_missing);
  EXPECT_EQ(missing.failed_step, std::optional<std::size_t>(option - 1));
  // same selector on another page does nothing
  EXPECT_TRUE(replay_trajectory(g, spec, model, one("HOME", "#bases-sort-dropdown")).accepted);
}

TEST(Replay, OptionWithoutOpeningIsUnavailable) {
  auto spec = load_fixture("automation_env.json");
  auto model = build_page_model(spec, 0);
  auto g = ground_trajectory(automation_shortest(spec), spec, model);
  for (std::size_t i = 0; i < g.steps.size(); ++i)
    if (g.steps[i].selector == "#bases-sort-dropdown") {
      g.steps[i].op = GuiOp::scroll;  // does not open anything
      auto v = replay_trajectory(g, spec, model, {});
      EXPECT_EQ(v.reason, FailureReason::availability_unsatisfied);
      EXPECT_EQ(v.failed_step, std::optional<std::size_t>(i + 1));
      return;
    }
  FAIL() << "dropdown step not found";
}

TEST(Filter, PartitionsByDefectMembership) {
  auto spec = load_fixture("portal_skeleton.json");
  auto goal = testsupport::everywhere();
  auto g = enumerate(spec, healthcare(), goal, SearchConfig{});
  auto model = build_page_model(spec, 3);
  std::vector<GroundedTrajectory> all;
  for (const auto& t : sample_diverse(g, goal, g.nodes.size())) all.push_back(ground_trajectory(t, spec, model));
  ASSERT_GT(all.size(), 3u);
  EXPECT_EQ(filter_trajectories(all, spec, model, {}).accepted.size(), all.size());
  EXPECT_TRUE(filter_trajectories({}, spec, model, {}).accepted.empty());

  for (const std::string& sel : {"#sort-dropdown", "#search-submit", "#extra-video-visit", "#notes-toggle", "#filter-specialty"}) {
    std::size_t m = 0;
    for (const auto& gt : all)
      for (const auto& s : gt.steps)
        if (s.page == (sel == "#extra-video-visit" || sel == "#notes-toggle" ? "DETAIL" : "LIST") &&
            (s.selector == sel || s.registered == sel || s.container == sel)) {
          ++m;
          break;
        }
    auto page = sel == "#extra-video-visit" || sel == "#notes-toggle" ? "DETAIL" : "LIST";
    auto r = filter_trajectories(all, spec, model, one(page, sel));
    EXPECT_EQ(r.rejected.size(), m) << sel;
    EXPECT_EQ(r.accepted.size() + r.rejected.size(), all.size());
  }
}

TEST(Defects, LoadKinds) {
  auto d = load_defects(R"({"defects": [{"page": "HOME", "selector": "#a"}, {"page": "P", "selector": "#b", "kind": "non_functional"}]})");
  ASSERT_EQ(d.defects.size(), 2u);
  EXPECT_EQ(d.defects[0].kind, Defect::Kind::missing);
  EXPECT_EQ(d.defects[1].kind, Defect::Kind::non_functional);
  EXPECT_THROW(load_defects(R"([{"page": "P", "selector": "#b", "kind": "flaky"}])"), std::invalid_argument);
}

TEST(Grounded, JsonRoundTrip) {
  auto spec = load_fixture("automation_env.json");
  auto model = build_page_model(spec, 0);
  auto g = ground_trajectory(automation_shortest(spec), spec, model);
  auto back = grounded_from_json(json::parse(grounded_to_json(g).dump()));
  EXPECT_EQ(grounded_to_json(back).dump(), grounded_to_json(g).dump());
  EXPECT_TRUE(replay_trajectory(back, spec, model, {}).accepted);
}
