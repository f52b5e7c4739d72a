#include <gtest/gtest.h>

#include "support.hpp"

using namespace webfsm;
using testsupport::fixture_path;
using testsupport::healthcare;
using testsupport::load_fixture;
using testsupport::read_text;

namespace {

// walk the engine through a list of actions
SemanticTrajectory walk(const FsmSpec& spec, const std::vector<SemanticAction>& acts, GoalPredicate goal) {
  SemanticTrajectory t;
  t.goal = std::move(goal);
  t.states.push_back(initial_state(spec));
  for (const auto& sa : acts) {
    auto r = step(spec, t.states.back(), spec.action(sa.action_id), sa.binding);
    EXPECT_FALSE(r.invalid) << sa.action_id;
    t.actions.push_back(sa);
    t.states.push_back(r.state);
  }
  return t;
}

TrajectoryRecord portal_record(const FsmSpec& spec, const std::vector<SemanticAction>& acts, std::string id = "traj-0001") {
  auto t = walk(spec, acts, GoalPredicate::terminal_pages({"SUCCESS_1"}));
  return make_record(std::move(id), "healthcare", ground_trajectory(t, spec, build_page_model(spec, 0)));
}

const SemanticAction kNav{"ACT_ID_NAV_1", {}};
const SemanticAction kSortRating{"ACT_ID_SORT", {{"SORT_OPTION", Value("rating")}, {"SORT_OPTION_SELECTOR", Value("#sort-rating")}}};
const SemanticAction kOpen1{"ACT_ID_OPEN_ITEM", {{"ITEM_ID_PLACEHOLDER", Value("prov_1")}}};
const SemanticAction kOpen3{"ACT_ID_OPEN_ITEM", {{"ITEM_ID_PLACEHOLDER", Value("prov_3")}}};
const SemanticAction kSearch{"ACT_ID_SEARCH", {{"QUERY_PLACEHOLDER", Value("laptop")}}};
const SemanticAction kAdd{"ACT_ID_ADD", {}};
const SemanticAction kNext{"ACT_ID_NAV_NEXT", {}};

TrajectoryRecord automation_record() {
  auto spec = load_fixture("automation_env.json");
  auto goal = GoalPredicate::terminal_pages(spec.meta.terminal_pages);
  SearchConfig cfg;
  cfg.max_depth = 12;
  auto g = enumerate(spec, DataCatalog{}, goal, cfg);
  auto t = extract_trajectory(g, g.goal_hits.front(), goal);
  return make_record("traj-0001", "airtable", ground_trajectory(t, spec, build_page_model(spec, 0)));
}

}  // namespace

TEST(Queries, SearchModeCarriesQuery) {
  auto spec = load_fixture("portal_skeleton.json");
  auto rec = portal_record(spec, {kNav, kSearch, kOpen1, kNext});
  auto qs = instantiate_queries(rec, spec, healthcare(), {InteractionMode::search});
  ASSERT_EQ(qs.size(), 1u);
  EXPECT_EQ(qs[0].mode, InteractionMode::search);
  EXPECT_EQ(qs[0].template_params, ordered_json({{"query", "laptop"}}));
  EXPECT_EQ(qs[0].id, "traj-0001-search");
  EXPECT_EQ(qs[0].trajectory_ref, "traj-0001");
  EXPECT_NE(qs[0].text.find("laptop"), std::string::npos);
}

TEST(Queries, SortModeFromAutomation) {
  auto spec = load_fixture("automation_env.json");
  auto qs = instantiate_queries(automation_record(), spec, DataCatalog{}, {InteractionMode::sort});
  ASSERT_EQ(qs.size(), 1u);
  EXPECT_EQ(qs[0].template_params, ordered_json({{"sort_key", "recent"}}));
}

TEST(Queries, ScrollAndCheckbox) {
  auto spec = load_fixture("portal_skeleton.json");
  auto rec = portal_record(spec, {kNav, kOpen3, kAdd, kNext});
  auto qs = instantiate_queries(rec, spec, healthcare(), {std::begin(kAllModes), std::end(kAllModes)});
  ASSERT_EQ(qs.size(), 2u);
  EXPECT_EQ(qs[0].mode, InteractionMode::scroll);
  EXPECT_EQ(qs[0].template_params["n"], 3);
  EXPECT_EQ(qs[0].template_params["item_id"], "prov_3");
  EXPECT_NE(qs[0].text.find("3rd"), std::string::npos) << qs[0].text;
  EXPECT_EQ(qs[1].mode, InteractionMode::checkbox);
  EXPECT_EQ(qs[1].template_params["value"], "video_visit");
}

TEST(Queries, NoTriggersGivesNothing) {
  auto spec = load_fixture("portal_skeleton.json");
  auto rec = portal_record(spec, {kNav, kOpen1, kNext});
  EXPECT_TRUE(instantiate_queries(rec, spec, healthcare(), {InteractionMode::search, InteractionMode::slider}).empty());
  EXPECT_THROW(instantiate_queries(rec, spec, healthcare(), {InteractionMode::search}, QueryFamily::screenshot_qa),
               UnsupportedFamily);
}

TEST(BfsJson, MatchesExpectedDocument) {
  auto spec = load_fixture("automation_env.json");
  auto doc = json::parse(export_bfs_json(automation_record(), spec));
  auto want = json::parse(read_text(fixture_path("automation_expected_bfs.json")));
  EXPECT_EQ(doc["trajectory"], want["trajectory"]);
  EXPECT_EQ(doc["trajectory"].size(), 11u);
  EXPECT_EQ(doc["trajectory"][0]["id"], "ACT_HOME_ACCEPT_COOKIES");
  EXPECT_EQ(export_bfs_json(automation_record(), spec), export_bfs_json(automation_record(), spec));
}

TEST(BfsJson, EmptyTrajectoryAndSubstitution) {
  auto spec = load_fixture("portal_skeleton.json");
  TrajectoryRecord empty;
  EXPECT_EQ(json::parse(export_bfs_json(empty, spec))["trajectory"], json::array());
  auto doc = json::parse(export_bfs_json(portal_record(spec, {kNav, kOpen1, kNext}), spec));
  EXPECT_EQ(doc["trajectory"][1]["gui_procedure"][1]["selector"], "#item-card-prov_1");
}

TEST(Dataset, SixLinesForFiveStepsAndOneQuery) {
  auto spec = load_fixture("portal_skeleton.json");
  auto rec = portal_record(spec, {kNav, kSortRating, kOpen1});
  ASSERT_EQ(rec.actions.size(), 3u);
  ASSERT_EQ(rec.steps.size(), 5u);
  auto qs = instantiate_queries(rec, spec, healthcare(), {InteractionMode::sort});
  ASSERT_EQ(qs.size(), 1u);
  auto text = export_dataset({rec}, qs);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
  EXPECT_EQ(export_dataset({}, {}), "");
}

TEST(Dataset, RoundTripIsByteIdentical) {
  auto spec = load_fixture("portal_skeleton.json");
  std::vector<TrajectoryRecord> recs{portal_record(spec, {kNav, kSearch, kOpen1, kNext}, "t1"),
                                     portal_record(spec, {kNav, kSortRating, kOpen3, kAdd, kNext}, "t2")};
  std::vector<QueryInstance> qs;
  for (const auto& r : recs)
    for (auto& q : instantiate_queries(r, spec, healthcare(), {std::begin(kAllModes), std::end(kAllModes)})) qs.push_back(q);
  auto text = export_dataset(recs, qs);
  auto in = ingest_dataset(text);
  EXPECT_TRUE(in.errors.empty());
  EXPECT_EQ(export_dataset(in.records, in.queries), text);
  EXPECT_EQ(build_manifest(in.records, in.queries), build_manifest(recs, qs));
}

TEST(Dataset, ExportErrors) {
  auto spec = load_fixture("portal_skeleton.json");
  auto rec = portal_record(spec, {kNav, kSearch});
  QueryInstance q;
  q.id = "q";
  q.trajectory_ref = "ghost";
  EXPECT_THROW(export_dataset({rec}, {q}), ExportError);
  TrajectoryRecord empty;
  empty.id = "e";
  EXPECT_THROW(export_dataset({empty}, {}), ExportError);
  rec.snapshots.pop_back();
  EXPECT_THROW(export_dataset({rec}, {}), ExportError);
}

TEST(Dataset, CorruptLinesReported) {
  auto spec = load_fixture("portal_skeleton.json");
  auto text = export_dataset({portal_record(spec, {kNav, kOpen1, kNext})}, {});
  text.insert(0, "not json\n");
  text += "{\"format_version\": 9}\n";
  auto in = ingest_dataset(text);
  ASSERT_EQ(in.errors.size(), 2u);
  EXPECT_EQ(in.errors[0].first, 1u);
  EXPECT_EQ(in.errors[1].first, 6u);
  EXPECT_EQ(in.records.size(), 1u);
}

TEST(Dedup, SmallestFinalKeyPerGoal) {
  auto spec = load_fixture("portal_skeleton.json");
  auto a = portal_record(spec, {kNav, kOpen3, kAdd}, "a");
  auto b = portal_record(spec, {kNav, kOpen1}, "b");
  auto out = dedup_parallel({a, b});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].id, a.final_key() < b.final_key() ? "a" : "b");
}

TEST(Manifest, SingleAutomationTrajectory) {
  auto spec = load_fixture("automation_env.json");
  auto rec = automation_record();
  auto qs = instantiate_queries(rec, spec, DataCatalog{}, {std::begin(kAllModes), std::end(kAllModes)});
  auto m = build_manifest({rec}, qs);
  EXPECT_EQ(m.trajectory_count, 1u);
  EXPECT_EQ(m.mean_semantic_actions, 11.0);
  EXPECT_EQ(m.total_grounded_steps, 15u);
  EXPECT_EQ(m.max_depth, 11u);
  EXPECT_EQ(m.query_count, qs.size());
  auto back = manifest_from_json(ordered_json::parse(manifest_to_json(m).dump()));
  EXPECT_EQ(back, m);
  back.query_count += 1;
  EXPECT_EQ(manifest_mismatches(back, m), std::vector<std::string>{"query_count"});
}

TEST(Manifest, EmptyIsZeros) {
  auto m = build_manifest({}, {});
  EXPECT_EQ(m.trajectory_count, 0u);
  EXPECT_EQ(m.mean_grounded_steps, 0.0);
  EXPECT_EQ(m.mode_counts.at("sort"), 0u);
}
