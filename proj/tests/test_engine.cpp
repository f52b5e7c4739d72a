#include <gtest/gtest.h>

#include "support.hpp"

using namespace webfsm;
using testsupport::load_fixture;

namespace {

Value rec(const char* text) { return value_from_json(json::parse(text)); }

Condition cond(const char* text) { return detail::parse_condition(json::parse(text), "t"); }
Effect eff(const char* text) { return detail::parse_effect(json::parse(text), "t"); }

State at(const FsmSpec& spec, const std::string& page) { return State{page, init_signature(spec.page(page))}; }

}  // namespace

TEST(Preconditions, SatisfiedAndVacuous) {
  auto sig = rec(R"({"sig_field_1": "some_value"})");
  std::vector<Condition> cs{cond(R"({"path": "$.sig_field_1", "op": "==", "value": "some_value"})")};
  EXPECT_TRUE(eval_conditions(sig, cs));
  EXPECT_TRUE(eval_conditions(sig, {}));
  cs.push_back(cond(R"({"path": "$.sig_field_1", "op": "!=", "value": "some_value"})"));
  EXPECT_FALSE(eval_conditions(sig, cs));
}

TEST(Preconditions, MissingPathIsAnError) {
  std::vector<Condition> cs{cond(R"({"path": "$.missing.field", "op": "==", "value": 1})")};
  EXPECT_THROW(eval_conditions(rec(R"({"a": 1})"), cs), EvalError);
}

TEST(Preconditions, Operators) {
  auto sig = rec(R"({"n": 3, "tags": ["a", "b"], "mode": "x"})");
  auto check = [&](const char* c) { return eval_conditions(sig, std::vector<Condition>{cond(c)}); };
  EXPECT_TRUE(check(R"({"path": "$.n", "op": "<", "value": 4})"));
  EXPECT_TRUE(check(R"({"path": "$.n", "op": "<=", "value": 3})"));
  EXPECT_FALSE(check(R"({"path": "$.n", "op": ">", "value": 3})"));
  EXPECT_TRUE(check(R"({"path": "$.n", "op": ">=", "value": 3})"));
  EXPECT_TRUE(check(R"({"path": "$.tags", "op": "contains", "value": "b"})"));
  EXPECT_FALSE(check(R"({"path": "$.tags", "op": "contains", "value": "c"})"));
  EXPECT_TRUE(check(R"({"path": "$.mode", "op": "in", "value": ["x", "y"]})"));
}

TEST(Effects, SearchWithPaginationReset) {
  auto sig = rec(R"({"query": "", "pagination": {"page_index": 3}})");
  std::vector<Effect> es{eff(R"({"path": "$.query", "op": "assign", "value": "laptop"})"),
                         eff(R"({"path": "$.pagination.page_index", "op": "assign", "value": 1})")};
  auto out = apply_effects(sig, es, {});
  EXPECT_EQ(canonical_serialize(out), R"({"pagination":{"page_index":1},"query":"laptop"})");
}

TEST(Effects, EmptyListIsIdentity) {
  auto sig = rec(R"({"a": [1, 2], "b": {"c": null}})");
  EXPECT_EQ(canonical_serialize(apply_effects(sig, {}, {})), canonical_serialize(sig));
}

TEST(Effects, ToggleInvolution) {
  auto sig = rec(R"({"open": false})");
  std::vector<Effect> es{eff(R"({"path": "$.open", "op": "toggle"})")};
  auto once = apply_effects(sig, es, {});
  EXPECT_EQ(once, rec(R"({"open": true})"));
  EXPECT_EQ(apply_effects(once, es, {}), sig);
}

TEST(Effects, TypeErrorsLeaveNothingApplied) {
  auto sig = rec(R"({"s": "x", "n": 1})");
  std::vector<Effect> inc{eff(R"({"path": "$.n", "op": "increment"})"), eff(R"({"path": "$.s", "op": "increment"})")};
  EXPECT_THROW(apply_effects(sig, inc, {}), EvalError);
  std::vector<Effect> ins{eff(R"({"path": "$.s", "op": "set_insert", "value": "y"})")};
  EXPECT_THROW(apply_effects(sig, ins, {}), EvalError);
  std::vector<Effect> unbound{eff(R"({"path": "$.s", "op": "assign", "value": "<Q>"})")};
  EXPECT_THROW(apply_effects(sig, unbound, {}), EvalError);
  EXPECT_EQ(apply_effects(sig, unbound, {{"Q", Value("z")}}), rec(R"({"s": "z", "n": 1})"));
}

TEST(Effects, SetOpsAndEnumSwitch) {
  auto sig = rec(R"({"tags": ["a"], "mode": "x"})");
  auto out = apply_effects(sig,
                           std::vector<Effect>{eff(R"({"path": "$.tags", "op": "set_insert", "value": "b"})"),
                                               eff(R"({"path": "$.tags", "op": "set_delete", "value": "a"})"),
                                               eff(R"({"path": "$.mode", "op": "enum_switch", "value": "y", "options": ["x", "y"]})")},
                           {});
  EXPECT_EQ(out, rec(R"({"tags": ["b"], "mode": "y"})"));
  std::vector<Effect> bad{eff(R"({"path": "$.mode", "op": "enum_switch", "value": "q", "options": ["x", "y"]})")};
  EXPECT_THROW(apply_effects(sig, bad, {}), EvalError);
}

TEST(InitSignature, ListDefaults) {
  auto spec = load_fixture("portal_skeleton.json");
  auto s = init_signature(spec.page("LIST"));
  EXPECT_EQ(canonical_serialize(s), R"({"filters":{},"pagination":{"page_index":1},"query":"","sort_by":"relevance"})");
  EXPECT_EQ(canonical_serialize(init_signature(spec.page("SUCCESS_1"))), "{}");
  EXPECT_EQ(canonical_serialize(init_signature(spec.page("LIST"))), canonical_serialize(s));
}

TEST(CarryMerge, SameNamedTopLevelFieldsWin) {
  auto target = rec(R"({"selected_item_id": null, "detail_field_1": "d"})");
  auto source = rec(R"({"selected_item_id": "item_7", "query": "x"})");
  EXPECT_EQ(carry_merge(target, source), rec(R"({"selected_item_id": "item_7", "detail_field_1": "d"})"));
  EXPECT_EQ(carry_merge(target, rec(R"({"q": 1})")), target);
  EXPECT_EQ(carry_merge(target, target), target);
}

TEST(Step, InPageAction) {
  auto spec = load_fixture("portal_skeleton.json");
  State home{"HOME", rec(R"({"sig_field_1": "some_value", "sig_field_2": "default_value_2", "pagination": {"page_index": 1}})")};
  auto r = step(spec, home, spec.action("ACT_ID_1"), {});
  EXPECT_FALSE(r.invalid);
  EXPECT_EQ(r.state.page, "HOME");
  EXPECT_EQ(r.state.signature.as_record().at("sig_field_2"), Value("new_value"));
}

TEST(Step, NavigationCarriesStagedField) {
  auto spec = load_fixture("portal_skeleton.json");
  auto r = step(spec, at(spec, "LIST"), spec.action("ACT_ID_OPEN_ITEM"), {{"ITEM_ID_PLACEHOLDER", Value("item_7")}});
  EXPECT_FALSE(r.invalid);
  EXPECT_EQ(r.state.page, "DETAIL");
  EXPECT_EQ(r.state.signature, rec(R"({"selected_item_id": "item_7", "extras": [], "notes_open": false})"));
}

TEST(Step, FailedPreconditionIsNoOp) {
  auto spec = load_fixture("portal_skeleton.json");
  auto home = at(spec, "HOME");
  auto r = step(spec, home, spec.action("ACT_ID_1"), {});
  EXPECT_TRUE(r.invalid);
  EXPECT_EQ(canonical_serialize(r.state.signature), canonical_serialize(home.signature));
  EXPECT_EQ(r.state.page, "HOME");
}

TEST(StateKeys, EqualityAndPageSensitivity) {
  auto spec = load_fixture("portal_skeleton.json");
  EXPECT_EQ(state_key(at(spec, "LIST")), state_key(at(spec, "LIST")));
  State a{"A", rec(R"({"x": 1})")}, b{"B", rec(R"({"x": 1})")};
  EXPECT_NE(state_key(a), state_key(b));
  EXPECT_EQ(state_key(a).sig_hash, state_key(b).sig_hash);
}

TEST(StateKeys, ListDefaultGolden) {
  auto spec = load_fixture("portal_skeleton.json");
  auto k = state_key(at(spec, "LIST"));
  EXPECT_EQ(k.sig_hash, testsupport::fnv1a(R"({"filters":{},"pagination":{"page_index":1},"query":"","sort_by":"relevance"})"));
  EXPECT_EQ(k.to_string(), "LIST#91b5f2fd505df38e");
}

TEST(Substitution, TextAndValues) {
  ParamBinding b{{"ITEM_ID_PLACEHOLDER", Value("prov_1")}, {"N", Value(3)}};
  EXPECT_EQ(substitute_text("#item-card-<ITEM_ID_PLACEHOLDER>", b), "#item-card-prov_1");
  EXPECT_EQ(substitute_text("page <N>", b), "page 3");
  EXPECT_EQ(substitute_value(json("<N>"), b), Value(3));
  EXPECT_THROW(substitute_text("<UNBOUND>", b), EvalError);
}

TEST(PlaceholderPlan, SortOptionsBindToUiElements) {
  auto spec = load_fixture("portal_skeleton.json");
  auto plan = placeholder_plan(spec.action("ACT_ID_SORT"));
  EXPECT_EQ(plan.option_values, std::vector<std::string>{"SORT_OPTION"});
  ASSERT_TRUE(plan.option_selector);
  EXPECT_EQ(*plan.option_selector, "SORT_OPTION_SELECTOR");
  EXPECT_EQ(plan.option_step, std::optional<std::size_t>(1));
  EXPECT_TRUE(plan.unbindable.empty());
  auto open = placeholder_plan(spec.action("ACT_ID_OPEN_ITEM"));
  ASSERT_EQ(open.params.size(), 1u);
  EXPECT_EQ(open.params[0].placeholder, "ITEM_ID_PLACEHOLDER");
  EXPECT_EQ(open.params[0].param, "item_id");
}
