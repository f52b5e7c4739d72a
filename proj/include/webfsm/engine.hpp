// Deterministic transition semantics over (page, signature) states.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "webfsm/path.hpp"
#include "webfsm/spec.hpp"
#include "webfsm/value.hpp"

namespace webfsm {

struct State {
  std::string page;
  Value signature = Value::empty_record();

  friend bool operator==(const State&, const State&) = default;
};

/// (page, 64-bit digest of the canonical signature bytes).
struct StateKey {
  std::string page;
  std::uint64_t sig_hash = 0;

  friend bool operator==(const StateKey&, const StateKey&) = default;
  friend auto operator<=>(const StateKey&, const StateKey&) = default;

  std::string to_string() const { return page + "#" + hex64(sig_hash); }
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const {
    return std::hash<std::string>{}(k.page) ^ static_cast<std::size_t>(k.sig_hash * 0x9e3779b97f4a7c15ULL);
  }
};

/// placeholder name (without angle brackets) -> literal
using ParamBinding = std::map<std::string, Value>;

inline json binding_to_json(const ParamBinding& b) {
  json j = json::object();
  for (const auto& [k, v] : b) j[k] = value_to_json(v);
  return j;
}

inline ParamBinding binding_from_json(const json& j) {
  ParamBinding b;
  for (auto it = j.begin(); it != j.end(); ++it) b.emplace(it.key(), value_from_json(it.value()));
  return b;
}

inline json state_to_json(const State& s) { return {{"page", s.page}, {"signature", value_to_json(s.signature)}}; }

inline State state_from_json(const json& j) {
  return State{j.at("page").get<std::string>(), value_from_json(j.at("signature"))};
}

inline StateKey state_key(const State& s) { return StateKey{s.page, digest64(canonical_serialize(s.signature))}; }

// ---------------------------------------------------------------------------
// Placeholder substitution

inline std::string literal_text(const Value& v) {
  if (v.is_string()) return v.as_string();
  return canonical_serialize(v);
}

/// Replaces every `<NAME>` token in free text with its bound literal.
inline std::string substitute_text(const std::string& text, const ParamBinding& binding) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find('<', pos);
    if (open == std::string::npos) break;
    auto close = text.find('>', open + 1);
    if (close == std::string::npos) break;
    std::string inner = text.substr(open + 1, close - open - 1);
    if (inner.empty() || inner.find('<') != std::string::npos) {
      out.append(text, pos, open + 1 - pos);
      pos = open + 1;
      continue;
    }
    auto it = binding.find(inner);
    if (it == binding.end()) throw EvalError("unbound placeholder <" + inner + ">");
    out.append(text, pos, open - pos);
    out += literal_text(it->second);
    pos = close + 1;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

/// A value that is exactly one placeholder takes the bound literal with its
/// type; placeholders embedded in longer strings are interpolated. Nested
/// positions are left untouched.
inline Value substitute_value(const json& raw, const ParamBinding& binding) {
  if (raw.is_string()) {
    const auto& s = raw.get_ref<const std::string&>();
    if (is_placeholder(s)) {
      auto it = binding.find(placeholder_name(s));
      if (it == binding.end()) throw EvalError("unbound placeholder " + s);
      return it->second;
    }
    if (contains_placeholder(s)) return Value(substitute_text(s, binding));
  }
  return value_from_json(raw);
}

/// How each placeholder of an action gets its value. Placeholders named in
/// `params` bind from the catalog; any other placeholder binds from the
/// options of the action's dropdown (`ui_elements`): the dropdown step's own
/// selector placeholder takes the chosen option's selector, every other one
/// takes the option's value.
struct PlaceholderPlan {
  struct ParamSlot {
    std::string placeholder;
    std::string param;
  };
  std::vector<ParamSlot> params;                 // params declaration order
  std::vector<std::string> option_values;       // bound to option value
  std::optional<std::string> option_selector;   // bound to option selector
  std::optional<std::size_t> option_step;       // index into gui_procedure
  std::vector<std::string> unbindable;          // no source available
};

inline PlaceholderPlan placeholder_plan(const ActionSpec& action) {
  PlaceholderPlan plan;
  std::vector<std::string> param_tokens;
  for (auto it = action.params.begin(); it != action.params.end(); ++it) {
    if (!it.value().is_string()) continue;
    const auto& s = it.value().get_ref<const std::string&>();
    if (!is_placeholder(s)) continue;
    plan.params.push_back({placeholder_name(s), it.key()});
    param_tokens.push_back(placeholder_name(s));
  }

  for (std::size_t i = 0; i < action.gui_procedure.size(); ++i) {
    const auto& st = action.gui_procedure[i];
    if (!st.ui_elements) continue;
    if (!plan.option_step || (st.selector && is_placeholder(*st.selector) &&
                              !(action.gui_procedure[*plan.option_step].selector &&
                                is_placeholder(*action.gui_procedure[*plan.option_step].selector))))
      plan.option_step = i;
  }
  if (plan.option_step) {
    const auto& st = action.gui_procedure[*plan.option_step];
    if (st.selector && is_placeholder(*st.selector)) {
      auto name = placeholder_name(*st.selector);
      if (std::find(param_tokens.begin(), param_tokens.end(), name) == param_tokens.end()) plan.option_selector = name;
    }
  }

  std::vector<std::string> seen;
  auto visit = [&](const std::string& name) {
    if (std::find(seen.begin(), seen.end(), name) != seen.end()) return;
    seen.push_back(name);
    if (std::find(param_tokens.begin(), param_tokens.end(), name) != param_tokens.end()) return;
    if (plan.option_selector && *plan.option_selector == name) return;
    if (plan.option_step)
      plan.option_values.push_back(name);
    else
      plan.unbindable.push_back(name);
  };
  for (const auto& e : action.effects) {
    std::vector<std::pair<std::string, int>> found;
    collect_json_placeholders(e.value, 0, found);
    for (const auto& [n, depth] : found) visit(n);
  }
  for (const auto& st : action.gui_procedure) {
    for (const auto* field : {&st.selector, &st.to_selector, &st.text, &st.value})
      if (*field)
        for (auto& n : placeholders_in(**field)) visit(n);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Preconditions

inline bool eval_condition(const Value& signature, const Condition& c) {
  auto segs = split_path(c.path);
  if (!segs) throw EvalError("malformed condition path '" + c.path + "'");
  const Value* lhs = resolve_path(signature, *segs);
  if (!lhs) throw EvalError("unresolvable path '" + c.path + "'");
  Value rhs = value_from_json(c.value);

  auto ordered = [&](auto cmp) {
    if (lhs->is_number() && rhs.is_number()) return cmp(compare_literals(*lhs, rhs));
    if (lhs->is_string() && rhs.is_string()) return cmp(compare_literals(*lhs, rhs));
    throw EvalError("ordering comparison on incompatible types at '" + c.path + "'");
  };

  switch (c.op) {
    case CondOp::eq: return *lhs == rhs;
    case CondOp::ne: return *lhs != rhs;
    case CondOp::lt: return ordered([](int r) { return r < 0; });
    case CondOp::le: return ordered([](int r) { return r <= 0; });
    case CondOp::gt: return ordered([](int r) { return r > 0; });
    case CondOp::ge: return ordered([](int r) { return r >= 0; });
    case CondOp::in: {
      if (!rhs.is_set()) throw EvalError("'in' requires an array value at '" + c.path + "'");
      if (!lhs->is_literal()) return false;
      const auto& m = rhs.as_set();
      return std::find(m.begin(), m.end(), *lhs) != m.end();
    }
    case CondOp::contains: {
      if (lhs->is_set()) {
        const auto& m = lhs->as_set();
        return std::find(m.begin(), m.end(), rhs) != m.end();
      }
      if (lhs->is_string() && rhs.is_string()) return lhs->as_string().find(rhs.as_string()) != std::string::npos;
      if (lhs->is_record() && rhs.is_string()) return lhs->as_record().count(rhs.as_string()) > 0;
      throw EvalError("'contains' on incompatible types at '" + c.path + "'");
    }
  }
  return false;
}

/// Conjunction over the signature; an empty list holds vacuously.
inline bool eval_conditions(const Value& signature, std::span<const Condition> conditions) {
  for (const auto& c : conditions)
    if (!eval_condition(signature, c)) return false;
  return true;
}

inline bool eval_preconditions(const State& state, const ActionSpec& action) {
  if (action.from != state.page)
    throw EvalError("action '" + action.id + "' belongs to page '" + action.from + "', state is on '" + state.page + "'");
  return eval_conditions(state.signature, action.preconditions);
}

// ---------------------------------------------------------------------------
// Effects

namespace detail {

inline void apply_effect(Value& sig, const Effect& e, const ParamBinding& binding) {
  auto segs = split_path(e.path);
  if (!segs) throw EvalError("malformed effect path '" + e.path + "'");
  std::vector<std::string> parent_segs(segs->begin(), segs->end() - 1);
  Value* parent = resolve_path_mut(sig, parent_segs);
  if (!parent || !parent->is_record()) throw EvalError("unresolvable path '" + e.path + "'");
  auto& rec = parent->as_record();
  auto it = rec.find(segs->back());
  if (it == rec.end()) {
    // Nested records may gain a key by assignment (open maps such as filters);
    // top-level fields are fixed by the page defaults.
    if (e.op == EffectOp::assign && segs->size() >= 2) {
      rec.emplace(segs->back(), substitute_value(e.value, binding));
      return;
    }
    throw EvalError("unresolvable path '" + e.path + "'");
  }
  Value& target = it->second;

  switch (e.op) {
    case EffectOp::assign: target = substitute_value(e.value, binding); break;
    case EffectOp::increment:
    case EffectOp::decrement:
      if (!target.is_number()) throw EvalError(std::string(to_string(e.op)) + " on non-number at '" + e.path + "'");
      target = Value(target.as_number() + (e.op == EffectOp::increment ? 1.0 : -1.0));
      break;
    case EffectOp::toggle:
      if (!target.is_bool()) throw EvalError("toggle on non-boolean at '" + e.path + "'");
      target = Value(!target.as_bool());
      break;
    case EffectOp::enum_switch: {
      Value next = substitute_value(e.value, binding);
      if (!next.is_literal()) throw EvalError("enum_switch requires a literal at '" + e.path + "'");
      if (e.options) {
        bool member = false;
        for (const auto& o : *e.options)
          if (value_from_json(o) == next) member = true;
        if (!member) throw EvalError("enum_switch value " + describe(next) + " not in declared options at '" + e.path + "'");
      }
      target = std::move(next);
      break;
    }
    case EffectOp::set_insert:
    case EffectOp::set_delete: {
      if (!target.is_set()) throw EvalError(std::string(to_string(e.op)) + " on non-set at '" + e.path + "'");
      Value member = substitute_value(e.value, binding);
      if (e.op == EffectOp::set_insert)
        target.set_insert(member);
      else
        target.set_erase(member);
      break;
    }
  }
}

}  // namespace detail

/// Returns a new signature with exactly the declared paths updated. Either
/// every effect applies or an EvalError is thrown and nothing changes.
inline Value apply_effects(const Value& signature, std::span<const Effect> effects, const ParamBinding& binding) {
  Value out = signature;
  for (const auto& e : effects) detail::apply_effect(out, e, binding);
  return out;
}

// ---------------------------------------------------------------------------
// Navigation

inline Value init_signature(const PageSpec& page) { return page.signature_defaults; }

/// Target field set; same-named top-level fields take the source's value.
inline Value carry_merge(const Value& target_defaults, const Value& source_signature) {
  if (!target_defaults.is_record() || !source_signature.is_record())
    throw EvalError("carry merge requires record signatures");
  Value out = target_defaults;
  const auto& src = source_signature.as_record();
  for (auto& [name, field] : out.as_record()) {
    auto it = src.find(name);
    if (it != src.end()) field = it->second;
  }
  return out;
}

struct StepResult {
  State state;
  bool invalid = false;  // preconditions failed; state is unchanged
};

/// Enum domains implied by the action's ui_elements blocks, used when an
/// enum_switch effect declares no options of its own.
inline std::vector<Effect> effective_effects(const ActionSpec& action) {
  std::vector<Effect> out = action.effects;
  std::optional<std::vector<json>> domain;
  for (const auto& s : action.gui_procedure)
    if (s.ui_elements && !domain) {
      domain.emplace();
      for (const auto& o : s.ui_elements->options) domain->push_back(o.value);
    }
  if (domain)
    for (auto& e : out)
      if (e.op == EffectOp::enum_switch && !e.options) e.options = domain;
  return out;
}

/// T(s, a). A failed precondition is a no-op flagged invalid. Navigation
/// applies effects first, over the source signature extended with any
/// target-only fields (so an action may stage a value such as
/// selected_item_id for the next page), then initializes the target page and
/// carries same-named fields over.
inline StepResult step(const FsmSpec& spec, const State& state, const ActionSpec& action, const ParamBinding& binding) {
  if (!eval_preconditions(state, action)) return StepResult{state, true};
  auto effects = effective_effects(action);
  if (!action.is_navigation) return StepResult{State{state.page, apply_effects(state.signature, effects, binding)}, false};

  const PageSpec& target = spec.page(*action.to_page_id);
  Value staged = state.signature;
  if (!staged.is_record()) throw EvalError("signature of page '" + state.page + "' is not a record");
  const Value target_defaults = init_signature(target);
  if (!target_defaults.is_record()) throw EvalError("signature of page '" + target.id + "' is not a record");
  for (const auto& [name, field] : target_defaults.as_record()) staged.as_record().try_emplace(name, field);
  Value after = apply_effects(staged, effects, binding);
  return StepResult{State{target.id, carry_merge(target_defaults, after)}, false};
}

inline State initial_state(const FsmSpec& spec) {
  return State{spec.meta.initial_page_id, init_signature(spec.page(spec.meta.initial_page_id))};
}

}  // namespace webfsm
