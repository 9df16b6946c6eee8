#pragma once

#include "lbms/engine.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lbms::ibn {

using VariableId = std::uint32_t;
using DependencyId = std::uint32_t;

/// Name-level reference to a state, `variable=state` in model text.
struct StateRef {
    std::string variable;
    std::string state;
    auto operator<=>(const StateRef &) const = default;
};

struct VariableDecl {
    std::string name;
    std::vector<std::string> states;
    bool operator==(const VariableDecl &) const = default;
};

struct ConditionalDecl {
    StateRef child;
    std::vector<StateRef> parents;
    IntervalProb prob;
    bool operator==(const ConditionalDecl &) const = default;
};

struct PriorDecl {
    StateRef state;
    IntervalProb prob;
    bool operator==(const PriorDecl &) const = default;
};

/// Declarative network content, independent of any engine session.
struct NetworkModel {
    std::vector<VariableDecl> variables;
    std::vector<ConditionalDecl> conditionals;
    std::vector<PriorDecl> priors;
    bool operator==(const NetworkModel &) const = default;
};

struct StateId {
    VariableId variable = 0;
    std::uint32_t index = 0;
    AtomId atom = 0;
    bool operator==(const StateId &) const = default;
};

struct Variable {
    VariableId id = 0;
    std::string name;
    std::vector<std::string> states;
    std::vector<AtomId> atoms;
    ClauseId exhaustivity = 0;
    std::uint64_t sigma_generation = 0;
    std::optional<ClauseId> sigma_clause;
};

struct ConditionalSpec {
    DependencyId id = 0;
    StateId child;
    std::vector<StateId> parents;
    IntervalProb prob;
    std::string label;
};

struct ConditionalResult {
    DependencyId id = 0;
    std::optional<ContradictionReport> contradiction;
};

/// Interval Chain Rule: bounds of (child & parents) and (~child & parents)
/// from the parent-state intervals and P(child | parents) = p.
std::pair<IntervalProb, IntervalProb> chain_rule_bounds(std::span<const IntervalProb> parents,
                                                        const IntervalProb &p);

/// A belief network whose variables, dependencies and priors are compiled
/// into clauses and consumers of one engine session.
///
/// Consumers capture `this`, so a Network is neither copyable nor movable.
class Network {
public:
    Network() = default;
    Network(const Network &) = delete;
    Network &operator=(const Network &) = delete;

    const Variable &define_variable(std::string name, std::vector<std::string> states);
    std::optional<ContradictionReport> set_prior(StateId state, const IntervalProb &p);
    std::optional<ContradictionReport> retract_prior(StateId state);
    ConditionalResult add_conditional(StateId child, std::vector<StateId> parents, const IntervalProb &p);

    /// Emits the two chain-rule clauses of a dependency if every parent state
    /// has left [0,1]. Returns false when it did not fire.
    bool chain_rule_expand(DependencyId dependency);
    void sigma_update(VariableId variable);

    IntervalProb query_state(StateId state) const;
    ExplanationTree explain_state(StateId state, Bound b) const;
    std::optional<ContradictionReport> check() const { return engine_.check_consistency(); }

    StateId state(std::string_view variable, std::string_view state) const;
    StateId state(const StateRef &ref) const { return state(ref.variable, ref.state); }
    std::optional<VariableId> find_variable(std::string_view name) const;
    const Variable &variable(VariableId v) const { return variables_.at(v); }
    const std::vector<Variable> &variables() const { return variables_; }
    const std::vector<ConditionalSpec> &dependencies() const { return dependencies_; }
    bool has_prior(StateId s) const { return engine_.node(s.atom).is_assumption; }
    bool is_root(VariableId v) const;
    std::string state_name(StateId s) const;

    /// Declares everything in the model: variables, then conditionals, then
    /// priors. Returns the first contradiction met.
    std::optional<ContradictionReport> apply(const NetworkModel &model);

    Engine &engine() { return engine_; }
    const Engine &engine() const { return engine_; }
    std::uint64_t expansions() const { return expansions_; }

private:
    bool reaches(VariableId from, VariableId to) const;
    bool assigned(AtomId atom) const;

    Engine engine_;
    std::vector<Variable> variables_;
    std::map<std::string, VariableId, std::less<>> variable_index_;
    std::vector<ConditionalSpec> dependencies_;
    std::map<std::pair<AtomId, std::vector<AtomId>>, DependencyId> dependency_index_;
    /// child variable -> parent variables
    std::vector<std::vector<VariableId>> parents_of_;
    std::uint64_t expansions_ = 0;
};

} // namespace lbms::ibn
