#include "lbms/network.hpp"

#include <algorithm>

namespace lbms::ibn {

std::pair<IntervalProb, IntervalProb> chain_rule_bounds(std::span<const IntervalProb> parents, const IntervalProb &p)
{
    double prod_lo = 1.0;
    double prod_hi = 1.0;
    for (const auto &iv : parents) {
        prod_lo *= iv.lo();
        prod_hi *= iv.hi();
    }
    return {IntervalProb(prod_lo * p.lo(), prod_hi * p.hi()),
            IntervalProb(prod_lo * (1.0 - p.hi()), prod_hi * (1.0 - p.lo()))};
}

const Variable &Network::define_variable(std::string name, std::vector<std::string> states)
{
    if (name.empty())
        throw Error("variable name must not be empty");
    if (variable_index_.contains(name))
        throw Error("variable '" + name + "' already defined");
    if (states.size() < 2)
        throw Error("variable '" + name + "' needs at least two states");
    for (std::size_t i = 0; i < states.size(); ++i)
        for (std::size_t j = i + 1; j < states.size(); ++j)
            if (states[i] == states[j])
                throw Error("variable '" + name + "' repeats state '" + states[i] + "'");

    auto id = static_cast<VariableId>(variables_.size());
    Variable v;
    v.id = id;
    v.name = name;
    v.states = std::move(states);
    for (const auto &s : v.states)
        v.atoms.push_back(engine_.add_atom(name + ":" + s));
    variables_.push_back(v);
    variable_index_.emplace(name, id);
    parents_of_.emplace_back();

    const IntervalProb certain = IntervalProb::point(1.0);
    std::vector<Literal> exhaustive;
    for (AtomId a : v.atoms)
        exhaustive.push_back(pos(a));
    auto ex = engine_.add_clause(Clause(exhaustive, certain), ClauseOrigin::structural(id, "exhaustive:" + name));
    variables_[id].exhaustivity = *ex.id;
    for (std::size_t i = 0; i < v.atoms.size(); ++i)
        for (std::size_t j = i + 1; j < v.atoms.size(); ++j)
            engine_.add_clause(Clause({neg(v.atoms[i]), neg(v.atoms[j])}, certain),
                               ClauseOrigin::structural(id, "exclusive:" + name));

    for (AtomId a : v.atoms)
        engine_.register_consumer(a, [this, id](Engine &, AtomId, IntervalProb) { sigma_update(id); });
    return variables_[id];
}

bool Network::assigned(AtomId a) const
{
    // A state is assigned by its prior, by a dependency it is the child of,
    // or by a user clause; the variable's own structure and sigma clauses
    // only restate what its siblings say.
    if (engine_.node(a).is_assumption)
        return true;
    for (ClauseId c : engine_.clauses_of(a)) {
        const auto &o = engine_.clause(c).origin;
        if (o.kind == ClauseOrigin::Kind::UserAssertion)
            return true;
        if (o.kind == ClauseOrigin::Kind::Generated && dependencies_.at(o.owner).child.atom == a)
            return true;
    }
    return false;
}

void Network::sigma_update(VariableId vid)
{
    auto &v = variables_.at(vid);
    std::vector<AtomId> known;
    std::vector<AtomId> unknown;
    double sum_lo = 0.0;
    double sum_hi = 0.0;
    for (AtomId a : v.atoms) {
        const auto &n = engine_.node(a);
        if ((n.lo > 0.0 || n.hi < 1.0) && assigned(a)) {
            known.push_back(a);
            sum_lo += n.lo;
            sum_hi += n.hi;
        } else {
            unknown.push_back(a);
        }
    }
    if (sum_lo > 1.0 + kCompareEpsilon) {
        // The known states alone already exceed certainty.
        std::vector<std::pair<AtomId, Bound>> traced;
        for (AtomId a : known)
            traced.emplace_back(a, Bound::Lower);
        engine_.raise_contradiction(v.exhaustivity, traced);
        return;
    }
    // At most one sigma clause per variable is live: the one over the
    // current unknown states.
    auto live_sigma = [&]() -> const ClauseRecord * {
        if (!v.sigma_clause)
            return nullptr;
        const auto &r = engine_.clause(*v.sigma_clause);
        return r.live ? &r : nullptr;
    };
    if (known.empty() || unknown.empty()) {
        if (live_sigma())
            engine_.retire_clause(*v.sigma_clause);
        v.sigma_clause.reset();
        return;
    }
    std::vector<Literal> lits;
    for (AtomId a : unknown)
        lits.push_back(pos(a));
    Clause clause(lits, IntervalProb(std::max(0.0, 1.0 - sum_hi), std::max(0.0, 1.0 - sum_lo)));
    if (const auto *r = live_sigma(); r && r->clause.literals() != clause.literals())
        engine_.retire_clause(r->id);
    auto added = engine_.add_clause(clause, ClauseOrigin::sigma(vid, ++v.sigma_generation, known, "sigma:" + v.name));
    v.sigma_clause = added.id;
}

bool Network::is_root(VariableId v) const
{
    return parents_of_.at(v).empty();
}

bool Network::reaches(VariableId from, VariableId to) const
{
    // Walks child -> parent edges.
    std::vector<VariableId> stack{from};
    std::vector<char> seen(variables_.size(), 0);
    while (!stack.empty()) {
        VariableId v = stack.back();
        stack.pop_back();
        if (v == to)
            return true;
        if (seen[v])
            continue;
        seen[v] = 1;
        for (VariableId p : parents_of_[v])
            stack.push_back(p);
    }
    return false;
}

ConditionalResult Network::add_conditional(StateId child, std::vector<StateId> parents, const IntervalProb &p)
{
    if (parents.empty())
        throw Error("a conditional needs at least one parent state; use a prior for root states");
    std::sort(parents.begin(), parents.end(), [](const StateId &a, const StateId &b) { return a.atom < b.atom; });
    for (std::size_t i = 0; i < parents.size(); ++i) {
        if (parents[i].variable == child.variable)
            throw Error("conditional of '" + state_name(child) + "' lists its own variable as a parent");
        for (std::size_t j = i + 1; j < parents.size(); ++j)
            if (parents[i].variable == parents[j].variable)
                throw Error("conditional of '" + state_name(child) + "' has two states of variable '" +
                            variables_[parents[i].variable].name + "'");
    }
    for (AtomId a : variables_.at(child.variable).atoms)
        if (engine_.node(a).is_assumption)
            throw Error("variable '" + variables_[child.variable].name +
                        "' carries a prior and cannot become a child");

    std::vector<AtomId> parent_atoms;
    for (const auto &ps : parents)
        parent_atoms.push_back(ps.atom);
    auto key = std::make_pair(child.atom, parent_atoms);
    if (auto it = dependency_index_.find(key); it != dependency_index_.end()) {
        auto &spec = dependencies_[it->second];
        auto merged = intersect(spec.prob, p);
        if (!merged)
            throw EmptyInterval(std::max(spec.prob.lo(), p.lo()), std::min(spec.prob.hi(), p.hi()));
        spec.prob = *merged;
        chain_rule_expand(spec.id);
        return {spec.id, engine_.propagate()};
    }

    auto &edges = parents_of_[child.variable];
    for (const auto &ps : parents) {
        if (reaches(ps.variable, child.variable))
            throw Error("conditional of '" + state_name(child) + "' would create a cycle through '" +
                        variables_[ps.variable].name + "'");
    }
    for (const auto &ps : parents)
        if (std::find(edges.begin(), edges.end(), ps.variable) == edges.end())
            edges.push_back(ps.variable);

    auto id = static_cast<DependencyId>(dependencies_.size());
    dependencies_.push_back(ConditionalSpec{id, child, parents, p, "Cond" + std::to_string(id + 1)});
    dependency_index_.emplace(std::move(key), id);
    for (const auto &ps : parents)
        engine_.register_consumer(ps.atom, [this, id](Engine &, AtomId, IntervalProb) { chain_rule_expand(id); });
    return {id, engine_.propagate()};
}

bool Network::chain_rule_expand(DependencyId dependency)
{
    const auto &spec = dependencies_.at(dependency);
    std::vector<IntervalProb> parent_intervals;
    for (const auto &ps : spec.parents) {
        const auto &n = engine_.node(ps.atom);
        if (n.crossed() || !(n.lo > 0.0 || n.hi < 1.0))
            return false;
        parent_intervals.push_back(n.interval());
    }
    auto [with_child, without_child] = chain_rule_bounds(parent_intervals, spec.prob);

    // Every state of each parent variable is mentioned, so all conjunctions
    // of one dependency share a table.
    std::vector<Literal> rest;
    std::vector<AtomId> triggers;
    for (const auto &ps : spec.parents) {
        for (AtomId a : variables_[ps.variable].atoms)
            rest.push_back(a == ps.atom ? pos(a) : neg(a));
        triggers.push_back(ps.atom);
    }
    std::vector<Literal> conj = rest;
    conj.push_back(pos(spec.child.atom));
    auto label = spec.label;
    ++expansions_;
    engine_.add_clause(conjunction_to_clause(conj, with_child), ClauseOrigin::generated(dependency, triggers, label));
    conj.back() = neg(spec.child.atom);
    engine_.add_clause(conjunction_to_clause(conj, without_child),
                       ClauseOrigin::generated(dependency, triggers, label));
    return true;
}

std::optional<ContradictionReport> Network::set_prior(StateId s, const IntervalProb &p)
{
    if (!is_root(s.variable))
        throw Error("prior on '" + state_name(s) + "': only root variables take priors");
    return engine_.assume(pos(s.atom), p);
}

std::optional<ContradictionReport> Network::retract_prior(StateId s)
{
    if (!has_prior(s))
        throw Error("'" + state_name(s) + "' has no prior to retract");
    return engine_.retract(pos(s.atom));
}

IntervalProb Network::query_state(StateId s) const
{
    return engine_.interval(s.atom);
}

ExplanationTree Network::explain_state(StateId s, Bound b) const
{
    return engine_.explain(pos(s.atom), b);
}

std::optional<VariableId> Network::find_variable(std::string_view name) const
{
    auto it = variable_index_.find(name);
    if (it == variable_index_.end())
        return std::nullopt;
    return it->second;
}

StateId Network::state(std::string_view variable, std::string_view state) const
{
    auto v = find_variable(variable);
    if (!v)
        throw Error("unknown variable '" + std::string(variable) + "'");
    const auto &var = variables_[*v];
    for (std::uint32_t i = 0; i < var.states.size(); ++i)
        if (var.states[i] == state)
            return StateId{*v, i, var.atoms[i]};
    throw Error("variable '" + var.name + "' has no state '" + std::string(state) + "'");
}

std::string Network::state_name(StateId s) const
{
    const auto &v = variables_.at(s.variable);
    return v.name + ":" + v.states.at(s.index);
}

std::optional<ContradictionReport> Network::apply(const NetworkModel &model)
{
    std::optional<ContradictionReport> first;
    auto keep = [&first](std::optional<ContradictionReport> r) {
        if (r && !first)
            first = std::move(r);
    };
    for (const auto &v : model.variables)
        define_variable(v.name, v.states);
    for (const auto &c : model.conditionals) {
        std::vector<StateId> parents;
        for (const auto &p : c.parents)
            parents.push_back(state(p));
        keep(add_conditional(state(c.child), std::move(parents), c.prob).contradiction);
    }
    for (const auto &p : model.priors)
        keep(set_prior(state(p.state), p.prob));
    return first;
}

} // namespace lbms::ibn
