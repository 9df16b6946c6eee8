#include "lbms/network.hpp"
#include "lbms/oracle.hpp"

#include <doctest.h>

#include <functional>
#include <random>

using namespace lbms;
using namespace lbms::ibn;
using doctest::Approx;

namespace {

std::size_t count_origin(const Engine &e, ClauseOrigin::Kind kind)
{
    std::size_t n = 0;
    for (const auto *r : e.clauses())
        n += r->origin.kind == kind;
    return n;
}

const ClauseRecord *find_by_text(const Engine &e, std::string_view text)
{
    for (const auto *r : e.clauses())
        if (e.clause_text(r->clause) == text)
            return r;
    return nullptr;
}

/// fire and smoke with P(smoke=yes | fire=yes) = 0.9 and fire=yes in [0.7, 0.9].
void fire_and_smoke(Network &net)
{
    net.define_variable("fire", {"yes", "no"});
    net.define_variable("smoke", {"yes", "no"});
    net.add_conditional(net.state("smoke", "yes"), {net.state("fire", "yes")}, IntervalProb::point(0.9));
    net.set_prior(net.state("fire", "yes"), {0.7, 0.9});
}

bool path_repeats(const ExplanationTree &t, std::vector<std::pair<AtomId, Bound>> &path)
{
    for (const auto &p : path)
        if (p.first == t.literal.atom && p.second == t.bound && t.support.kind != SupportKind::Assumption)
            return true;
    path.emplace_back(t.literal.atom, t.bound);
    for (const auto &a : t.antecedents)
        if (path_repeats(a, path))
            return true;
    path.pop_back();
    return false;
}

bool reaches_assumption(const ExplanationTree &t, AtomId atom)
{
    if (t.support.kind == SupportKind::Assumption && t.literal.atom == atom)
        return true;
    for (const auto &a : t.antecedents)
        if (reaches_assumption(a, atom))
            return true;
    return false;
}

} // namespace

TEST_CASE("variables install their structural clauses once")
{
    Network net;
    net.define_variable("fire", {"yes", "no"});
    CHECK(count_origin(net.engine(), ClauseOrigin::Kind::Structural) == 2);
    net.define_variable("colour", {"red", "green", "blue"});
    CHECK(count_origin(net.engine(), ClauseOrigin::Kind::Structural) == 2 + 4);
    for (const auto &v : net.variables())
        for (AtomId a : v.atoms)
            CHECK(net.engine().interval(a).is_vacuous());

    // The LP agrees that structure alone fixes nothing.
    oracle::Entailment lp(net.engine().atom_count(), oracle::constraints_of(net.engine()));
    for (AtomId a = 0; a < net.engine().atom_count(); ++a)
        CHECK(lp.tight_bounds(pos(a))->is_vacuous());

    CHECK_THROWS_AS(net.define_variable("fire", {"a", "b"}), Error);
    CHECK_THROWS_AS(net.define_variable("x", {"a"}), Error);
    CHECK_THROWS_AS(net.define_variable("y", {"a", "a"}), Error);
    CHECK_THROWS_AS(net.state("fire", "maybe"), Error);
    CHECK_THROWS_AS(net.state("water", "yes"), Error);
}

TEST_CASE("priors")
{
    Network net;
    net.define_variable("fire", {"yes", "no"});
    net.define_variable("tampering", {"yes", "no"});
    CHECK_FALSE(net.set_prior(net.state("fire", "yes"), {0.7, 0.9}));
    CHECK(net.query_state(net.state("fire", "no")).lo() == Approx(0.1));
    CHECK(net.query_state(net.state("fire", "no")).hi() == Approx(0.3));
    CHECK_FALSE(net.set_prior(net.state("tampering", "yes"), IntervalProb::point(0.9)));
    CHECK(net.query_state(net.state("tampering", "no")).lo() == Approx(0.1));
    CHECK(net.query_state(net.state("tampering", "no")).hi() == Approx(0.1));

    SUBCASE("sibling priors over one")
    {
        Network x;
        x.define_variable("x", {"yes", "no"});
        x.set_prior(x.state("x", "yes"), IntervalProb::point(0.6));
        auto r = x.set_prior(x.state("x", "no"), IntervalProb::point(0.5));
        REQUIRE(r);
        CHECK(r->culprit_assumptions.size() == 2);
        oracle::Entailment lp(x.engine().atom_count(), oracle::constraints_of(x.engine()));
        CHECK_FALSE(lp.satisfiable());
        CHECK_FALSE(x.retract_prior(x.state("x", "no")));
        CHECK_FALSE(x.check());
    }
}

TEST_CASE("sigma clauses cover the unknown states")
{
    SUBCASE("two states")
    {
        Network net;
        net.define_variable("fire", {"yes", "no"});
        net.set_prior(net.state("fire", "yes"), {0.7, 0.9});
        const auto *r = find_by_text(net.engine(), "(fire:no)");
        REQUIRE(r);
        CHECK(r->origin.kind == ClauseOrigin::Kind::Sigma);
        CHECK(r->clause.prob().lo() == Approx(0.1));
        CHECK(r->clause.prob().hi() == Approx(0.3));
    }
    SUBCASE("three states, one known")
    {
        Network net;
        net.define_variable("c", {"r", "g", "b"});
        net.set_prior(net.state("c", "r"), IntervalProb::point(0.5));
        const auto *r = find_by_text(net.engine(), "(c:g | c:b)");
        REQUIRE(r);
        CHECK(r->origin.kind == ClauseOrigin::Kind::Sigma);
        CHECK(r->clause.prob().lo() == Approx(0.5));
        CHECK(r->clause.prob().hi() == Approx(0.5));
        CHECK(count_origin(net.engine(), ClauseOrigin::Kind::Sigma) == 1);
    }
    SUBCASE("all states known")
    {
        Network net;
        net.define_variable("fire", {"yes", "no"});
        net.set_prior(net.state("fire", "yes"), IntervalProb::point(0.8));
        net.set_prior(net.state("fire", "no"), IntervalProb::point(0.2));
        CHECK(count_origin(net.engine(), ClauseOrigin::Kind::Sigma) == 0);
        CHECK_FALSE(net.check());
    }
}

TEST_CASE("interval chain rule")
{
    SUBCASE("single parent")
    {
        const IntervalProb parents[] = {{0.7, 0.9}};
        auto [with, without] = chain_rule_bounds(parents, IntervalProb::point(0.9));
        CHECK(with.lo() == Approx(0.63));
        CHECK(with.hi() == Approx(0.81));
        CHECK(without.lo() == Approx(0.07));
        CHECK(without.hi() == Approx(0.09));
    }
    SUBCASE("two parents")
    {
        const IntervalProb parents[] = {{0.7, 0.9}, {0.85, 0.95}};
        auto [with, without] = chain_rule_bounds(parents, IntervalProb::point(0.5));
        CHECK(with.lo() == Approx(0.7 * 0.85 * 0.5));
        CHECK(with.hi() == Approx(0.9 * 0.95 * 0.5));
        CHECK(with.lo() == Approx(0.2975));
        CHECK(with.hi() == Approx(0.4275));
    }
    SUBCASE("unknown conditional")
    {
        const IntervalProb parents[] = {{0.7, 0.9}};
        auto [with, without] = chain_rule_bounds(parents, IntervalProb::vacuous());
        CHECK(with == IntervalProb(0.0, 0.9));
        CHECK(without == IntervalProb(0.0, 0.9));
    }
}

TEST_CASE("a firing emits two clauses over the parent's siblings")
{
    Network net;
    fire_and_smoke(net);
    const auto &e = net.engine();
    CHECK(count_origin(e, ClauseOrigin::Kind::Generated) == 2);
    const auto *with = find_by_text(e, "(~fire:yes | fire:no | smoke:yes)");
    const auto *without = find_by_text(e, "(~fire:yes | fire:no | ~smoke:yes)");
    REQUIRE(with);
    REQUIRE(without);
    CHECK(with->origin.label == "Cond1");
    CHECK(with->clause.prob().lo() == Approx(0.91));
    CHECK(with->clause.prob().hi() == Approx(0.93));
    CHECK(without->clause.prob().lo() == Approx(0.19));
    CHECK(without->clause.prob().hi() == Approx(0.37));
    CHECK(with->table == without->table);

    // A narrower prior refires the dependency; the clauses are refined in place.
    net.retract_prior(net.state("fire", "yes"));
    CHECK(count_origin(e, ClauseOrigin::Kind::Generated) == 0);
    net.set_prior(net.state("fire", "yes"), IntervalProb::point(0.8));
    CHECK(count_origin(e, ClauseOrigin::Kind::Generated) == 2);
    CHECK(net.query_state(net.state("smoke", "yes")).lo() == Approx(0.72));
}

TEST_CASE("a conditional without known parents never fires")
{
    Network net;
    net.define_variable("fire", {"yes", "no"});
    net.define_variable("smoke", {"yes", "no"});
    net.add_conditional(net.state("smoke", "yes"), {net.state("fire", "yes")}, IntervalProb::point(0.9));
    CHECK(count_origin(net.engine(), ClauseOrigin::Kind::Generated) == 0);
    CHECK(net.expansions() == 0);
    CHECK(net.query_state(net.state("smoke", "yes")).is_vacuous());
}

TEST_CASE("conditional declarations are checked")
{
    Network net;
    net.define_variable("a", {"t", "f"});
    net.define_variable("b", {"t", "f"});
    net.define_variable("c", {"t", "f"});
    net.add_conditional(net.state("b", "t"), {net.state("a", "t")}, IntervalProb::point(0.5));
    net.add_conditional(net.state("c", "t"), {net.state("b", "t")}, IntervalProb::point(0.5));
    CHECK_THROWS_AS(net.add_conditional(net.state("a", "t"), {net.state("c", "t")}, IntervalProb::point(0.5)), Error);
    CHECK_THROWS_AS(net.add_conditional(net.state("a", "t"), {net.state("a", "f")}, IntervalProb::point(0.5)), Error);
    CHECK_THROWS_AS(net.add_conditional(net.state("c", "t"), {net.state("a", "t"), net.state("a", "f")},
                                        IntervalProb::point(0.5)),
                    Error);
    CHECK_THROWS_AS(net.add_conditional(net.state("c", "t"), {}, IntervalProb::point(0.5)), Error);
    CHECK_THROWS_AS(net.set_prior(net.state("b", "t"), IntervalProb::point(0.5)), Error);
    CHECK_THROWS_AS(net.retract_prior(net.state("a", "t")), Error);

    // Re-specification intersects.
    auto again = net.add_conditional(net.state("b", "t"), {net.state("a", "t")}, {0.2, 0.8});
    CHECK(again.id == 0);
    CHECK(net.dependencies()[0].prob == IntervalProb::point(0.5));
    CHECK_THROWS_AS(net.add_conditional(net.state("b", "t"), {net.state("a", "t")}, {0.6, 0.8}), EmptyInterval);
}

TEST_CASE("explanations in network terms")
{
    Network net;
    fire_and_smoke(net);
    const auto fy = net.state("fire", "yes");

    auto root = net.explain_state(fy, Bound::Lower);
    CHECK(root.support.kind == SupportKind::Assumption);
    CHECK(root.antecedents.empty());

    auto smoke = net.explain_state(net.state("smoke", "yes"), Bound::Lower);
    CHECK(smoke.value == Approx(0.63));
    CHECK(smoke.support.kind == SupportKind::Constraint2);
    REQUIRE(smoke.support.clauses.size() == 1);
    CHECK(net.engine().clause(smoke.support.clauses[0]).origin.label == "Cond1");
    CHECK(smoke.generators == std::vector<AtomId>{fy.atom});
    CHECK(reaches_assumption(smoke, fy.atom));

    // fire:no's upper bound goes through the sigma clause.
    auto no = net.explain_state(net.state("fire", "no"), Bound::Upper);
    CHECK(no.value == Approx(0.3));
    bool via_sigma = false;
    std::function<void(const ExplanationTree &)> walk = [&](const ExplanationTree &t) {
        auto cites = [&](ClauseId c) {
            if (net.engine().clause(c).origin.kind == ClauseOrigin::Kind::Sigma)
                via_sigma = true;
        };
        if (t.support.kind == SupportKind::Constraint1)
            cites(t.support.clause);
        for (ClauseId c : t.support.clauses)
            cites(c);
        for (const auto &a : t.antecedents)
            walk(a);
    };
    walk(no);
    CHECK(via_sigma);
    CHECK(reaches_assumption(no, fy.atom));
}

TEST_CASE("retracting the only prior restores the structural state")
{
    Network net;
    fire_and_smoke(net);
    net.retract_prior(net.state("fire", "yes"));
    for (const auto &v : net.variables())
        for (AtomId a : v.atoms)
            CHECK(net.engine().interval(a).is_vacuous());
    CHECK(count_origin(net.engine(), ClauseOrigin::Kind::Generated) == 0);
    CHECK(count_origin(net.engine(), ClauseOrigin::Kind::Sigma) == 0);
}

namespace {

void check_sums(const Network &net)
{
    for (const auto &v : net.variables()) {
        double lo = 0.0, hi = 0.0;
        for (AtomId a : v.atoms) {
            lo += net.engine().node(a).lo;
            hi += net.engine().node(a).hi;
        }
        CHECK(lo <= 1.0 + kCompareEpsilon);
        CHECK(hi >= 1.0 - kCompareEpsilon);
    }
}

} // namespace

TEST_CASE("property: per-variable sums straddle one")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 150; ++i) {
        auto m = oracle::random_model(rng);
        Network net;
        REQUIRE_FALSE(net.apply(m.model));
        check_sums(net);
    }
}

TEST_CASE("property: complete models converge to the belief network marginals")
{
    std::mt19937_64 rng(12);
    oracle::RandomModelOptions opts;
    opts.complete_fraction = 1.0;
    for (int i = 0; i < 60; ++i) {
        auto m = oracle::random_model(rng, opts);
        REQUIRE(m.complete);
        Network net;
        REQUIRE_FALSE(net.apply(m.model));
        for (const auto &[ref, p] : oracle::exact_bbn_marginals(m.model)) {
            auto got = net.query_state(net.state(ref));
            CHECK(got.lo() == Approx(p).epsilon(1e-6));
            CHECK(got.hi() == Approx(p).epsilon(1e-6));
        }
    }
}

TEST_CASE("property: dropping conditionals keeps the complete-model points inside")
{
    std::mt19937_64 rng(13);
    oracle::RandomModelOptions opts;
    opts.complete_fraction = 1.0;
    for (int i = 0; i < 60; ++i) {
        auto m = oracle::random_model(rng, opts);
        auto exact = oracle::exact_bbn_marginals(m.model);
        auto partial = m.model;
        std::bernoulli_distribution drop(0.4);
        std::erase_if(partial.conditionals, [&](const auto &) { return drop(rng); });
        Network net;
        REQUIRE_FALSE(net.apply(partial));
        for (const auto &[ref, p] : exact)
            CHECK(net.query_state(net.state(ref)).contains(p, 1e-7));
    }
}

TEST_CASE("property: refined inputs give nested intervals")
{
    std::mt19937_64 rng(14);
    for (int i = 0; i < 100; ++i) {
        auto m = oracle::random_model(rng);
        auto fine = oracle::refine_model(m.model, rng);
        Network coarse, narrow;
        REQUIRE_FALSE(coarse.apply(m.model));
        REQUIRE_FALSE(narrow.apply(fine));
        for (AtomId a = 0; a < coarse.engine().atom_count(); ++a)
            CHECK(coarse.engine().interval(a).contains(narrow.engine().interval(a), 1e-9));
    }
}

TEST_CASE("property: explanations never revisit a bound")
{
    std::mt19937_64 rng(15);
    for (int i = 0; i < 60; ++i) {
        auto m = oracle::random_model(rng);
        Network net;
        net.apply(m.model);
        for (const auto &v : net.variables())
            for (std::uint32_t s = 0; s < v.atoms.size(); ++s)
                for (Bound b : {Bound::Lower, Bound::Upper}) {
                    std::vector<std::pair<AtomId, Bound>> path;
                    CHECK_FALSE(path_repeats(net.explain_state(StateId{v.id, s, v.atoms[s]}, b), path));
                }
    }
}

TEST_CASE("property: each firing adds exactly two generated clauses")
{
    std::mt19937_64 rng(16);
    for (int i = 0; i < 60; ++i) {
        auto m = oracle::random_model(rng);
        Network net;
        net.apply(m.model);
        std::size_t fired = 0;
        for (const auto &d : net.dependencies()) {
            bool known = true;
            for (const auto &p : d.parents)
                known = known && !net.engine().interval(p.atom).is_vacuous();
            fired += known;
        }
        CHECK(count_origin(net.engine(), ClauseOrigin::Kind::Generated) == 2 * fired);
    }
}
