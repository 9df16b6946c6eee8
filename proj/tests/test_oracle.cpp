#include "support.hpp"

#include "lbms/oracle.hpp"
#include "lbms/simplex.hpp"

#include <doctest.h>

#include <cmath>

using namespace lbms;
using namespace lbms::oracle;
using doctest::Approx;

TEST_CASE("simplex on small programs")
{
    // max x + y  s.t.  x + 2y <= 4, 3x + y <= 6  ->  x = 1.6, y = 1.2
    LinearProgram lp;
    lp.columns = 2;
    lp.add_row({1, 2}, LinearProgram::Sense::LessEqual, 4);
    lp.add_row({3, 1}, LinearProgram::Sense::LessEqual, 6);
    Simplex s(lp);
    REQUIRE(s.feasible());
    const double c[] = {1, 1};
    CHECK(*s.maximize(c) == Approx(2.8));
    CHECK(*s.minimize(c) == Approx(0.0));

    LinearProgram eq;
    eq.columns = 3;
    eq.add_row({1, 1, 1}, LinearProgram::Sense::Equal, 1);
    eq.add_row({1, 0, 0}, LinearProgram::Sense::GreaterEqual, 0.25);
    Simplex t(eq);
    const double third[] = {0, 0, 1};
    CHECK(*t.maximize(third) == Approx(0.75));
    CHECK(*t.minimize(third) == Approx(0.0));

    LinearProgram bad;
    bad.columns = 1;
    bad.add_row({1}, LinearProgram::Sense::GreaterEqual, 2);
    bad.add_row({1}, LinearProgram::Sense::LessEqual, 1);
    CHECK_FALSE(Simplex(bad).feasible());

    LinearProgram open;
    open.columns = 1;
    open.add_row({1}, LinearProgram::Sense::GreaterEqual, 1);
    const double one[] = {1};
    CHECK_FALSE(Simplex(open).maximize(one));
}

TEST_CASE("entailment examples")
{
    SUBCASE("the two-atom network pins a2")
    {
        // Clauses of P(a1)=0.5, P(a2|a1)=0.2, P(a2|~a1)=0.6.
        std::vector<ClauseConstraint> cs = {
            {{neg(0), neg(1)}, IntervalProb::point(0.9)},
            {{neg(0), pos(1)}, IntervalProb::point(0.6)},
            {{pos(0), neg(1)}, IntervalProb::point(0.7)},
            {{pos(0), pos(1)}, IntervalProb::point(0.8)},
        };
        auto t = tight_bounds(EntailmentProblem{2, cs, {}, pos(1)});
        REQUIRE(t);
        CHECK(t->lo() == Approx(0.4));
        CHECK(t->hi() == Approx(0.4));
    }
    SUBCASE("a two-state variable")
    {
        std::vector<ClauseConstraint> cs = {
            {{pos(0), pos(1)}, IntervalProb::point(1.0)},
            {{neg(0), neg(1)}, IntervalProb::point(1.0)},
        };
        auto t = tight_bounds(EntailmentProblem{2, cs, {{pos(0), {0.7, 0.9}}}, pos(1)});
        REQUIRE(t);
        CHECK(t->lo() == Approx(0.1));
        CHECK(t->hi() == Approx(0.3));
    }
    SUBCASE("opposite unit clauses")
    {
        std::vector<ClauseConstraint> cs = {{{pos(0)}, IntervalProb::point(0.6)}, {{neg(0)}, IntervalProb::point(0.8)}};
        CHECK_FALSE(tight_bounds(EntailmentProblem{1, cs, {}, pos(0)}));
    }
    SUBCASE("too many atoms")
    {
        CHECK_THROWS_AS(tight_bounds(EntailmentProblem{kMaxAtoms + 1, {}, {}, pos(0)}), Error);
        CHECK_NOTHROW(tight_bounds(EntailmentProblem{kMaxAtoms, {}, {}, pos(0)}));
    }
}

TEST_CASE("certain constraints prune worlds")
{
    std::vector<ClauseConstraint> cs = {
        {{pos(0), pos(1), pos(2)}, IntervalProb::point(1.0)},
        {{neg(0), neg(1)}, IntervalProb::point(1.0)},
        {{neg(0), neg(2)}, IntervalProb::point(1.0)},
        {{neg(1), neg(2)}, IntervalProb::point(1.0)},
    };
    Entailment e(3, cs);
    CHECK(e.world_count() == 3);
    CHECK(WorldTable::satisfies(0b101, std::vector<Literal>{neg(0), pos(2)}));
    CHECK_FALSE(WorldTable::satisfies(0b001, std::vector<Literal>{neg(0), pos(2)}));
}

TEST_CASE("property: modus ponens bounds")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        double p1 = u(rng);
        double p2 = u(rng);
        // b -> a as the clause (~b | a); atom 0 is a, atom 1 is b.
        std::vector<ClauseConstraint> cs = {{{pos(0), neg(1)}, IntervalProb::point(p2)}};
        std::vector<ClauseConstraint> with_b = cs;
        with_b.push_back({{pos(1)}, IntervalProb::point(p1)});
        auto t = Entailment(2, with_b).tight_bounds(pos(0));
        if (p1 + p2 < 1.0 - 1e-12) {
            // The clause holds whenever ~b does, so it needs 1 - p1 <= p2.
            CHECK_FALSE(t);
            continue;
        }
        REQUIRE(t);
        CHECK(t->lo() == Approx(std::max(0.0, p1 + p2 - 1.0)));
        CHECK(t->hi() == Approx(p2));
    }
}

TEST_CASE("property: tight intervals respect the clause-local bounds")
{
    std::mt19937_64 rng(4);
    for (int i = 0; i < 80; ++i) {
        auto m = testing::random_clause_model(rng, 6, 12);
        Entailment e(m.atoms, testing::constraints(m));
        REQUIRE(e.satisfiable());
        std::vector<IntervalProb> tight;
        for (AtomId a = 0; a < m.atoms; ++a)
            tight.push_back(*e.tight_bounds(pos(a)));
        auto lit = [&](const Literal &l) { return literal_bounds(l, tight[l.atom]); };
        for (const auto &c : m.clauses) {
            for (const auto &l : c.literals()) {
                double others = 0.0;
                for (const auto &o : c.literals())
                    if (o != l)
                        others += lit(o).hi();
                CHECK(lit(l).hi() <= c.prob().hi() + 1e-7);
                CHECK(lit(l).lo() >= c.prob().lo() - others - 1e-7);
            }
        }
    }
}

TEST_CASE("property: bounds are reproducible")
{
    std::mt19937_64 rng(5);
    for (int i = 0; i < 30; ++i) {
        auto m = testing::random_clause_model(rng, 8, 20);
        auto cs = testing::constraints(m);
        Entailment a(m.atoms, cs);
        auto shuffled = cs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        Entailment b(m.atoms, shuffled);
        for (AtomId x = 0; x < m.atoms; ++x) {
            auto ta = *a.tight_bounds(pos(x));
            auto tb = *b.tight_bounds(pos(x));
            CHECK(std::abs(ta.lo() - tb.lo()) <= 1e-9);
            CHECK(std::abs(ta.hi() - tb.hi()) <= 1e-9);
        }
    }
}

TEST_CASE("exact belief network marginals")
{
    NetworkModel m;
    m.variables = {{"rain", {"yes", "no"}}, {"wet", {"yes", "no"}}};
    m.priors = {{{"rain", "yes"}, IntervalProb::point(0.3)}};
    m.conditionals = {
        {{"wet", "yes"}, {{"rain", "yes"}}, IntervalProb::point(0.9)},
        {{"wet", "yes"}, {{"rain", "no"}}, IntervalProb::point(0.2)},
    };
    auto p = exact_bbn_marginals(m);
    CHECK(p.at({"rain", "yes"}) == Approx(0.3));
    CHECK(p.at({"rain", "no"}) == Approx(0.7));
    CHECK(p.at({"wet", "yes"}) == Approx(0.3 * 0.9 + 0.7 * 0.2));
    CHECK(p.at({"wet", "no"}) == Approx(1.0 - (0.3 * 0.9 + 0.7 * 0.2)));

    NetworkModel single;
    single.variables = {{"x", {"a", "b"}}};
    single.priors = {{{"x", "a"}, IntervalProb::point(0.8)}};
    CHECK(exact_bbn_marginals(single).at({"x", "a"}) == Approx(0.8));

    auto partial = m;
    partial.conditionals.pop_back();
    partial.conditionals.back().prob = {0.8, 0.9};
    CHECK_THROWS_AS(exact_bbn_marginals(partial), Error);

    auto missing = m;
    missing.conditionals.pop_back();
    CHECK_THROWS_AS(exact_bbn_marginals(missing), Error);
}

TEST_CASE("property: marginals sum to one per variable")
{
    std::mt19937_64 rng(6);
    RandomModelOptions opts;
    opts.complete_fraction = 1.0;
    for (int i = 0; i < 100; ++i) {
        auto m = random_model(rng, opts);
        auto p = exact_bbn_marginals(m.model);
        for (const auto &v : m.model.variables) {
            double s = 0.0;
            for (const auto &st : v.states)
                s += p.at({v.name, st});
            CHECK(s == Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("soundness batch")
{
    auto report = soundness_check(42, 100);
    CHECK(report.models.size() == 100);
    CHECK(report.violations() == 0);
    CHECK(report.gap_witnesses() > 0);
    for (const auto &m : report.models)
        if (m.complete) {
            CHECK(m.max_gap <= 1e-6);
        }
    // Reports are deterministic.
    CHECK(soundness_check(42, 100).to_json() == report.to_json());
    CHECK(report.to_text().find("violations=0") != std::string::npos);
}
