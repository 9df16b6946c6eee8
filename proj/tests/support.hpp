#pragma once

#include "lbms/engine.hpp"
#include "lbms/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace testing {

using namespace lbms;

/// A joint distribution over 2^n worlds, world bit i = truth of atom i.
struct Joint {
    std::size_t atoms = 0;
    std::vector<double> p;

    double prob(std::span<const Literal> clause) const
    {
        double s = 0.0;
        for (std::uint32_t w = 0; w < p.size(); ++w)
            if (oracle::WorldTable::satisfies(w, clause))
                s += p[w];
        return s;
    }
};

inline Joint random_joint(std::mt19937_64 &rng, std::size_t atoms)
{
    Joint j;
    j.atoms = atoms;
    j.p.resize(std::size_t{1} << atoms);
    std::exponential_distribution<double> e(1.0);
    std::bernoulli_distribution zero(0.2);
    double s = 0.0;
    for (auto &x : j.p)
        s += (x = zero(rng) ? 0.0 : e(rng));
    if (s == 0.0) {
        j.p[0] = 1.0;
        s = 1.0;
    }
    for (auto &x : j.p)
        x /= s;
    return j;
}

/// An interval containing p, sometimes the point itself.
inline IntervalProb around(double p, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> u(0.0, 0.2);
    std::bernoulli_distribution point(0.3);
    p = std::clamp(p, 0.0, 1.0);
    if (point(rng))
        return IntervalProb::point(p);
    return {std::max(0.0, p - u(rng)), std::min(1.0, p + u(rng))};
}

/// Satisfiable clause-level model: every interval holds for one hidden
/// joint distribution.
struct ClauseModel {
    std::size_t atoms = 0;
    std::vector<Clause> clauses;
    std::vector<std::pair<Literal, IntervalProb>> assumptions;
};

inline ClauseModel random_clause_model(std::mt19937_64 &rng, std::size_t max_atoms = 10,
                                       std::size_t max_clauses = 30)
{
    std::uniform_int_distribution<std::size_t> natoms(2, max_atoms);
    ClauseModel m;
    m.atoms = natoms(rng);
    auto joint = random_joint(rng, m.atoms);
    std::uniform_int_distribution<std::size_t> nclauses(1, max_clauses);
    std::uniform_int_distribution<std::size_t> width(1, std::min<std::size_t>(3, m.atoms));
    std::uniform_int_distribution<AtomId> atom(0, static_cast<AtomId>(m.atoms - 1));
    std::bernoulli_distribution sign(0.5);
    const std::size_t n = nclauses(rng);
    // Clauses often share atom sets so tables hold several sign vectors.
    std::vector<std::vector<AtomId>> sets;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<AtomId> atoms;
        if (!sets.empty() && sign(rng)) {
            atoms = sets[std::uniform_int_distribution<std::size_t>(0, sets.size() - 1)(rng)];
        } else {
            std::size_t w = width(rng);
            while (atoms.size() < w) {
                AtomId a = atom(rng);
                if (std::find(atoms.begin(), atoms.end(), a) == atoms.end())
                    atoms.push_back(a);
            }
            sets.push_back(atoms);
        }
        std::vector<Literal> lits;
        for (AtomId a : atoms)
            lits.push_back({a, sign(rng)});
        Clause c(lits, IntervalProb::vacuous());
        c.set_prob(around(joint.prob(c.literals()), rng));
        m.clauses.push_back(c);
    }
    std::uniform_int_distribution<std::size_t> nassume(0, m.atoms / 2);
    std::vector<AtomId> order(m.atoms);
    for (AtomId a = 0; a < m.atoms; ++a)
        order[a] = a;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0, k = nassume(rng); i < k; ++i) {
        Literal l{order[i], sign(rng)};
        const Literal one[] = {l};
        m.assumptions.push_back({l, around(joint.prob(one), rng)});
    }
    return m;
}

/// Loads a model; returns the first contradiction reported.
inline std::optional<ContradictionReport> load(Engine &e, const ClauseModel &m)
{
    for (std::size_t i = 0; i < m.atoms; ++i)
        e.add_atom("x" + std::to_string(i));
    std::optional<ContradictionReport> first;
    for (const auto &c : m.clauses) {
        auto r = e.add_clause(c);
        if (r.contradiction && !first)
            first = r.contradiction;
    }
    for (const auto &[l, p] : m.assumptions) {
        auto r = e.assume(l, p);
        if (r && !first)
            first = r;
    }
    return first;
}

inline std::vector<oracle::ClauseConstraint> constraints(const ClauseModel &m)
{
    std::vector<oracle::ClauseConstraint> out;
    for (const auto &c : m.clauses)
        out.push_back({c.literals(), c.prob()});
    for (const auto &[l, p] : m.assumptions)
        out.push_back({{l}, p});
    return out;
}

inline bool contains(const IntervalProb &outer, const IntervalProb &inner, double eps = 1e-7)
{
    return outer.lo() <= inner.lo() + eps && inner.hi() <= outer.hi() + eps;
}

} // namespace testing
