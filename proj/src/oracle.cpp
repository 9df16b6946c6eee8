#include "lbms/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>

namespace lbms::oracle {

namespace {

constexpr double kContainEps = 1e-7;

bool is_certain(const IntervalProb &p)
{
    return p.lo() >= 1.0;
}

bool is_impossible(const IntervalProb &p)
{
    return p.hi() <= 0.0;
}

} // namespace

// ---------------------------------------------------------------------------
// Worlds and entailment

bool WorldTable::satisfies(std::uint32_t world, std::span<const Literal> literals)
{
    for (const auto &l : literals)
        if (((world >> l.atom) & 1u) == (l.positive ? 1u : 0u))
            return true;
    return false;
}

WorldTable::WorldTable(std::size_t atom_count, const std::vector<ClauseConstraint> &constraints) :
    atom_count_(atom_count)
{
    if (atom_count > kMaxAtoms)
        throw Error("entailment oracle refuses " + std::to_string(atom_count) + " atoms (limit " +
                    std::to_string(kMaxAtoms) + ")");
    for (const auto &c : constraints)
        for (const auto &l : c.literals)
            if (l.atom >= atom_count)
                throw Error("constraint mentions atom " + std::to_string(l.atom) + " outside the world table");
    const std::uint32_t limit = std::uint32_t{1} << atom_count;
    for (std::uint32_t w = 0; w < limit; ++w) {
        bool ok = true;
        for (const auto &c : constraints) {
            bool sat = satisfies(w, c.literals);
            if ((is_certain(c.prob) && !sat) || (is_impossible(c.prob) && sat)) {
                ok = false;
                break;
            }
        }
        if (ok)
            worlds_.push_back(w);
    }
}

LinearProgram Entailment::build(const WorldTable &table, const std::vector<ClauseConstraint> &constraints)
{
    const auto &worlds = table.worlds();
    LinearProgram lp;
    lp.columns = worlds.size();
    lp.add_row(std::vector<double>(worlds.size(), 1.0), LinearProgram::Sense::Equal, 1.0);
    for (const auto &c : constraints) {
        if (is_certain(c.prob) || is_impossible(c.prob))
            continue;
        std::vector<double> row(worlds.size(), 0.0);
        for (std::size_t i = 0; i < worlds.size(); ++i)
            row[i] = WorldTable::satisfies(worlds[i], c.literals) ? 1.0 : 0.0;
        if (c.prob.lo() == c.prob.hi()) {
            lp.add_row(std::move(row), LinearProgram::Sense::Equal, c.prob.lo());
            continue;
        }
        if (c.prob.lo() > 0.0)
            lp.add_row(row, LinearProgram::Sense::GreaterEqual, c.prob.lo());
        if (c.prob.hi() < 1.0)
            lp.add_row(std::move(row), LinearProgram::Sense::LessEqual, c.prob.hi());
    }
    return lp;
}

Entailment::Entailment(std::size_t atom_count, std::vector<ClauseConstraint> constraints) :
    constraints_(std::move(constraints)), table_(atom_count, constraints_), simplex_(build(table_, constraints_))
{
}

std::optional<IntervalProb> Entailment::tight_bounds(const Literal &objective) const
{
    if (objective.atom >= table_.atom_count())
        throw Error("objective atom outside the world table");
    if (!satisfiable() || table_.worlds().empty())
        return std::nullopt;
    const auto &worlds = table_.worlds();
    std::vector<double> c(worlds.size());
    const Literal lits[] = {objective};
    for (std::size_t i = 0; i < worlds.size(); ++i)
        c[i] = WorldTable::satisfies(worlds[i], lits) ? 1.0 : 0.0;
    auto lo = simplex_.minimize(c);
    auto hi = simplex_.maximize(c);
    if (!lo || !hi)
        return std::nullopt;
    return IntervalProb(std::clamp(*lo, 0.0, 1.0), std::clamp(*hi, 0.0, 1.0));
}

std::optional<IntervalProb> tight_bounds(const EntailmentProblem &problem)
{
    auto constraints = problem.clauses;
    for (const auto &[lit, p] : problem.assumptions)
        constraints.push_back({{lit}, p});
    Entailment e(problem.atom_count, std::move(constraints));
    return e.tight_bounds(problem.objective);
}

std::vector<ClauseConstraint> constraints_of(const Engine &engine)
{
    std::vector<ClauseConstraint> out;
    for (const auto *r : engine.clauses())
        out.push_back({r->clause.literals(), r->clause.prob()});
    for (AtomId a : engine.assumptions()) {
        const auto &n = engine.node(a);
        out.push_back({{pos(a)}, *n.assumed_interval});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact marginals

std::map<StateRef, double> exact_bbn_marginals(const NetworkModel &model)
{
    const std::size_t nv = model.variables.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < nv; ++i)
        index.emplace(model.variables[i].name, i);
    auto var_of = [&](const std::string &name) {
        auto it = index.find(name);
        if (it == index.end())
            throw Error("unknown variable '" + name + "'");
        return it->second;
    };
    auto state_of = [&](const StateRef &s) {
        const auto &states = model.variables[var_of(s.variable)].states;
        auto it = std::find(states.begin(), states.end(), s.state);
        if (it == states.end())
            throw Error("variable '" + s.variable + "' has no state '" + s.state + "'");
        return static_cast<std::size_t>(it - states.begin());
    };
    auto point = [](const IntervalProb &p, const std::string &what) {
        if (!p.is_point(1e-12))
            throw Error("exact marginals need point values; " + what + " is an interval");
        return p.lo();
    };

    // Parent variable lists per child, in sorted order.
    std::vector<std::optional<std::vector<std::size_t>>> parents(nv);
    for (const auto &c : model.conditionals) {
        std::size_t child = var_of(c.child.variable);
        std::vector<std::size_t> ps;
        for (const auto &p : c.parents)
            ps.push_back(var_of(p.variable));
        std::sort(ps.begin(), ps.end());
        if (parents[child] && *parents[child] != ps)
            throw Error("variable '" + c.child.variable + "' has conditionals over different parent sets");
        parents[child] = ps;
    }

    // table[v][combo][state], NaN until specified.
    std::vector<std::vector<std::vector<double>>> table(nv);
    auto combo_count = [&](std::size_t v) {
        std::size_t n = 1;
        if (parents[v])
            for (std::size_t p : *parents[v])
                n *= model.variables[p].states.size();
        return n;
    };
    for (std::size_t v = 0; v < nv; ++v)
        table[v].assign(combo_count(v), std::vector<double>(model.variables[v].states.size(), std::nan("")));

    auto combo_index = [&](std::size_t v, const std::vector<std::size_t> &assignment) {
        std::size_t idx = 0;
        if (parents[v])
            for (std::size_t p : *parents[v])
                idx = idx * model.variables[p].states.size() + assignment[p];
        return idx;
    };

    for (const auto &c : model.conditionals) {
        std::size_t child = var_of(c.child.variable);
        std::vector<std::size_t> assignment(nv, 0);
        for (const auto &p : c.parents)
            assignment[var_of(p.variable)] = state_of(p);
        table[child][combo_index(child, assignment)][state_of(c.child)] =
            point(c.prob, "P(" + c.child.variable + "=" + c.child.state + " | ...)");
    }
    for (const auto &p : model.priors) {
        std::size_t v = var_of(p.state.variable);
        if (parents[v])
            throw Error("prior on non-root variable '" + p.state.variable + "'");
        table[v][0][state_of(p.state)] = point(p.prob, "prior of " + p.state.variable + "=" + p.state.state);
    }
    for (std::size_t v = 0; v < nv; ++v) {
        for (auto &row : table[v]) {
            std::size_t missing = 0;
            double sum = 0.0;
            for (double x : row) {
                if (std::isnan(x))
                    ++missing;
                else
                    sum += x;
            }
            if (missing > 1)
                throw Error("incomplete model: variable '" + model.variables[v].name +
                            "' lacks conditionals or priors");
            for (double &x : row)
                if (std::isnan(x))
                    x = std::max(0.0, 1.0 - sum);
        }
    }

    std::map<StateRef, double> marginals;
    for (const auto &v : model.variables)
        for (const auto &s : v.states)
            marginals[{v.name, s}] = 0.0;

    std::vector<std::size_t> assignment(nv, 0);
    for (;;) {
        double p = 1.0;
        for (std::size_t v = 0; v < nv && p > 0.0; ++v)
            p *= table[v][combo_index(v, assignment)][assignment[v]];
        for (std::size_t v = 0; v < nv; ++v)
            marginals[{model.variables[v].name, model.variables[v].states[assignment[v]]}] += p;
        std::size_t v = 0;
        while (v < nv && ++assignment[v] == model.variables[v].states.size())
            assignment[v++] = 0;
        if (v == nv)
            break;
    }
    return marginals;
}

// ---------------------------------------------------------------------------
// Random models

namespace {

IntervalProb widen(double p, std::mt19937_64 &rng, bool interval)
{
    if (!interval)
        return IntervalProb::point(p);
    std::uniform_real_distribution<double> u(0.0, 0.15);
    return {std::max(0.0, p - u(rng)), std::min(1.0, p + u(rng))};
}

std::vector<double> random_distribution(std::size_t n, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> w(n);
    double sum = 0.0;
    for (auto &x : w)
        sum += (x = u(rng));
    for (auto &x : w)
        x /= sum;
    return w;
}

} // namespace

RandomModel random_model(std::mt19937_64 &rng, const RandomModelOptions &options)
{
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    RandomModel out;
    out.complete = coin(rng) < options.complete_fraction;
    auto &model = out.model;

    std::uniform_int_distribution<std::size_t> nvars(2, std::max<std::size_t>(2, options.max_variables));
    std::size_t n = nvars(rng);
    std::size_t atoms = 0;
    std::vector<std::vector<std::size_t>> parents;
    for (std::size_t v = 0; v < n; ++v) {
        std::uniform_int_distribution<std::size_t> nstates(2, std::max<std::size_t>(2, options.max_states));
        std::size_t s = nstates(rng);
        std::size_t remaining_vars = n - v - 1;
        if (atoms + s + 2 * remaining_vars > options.max_atoms)
            s = 2;
        if (atoms + s > options.max_atoms)
            break;
        atoms += s;
        VariableDecl decl{"v" + std::to_string(v), {}};
        for (std::size_t i = 0; i < s; ++i)
            decl.states.push_back("s" + std::to_string(i));
        model.variables.push_back(decl);

        std::vector<std::size_t> ps;
        if (v > 0) {
            std::vector<std::size_t> roots;
            for (std::size_t u = 0; u < v; ++u)
                if (parents[u].empty())
                    roots.push_back(u);
            double r = coin(rng);
            if (r < 0.25 && roots.size() >= 2) {
                std::shuffle(roots.begin(), roots.end(), rng);
                ps = {roots[0], roots[1]};
                std::sort(ps.begin(), ps.end());
            } else if (r < 0.85) {
                std::uniform_int_distribution<std::size_t> pick(0, v - 1);
                ps = {pick(rng)};
            }
        }
        parents.push_back(ps);
    }

    const double keep = out.complete ? 1.0 : 0.7;
    const double interval_rate = out.complete ? 0.0 : 0.5;
    for (std::size_t v = 0; v < model.variables.size(); ++v) {
        const auto &var = model.variables[v];
        if (parents[v].empty()) {
            auto dist = random_distribution(var.states.size(), rng);
            std::vector<std::size_t> order(var.states.size() - 1);
            for (std::size_t i = 0; i < order.size(); ++i)
                order[i] = i;
            bool any = false;
            for (std::size_t i : order) {
                if (coin(rng) >= keep && (any || i + 1 < order.size()))
                    continue;
                any = true;
                model.priors.push_back({{var.name, var.states[i]}, widen(dist[i], rng, coin(rng) < interval_rate)});
            }
            continue;
        }
        // Enumerate parent-state combinations.
        std::vector<std::size_t> combo(parents[v].size(), 0);
        for (;;) {
            auto dist = random_distribution(var.states.size(), rng);
            for (std::size_t i = 0; i + 1 < var.states.size(); ++i) {
                if (coin(rng) >= keep)
                    continue;
                ConditionalDecl c;
                c.child = {var.name, var.states[i]};
                for (std::size_t k = 0; k < parents[v].size(); ++k) {
                    const auto &pv = model.variables[parents[v][k]];
                    c.parents.push_back({pv.name, pv.states[combo[k]]});
                }
                c.prob = widen(dist[i], rng, coin(rng) < interval_rate);
                model.conditionals.push_back(c);
            }
            std::size_t k = 0;
            while (k < combo.size() && ++combo[k] == model.variables[parents[v][k]].states.size())
                combo[k++] = 0;
            if (k == combo.size())
                break;
        }
    }
    return out;
}

NetworkModel refine_model(const NetworkModel &model, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto narrow = [&](const IntervalProb &p) {
        double a = p.lo() + u(rng) * p.width();
        double b = p.lo() + u(rng) * p.width();
        if (a > b)
            std::swap(a, b);
        return IntervalProb(a, b);
    };
    NetworkModel out = model;
    for (auto &c : out.conditionals)
        c.prob = narrow(c.prob);
    for (auto &p : out.priors)
        p.prob = narrow(p.prob);
    return out;
}

// ---------------------------------------------------------------------------
// Comparison

ModelComparison compare_with_oracle(const ibn::Network &network)
{
    ModelComparison out;
    const auto &engine = network.engine();
    out.engine_contradiction = engine.check_consistency().has_value();
    Entailment oracle(engine.atom_count(), constraints_of(engine));
    out.satisfiable = oracle.satisfiable();
    if (out.engine_contradiction || !out.satisfiable) {
        // The engine may only report a contradiction the oracle confirms.
        out.contained = !(out.engine_contradiction && out.satisfiable);
        return out;
    }
    double total_gap = 0.0;
    for (const auto &v : network.variables()) {
        for (std::uint32_t i = 0; i < v.states.size(); ++i) {
            StateComparison sc;
            sc.state = v.name + ":" + v.states[i];
            sc.engine = engine.interval(v.atoms[i]);
            sc.tight = *oracle.tight_bounds(pos(v.atoms[i]));
            sc.contained = sc.engine.lo() <= sc.tight.lo() + kContainEps && sc.tight.hi() <= sc.engine.hi() + kContainEps;
            sc.gap = std::max(0.0, sc.engine.width() - sc.tight.width());
            out.contained = out.contained && sc.contained;
            out.max_gap = std::max(out.max_gap, sc.gap);
            total_gap += sc.gap;
            out.states.push_back(std::move(sc));
        }
    }
    if (!out.states.empty())
        out.mean_gap = total_gap / static_cast<double>(out.states.size());
    return out;
}

ModelComparison compare_with_oracle(const NetworkModel &model)
{
    auto network = std::make_unique<ibn::Network>();
    network->apply(model);
    return compare_with_oracle(*network);
}

std::size_t SoundnessReport::violations() const
{
    return static_cast<std::size_t>(
        std::count_if(models.begin(), models.end(), [](const auto &m) { return !m.contained; }));
}

std::size_t SoundnessReport::gap_witnesses(double threshold) const
{
    return static_cast<std::size_t>(
        std::count_if(models.begin(), models.end(), [threshold](const auto &m) { return m.max_gap > threshold; }));
}

double SoundnessReport::mean_gap() const
{
    if (models.empty())
        return 0.0;
    double s = 0.0;
    for (const auto &m : models)
        s += m.mean_gap;
    return s / static_cast<double>(models.size());
}

std::string SoundnessReport::to_text() const
{
    std::ostringstream os;
    char buf[160];
    for (const auto &m : models) {
        std::snprintf(buf, sizeof buf, "model %zu %s contained=%s satisfiable=%s max_gap=%.6f mean_gap=%.6f\n",
                      m.index, m.complete ? "complete" : "partial", m.contained ? "yes" : "NO",
                      m.satisfiable ? "yes" : "no", m.max_gap, m.mean_gap);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "seed=%llu models=%zu violations=%zu gap_witnesses=%zu mean_gap=%.6f\n",
                  static_cast<unsigned long long>(seed), models.size(), violations(), gap_witnesses(), mean_gap());
    os << buf;
    return os.str();
}

std::string SoundnessReport::to_json() const
{
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["violations"] = violations();
    j["gap_witnesses"] = gap_witnesses();
    j["mean_gap"] = mean_gap();
    auto &arr = j["models"] = nlohmann::ordered_json::array();
    for (const auto &m : models) {
        nlohmann::ordered_json jm;
        jm["index"] = m.index;
        jm["complete"] = m.complete;
        jm["satisfiable"] = m.satisfiable;
        jm["contained"] = m.contained;
        jm["max_gap"] = m.max_gap;
        jm["mean_gap"] = m.mean_gap;
        auto &states = jm["states"] = nlohmann::ordered_json::array();
        for (const auto &s : m.states)
            states.push_back({{"state", s.state},
                              {"engine", {s.engine.lo(), s.engine.hi()}},
                              {"tight", {s.tight.lo(), s.tight.hi()}},
                              {"contained", s.contained},
                              {"gap", s.gap}});
        arr.push_back(std::move(jm));
    }
    return j.dump(2);
}

SoundnessReport soundness_check(std::uint64_t seed, std::size_t count, const RandomModelOptions &options)
{
    SoundnessReport report;
    report.seed = seed;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        auto rm = random_model(rng, options);
        auto cmp = compare_with_oracle(rm.model);
        cmp.index = i;
        cmp.complete = rm.complete;
        report.models.push_back(std::move(cmp));
    }
    return report;
}

} // namespace lbms::oracle
