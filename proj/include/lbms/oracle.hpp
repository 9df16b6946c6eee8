#pragma once

#include "lbms/engine.hpp"
#include "lbms/network.hpp"
#include "lbms/simplex.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lbms::oracle {

using ibn::NetworkModel;
using ibn::StateRef;
using ibn::VariableDecl;
using ibn::ConditionalDecl;
using ibn::PriorDecl;

inline constexpr std::size_t kMaxAtoms = 14;

struct ClauseConstraint {
    std::vector<Literal> literals;
    IntervalProb prob;
};

/// Clause and literal constraints over atoms 0..atom_count-1.
struct EntailmentProblem {
    std::size_t atom_count = 0;
    std::vector<ClauseConstraint> clauses;
    std::vector<std::pair<Literal, IntervalProb>> assumptions;
    Literal objective;
};

/// Truth assignments that can carry probability mass. Constraints with
/// probability exactly 1 (or 0) remove the worlds violating (satisfying)
/// them up front; the rest become LP rows.
class WorldTable {
public:
    WorldTable(std::size_t atom_count, const std::vector<ClauseConstraint> &constraints);

    std::size_t atom_count() const { return atom_count_; }
    const std::vector<std::uint32_t> &worlds() const { return worlds_; }
    static bool satisfies(std::uint32_t world, std::span<const Literal> literals);

private:
    std::size_t atom_count_;
    std::vector<std::uint32_t> worlds_;
};

/// Exact probabilistic entailment: the feasible set is built once and
/// queried for any number of objectives.
class Entailment {
public:
    Entailment(std::size_t atom_count, std::vector<ClauseConstraint> constraints);

    bool satisfiable() const { return simplex_.feasible(); }
    /// Tight interval of a literal; nullopt when the constraints are unsatisfiable.
    std::optional<IntervalProb> tight_bounds(const Literal &objective) const;
    std::size_t world_count() const { return table_.worlds().size(); }

private:
    static LinearProgram build(const WorldTable &table, const std::vector<ClauseConstraint> &constraints);

    std::vector<ClauseConstraint> constraints_;
    WorldTable table_;
    Simplex simplex_;
};

/// nullopt means unsatisfiable. Throws when atom_count exceeds kMaxAtoms.
std::optional<IntervalProb> tight_bounds(const EntailmentProblem &problem);

/// Every live clause and assumption of an engine as LP constraints, atoms
/// keeping their engine ids.
std::vector<ClauseConstraint> constraints_of(const Engine &engine);

/// Marginals of a fully specified point-valued network by joint enumeration.
/// Throws Error when a conditional or prior is missing or not a point.
std::map<StateRef, double> exact_bbn_marginals(const NetworkModel &model);

struct RandomModelOptions {
    std::size_t max_variables = 5;
    std::size_t max_states = 3;
    std::size_t max_atoms = kMaxAtoms;
    double complete_fraction = 0.2;
};

struct RandomModel {
    NetworkModel model;
    /// All conditionals and priors present and point valued.
    bool complete = false;
};

/// Random DAG model whose emitted clause set is satisfiable: the point
/// values of a random belief network lie inside every interval. Variables
/// with two parents take only root parents, which keeps the product form of
/// the interval chain rule exact.
RandomModel random_model(std::mt19937_64 &rng, const RandomModelOptions &options = {});

/// A copy of the model with every prior and conditional narrowed to a random
/// sub-interval of its current interval.
NetworkModel refine_model(const NetworkModel &model, std::mt19937_64 &rng);

struct StateComparison {
    std::string state;
    IntervalProb engine;
    IntervalProb tight;
    bool contained = true;
    double gap = 0.0;
};

struct ModelComparison {
    std::size_t index = 0;
    bool complete = false;
    bool satisfiable = true;
    bool engine_contradiction = false;
    bool contained = true;
    double max_gap = 0.0;
    double mean_gap = 0.0;
    std::vector<StateComparison> states;
};

/// Runs the network through the engine and compares every state with the
/// LP-tight interval on the engine's emitted clause set.
ModelComparison compare_with_oracle(const NetworkModel &model);
ModelComparison compare_with_oracle(const ibn::Network &network);

struct SoundnessReport {
    std::uint64_t seed = 0;
    std::vector<ModelComparison> models;

    std::size_t violations() const;
    std::size_t gap_witnesses(double threshold = 1e-6) const;
    double mean_gap() const;
    std::string to_text() const;
    std::string to_json() const;
};

SoundnessReport soundness_check(std::uint64_t seed, std::size_t count, const RandomModelOptions &options = {});

} // namespace lbms::oracle
