#pragma once

#include "lbms/interval.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lbms {

using ClauseId = std::uint32_t;
using EventId = std::uint32_t;
using ConsumerId = std::uint32_t;

/// Event id 0 marks a bound that was never moved off its initial 0 or 1.
inline constexpr EventId kNoEvent = 0;

enum class Bound { Lower, Upper };

inline Bound opposite(Bound b) { return b == Bound::Lower ? Bound::Upper : Bound::Lower; }
std::string_view to_string(Bound b);

enum class SupportKind { None, Assumption, Constraint1, Constraint2 };
std::string_view to_string(SupportKind k);

/// What set a bound: the assumption itself, one clause through Constraint 1,
/// or a table of clauses through Constraint 2.
struct SupportRef {
    SupportKind kind = SupportKind::None;
    ClauseId clause = 0;
    TableKey table;
    std::vector<ClauseId> clauses;
};

struct ClauseOrigin {
    enum class Kind { UserAssertion, Structural, Generated, Sigma };

    Kind kind = Kind::UserAssertion;
    /// Variable id for Structural/Sigma, dependency id for Generated.
    std::uint32_t owner = 0;
    /// Refresh counter of Sigma clauses.
    std::uint64_t generation = 0;
    /// Atoms whose bounds the clause interval was computed from. The engine
    /// records their current bound events as the clause's basis.
    std::vector<AtomId> triggers;
    std::string label;

    static ClauseOrigin user(std::string label = {});
    static ClauseOrigin structural(std::uint32_t variable, std::string label = {});
    static ClauseOrigin generated(std::uint32_t dependency, std::vector<AtomId> triggers, std::string label = {});
    static ClauseOrigin sigma(std::uint32_t variable, std::uint64_t generation, std::vector<AtomId> triggers,
                              std::string label = {});

    /// Generated and Sigma clauses are produced by consumers and are dropped
    /// on retraction; consumers regenerate whatever still holds.
    bool consumer_made() const { return kind == Kind::Generated || kind == Kind::Sigma; }
};

std::string_view to_string(ClauseOrigin::Kind k);

struct ClauseRecord {
    ClauseId id = 0;
    Clause clause;
    ClauseOrigin origin;
    std::size_t table = 0;
    std::uint64_t signs = 0;
    /// Trigger events the clause's lower bound was computed from (trigger
    /// upper bounds) and its upper bound (trigger lower bounds).
    std::vector<EventId> lower_basis;
    std::vector<EventId> upper_basis;
    bool live = true;
};

/// All clauses over one atom set, at most one per sign vector.
struct ClauseTable {
    TableKey key;
    std::map<std::uint64_t, ClauseId> by_signs;
};

/// One recorded movement of an atom bound. Antecedents always have smaller
/// ids, so the event graph is a DAG.
struct BoundEvent {
    EventId id = kNoEvent;
    AtomId atom = 0;
    Bound bound = Bound::Lower;
    double value = 0.0;
    SupportRef support;
    std::vector<EventId> antecedents;
};

using ConsumerFn = std::function<void(class Engine &, AtomId, IntervalProb)>;

struct NodeRecord {
    Atom atom;
    /// Raw bounds; lo > hi only while a contradiction is pending.
    double lo = 0.0;
    double hi = 1.0;
    EventId lower_event = kNoEvent;
    EventId upper_event = kNoEvent;
    bool is_assumption = false;
    std::optional<Literal> assumed_literal;
    /// Assumed interval, expressed over the atom.
    std::optional<IntervalProb> assumed_interval;
    std::vector<ConsumerId> consumers;

    bool crossed() const { return lo > hi; }
    /// Throws EmptyInterval when crossed.
    IntervalProb interval() const { return {lo, hi}; }
};

struct ExplanationTree {
    Literal literal;
    Bound bound = Bound::Lower;
    double value = 0.0;
    SupportRef support;
    /// Trigger atoms of consumer-made clauses cited by the support.
    std::vector<AtomId> generators;
    std::vector<ExplanationTree> antecedents;

    std::size_t depth() const;
    std::size_t size() const;
};

struct ContradictionReport {
    enum class Kind {
        Condition5,     ///< an atom with lo > hi
        Condition6,     ///< a clause its literals' maxima cannot cover
        ClauseConflict, ///< re-assertion of a clause with a disjoint interval
    };
    Kind kind = Kind::Condition5;
    AtomId atom = 0;
    ClauseId clause = 0;
    std::vector<Literal> culprit_assumptions;
    std::vector<ExplanationTree> trace;
};

std::string_view to_string(ContradictionReport::Kind k);

struct BoundUpdate {
    AtomId atom = 0;
    Bound bound = Bound::Lower;
    double before = 0.0;
    double after = 0.0;
    EventId event = kNoEvent;
};

struct EngineStats {
    std::uint64_t constraint1_applications = 0;
    std::uint64_t constraint2_applications = 0;
    std::uint64_t bound_updates = 0;
    std::uint64_t consumer_firings = 0;
    std::uint64_t clauses_added = 0;

    std::uint64_t constraint_applications() const
    {
        return constraint1_applications + constraint2_applications;
    }
};

struct AtomState {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    SupportKind lower_support = SupportKind::None;
    SupportKind upper_support = SupportKind::None;
    bool assumption = false;
};

struct ClauseState {
    ClauseId id = 0;
    std::string text;
    double lo = 0.0;
    double hi = 1.0;
    ClauseOrigin::Kind origin = ClauseOrigin::Kind::UserAssertion;
    std::string label;
};

/// Immutable, sorted view of an engine: atoms by name, clauses by text.
struct Snapshot {
    std::vector<AtomState> atoms;
    std::vector<ClauseState> clauses;

    /// Line-oriented rendering with 6 decimals. Clause ids are left out so
    /// that regenerated clauses render identically.
    std::string render() const;
};

struct AddResult {
    /// nullopt for a tautology, which is never stored.
    std::optional<ClauseId> id;
    std::optional<ContradictionReport> contradiction;
};

/// Interval belief maintenance over clauses of probabilistic logic.
///
/// Single writer. Consumers run synchronously inside propagate(); a consumer
/// may call add_clause (the clause is queued, not propagated recursively),
/// retire_clause and raise_contradiction, nothing else that mutates.
class Engine {
public:
    Engine() = default;
    Engine(const Engine &) = delete;
    Engine &operator=(const Engine &) = delete;

    AtomId add_atom(std::string name);
    std::optional<AtomId> find_atom(std::string_view name) const;
    const NodeRecord &node(AtomId a) const;
    const std::string &name(AtomId a) const { return node(a).atom.name; }
    std::size_t atom_count() const { return nodes_.size(); }
    /// Current interval of the atom. Throws EmptyInterval when crossed.
    IntervalProb interval(AtomId a) const { return node(a).interval(); }
    IntervalProb literal_interval(const Literal &l) const { return literal_bounds(l, interval(l.atom)); }

    AddResult add_clause(const Clause &clause, ClauseOrigin origin = {});
    std::optional<ContradictionReport> assume(const Literal &l, const IntervalProb &p);
    std::optional<ContradictionReport> retract(const Literal &l);
    std::optional<ContradictionReport> propagate();
    std::optional<ContradictionReport> check_consistency() const;

    /// Takes a clause out of the live set. Bounds already derived from it
    /// stay; consumers use this to replace a clause they own.
    void retire_clause(ClauseId c);

    ConsumerId register_consumer(AtomId watched, ConsumerFn fn);

    /// Lets a consumer report a violation only it can see, attributed to a
    /// clause. Culprits are traced from the listed bounds.
    void raise_contradiction(ClauseId clause, const std::vector<std::pair<AtomId, Bound>> &traced);

    ExplanationTree explain(const Literal &l, Bound b) const;
    /// Assumption literals reachable from the given atom bounds.
    std::vector<Literal> culprits(const std::vector<std::pair<AtomId, Bound>> &bounds) const;

    double overlapping_factor_lower(ClauseId c) const;
    std::vector<BoundUpdate> apply_constraint1(ClauseId c);
    std::optional<BoundUpdate> apply_constraint2(std::size_t table, const Literal &l);

    const ClauseRecord &clause(ClauseId c) const;
    /// Live clauses in id order.
    std::vector<const ClauseRecord *> clauses() const;
    /// Live clauses mentioning an atom.
    const std::vector<ClauseId> &clauses_of(AtomId a) const { return clauses_of_atom_.at(a); }
    const std::vector<ClauseTable> &tables() const { return tables_; }
    std::optional<std::size_t> find_table(const TableKey &key) const;
    /// Conjunction probability of a sign vector, [0,1] when unknown.
    IntervalProb conjunction(std::size_t table, std::uint64_t lambda) const;
    std::optional<ClauseId> find_clause(const TableKey &key, std::uint64_t signs) const;
    std::vector<AtomId> assumptions() const;
    const BoundEvent &event(EventId e) const { return events_.at(e - 1); }
    std::size_t event_count() const { return events_.size(); }

    const EngineStats &stats() const { return stats_; }
    void reset_stats() { stats_ = {}; }
    /// Pops work items in random order; confluence tests use it.
    void set_shuffle_seed(std::optional<std::uint64_t> seed);

    bool has_pending_contradiction() const { return pending_.has_value(); }

    std::string literal_text(const Literal &l) const;
    std::string clause_text(const Clause &c) const;
    std::string describe(const ContradictionReport &r) const;
    Snapshot snapshot() const;

private:
    enum class WorkKind { Constraint1, Constraint2 };
    struct WorkItem {
        WorkKind kind;
        std::uint32_t index;
    };
    struct Consumer {
        AtomId watched;
        ConsumerFn fn;
    };

    ClauseId install(const Clause &clause, ClauseOrigin origin);
    std::vector<EventId> basis_of(const std::vector<AtomId> &triggers, Bound b) const;
    std::optional<BoundUpdate> narrow(AtomId a, Bound b, double value, SupportRef support,
                                      std::vector<EventId> antecedents);
    /// Re-derives the support of every bound from the fixpoint alone, so that
    /// supports do not depend on the order work was done in.
    void relabel();
    std::optional<BoundUpdate> narrow_literal(const Literal &l, double literal_lower, SupportRef support,
                                              std::vector<EventId> antecedents);
    EventId literal_upper_event(const Literal &l) const;
    void enqueue(WorkKind kind, std::uint32_t index);
    void enqueue_table(std::size_t table);
    void enqueue_consumers(AtomId a);
    bool pop_work(WorkItem &out);
    bool pop_consumer(ConsumerId &out);
    void rebuild_indexes();
    void replay();
    ContradictionReport condition5(AtomId a) const;
    ContradictionReport condition6(ClauseId c) const;
    std::vector<Literal> culprits_from(std::vector<EventId> events) const;
    void fill_culprits(ContradictionReport &r, const std::vector<std::pair<AtomId, Bound>> &bounds) const;
    ExplanationTree explain_event(EventId e, const Literal &lit, Bound b) const;
    double clause_slack(const ClauseRecord &r) const;

    std::vector<NodeRecord> nodes_;
    std::unordered_map<std::string, AtomId> atoms_by_name_;
    std::vector<ClauseRecord> clauses_;
    std::vector<ClauseTable> tables_;
    std::map<TableKey, std::size_t> table_index_;
    std::vector<std::vector<ClauseId>> clauses_of_atom_;
    std::vector<BoundEvent> events_;
    std::vector<Consumer> consumers_;

    std::deque<WorkItem> work_;
    std::vector<char> c1_queued_;
    std::vector<char> c2_queued_;
    std::deque<ConsumerId> consumer_queue_;
    std::vector<char> consumer_queued_;

    std::optional<ContradictionReport> pending_;
    bool propagating_ = false;
    bool relabel_needed_ = false;
    std::optional<std::mt19937_64> shuffle_;
    EngineStats stats_;
};

} // namespace lbms
