#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lbms {

/// Tolerance used by every comparison between probability bounds.
inline constexpr double kCompareEpsilon = 1e-9;

/// Bound changes smaller than this neither enqueue work nor fire consumers.
inline constexpr double kPropagateEpsilon = 1e-12;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an interval would have lo > hi. Callers inside the engine
/// treat this as a contradiction rather than a programming error.
class EmptyInterval : public Error {
public:
    EmptyInterval(double lo, double hi);
    double lo;
    double hi;
};

class MalformedClause : public Error {
public:
    using Error::Error;
};

/// A closed probability interval [lo, hi] with 0 <= lo <= hi <= 1.
///
/// Values within kCompareEpsilon outside [0,1] are clamped, and lo > hi by
/// less than kCompareEpsilon collapses to a point. Anything worse throws
/// EmptyInterval.
class IntervalProb {
public:
    constexpr IntervalProb() = default;
    IntervalProb(double lo, double hi);

    static IntervalProb point(double p) { return {p, p}; }
    static constexpr IntervalProb vacuous() { return IntervalProb{}; }
    /// Same as the constructor but reports an empty interval as nullopt.
    static std::optional<IntervalProb> checked(double lo, double hi);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double width() const { return hi_ - lo_; }

    bool is_vacuous() const { return lo_ <= 0.0 && hi_ >= 1.0; }
    bool is_point(double eps = kCompareEpsilon) const { return hi_ - lo_ <= eps; }
    bool contains(const IntervalProb &other, double eps = kCompareEpsilon) const;
    bool contains(double p, double eps = kCompareEpsilon) const;

    /// [1 - hi, 1 - lo]
    IntervalProb complement() const;

    bool operator==(const IntervalProb &) const = default;

private:
    double lo_ = 0.0;
    double hi_ = 1.0;
};

/// [max(lo), min(hi)], or nullopt when the intervals are disjoint.
std::optional<IntervalProb> intersect(const IntervalProb &a, const IntervalProb &b);

std::string to_string(const IntervalProb &p, int decimals = 6);

using AtomId = std::uint32_t;

struct Atom {
    AtomId id = 0;
    std::string name;
};

struct Literal {
    AtomId atom = 0;
    bool positive = true;

    Literal negated() const { return {atom, !positive}; }
    auto operator<=>(const Literal &) const = default;
};

inline Literal pos(AtomId a) { return {a, true}; }
inline Literal neg(AtomId a) { return {a, false}; }

/// Interval of a literal given the interval of its atom. The mapping is its
/// own inverse, so it also pushes a literal bound back onto the atom.
IntervalProb literal_bounds(const Literal &l, const IntervalProb &atom_interval);

/// Sorted set of atom ids; two clauses share a table iff their keys match.
struct TableKey {
    std::vector<AtomId> atoms;
    auto operator<=>(const TableKey &) const = default;
};

/// A disjunction of literals over distinct atoms, sorted by atom id.
class Clause {
public:
    /// Literals must be non-empty with distinct atoms; use normalize_clause
    /// for raw input.
    Clause(std::vector<Literal> literals, IntervalProb prob);

    const std::vector<Literal> &literals() const { return literals_; }
    const IntervalProb &prob() const { return prob_; }
    void set_prob(const IntervalProb &p) { prob_ = p; }
    std::size_t size() const { return literals_.size(); }

    TableKey key() const;
    /// Bit i set when the literal over key().atoms[i] is positive.
    std::uint64_t sign_mask() const;

    bool operator==(const Clause &) const = default;

private:
    std::vector<Literal> literals_;
    IntervalProb prob_;
};

/// De Morgan: the clause equivalent to the negation of a conjunction, with
/// the interval complemented. Throws MalformedClause on empty input or a
/// repeated atom.
Clause conjunction_to_clause(std::span<const Literal> conjunction, const IntervalProb &p);

/// Reads the conjunction back from a clause (inverse of conjunction_to_clause).
std::pair<std::vector<Literal>, IntervalProb> clause_to_conjunction(const Clause &c);

/// Deduplicates literals. Returns nullopt when the clause is a tautology
/// (contains both signs of an atom). Throws MalformedClause on empty input.
std::optional<Clause> normalize_clause(std::span<const Literal> literals, const IntervalProb &p);

} // namespace lbms
