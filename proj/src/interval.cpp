#include "lbms/interval.hpp"

#include <algorithm>
#include <cstdio>

namespace lbms {

namespace {

std::string format_pair(double lo, double hi)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "[%.17g, %.17g]", lo, hi);
    return buf;
}

double clamp_unit(double v)
{
    if (v < 0.0 && v >= -kCompareEpsilon)
        return 0.0;
    if (v > 1.0 && v <= 1.0 + kCompareEpsilon)
        return 1.0;
    return v;
}

} // namespace

EmptyInterval::EmptyInterval(double l, double h) :
    Error("empty probability interval " + format_pair(l, h)), lo(l), hi(h)
{
}

IntervalProb::IntervalProb(double lo, double hi) : lo_(clamp_unit(lo)), hi_(clamp_unit(hi))
{
    if (lo_ > hi_ && lo_ - hi_ <= kCompareEpsilon)
        lo_ = hi_;
    if (!(lo_ >= 0.0 && hi_ <= 1.0 && lo_ <= hi_))
        throw EmptyInterval(lo, hi);
}

std::optional<IntervalProb> IntervalProb::checked(double lo, double hi)
{
    try {
        return IntervalProb(lo, hi);
    } catch (const EmptyInterval &) {
        return std::nullopt;
    }
}

bool IntervalProb::contains(const IntervalProb &other, double eps) const
{
    return lo_ <= other.lo_ + eps && other.hi_ <= hi_ + eps;
}

bool IntervalProb::contains(double p, double eps) const
{
    return lo_ <= p + eps && p <= hi_ + eps;
}

IntervalProb IntervalProb::complement() const
{
    return {1.0 - hi_, 1.0 - lo_};
}

std::optional<IntervalProb> intersect(const IntervalProb &a, const IntervalProb &b)
{
    return IntervalProb::checked(std::max(a.lo(), b.lo()), std::min(a.hi(), b.hi()));
}

std::string to_string(const IntervalProb &p, int decimals)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "[%.*f %.*f]", decimals, p.lo(), decimals, p.hi());
    return buf;
}

IntervalProb literal_bounds(const Literal &l, const IntervalProb &atom_interval)
{
    return l.positive ? atom_interval : atom_interval.complement();
}

Clause::Clause(std::vector<Literal> literals, IntervalProb prob) :
    literals_(std::move(literals)), prob_(prob)
{
    if (literals_.empty())
        throw MalformedClause("clause has no literals");
    std::sort(literals_.begin(), literals_.end());
    for (std::size_t i = 1; i < literals_.size(); ++i)
        if (literals_[i].atom == literals_[i - 1].atom)
            throw MalformedClause("clause mentions atom " + std::to_string(literals_[i].atom) + " twice");
    if (literals_.size() > 64)
        throw MalformedClause("clause has more than 64 literals");
}

TableKey Clause::key() const
{
    TableKey k;
    k.atoms.reserve(literals_.size());
    for (const auto &l : literals_)
        k.atoms.push_back(l.atom);
    return k;
}

std::uint64_t Clause::sign_mask() const
{
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < literals_.size(); ++i)
        if (literals_[i].positive)
            mask |= std::uint64_t{1} << i;
    return mask;
}

Clause conjunction_to_clause(std::span<const Literal> conjunction, const IntervalProb &p)
{
    if (conjunction.empty())
        throw MalformedClause("empty conjunction");
    std::vector<Literal> lits;
    lits.reserve(conjunction.size());
    for (const auto &l : conjunction)
        lits.push_back(l.negated());
    return Clause(std::move(lits), p.complement());
}

std::pair<std::vector<Literal>, IntervalProb> clause_to_conjunction(const Clause &c)
{
    std::vector<Literal> lits;
    lits.reserve(c.size());
    for (const auto &l : c.literals())
        lits.push_back(l.negated());
    return {std::move(lits), c.prob().complement()};
}

std::optional<Clause> normalize_clause(std::span<const Literal> literals, const IntervalProb &p)
{
    if (literals.empty())
        throw MalformedClause("empty clause");
    std::vector<Literal> lits(literals.begin(), literals.end());
    std::sort(lits.begin(), lits.end());
    lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
    for (std::size_t i = 1; i < lits.size(); ++i)
        if (lits[i].atom == lits[i - 1].atom)
            return std::nullopt;
    return Clause(std::move(lits), p);
}

} // namespace lbms
