#include "lbms/engine.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

namespace lbms {

std::string_view to_string(Bound b)
{
    return b == Bound::Lower ? "lower" : "upper";
}

std::string_view to_string(SupportKind k)
{
    switch (k) {
    case SupportKind::None: return "none";
    case SupportKind::Assumption: return "assumption";
    case SupportKind::Constraint1: return "constraint1";
    case SupportKind::Constraint2: return "constraint2";
    }
    return "?";
}

std::string_view to_string(ClauseOrigin::Kind k)
{
    switch (k) {
    case ClauseOrigin::Kind::UserAssertion: return "user";
    case ClauseOrigin::Kind::Structural: return "structural";
    case ClauseOrigin::Kind::Generated: return "generated";
    case ClauseOrigin::Kind::Sigma: return "sigma";
    }
    return "?";
}

std::string_view to_string(ContradictionReport::Kind k)
{
    switch (k) {
    case ContradictionReport::Kind::Condition5: return "condition5";
    case ContradictionReport::Kind::Condition6: return "condition6";
    case ContradictionReport::Kind::ClauseConflict: return "clause-conflict";
    }
    return "?";
}

ClauseOrigin ClauseOrigin::user(std::string label)
{
    return {Kind::UserAssertion, 0, 0, {}, std::move(label)};
}

ClauseOrigin ClauseOrigin::structural(std::uint32_t variable, std::string label)
{
    return {Kind::Structural, variable, 0, {}, std::move(label)};
}

ClauseOrigin ClauseOrigin::generated(std::uint32_t dependency, std::vector<AtomId> triggers, std::string label)
{
    return {Kind::Generated, dependency, 0, std::move(triggers), std::move(label)};
}

ClauseOrigin ClauseOrigin::sigma(std::uint32_t variable, std::uint64_t generation, std::vector<AtomId> triggers,
                                 std::string label)
{
    return {Kind::Sigma, variable, generation, std::move(triggers), std::move(label)};
}

std::size_t ExplanationTree::depth() const
{
    std::size_t d = 0;
    for (const auto &a : antecedents)
        d = std::max(d, a.depth());
    return d + 1;
}

std::size_t ExplanationTree::size() const
{
    std::size_t n = 1;
    for (const auto &a : antecedents)
        n += a.size();
    return n;
}

namespace {

std::string fixed6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void append_unique(std::vector<EventId> &into, const std::vector<EventId> &from)
{
    for (EventId e : from)
        if (e != kNoEvent && std::find(into.begin(), into.end(), e) == into.end())
            into.push_back(e);
}

} // namespace

// ---------------------------------------------------------------------------
// Atoms and clauses

AtomId Engine::add_atom(std::string name)
{
    if (name.empty())
        throw Error("atom name must not be empty");
    if (atoms_by_name_.contains(name))
        throw Error("duplicate atom '" + name + "'");
    auto id = static_cast<AtomId>(nodes_.size());
    atoms_by_name_.emplace(name, id);
    NodeRecord n;
    n.atom = Atom{id, std::move(name)};
    nodes_.push_back(std::move(n));
    clauses_of_atom_.emplace_back();
    return id;
}

std::optional<AtomId> Engine::find_atom(std::string_view name) const
{
    auto it = atoms_by_name_.find(std::string(name));
    if (it == atoms_by_name_.end())
        return std::nullopt;
    return it->second;
}

const NodeRecord &Engine::node(AtomId a) const
{
    if (a >= nodes_.size())
        throw Error("unknown atom id " + std::to_string(a));
    return nodes_[a];
}

const ClauseRecord &Engine::clause(ClauseId c) const
{
    if (c >= clauses_.size())
        throw Error("unknown clause id " + std::to_string(c));
    return clauses_[c];
}

std::vector<const ClauseRecord *> Engine::clauses() const
{
    std::vector<const ClauseRecord *> out;
    for (const auto &r : clauses_)
        if (r.live)
            out.push_back(&r);
    return out;
}

std::optional<std::size_t> Engine::find_table(const TableKey &key) const
{
    auto it = table_index_.find(key);
    if (it == table_index_.end())
        return std::nullopt;
    return it->second;
}

std::optional<ClauseId> Engine::find_clause(const TableKey &key, std::uint64_t signs) const
{
    auto t = find_table(key);
    if (!t)
        return std::nullopt;
    auto it = tables_[*t].by_signs.find(signs);
    if (it == tables_[*t].by_signs.end())
        return std::nullopt;
    return it->second;
}

IntervalProb Engine::conjunction(std::size_t table, std::uint64_t lambda) const
{
    const auto &t = tables_.at(table);
    auto n = t.key.atoms.size();
    std::uint64_t full = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
    auto it = t.by_signs.find(~lambda & full);
    if (it == t.by_signs.end())
        return IntervalProb::vacuous();
    return clauses_[it->second].clause.prob().complement();
}

std::vector<AtomId> Engine::assumptions() const
{
    std::vector<AtomId> out;
    for (const auto &n : nodes_)
        if (n.is_assumption)
            out.push_back(n.atom.id);
    return out;
}

std::vector<EventId> Engine::basis_of(const std::vector<AtomId> &triggers, Bound b) const
{
    std::vector<EventId> out;
    for (AtomId a : triggers) {
        const auto &n = node(a);
        EventId e = b == Bound::Lower ? n.lower_event : n.upper_event;
        if (e != kNoEvent)
            out.push_back(e);
    }
    return out;
}

ClauseId Engine::install(const Clause &clause, ClauseOrigin origin)
{
    for (const auto &l : clause.literals())
        node(l.atom);
    relabel_needed_ = true;

    TableKey key = clause.key();
    std::uint64_t signs = clause.sign_mask();
    std::size_t t;
    if (auto found = find_table(key)) {
        t = *found;
    } else {
        t = tables_.size();
        tables_.push_back(ClauseTable{key, {}});
        table_index_.emplace(key, t);
        c2_queued_.push_back(0);
    }

    auto existing = tables_[t].by_signs.find(signs);
    if (existing != tables_[t].by_signs.end()) {
        auto &rec = clauses_[existing->second];
        auto merged = intersect(rec.clause.prob(), clause.prob());
        if (!merged) {
            if (!pending_) {
                ContradictionReport r;
                r.kind = ContradictionReport::Kind::ClauseConflict;
                r.clause = rec.id;
                std::vector<EventId> start = rec.lower_basis;
                append_unique(start, rec.upper_basis);
                append_unique(start, basis_of(origin.triggers, Bound::Lower));
                append_unique(start, basis_of(origin.triggers, Bound::Upper));
                r.culprit_assumptions = culprits_from(std::move(start));
                pending_ = std::move(r);
            }
            return rec.id;
        }
        const auto before = rec.clause.prob();
        if (merged->lo() <= before.lo() + kPropagateEpsilon && merged->hi() >= before.hi() - kPropagateEpsilon)
            return rec.id;
        if (merged->lo() > before.lo() + kPropagateEpsilon)
            rec.lower_basis = basis_of(origin.triggers, Bound::Upper);
        if (merged->hi() < before.hi() - kPropagateEpsilon)
            rec.upper_basis = basis_of(origin.triggers, Bound::Lower);
        rec.clause.set_prob(*merged);
        enqueue_table(t);
        return rec.id;
    }

    auto id = static_cast<ClauseId>(clauses_.size());
    auto lower_basis = basis_of(origin.triggers, Bound::Upper);
    auto upper_basis = basis_of(origin.triggers, Bound::Lower);
    clauses_.push_back(ClauseRecord{id, clause, std::move(origin), t, signs, std::move(lower_basis),
                                    std::move(upper_basis), true});
    c1_queued_.push_back(0);
    tables_[t].by_signs.emplace(signs, id);
    for (const auto &l : clause.literals())
        clauses_of_atom_[l.atom].push_back(id);
    ++stats_.clauses_added;
    enqueue_table(t);
    return id;
}

AddResult Engine::add_clause(const Clause &clause, ClauseOrigin origin)
{
    AddResult result;
    result.id = install(clause, std::move(origin));
    if (propagating_)
        result.contradiction = pending_;
    else
        result.contradiction = propagate();
    return result;
}

// ---------------------------------------------------------------------------
// Assumptions

std::optional<ContradictionReport> Engine::assume(const Literal &l, const IntervalProb &p)
{
    auto &n = nodes_.at(l.atom);
    if (n.is_assumption)
        throw Error("'" + n.atom.name + "' is already an assumption; retract it first");
    relabel_needed_ = true;
    IntervalProb over_atom = literal_bounds(l, p);
    n.is_assumption = true;
    n.assumed_literal = l;
    n.assumed_interval = over_atom;
    SupportRef support{SupportKind::Assumption, 0, {}, {}};
    narrow(l.atom, Bound::Lower, over_atom.lo(), support, {});
    if (!pending_)
        narrow(l.atom, Bound::Upper, over_atom.hi(), support, {});
    // Becoming an assumption is news to consumers even when no bound moved.
    if (!n.crossed())
        enqueue_consumers(l.atom);
    if (propagating_)
        return pending_;
    return propagate();
}

std::optional<ContradictionReport> Engine::retract(const Literal &l)
{
    auto &n = nodes_.at(l.atom);
    if (!n.is_assumption)
        throw Error("'" + n.atom.name + "' is not an assumption");
    if (propagating_)
        throw Error("retract called from inside propagation");
    n.is_assumption = false;
    n.assumed_literal.reset();
    n.assumed_interval.reset();
    replay();
    return pending_;
}

void Engine::retire_clause(ClauseId c)
{
    auto &r = clauses_.at(c);
    if (!r.live)
        return;
    r.live = false;
    tables_[r.table].by_signs.erase(r.signs);
    for (const auto &l : r.clause.literals())
        std::erase(clauses_of_atom_[l.atom], c);
    relabel_needed_ = true;
}

void Engine::rebuild_indexes()
{
    for (auto &t : tables_)
        t.by_signs.clear();
    for (auto &list : clauses_of_atom_)
        list.clear();
    for (const auto &r : clauses_) {
        if (!r.live)
            continue;
        tables_[r.table].by_signs.emplace(r.signs, r.id);
        for (const auto &l : r.clause.literals())
            clauses_of_atom_[l.atom].push_back(r.id);
    }
}

void Engine::replay()
{
    pending_.reset();
    work_.clear();
    consumer_queue_.clear();
    std::fill(c1_queued_.begin(), c1_queued_.end(), 0);
    std::fill(c2_queued_.begin(), c2_queued_.end(), 0);
    std::fill(consumer_queued_.begin(), consumer_queued_.end(), 0);

    for (auto &r : clauses_) {
        if (r.live && r.origin.consumer_made())
            r.live = false;
        r.lower_basis.clear();
        r.upper_basis.clear();
    }
    rebuild_indexes();
    events_.clear();

    for (auto &n : nodes_) {
        n.lo = 0.0;
        n.hi = 1.0;
        n.lower_event = kNoEvent;
        n.upper_event = kNoEvent;
    }
    SupportRef support{SupportKind::Assumption, 0, {}, {}};
    for (auto &n : nodes_) {
        if (!n.is_assumption)
            continue;
        narrow(n.atom.id, Bound::Lower, n.assumed_interval->lo(), support, {});
        narrow(n.atom.id, Bound::Upper, n.assumed_interval->hi(), support, {});
    }
    for (const auto &r : clauses_)
        if (r.live)
            enqueue(WorkKind::Constraint1, r.id);
    for (std::size_t t = 0; t < tables_.size(); ++t)
        if (!tables_[t].by_signs.empty())
            enqueue(WorkKind::Constraint2, static_cast<std::uint32_t>(t));
    propagate();
}

// ---------------------------------------------------------------------------
// Bound movement

std::optional<BoundUpdate> Engine::narrow(AtomId a, Bound b, double value, SupportRef support,
                                          std::vector<EventId> antecedents)
{
    auto &n = nodes_[a];
    BoundUpdate upd{a, b, 0.0, 0.0, kNoEvent};
    if (b == Bound::Lower) {
        if (value <= n.lo + kPropagateEpsilon)
            return std::nullopt;
        if (value > n.hi && value - n.hi <= kCompareEpsilon)
            value = n.hi;
        if (value <= n.lo + kPropagateEpsilon)
            return std::nullopt;
        upd.before = n.lo;
        n.lo = value;
    } else {
        if (value >= n.hi - kPropagateEpsilon)
            return std::nullopt;
        if (value < n.lo && n.lo - value <= kCompareEpsilon)
            value = n.lo;
        if (value >= n.hi - kPropagateEpsilon)
            return std::nullopt;
        upd.before = n.hi;
        n.hi = value;
    }
    upd.after = value;

    std::sort(antecedents.begin(), antecedents.end());
    antecedents.erase(std::unique(antecedents.begin(), antecedents.end()), antecedents.end());
    if (!antecedents.empty() && antecedents.front() == kNoEvent)
        antecedents.erase(antecedents.begin());
    auto id = static_cast<EventId>(events_.size() + 1);
    events_.push_back(BoundEvent{id, a, b, value, std::move(support), std::move(antecedents)});
    (b == Bound::Lower ? n.lower_event : n.upper_event) = id;
    upd.event = id;
    ++stats_.bound_updates;
    relabel_needed_ = true;

    if (n.crossed()) {
        if (!pending_)
            pending_ = condition5(a);
        return upd;
    }
    for (ClauseId c : clauses_of_atom_[a])
        enqueue(WorkKind::Constraint1, c);
    enqueue_consumers(a);
    return upd;
}

std::optional<BoundUpdate> Engine::narrow_literal(const Literal &l, double literal_lower, SupportRef support,
                                                  std::vector<EventId> antecedents)
{
    if (l.positive)
        return narrow(l.atom, Bound::Lower, literal_lower, std::move(support), std::move(antecedents));
    return narrow(l.atom, Bound::Upper, 1.0 - literal_lower, std::move(support), std::move(antecedents));
}

EventId Engine::literal_upper_event(const Literal &l) const
{
    const auto &n = nodes_[l.atom];
    return l.positive ? n.upper_event : n.lower_event;
}

// ---------------------------------------------------------------------------
// Constraints

namespace {

struct Overlap {
    double value = 0.0;
    std::vector<ClauseId> contributors;
};

} // namespace

static Overlap overlap_of(const std::vector<ClauseRecord> &clauses, const ClauseTable &table,
                          const ClauseRecord &target)
{
    Overlap out;
    auto n = table.key.atoms.size();
    std::uint64_t full = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
    for (const auto &[signs, cid] : table.by_signs) {
        // The conjunction complementary to this clause, compared with the
        // target clause's own literal signs.
        std::uint64_t lambda = ~signs & full;
        int agree = std::popcount(~(lambda ^ target.signs) & full);
        int delta = std::max(0, agree - 1);
        if (delta == 0)
            continue;
        double conj_lo = 1.0 - clauses[cid].clause.prob().hi();
        if (conj_lo <= 0.0)
            continue;
        out.value += conj_lo * delta;
        out.contributors.push_back(cid);
    }
    return out;
}

double Engine::overlapping_factor_lower(ClauseId c) const
{
    const auto &r = clause(c);
    return overlap_of(clauses_, tables_[r.table], r).value;
}

std::vector<BoundUpdate> Engine::apply_constraint1(ClauseId c)
{
    std::vector<BoundUpdate> updates;
    const auto &rec = clause(c);
    if (!rec.live)
        return updates;
    ++stats_.constraint1_applications;

    auto overlap = overlap_of(clauses_, tables_[rec.table], rec);
    const auto &lits = rec.clause.literals();
    std::vector<double> upper(lits.size());
    for (std::size_t j = 0; j < lits.size(); ++j) {
        const auto &n = nodes_[lits[j].atom];
        upper[j] = lits[j].positive ? n.hi : 1.0 - n.lo;
    }
    const double clause_lo = rec.clause.prob().lo();
    double total = 0.0;
    for (double u : upper)
        total += u;
    if (lits.size() > 1 && total - overlap.value < clause_lo - kCompareEpsilon) {
        // No literal can be raised far enough: the clause itself is violated.
        // A unit clause is a bound on its atom and crosses it instead.
        if (!pending_)
            pending_ = condition6(c);
        return updates;
    }
    for (std::size_t i = 0; i < lits.size(); ++i) {
        double others = 0.0;
        for (std::size_t j = 0; j < lits.size(); ++j)
            if (j != i)
                others += upper[j];
        double candidate = clause_lo + overlap.value - others;
        const auto &n = nodes_[lits[i].atom];
        double current = lits[i].positive ? n.lo : 1.0 - n.hi;
        if (candidate <= current + kPropagateEpsilon)
            continue;

        std::vector<EventId> ante;
        for (std::size_t j = 0; j < lits.size(); ++j)
            if (j != i)
                ante.push_back(literal_upper_event(lits[j]));
        append_unique(ante, rec.lower_basis);
        for (ClauseId k : overlap.contributors)
            append_unique(ante, clauses_[k].upper_basis);
        SupportRef support{SupportKind::Constraint1, c, {}, {}};
        if (auto u = narrow_literal(lits[i], candidate, std::move(support), std::move(ante)))
            updates.push_back(*u);
        if (pending_)
            break;
    }
    return updates;
}

std::optional<BoundUpdate> Engine::apply_constraint2(std::size_t table, const Literal &l)
{
    const auto &t = tables_.at(table);
    auto it = std::lower_bound(t.key.atoms.begin(), t.key.atoms.end(), l.atom);
    if (it == t.key.atoms.end() || *it != l.atom)
        throw Error("atom '" + name(l.atom) + "' is not in the table");
    ++stats_.constraint2_applications;
    auto pos_in_key = static_cast<unsigned>(it - t.key.atoms.begin());

    // Known conjunctions containing l are the complements of the clauses
    // containing the opposite literal.
    double sum = 0.0;
    std::vector<ClauseId> contributors;
    std::vector<EventId> ante;
    for (const auto &[signs, cid] : t.by_signs) {
        bool clause_positive = (signs >> pos_in_key) & 1u;
        if (clause_positive == l.positive)
            continue;
        double contrib = 1.0 - clauses_[cid].clause.prob().hi();
        if (contrib <= 0.0)
            continue;
        sum += contrib;
        contributors.push_back(cid);
        append_unique(ante, clauses_[cid].upper_basis);
    }
    const auto &n = nodes_[l.atom];
    double current = l.positive ? n.lo : 1.0 - n.hi;
    if (sum <= current + kPropagateEpsilon)
        return std::nullopt;
    SupportRef support{SupportKind::Constraint2, 0, t.key, std::move(contributors)};
    return narrow_literal(l, sum, std::move(support), std::move(ante));
}

// ---------------------------------------------------------------------------
// Propagation

void Engine::enqueue(WorkKind kind, std::uint32_t index)
{
    auto &flags = kind == WorkKind::Constraint1 ? c1_queued_ : c2_queued_;
    if (flags[index])
        return;
    flags[index] = 1;
    work_.push_back({kind, index});
}

void Engine::enqueue_table(std::size_t table)
{
    enqueue(WorkKind::Constraint2, static_cast<std::uint32_t>(table));
    for (const auto &[signs, cid] : tables_[table].by_signs)
        enqueue(WorkKind::Constraint1, cid);
}

void Engine::enqueue_consumers(AtomId a)
{
    for (ConsumerId c : nodes_[a].consumers) {
        if (consumer_queued_[c])
            continue;
        consumer_queued_[c] = 1;
        consumer_queue_.push_back(c);
    }
}

bool Engine::pop_work(WorkItem &out)
{
    if (work_.empty())
        return false;
    if (shuffle_) {
        std::uniform_int_distribution<std::size_t> pick(0, work_.size() - 1);
        std::swap(work_[pick(*shuffle_)], work_.front());
    }
    out = work_.front();
    work_.pop_front();
    (out.kind == WorkKind::Constraint1 ? c1_queued_ : c2_queued_)[out.index] = 0;
    return true;
}

bool Engine::pop_consumer(ConsumerId &out)
{
    if (consumer_queue_.empty())
        return false;
    if (shuffle_) {
        std::uniform_int_distribution<std::size_t> pick(0, consumer_queue_.size() - 1);
        std::swap(consumer_queue_[pick(*shuffle_)], consumer_queue_.front());
    }
    out = consumer_queue_.front();
    consumer_queue_.pop_front();
    consumer_queued_[out] = 0;
    return true;
}

std::optional<ContradictionReport> Engine::propagate()
{
    if (propagating_)
        return pending_;
    propagating_ = true;
    while (!pending_) {
        WorkItem w;
        if (pop_work(w)) {
            if (w.kind == WorkKind::Constraint1) {
                apply_constraint1(w.index);
            } else {
                const auto atoms = tables_[w.index].key.atoms;
                for (AtomId a : atoms) {
                    apply_constraint2(w.index, pos(a));
                    if (pending_)
                        break;
                    apply_constraint2(w.index, neg(a));
                    if (pending_)
                        break;
                }
            }
            continue;
        }
        ConsumerId c;
        if (pop_consumer(c)) {
            const auto &n = nodes_[consumers_[c].watched];
            if (n.crossed())
                continue;
            ++stats_.consumer_firings;
            ConsumerFn fn = consumers_[c].fn;
            fn(*this, n.atom.id, n.interval());
            continue;
        }
        break;
    }
    propagating_ = false;
    if (!pending_)
        pending_ = check_consistency();
    if (!pending_ && relabel_needed_)
        relabel();
    return pending_;
}

void Engine::relabel()
{
    relabel_needed_ = false;
    // Bound slot 2a is the lower bound of atom a, 2a+1 its upper bound. A
    // bound is settled in the first round in which some rule reproduces its
    // value from bounds settled earlier; ties go to the assumption, then
    // Constraint 2, then Constraint 1, then the shortest and smallest key.
    const std::size_t slots = 2 * nodes_.size();
    std::vector<char> settled(slots, 0);
    std::vector<EventId> label(slots, kNoEvent);
    auto slot_of = [](AtomId a, Bound b) { return 2 * std::size_t{a} + (b == Bound::Upper ? 1 : 0); };
    // The slot holding the upper bound of a literal.
    auto upper_slot = [&](const Literal &l) { return slot_of(l.atom, l.positive ? Bound::Upper : Bound::Lower); };

    std::vector<std::optional<Overlap>> overlaps(clauses_.size());
    auto overlap = [&](ClauseId c) -> const Overlap & {
        if (!overlaps[c])
            overlaps[c] = overlap_of(clauses_, tables_[clauses_[c].table], clauses_[c]);
        return *overlaps[c];
    };

    using Rank = std::tuple<int, std::size_t, std::vector<AtomId>, std::uint64_t>;
    struct Choice {
        Rank rank;
        SupportRef support;
        std::vector<EventId> antecedents;
    };

    // A consumer-made clause was computed from bounds of its trigger atoms;
    // it is cited through the current, settled versions of those bounds.
    auto cite_triggers = [&](const ClauseRecord &rec, Bound b, std::vector<EventId> &ante) {
        for (AtomId t : rec.origin.triggers) {
            if (!settled[slot_of(t, b)])
                return false;
            ante.push_back(label[slot_of(t, b)]);
        }
        return true;
    };

    auto evaluate = [&](std::size_t slot) -> std::optional<Choice> {
        const AtomId a = static_cast<AtomId>(slot / 2);
        const Bound b = slot % 2 ? Bound::Upper : Bound::Lower;
        const auto &n = nodes_[a];
        const Literal target{a, b == Bound::Lower};
        const double want = b == Bound::Lower ? n.lo : 1.0 - n.hi;
        if (n.is_assumption) {
            double assumed = b == Bound::Lower ? n.assumed_interval->lo() : 1.0 - n.assumed_interval->hi();
            if (std::abs(assumed - want) <= kCompareEpsilon)
                return Choice{Rank{0, 0, {}, 0}, SupportRef{SupportKind::Assumption, 0, {}, {}}, {}};
        }
        std::optional<Choice> best;
        auto offer = [&](Choice c) {
            if (!best || c.rank < best->rank)
                best = std::move(c);
        };
        std::set<std::size_t> tables_seen;
        for (ClauseId cid : clauses_of_atom_[a]) {
            const auto &rec = clauses_[cid];
            if (!rec.live)
                continue;
            tables_seen.insert(rec.table);
            const auto &lits = rec.clause.literals();
            if (std::find(lits.begin(), lits.end(), target) == lits.end())
                continue;
            double others = 0.0;
            bool ready = true;
            std::vector<EventId> ante;
            for (const auto &l : lits) {
                if (l.atom == a)
                    continue;
                const auto &m = nodes_[l.atom];
                others += l.positive ? m.hi : 1.0 - m.lo;
                ready = ready && settled[upper_slot(l)];
                ante.push_back(label[upper_slot(l)]);
            }
            const auto &ov = overlap(cid);
            ready = ready && cite_triggers(rec, Bound::Upper, ante);
            for (ClauseId k : ov.contributors)
                ready = ready && cite_triggers(clauses_[k], Bound::Lower, ante);
            if (!ready || std::abs(rec.clause.prob().lo() + ov.value - others - want) > kCompareEpsilon)
                continue;
            offer(Choice{Rank{2, lits.size(), rec.clause.key().atoms, rec.signs},
                         SupportRef{SupportKind::Constraint1, cid, {}, {}}, std::move(ante)});
        }
        for (std::size_t t : tables_seen) {
            const auto &table = tables_[t];
            auto pos_in_key = static_cast<unsigned>(
                std::lower_bound(table.key.atoms.begin(), table.key.atoms.end(), a) - table.key.atoms.begin());
            double sum = 0.0;
            bool ready = true;
            std::vector<ClauseId> contributors;
            std::vector<EventId> ante;
            for (const auto &[signs, cid] : table.by_signs) {
                if ((((signs >> pos_in_key) & 1u) != 0) == target.positive)
                    continue;
                double contrib = 1.0 - clauses_[cid].clause.prob().hi();
                if (contrib <= 0.0)
                    continue;
                sum += contrib;
                contributors.push_back(cid);
                ready = ready && cite_triggers(clauses_[cid], Bound::Lower, ante);
            }
            if (!ready || contributors.empty() || std::abs(sum - want) > kCompareEpsilon)
                continue;
            offer(Choice{Rank{1, table.key.atoms.size(), table.key.atoms, 0},
                         SupportRef{SupportKind::Constraint2, 0, table.key, contributors}, std::move(ante)});
        }
        return best;
    };

    std::vector<std::vector<ClauseId>> triggered(nodes_.size());
    for (const auto &r : clauses_)
        if (r.live)
            for (AtomId t : r.origin.triggers)
                triggered[t].push_back(r.id);

    std::vector<std::size_t> frontier;
    for (std::size_t s = 0; s < slots; ++s) {
        const auto &n = nodes_[s / 2];
        if (s % 2 ? n.hi >= 1.0 : n.lo <= 0.0)
            settled[s] = 1;
        else
            frontier.push_back(s);
    }
    while (!frontier.empty()) {
        std::vector<std::pair<std::size_t, Choice>> found;
        for (std::size_t s : frontier)
            if (auto c = evaluate(s))
                found.emplace_back(s, std::move(*c));
        if (found.empty())
            break;
        std::set<std::size_t> next;
        for (auto &[s, c] : found) {
            const AtomId a = static_cast<AtomId>(s / 2);
            const Bound b = s % 2 ? Bound::Upper : Bound::Lower;
            auto &n = nodes_[a];
            auto &ante = c.antecedents;
            std::sort(ante.begin(), ante.end());
            ante.erase(std::unique(ante.begin(), ante.end()), ante.end());
            if (!ante.empty() && ante.front() == kNoEvent)
                ante.erase(ante.begin());
            auto id = static_cast<EventId>(events_.size() + 1);
            events_.push_back(BoundEvent{id, a, b, b == Bound::Lower ? n.lo : n.hi, std::move(c.support), std::move(ante)});
            label[s] = id;
            settled[s] = 1;
            (b == Bound::Lower ? n.lower_event : n.upper_event) = id;
            for (const auto *list : {&clauses_of_atom_[a], &triggered[a]})
                for (ClauseId cid : *list)
                    for (const auto &l : clauses_[cid].clause.literals())
                        for (std::size_t k : {slot_of(l.atom, Bound::Lower), slot_of(l.atom, Bound::Upper)})
                            if (!settled[k])
                                next.insert(k);
        }
        frontier.clear();
        for (std::size_t k : next)
            if (!settled[k])
                frontier.push_back(k);
    }
}

ConsumerId Engine::register_consumer(AtomId watched, ConsumerFn fn)
{
    auto &n = nodes_.at(watched);
    auto id = static_cast<ConsumerId>(consumers_.size());
    consumers_.push_back({watched, std::move(fn)});
    consumer_queued_.push_back(0);
    n.consumers.push_back(id);
    if (n.lo > 0.0 || n.hi < 1.0) {
        consumer_queued_[id] = 1;
        consumer_queue_.push_back(id);
        if (!propagating_)
            propagate();
    }
    return id;
}

void Engine::set_shuffle_seed(std::optional<std::uint64_t> seed)
{
    if (seed)
        shuffle_.emplace(*seed);
    else
        shuffle_.reset();
}

// ---------------------------------------------------------------------------
// Consistency

double Engine::clause_slack(const ClauseRecord &r) const
{
    double sum = 0.0;
    for (const auto &l : r.clause.literals()) {
        const auto &n = nodes_[l.atom];
        sum += l.positive ? n.hi : 1.0 - n.lo;
    }
    return sum - overlap_of(clauses_, tables_[r.table], r).value - r.clause.prob().lo();
}

std::optional<ContradictionReport> Engine::check_consistency() const
{
    if (pending_)
        return pending_;
    for (const auto &n : nodes_)
        if (n.lo > n.hi + kCompareEpsilon)
            return condition5(n.atom.id);
    for (const auto &r : clauses_)
        if (r.live && clause_slack(r) < -kCompareEpsilon)
            return condition6(r.id);
    return std::nullopt;
}

void Engine::raise_contradiction(ClauseId c, const std::vector<std::pair<AtomId, Bound>> &traced)
{
    if (pending_)
        return;
    ContradictionReport r;
    r.kind = ContradictionReport::Kind::Condition6;
    r.clause = c;
    fill_culprits(r, traced);
    pending_ = std::move(r);
}

std::vector<Literal> Engine::culprits_from(std::vector<EventId> stack) const
{
    std::set<Literal> found;
    std::vector<char> seen(events_.size() + 1, 0);
    while (!stack.empty()) {
        EventId e = stack.back();
        stack.pop_back();
        if (e == kNoEvent || seen[e])
            continue;
        seen[e] = 1;
        const auto &ev = event(e);
        if (ev.support.kind == SupportKind::Assumption)
            found.insert(nodes_[ev.atom].assumed_literal.value_or(pos(ev.atom)));
        stack.insert(stack.end(), ev.antecedents.begin(), ev.antecedents.end());
    }
    return {found.begin(), found.end()};
}

std::vector<Literal> Engine::culprits(const std::vector<std::pair<AtomId, Bound>> &bounds) const
{
    std::vector<EventId> start;
    for (const auto &[a, b] : bounds) {
        const auto &n = node(a);
        start.push_back(b == Bound::Lower ? n.lower_event : n.upper_event);
    }
    return culprits_from(std::move(start));
}

void Engine::fill_culprits(ContradictionReport &r, const std::vector<std::pair<AtomId, Bound>> &bounds) const
{
    r.culprit_assumptions = culprits(bounds);
    for (const auto &[a, b] : bounds)
        r.trace.push_back(explain(pos(a), b));
}

ContradictionReport Engine::condition5(AtomId a) const
{
    ContradictionReport r;
    r.kind = ContradictionReport::Kind::Condition5;
    r.atom = a;
    fill_culprits(r, {{a, Bound::Lower}, {a, Bound::Upper}});
    return r;
}

ContradictionReport Engine::condition6(ClauseId c) const
{
    ContradictionReport r;
    r.kind = ContradictionReport::Kind::Condition6;
    r.clause = c;
    const auto &rec = clauses_[c];
    std::vector<std::pair<AtomId, Bound>> bounds;
    for (const auto &l : rec.clause.literals())
        bounds.emplace_back(l.atom, l.positive ? Bound::Upper : Bound::Lower);
    fill_culprits(r, bounds);
    // A consumer-made clause also answers to the bounds it was computed from.
    std::vector<EventId> start = rec.lower_basis;
    for (ClauseId k : overlap_of(clauses_, tables_[rec.table], rec).contributors)
        append_unique(start, clauses_[k].upper_basis);
    for (const auto &l : culprits_from(std::move(start)))
        if (std::find(r.culprit_assumptions.begin(), r.culprit_assumptions.end(), l) == r.culprit_assumptions.end())
            r.culprit_assumptions.push_back(l);
    std::sort(r.culprit_assumptions.begin(), r.culprit_assumptions.end());
    return r;
}

// ---------------------------------------------------------------------------
// Explanation

ExplanationTree Engine::explain(const Literal &l, Bound b) const
{
    const auto &n = node(l.atom);
    Bound atom_bound = l.positive ? b : opposite(b);
    EventId e = atom_bound == Bound::Lower ? n.lower_event : n.upper_event;
    return explain_event(e, l, b);
}

ExplanationTree Engine::explain_event(EventId e, const Literal &lit, Bound b) const
{
    ExplanationTree t;
    t.literal = lit;
    t.bound = b;
    if (e == kNoEvent) {
        t.value = b == Bound::Lower ? 0.0 : 1.0;
        return t;
    }
    const auto &ev = event(e);
    t.value = lit.positive ? ev.value : 1.0 - ev.value;
    t.support = ev.support;

    std::vector<ClauseId> cited;
    if (ev.support.kind == SupportKind::Constraint1)
        cited.push_back(ev.support.clause);
    else if (ev.support.kind == SupportKind::Constraint2)
        cited = ev.support.clauses;
    for (ClauseId c : cited) {
        const auto &origin = clauses_[c].origin;
        if (!origin.consumer_made())
            continue;
        for (AtomId g : origin.triggers)
            if (std::find(t.generators.begin(), t.generators.end(), g) == t.generators.end())
                t.generators.push_back(g);
    }
    for (EventId a : ev.antecedents) {
        assert(a < e);
        const auto &aev = event(a);
        t.antecedents.push_back(explain_event(a, pos(aev.atom), aev.bound));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Rendering

std::string Engine::literal_text(const Literal &l) const
{
    return (l.positive ? "" : "~") + name(l.atom);
}

std::string Engine::clause_text(const Clause &c) const
{
    std::string out = "(";
    bool first = true;
    for (const auto &l : c.literals()) {
        if (!first)
            out += " | ";
        out += literal_text(l);
        first = false;
    }
    return out + ")";
}

std::string Engine::describe(const ContradictionReport &r) const
{
    std::ostringstream os;
    os << "contradiction " << to_string(r.kind) << " on ";
    if (r.kind == ContradictionReport::Kind::Condition5) {
        const auto &n = node(r.atom);
        os << n.atom.name << " [" << fixed6(n.lo) << " " << fixed6(n.hi) << "]";
    } else {
        const auto &c = clause(r.clause);
        os << clause_text(c.clause) << " " << to_string(c.clause.prob());
    }
    os << "; culprit assumptions:";
    if (r.culprit_assumptions.empty())
        os << " (none: asserted clauses alone)";
    for (const auto &l : r.culprit_assumptions)
        os << " " << literal_text(l);
    return os.str();
}

Snapshot Engine::snapshot() const
{
    Snapshot s;
    for (const auto &n : nodes_) {
        auto kind_of = [this](EventId e) { return e == kNoEvent ? SupportKind::None : event(e).support.kind; };
        s.atoms.push_back(
            AtomState{n.atom.name, n.lo, n.hi, kind_of(n.lower_event), kind_of(n.upper_event), n.is_assumption});
    }
    std::sort(s.atoms.begin(), s.atoms.end(), [](const auto &a, const auto &b) { return a.name < b.name; });
    for (const auto &r : clauses_) {
        if (!r.live)
            continue;
        s.clauses.push_back(ClauseState{r.id, clause_text(r.clause), r.clause.prob().lo(), r.clause.prob().hi(),
                                        r.origin.kind, r.origin.label});
    }
    std::sort(s.clauses.begin(), s.clauses.end(), [](const auto &a, const auto &b) { return a.text < b.text; });
    return s;
}

std::string Snapshot::render() const
{
    std::ostringstream os;
    for (const auto &a : atoms) {
        os << "atom " << a.name << " [" << fixed6(a.lo) << " " << fixed6(a.hi) << "] lower=" << to_string(a.lower_support)
           << " upper=" << to_string(a.upper_support);
        if (a.assumption)
            os << " assumption";
        os << "\n";
    }
    for (const auto &c : clauses) {
        os << "clause " << c.text << " [" << fixed6(c.lo) << " " << fixed6(c.hi) << "] " << to_string(c.origin);
        if (!c.label.empty())
            os << " " << c.label;
        os << "\n";
    }
    return os.str();
}

} // namespace lbms
