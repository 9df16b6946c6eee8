#include "lbms/simplex.hpp"

#include "lbms/interval.hpp"

#include <cmath>
#include <limits>

namespace lbms::oracle {

namespace {

constexpr double kPivotEps = 1e-11;

} // namespace

void LinearProgram::add_row(std::vector<double> coefficients, Sense sense, double b)
{
    if (coefficients.size() != columns)
        throw Error("LP row has wrong width");
    rows.push_back(std::move(coefficients));
    senses.push_back(sense);
    rhs.push_back(b);
}

void Simplex::Tableau::pivot(std::size_t row, std::size_t col)
{
    double p = at(row, col);
    for (std::size_t c = 0; c < width; ++c)
        at(row, c) /= p;
    for (std::size_t r = 0; r < m; ++r) {
        if (r == row)
            continue;
        double f = at(r, col);
        if (f == 0.0)
            continue;
        for (std::size_t c = 0; c < width; ++c)
            at(r, c) -= f * at(row, c);
        at(r, col) = 0.0;
    }
    basis[row] = col;
}

bool Simplex::iterate(Tableau &t, std::vector<double> &cost, std::size_t usable)
{
    // `cost` holds reduced costs over all columns plus the negated objective
    // value in the rhs slot; it is kept canonical for the current basis.
    const std::size_t rhs = t.width - 1;
    for (;;) {
        std::size_t enter = usable;
        for (std::size_t c = 0; c < usable; ++c) {
            if (cost[c] < -kPivotEps) {
                enter = c;
                break;
            }
        }
        if (enter == usable)
            return true;
        std::size_t leave = t.m;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < t.m; ++r) {
            double a = t.at(r, enter);
            if (a <= kPivotEps)
                continue;
            double ratio = t.at(r, rhs) / a;
            if (ratio < best - 1e-13 || (std::abs(ratio - best) <= 1e-13 && t.basis[r] < t.basis[leave])) {
                best = ratio;
                leave = r;
            }
        }
        if (leave == t.m)
            return false;
        t.pivot(leave, enter);
        double f = cost[enter];
        for (std::size_t c = 0; c < t.width; ++c)
            cost[c] -= f * t.at(leave, c);
        cost[enter] = 0.0;
    }
}

Simplex::Simplex(const LinearProgram &lp) : n_(lp.columns)
{
    const std::size_t m = lp.rows.size();
    std::size_t slacks = 0;
    std::size_t artificials = 0;
    std::vector<double> sign(m, 1.0);
    std::vector<LinearProgram::Sense> sense = lp.senses;
    for (std::size_t r = 0; r < m; ++r) {
        if (lp.rhs[r] < 0.0) {
            sign[r] = -1.0;
            if (sense[r] == LinearProgram::Sense::LessEqual)
                sense[r] = LinearProgram::Sense::GreaterEqual;
            else if (sense[r] == LinearProgram::Sense::GreaterEqual)
                sense[r] = LinearProgram::Sense::LessEqual;
        }
        if (sense[r] != LinearProgram::Sense::Equal)
            ++slacks;
        if (sense[r] != LinearProgram::Sense::LessEqual)
            ++artificials;
    }
    structural_ = n_ + slacks;
    const std::size_t total = structural_ + artificials;
    t_.m = m;
    t_.width = total + 1;
    t_.cells.assign(m * t_.width, 0.0);
    t_.basis.assign(m, 0);

    std::size_t next_slack = n_;
    std::size_t next_art = structural_;
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n_; ++c)
            t_.at(r, c) = sign[r] * lp.rows[r][c];
        t_.at(r, total) = sign[r] * lp.rhs[r];
        switch (sense[r]) {
        case LinearProgram::Sense::LessEqual:
            t_.at(r, next_slack) = 1.0;
            t_.basis[r] = next_slack++;
            break;
        case LinearProgram::Sense::GreaterEqual:
            t_.at(r, next_slack++) = -1.0;
            t_.at(r, next_art) = 1.0;
            t_.basis[r] = next_art++;
            break;
        case LinearProgram::Sense::Equal:
            t_.at(r, next_art) = 1.0;
            t_.basis[r] = next_art++;
            break;
        }
    }

    // Phase 1: minimise the sum of artificials.
    std::vector<double> cost(t_.width, 0.0);
    for (std::size_t c = structural_; c < total; ++c)
        cost[c] = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
        if (t_.basis[r] < structural_)
            continue;
        for (std::size_t c = 0; c < t_.width; ++c)
            cost[c] -= t_.at(r, c);
    }
    iterate(t_, cost, total);
    feasible_ = -cost[total] <= 1e-9;
    if (!feasible_)
        return;

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are redundant and stay pinned at zero.
    for (std::size_t r = 0; r < m; ++r) {
        if (t_.basis[r] < structural_)
            continue;
        for (std::size_t c = 0; c < structural_; ++c) {
            if (std::abs(t_.at(r, c)) > 1e-9) {
                t_.pivot(r, c);
                break;
            }
        }
    }
}

std::optional<double> Simplex::minimize(std::span<const double> c) const
{
    if (!feasible_)
        return std::nullopt;
    if (c.size() != n_)
        throw Error("objective has wrong width");
    Tableau t = t_;
    std::vector<double> cost(t.width, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
        cost[j] = c[j];
    for (std::size_t r = 0; r < t.m; ++r) {
        double f = cost[t.basis[r]];
        if (f == 0.0)
            continue;
        for (std::size_t j = 0; j < t.width; ++j)
            cost[j] -= f * t.at(r, j);
    }
    if (!iterate(t, cost, structural_))
        return std::nullopt;
    return -cost[t.width - 1];
}

std::optional<double> Simplex::maximize(std::span<const double> c) const
{
    std::vector<double> negated(c.begin(), c.end());
    for (auto &v : negated)
        v = -v;
    auto r = minimize(negated);
    if (!r)
        return std::nullopt;
    return -*r;
}

} // namespace lbms::oracle
