#pragma once

#include <optional>
#include <span>
#include <vector>

namespace lbms::oracle {

/// Dense LP in the form  A x (<=|>=|=) b,  x >= 0.
struct LinearProgram {
    enum class Sense { LessEqual, GreaterEqual, Equal };

    std::size_t columns = 0;
    std::vector<std::vector<double>> rows;
    std::vector<Sense> senses;
    std::vector<double> rhs;

    void add_row(std::vector<double> coefficients, Sense sense, double b);
};

/// Two-phase tableau simplex with Bland's rule. Phase 1 runs once in the
/// constructor; every objective then starts from the same feasible basis.
class Simplex {
public:
    explicit Simplex(const LinearProgram &lp);

    bool feasible() const { return feasible_; }
    /// Optimal value of min c.x, or nullopt when unbounded or infeasible.
    std::optional<double> minimize(std::span<const double> c) const;
    std::optional<double> maximize(std::span<const double> c) const;

private:
    struct Tableau {
        std::size_t m = 0;
        std::size_t width = 0; ///< columns including rhs
        std::vector<double> cells;
        std::vector<std::size_t> basis;

        double &at(std::size_t r, std::size_t c) { return cells[r * width + c]; }
        double at(std::size_t r, std::size_t c) const { return cells[r * width + c]; }
        void pivot(std::size_t row, std::size_t col);
    };

    /// Runs simplex iterations on a cost vector over the first `usable`
    /// columns. Returns false when unbounded.
    static bool iterate(Tableau &t, std::vector<double> &cost, std::size_t usable);

    std::size_t n_ = 0;
    std::size_t structural_ = 0; ///< original + slack columns
    Tableau t_;
    bool feasible_ = false;
};

} // namespace lbms::oracle
