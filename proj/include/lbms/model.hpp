#pragma once

#include "lbms/network.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lbms::model {

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string &message, const std::string &source = {});

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::string &message() const { return message_; }
    const std::string &source() const { return source_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string message_;
    std::string source_;
};

struct StepBlock {
    std::string label;
    ibn::NetworkModel model;
    bool operator==(const StepBlock &) const = default;
};

/// Declarations before the first `step` line form the preamble; each step
/// block is applied on top of everything before it.
struct ModelDocument {
    ibn::NetworkModel preamble;
    std::vector<StepBlock> steps;
    bool operator==(const ModelDocument &) const = default;

    const StepBlock *find_step(std::string_view label) const;
};

struct StepDirective {
    std::string label;
};

using Directive = std::variant<ibn::VariableDecl, ibn::ConditionalDecl, ibn::PriorDecl, StepDirective>;

/// One line of model text. nullopt for blank and comment-only lines.
/// `line` is used for error positions only.
std::optional<Directive> parse_directive(std::string_view text, std::size_t line = 1);

ModelDocument parse_model(std::string_view text);

/// Canonical text; numbers are written in shortest round-trip form.
std::string print_model(const ModelDocument &doc);
std::string print_directive(const Directive &d);
std::string print_interval(const IntervalProb &p);

/// `var=state` outside a full directive, e.g. in script commands.
ibn::StateRef parse_state_ref(std::string_view text, std::size_t line = 1);
/// `expect <var>=<state> : <interval> [tol <t>]`, keyword included.
struct Expectation {
    ibn::StateRef state;
    IntervalProb prob;
    double tolerance = 1e-6;
};
Expectation parse_expectation(std::string_view line_text, std::size_t line = 1);

/// `[lo, hi]`, `[lo hi]` or a bare number.
IntervalProb parse_interval(std::string_view text, std::size_t line = 1);

} // namespace lbms::model
