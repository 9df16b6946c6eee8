#pragma once

#include "lbms/model.hpp"
#include "lbms/network.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace lbms::model {

enum ExitCode : int {
    kExitOk = 0,
    kExitExpectation = 1,
    kExitContradiction = 2,
    kExitParse = 3,
};

/// A command that cannot be carried out (unknown variable, missing step,
/// I/O failure). Scripts stop on it.
class CommandError : public Error {
public:
    using Error::Error;
};

/// Indented tree, one bound per line; leaves tagged ASSUMPTION or CLAUSE.
std::string render_explanation(const Engine &engine, const ExplanationTree &tree);

/// One engine session driven by script commands:
///
///   load <model-file>           parse and apply the preamble
///   step <label>                apply a step block of the loaded model
///   variable|conditional|prior  inline directive, also as `assert <directive>`
///   retract <var>=<state>
///   explain <var>=<state> lower|upper
///   show [<var>]
///   snapshot
///   check
///   export json|dot <path>
///   expect <var>=<state> : [lo, hi] tol <t>
class Session {
public:
    explicit Session(std::filesystem::path base_dir = ".");
    Session(const Session &) = delete;
    Session &operator=(const Session &) = delete;

    /// Runs one line. Throws ParseError or CommandError.
    void execute(std::string_view line, std::size_t line_no, std::ostream &out);

    void load(ModelDocument doc, std::ostream &out);
    void apply_step(std::string_view label, std::ostream &out);
    /// Applies a block; priors already held are retracted and re-assumed.
    void apply(const ibn::NetworkModel &block, std::ostream &out);
    void apply(const Directive &d, std::ostream &out);

    void show(std::ostream &out, std::optional<std::string_view> variable = std::nullopt) const;
    void check(std::ostream &out) const;

    ibn::Network &network() { return *network_; }
    const ibn::Network &network() const { return *network_; }
    const std::optional<ModelDocument> &document() const { return document_; }
    std::size_t failed_expectations() const { return failed_; }

    /// 2 when the engine is inconsistent, 1 after a failed expect, else 0.
    int exit_code() const;

private:
    std::filesystem::path resolve(std::string_view path) const;
    void report(const std::optional<ContradictionReport> &r, std::ostream &out) const;

    std::filesystem::path base_;
    std::unique_ptr<ibn::Network> network_;
    std::optional<ModelDocument> document_;
    std::size_t failed_ = 0;
};

struct ScriptResult {
    int exit_code = kExitOk;
    std::string transcript;
};

/// Runs a whole script; relative paths resolve against base_dir.
ScriptResult run_script(std::string_view text, const std::filesystem::path &base_dir = ".");

/// Reads a model file; ParseError messages are prefixed with the path.
ModelDocument read_model(const std::filesystem::path &path);

} // namespace lbms::model
