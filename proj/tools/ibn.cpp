// ibn: run scripts against an Ignorant Belief Network session, check and
// export model files, and compare the engine with the entailment oracle.

#include "lbms/export.hpp"
#include "lbms/oracle.hpp"
#include "lbms/session.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

namespace {

using namespace lbms;
using namespace lbms::model;

std::string slurp(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CommandError("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Applies the preamble and every step of a model file in order.
void apply_model(Session &session, const std::string &path, std::ostream &out)
{
    session.load(read_model(path), out);
    for (const auto &s : session.document()->steps)
        session.apply_step(s.label, out);
}

int cmd_run(const std::string &path)
{
    auto text = slurp(path);
    auto base = std::filesystem::path(path).parent_path();
    auto r = run_script(text, base.empty() ? "." : base);
    std::cout << r.transcript;
    return r.exit_code;
}

int cmd_repl()
{
    Session session;
    const bool tty = isatty(STDIN_FILENO);
    std::string line;
    std::size_t line_no = 0;
    for (;;) {
        if (tty)
            std::cout << "ibn> " << std::flush;
        if (!std::getline(std::cin, line))
            break;
        ++line_no;
        if (line == "quit" || line == "exit")
            break;
        try {
            session.execute(line, line_no, std::cout);
        } catch (const Error &e) {
            std::cout << "error: " << e.what() << "\n";
        }
    }
    return session.exit_code();
}

int cmd_check(const std::string &path)
{
    Session session;
    std::ostringstream log;
    apply_model(session, path, log);
    session.check(std::cout);
    return session.exit_code();
}

int cmd_export(const std::string &path, const std::string &format, const std::string &out_path)
{
    Session session;
    std::ostringstream log;
    apply_model(session, path, log);
    const auto &engine = session.network().engine();
    std::string text = format == "json" ? export_json(engine) : export_dot(engine);
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        std::ofstream f(out_path, std::ios::binary);
        f << text;
        if (!f)
            throw CommandError("cannot write '" + out_path + "'");
    }
    return kExitOk;
}

int cmd_oracle(const std::string &path, std::uint64_t seed, std::size_t count, bool json)
{
    if (!path.empty()) {
        Session session;
        std::ostringstream log;
        apply_model(session, path, log);
        auto cmp = oracle::compare_with_oracle(session.network());
        for (const auto &s : cmp.states)
            std::printf("%-24s engine %s tight %s %s gap=%.6f\n", s.state.c_str(), to_string(s.engine).c_str(),
                        to_string(s.tight).c_str(), s.contained ? "contained" : "VIOLATION", s.gap);
        std::printf("satisfiable=%s contained=%s max_gap=%.6f\n", cmp.satisfiable ? "yes" : "no",
                    cmp.contained ? "yes" : "no", cmp.max_gap);
        if (!cmp.contained)
            return kExitExpectation;
        return cmp.engine_contradiction ? kExitContradiction : kExitOk;
    }
    auto report = oracle::soundness_check(seed, count);
    std::cout << (json ? report.to_json() + "\n" : report.to_text());
    return report.violations() ? kExitExpectation : kExitOk;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Interval belief maintenance for partially specified belief networks"};
    app.require_subcommand(1);

    std::string script;
    auto *run = app.add_subcommand("run", "Run a session script");
    run->add_option("script", script, "Script file")->required();

    auto *repl = app.add_subcommand("repl", "Read commands from standard input");

    std::string model_path;
    auto *check = app.add_subcommand("check", "Apply a model with all its steps and check consistency");
    check->add_option("model", model_path, "Model file")->required();

    std::string format = "dot";
    std::string out_path;
    auto *exp = app.add_subcommand("export", "Apply a model and export the resulting network");
    exp->add_option("model", model_path, "Model file")->required();
    exp->add_option("--format", format, "dot or json")->check(CLI::IsMember({"dot", "json"}));
    exp->add_option("--out", out_path, "Output path, - for stdout");

    std::uint64_t seed = 1;
    std::size_t count = 100;
    bool json = false;
    auto *orc = app.add_subcommand("oracle", "Compare engine bounds with exact entailment");
    orc->add_option("model", model_path, "Model file; without one, run the random soundness batch");
    orc->add_option("--seed", seed, "Random seed of the batch");
    orc->add_option("--count", count, "Number of random models");
    orc->add_flag("--json", json, "JSON report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(script);
        if (*repl)
            return cmd_repl();
        if (*check)
            return cmd_check(model_path);
        if (*exp)
            return cmd_export(model_path, format, out_path);
        if (*orc)
            return cmd_oracle(model_path, seed, count, json);
    } catch (const ParseError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
    return kExitOk;
}
