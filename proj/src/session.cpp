#include "lbms/session.hpp"

#include "lbms/export.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lbms::model {

namespace {

std::string fixed(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string bounds_text(double lo, double hi)
{
    return "[" + fixed(lo) + " " + fixed(hi) + "]";
}

std::vector<std::string_view> split(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
            ++i;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])))
            ++i;
        if (i > start)
            out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::string_view strip_comment(std::string_view s)
{
    if (auto h = s.find('#'); h != std::string_view::npos)
        s = s.substr(0, h);
    return s;
}

std::string read_file(const std::filesystem::path &p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw CommandError("cannot read '" + p.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void render_node(const Engine &engine, const ExplanationTree &t, std::size_t depth, std::ostringstream &os)
{
    os << std::string(2 * depth, ' ') << engine.literal_text(t.literal) << " "
       << (t.bound == Bound::Lower ? "lower" : "upper") << " " << fixed(t.value);
    auto cite = [&](ClauseId c) {
        const auto &r = engine.clause(c);
        os << " " << engine.clause_text(r.clause) << " " << to_string(r.clause.prob());
        if (!r.origin.label.empty())
            os << " " << r.origin.label;
    };
    switch (t.support.kind) {
    case SupportKind::None:
        os << " UNCONSTRAINED";
        break;
    case SupportKind::Assumption:
        os << " ASSUMPTION";
        break;
    case SupportKind::Constraint1:
        os << " by constraint1 on";
        cite(t.support.clause);
        break;
    case SupportKind::Constraint2:
        os << " by constraint2 on";
        for (std::size_t i = 0; i < t.support.clauses.size(); ++i) {
            if (i)
                os << " +";
            cite(t.support.clauses[i]);
        }
        break;
    }
    if (!t.generators.empty()) {
        os << " generated by";
        for (AtomId g : t.generators)
            os << " " << engine.name(g);
    }
    if (t.antecedents.empty() &&
        (t.support.kind == SupportKind::Constraint1 || t.support.kind == SupportKind::Constraint2))
        os << " CLAUSE";
    os << "\n";
    for (const auto &a : t.antecedents)
        render_node(engine, a, depth + 1, os);
}

} // namespace

std::string render_explanation(const Engine &engine, const ExplanationTree &tree)
{
    std::ostringstream os;
    render_node(engine, tree, 0, os);
    return os.str();
}

ModelDocument read_model(const std::filesystem::path &path)
{
    auto text = read_file(path);
    try {
        return parse_model(text);
    } catch (const ParseError &e) {
        throw ParseError(e.line(), e.column(), e.message(), path.string());
    }
}

Session::Session(std::filesystem::path base_dir) :
    base_(std::move(base_dir)), network_(std::make_unique<ibn::Network>())
{
}

std::filesystem::path Session::resolve(std::string_view path) const
{
    std::filesystem::path p(path);
    return p.is_absolute() ? p : base_ / p;
}

void Session::report(const std::optional<ContradictionReport> &r, std::ostream &out) const
{
    if (r)
        out << network_->engine().describe(*r) << "\n";
}

void Session::apply(const Directive &d, std::ostream &out)
{
    auto &net = *network_;
    std::visit(
        [&](auto &&x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ibn::VariableDecl>) {
                net.define_variable(x.name, x.states);
            } else if constexpr (std::is_same_v<T, ibn::ConditionalDecl>) {
                std::vector<ibn::StateId> parents;
                for (const auto &p : x.parents)
                    parents.push_back(net.state(p));
                report(net.add_conditional(net.state(x.child), std::move(parents), x.prob).contradiction, out);
            } else if constexpr (std::is_same_v<T, ibn::PriorDecl>) {
                auto s = net.state(x.state);
                if (net.has_prior(s))
                    report(net.retract_prior(s), out);
                report(net.set_prior(s, x.prob), out);
            } else {
                apply_step(x.label, out);
            }
        },
        d);
}

void Session::apply(const ibn::NetworkModel &block, std::ostream &out)
{
    for (const auto &v : block.variables)
        apply(Directive{v}, out);
    for (const auto &c : block.conditionals)
        apply(Directive{c}, out);
    for (const auto &p : block.priors)
        apply(Directive{p}, out);
}

void Session::load(ModelDocument doc, std::ostream &out)
{
    document_ = std::move(doc);
    apply(document_->preamble, out);
}

void Session::apply_step(std::string_view label, std::ostream &out)
{
    if (!document_)
        throw CommandError("step '" + std::string(label) + "' without a loaded model");
    const auto *s = document_->find_step(label);
    if (!s)
        throw CommandError("the loaded model has no step '" + std::string(label) + "'");
    apply(s->model, out);
}

void Session::show(std::ostream &out, std::optional<std::string_view> variable) const
{
    const auto &net = *network_;
    if (variable && !net.find_variable(*variable))
        throw CommandError("unknown variable '" + std::string(*variable) + "'");
    for (const auto &v : net.variables()) {
        if (variable && v.name != *variable)
            continue;
        for (AtomId a : v.atoms) {
            const auto &n = net.engine().node(a);
            out << n.atom.name << " " << bounds_text(n.lo, n.hi) << "\n";
        }
    }
}

void Session::check(std::ostream &out) const
{
    const auto &engine = network_->engine();
    auto r = engine.check_consistency();
    if (!r) {
        out << "OK\n";
        return;
    }
    out << engine.describe(*r) << "\n";
    for (const auto &l : r->culprit_assumptions) {
        const auto &n = engine.node(l.atom);
        out << "  culprit " << engine.literal_text(l) << " " << to_string(*n.assumed_interval) << "\n";
    }
}

int Session::exit_code() const
{
    if (network_->engine().check_consistency())
        return kExitContradiction;
    return failed_ ? kExitExpectation : kExitOk;
}

void Session::execute(std::string_view line, std::size_t line_no, std::ostream &out)
{
    auto words = split(strip_comment(line));
    if (words.empty())
        return;
    const auto cmd = words[0];
    auto arg_error = [&](const std::string &usage) { throw CommandError("usage: " + usage); };

    if (cmd == "variable" || cmd == "conditional" || cmd == "prior") {
        if (auto d = parse_directive(line, line_no))
            apply(*d, out);
        return;
    }
    if (cmd == "assert") {
        // Blank out the keyword so error columns still match the line.
        std::string rest(line);
        auto at = rest.find("assert");
        rest.replace(at, 6, 6, ' ');
        auto d = parse_directive(rest, line_no);
        if (!d || std::holds_alternative<StepDirective>(*d))
            arg_error("assert variable|conditional|prior ...");
        apply(*d, out);
        return;
    }
    if (cmd == "load") {
        if (words.size() != 2)
            arg_error("load <model-file>");
        load(read_model(resolve(words[1])), out);
        return;
    }
    if (cmd == "step") {
        auto d = parse_directive(line, line_no);
        apply_step(std::get<StepDirective>(*d).label, out);
        return;
    }
    if (cmd == "retract") {
        if (words.size() != 2)
            arg_error("retract <var>=<state>");
        auto s = network_->state(parse_state_ref(words[1], line_no));
        if (!network_->has_prior(s))
            throw CommandError("'" + network_->state_name(s) + "' has no prior to retract");
        report(network_->retract_prior(s), out);
        return;
    }
    if (cmd == "explain") {
        if (words.size() != 3 || (words[2] != "lower" && words[2] != "upper"))
            arg_error("explain <var>=<state> lower|upper");
        auto s = network_->state(parse_state_ref(words[1], line_no));
        auto tree = network_->explain_state(s, words[2] == "lower" ? Bound::Lower : Bound::Upper);
        out << render_explanation(network_->engine(), tree);
        return;
    }
    if (cmd == "show") {
        if (words.size() > 2)
            arg_error("show [<var>]");
        show(out, words.size() == 2 ? std::optional(words[1]) : std::nullopt);
        return;
    }
    if (cmd == "snapshot") {
        out << network_->engine().snapshot().render();
        return;
    }
    if (cmd == "check") {
        check(out);
        return;
    }
    if (cmd == "export") {
        if (words.size() != 3 || (words[1] != "json" && words[1] != "dot"))
            arg_error("export json|dot <path>");
        auto path = resolve(words[2]);
        std::ofstream f(path, std::ios::binary);
        const auto &engine = network_->engine();
        f << (words[1] == "json" ? export_json(engine) : export_dot(engine));
        if (!f)
            throw CommandError("cannot write '" + path.string() + "'");
        out << "exported " << words[1] << " " << words[2] << "\n";
        return;
    }
    if (cmd == "expect") {
        auto e = parse_expectation(line, line_no);
        const auto &n = network_->engine().node(network_->state(e.state).atom);
        bool ok = std::abs(n.lo - e.prob.lo()) <= e.tolerance && std::abs(n.hi - e.prob.hi()) <= e.tolerance;
        out << (ok ? "pass " : "FAIL ") << e.state.variable << "=" << e.state.state << " "
            << bounds_text(n.lo, n.hi) << " expected " << bounds_text(e.prob.lo(), e.prob.hi()) << "\n";
        if (!ok)
            ++failed_;
        return;
    }
    throw ParseError(line_no, static_cast<std::size_t>(cmd.data() - line.data()) + 1,
                     "unknown command '" + std::string(cmd) + "'");
}

ScriptResult run_script(std::string_view text, const std::filesystem::path &base_dir)
{
    ScriptResult result;
    std::ostringstream out;
    Session session(base_dir);
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        auto nl = text.find('\n');
        auto row = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!row.empty() && row.back() == '\r')
            row.remove_suffix(1);
        if (split(strip_comment(row)).empty())
            continue;
        out << "> " << row << "\n";
        try {
            session.execute(row, line_no, out);
        } catch (const ParseError &e) {
            out << "error: " << e.what() << "\n";
            result.exit_code = kExitParse;
            result.transcript = out.str();
            return result;
        } catch (const Error &e) {
            out << "error: line " << line_no << ": " << e.what() << "\n";
            result.exit_code = kExitParse;
            result.transcript = out.str();
            return result;
        }
    }
    result.exit_code = session.exit_code();
    out << "exit " << result.exit_code << "\n";
    result.transcript = out.str();
    return result;
}

} // namespace lbms::model
