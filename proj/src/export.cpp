#include "lbms/export.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace lbms::model {

namespace {

using json = nlohmann::ordered_json;

SupportKind support_from(const std::string &s)
{
    for (auto k : {SupportKind::None, SupportKind::Assumption, SupportKind::Constraint1, SupportKind::Constraint2})
        if (to_string(k) == s)
            return k;
    throw Error("unknown support kind '" + s + "'");
}

ClauseOrigin::Kind origin_from(const std::string &s)
{
    using K = ClauseOrigin::Kind;
    for (auto k : {K::UserAssertion, K::Structural, K::Generated, K::Sigma})
        if (to_string(k) == s)
            return k;
    throw Error("unknown clause origin '" + s + "'");
}

std::string dot_string(const std::string &s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '\\';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string compact(double v)
{
    char buf[32];
    double r = std::round(v * 1e6) / 1e6;
    std::snprintf(buf, sizeof buf, "%.6g", r == 0.0 ? 0.0 : r);
    return buf;
}

std::string export_json(const Engine &engine)
{
    const auto snap = engine.snapshot();
    json j;
    auto &atoms = j["atoms"] = json::array();
    for (const auto &a : snap.atoms)
        atoms.push_back({{"name", a.name},
                         {"lo", a.lo},
                         {"hi", a.hi},
                         {"lower_support", to_string(a.lower_support)},
                         {"upper_support", to_string(a.upper_support)},
                         {"assumption", a.assumption}});
    auto &clauses = j["clauses"] = json::array();
    for (const auto &c : snap.clauses) {
        json lits = json::array();
        for (const auto &l : engine.clause(c.id).clause.literals())
            lits.push_back({{"atom", engine.name(l.atom)}, {"positive", l.positive}});
        clauses.push_back({{"id", c.id},
                           {"text", c.text},
                           {"literals", std::move(lits)},
                           {"lo", c.lo},
                           {"hi", c.hi},
                           {"origin", to_string(c.origin)},
                           {"label", c.label}});
    }
    return j.dump(2) + "\n";
}

Snapshot import_json(std::string_view text)
{
    Snapshot s;
    try {
        auto j = json::parse(text);
        for (const auto &a : j.at("atoms"))
            s.atoms.push_back(AtomState{a.at("name").get<std::string>(), a.at("lo").get<double>(),
                                        a.at("hi").get<double>(),
                                        support_from(a.at("lower_support").get<std::string>()),
                                        support_from(a.at("upper_support").get<std::string>()),
                                        a.at("assumption").get<bool>()});
        for (const auto &c : j.at("clauses"))
            s.clauses.push_back(ClauseState{c.at("id").get<ClauseId>(), c.at("text").get<std::string>(),
                                            c.at("lo").get<double>(), c.at("hi").get<double>(),
                                            origin_from(c.at("origin").get<std::string>()),
                                            c.at("label").get<std::string>()});
    } catch (const json::exception &e) {
        throw Error(std::string("malformed snapshot JSON: ") + e.what());
    }
    return s;
}

std::string export_dot(const Engine &engine)
{
    std::ostringstream os;
    os << "graph lbms {\n";
    os << "  graph [rankdir=LR];\n";
    os << "  node [fontname=\"Helvetica\"];\n";
    for (AtomId a = 0; a < engine.atom_count(); ++a) {
        const auto &n = engine.node(a);
        os << "  a" << a << " [shape=box, label=" << dot_string(n.atom.name + " [" + compact(n.lo) + " " + compact(n.hi) + "]");
        if (n.is_assumption)
            os << ", penwidth=3";
        os << "];\n";
    }
    for (const auto *r : engine.clauses()) {
        std::string label = "[" + compact(r->clause.prob().lo()) + " " + compact(r->clause.prob().hi()) + "]";
        if (!r->origin.label.empty())
            label = r->origin.label + "\\n" + label;
        os << "  c" << r->id << " [shape=ellipse, label=" << dot_string(label) << "];\n";
        for (const auto &l : r->clause.literals())
            os << "  a" << l.atom << " -- c" << r->id << " [style=" << (l.positive ? "solid" : "dashed") << "];\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace lbms::model
