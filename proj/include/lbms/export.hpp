#pragma once

#include "lbms/engine.hpp"

#include <string>
#include <string_view>

namespace lbms::model {

/// Snapshot as JSON: atoms sorted by name, clauses sorted by text.
std::string export_json(const Engine &engine);
/// Reads back what export_json wrote. Throws Error on malformed input.
Snapshot import_json(std::string_view text);

/// Bipartite graph: boxes for propositions, ovals for clauses, solid edges
/// for positive literals and dashed ones for negative literals.
std::string export_dot(const Engine &engine);

/// Shortest decimal form after rounding to 6 places, e.g. 0.93.
std::string compact(double v);

} // namespace lbms::model
