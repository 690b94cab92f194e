#pragma once

#include "candual/model.hpp"

#include <json.hpp>

#include <filesystem>

namespace candual {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Problem file schema (strict: unknown keys are rejected):
/// {
///   "n": 1,
///   "A": [[...]],              row-major n x n, exactly symmetric
///   "c": [...],                n entries
///   "f_term": { ... },         optional term object
///   "inequalities": [ ... ],   term objects, each g_i(x) <= 0
///   "equalities": [ ... ]      term objects, each h_j(x) = 0
/// }
/// term object:
/// {
///   "V": {"kind": "shifted_quadratic", "a": >0, "d": .., "e": ..}
///      | {"kind": "exponential"},
///   "Lambda": {"Q": [[...]], "b": [...], "alpha": ..}
/// }
Problem parse_problem(const nlohmann::json& doc);
Problem load_problem_file(const std::filesystem::path& path);

nlohmann::json problem_to_json(const Problem& p);

}  // namespace candual
