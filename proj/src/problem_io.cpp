#include "candual/problem_io.hpp"

#include <fstream>
#include <set>

namespace candual {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const char* where,
                  const std::set<std::string>& required,
                  const std::set<std::string>& optional = {}) {
  if (!obj.is_object()) throw SchemaError(std::string(where) + ": expected an object");
  for (const auto& key : required) {
    if (!obj.contains(key)) {
      throw SchemaError(std::string(where) + ": missing key \"" + key + "\"");
    }
  }
  for (const auto& item : obj.items()) {
    if (!required.count(item.key()) && !optional.count(item.key())) {
      throw SchemaError(std::string(where) + ": unknown key \"" + item.key() + "\"");
    }
  }
}

double as_number(const json& v, const char* where) {
  if (!v.is_number()) throw SchemaError(std::string(where) + ": expected a number");
  return v.get<double>();
}

VectorXd as_vector(const json& v, int n, const char* where) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw SchemaError(std::string(where) + ": expected an array of " + std::to_string(n));
  }
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = as_number(v[i], where);
  return out;
}

MatrixXd as_matrix(const json& v, int n, const char* where) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw SchemaError(std::string(where) + ": expected " + std::to_string(n) + " rows");
  }
  MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) out.row(i) = as_vector(v[i], n, where).transpose();
  if ((out - out.transpose()).cwiseAbs().maxCoeff() != 0.0) {
    throw SchemaError(std::string(where) + ": matrix is not exactly symmetric");
  }
  return out;
}

CanonicalFunctionPtr parse_function(const json& v, const char* where) {
  require_keys(v, where, {"kind"}, {"a", "d", "e"});
  const std::string kind = v.at("kind").is_string() ? v.at("kind").get<std::string>() : "";
  if (kind == "shifted_quadratic") {
    require_keys(v, where, {"kind", "a", "d", "e"});
    const double a = as_number(v.at("a"), where);
    if (!(a > 0.0)) throw SchemaError(std::string(where) + ": \"a\" must be > 0");
    return std::make_shared<ShiftedQuadratic>(a, as_number(v.at("d"), where),
                                              as_number(v.at("e"), where));
  }
  if (kind == "exponential") {
    require_keys(v, where, {"kind"});
    return std::make_shared<Exponential>();
  }
  throw SchemaError(std::string(where) + ": unknown canonical function kind \"" + kind + "\"");
}

CanonicalTerm parse_term(const json& v, int n, const char* where) {
  require_keys(v, where, {"V", "Lambda"});
  const json& lam = v.at("Lambda");
  require_keys(lam, where, {"Q", "b", "alpha"});
  QuadraticOperator op(as_matrix(lam.at("Q"), n, where), as_vector(lam.at("b"), n, where),
                       as_number(lam.at("alpha"), where));
  return CanonicalTerm{parse_function(v.at("V"), where), std::move(op)};
}

json function_to_json(const CanonicalFunction& v) {
  json out;
  out["kind"] = v.kind();
  if (const auto* sq = dynamic_cast<const ShiftedQuadratic*>(&v)) {
    out["a"] = sq->a();
    out["d"] = sq->d();
    out["e"] = sq->e();
  }
  return out;
}

json term_to_json(const CanonicalTerm& t) {
  json lam;
  const int n = t.lambda_op.dim();
  lam["Q"] = json::array();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int j = 0; j < n; ++j) row.push_back(t.lambda_op.Q()(i, j));
    lam["Q"].push_back(std::move(row));
  }
  lam["b"] = std::vector<double>(t.lambda_op.b().begin(), t.lambda_op.b().end());
  lam["alpha"] = t.lambda_op.alpha();
  return json{{"V", function_to_json(*t.v)}, {"Lambda", std::move(lam)}};
}

}  // namespace

Problem parse_problem(const json& doc) {
  require_keys(doc, "problem", {"n", "A", "c"}, {"f_term", "inequalities", "equalities"});
  if (!doc.at("n").is_number_integer()) throw SchemaError("problem: \"n\" must be an integer");
  const int n = doc.at("n").get<int>();
  if (n < 1) throw SchemaError("problem: \"n\" must be >= 1");

  MatrixXd A = as_matrix(doc.at("A"), n, "A");
  VectorXd c = as_vector(doc.at("c"), n, "c");

  std::optional<CanonicalTerm> f_term;
  if (doc.contains("f_term")) f_term = parse_term(doc.at("f_term"), n, "f_term");

  auto parse_terms = [&](const char* key) {
    std::vector<CanonicalTerm> terms;
    if (!doc.contains(key)) return terms;
    const json& arr = doc.at(key);
    if (!arr.is_array()) throw SchemaError(std::string(key) + ": expected an array");
    terms.reserve(arr.size());
    for (const auto& item : arr) terms.push_back(parse_term(item, n, key));
    return terms;
  };

  try {
    return Problem(std::move(A), std::move(c), std::move(f_term),
                   parse_terms("inequalities"), parse_terms("equalities"));
  } catch (const DimensionError& e) {
    throw SchemaError(std::string("problem: ") + e.what());
  }
}

Problem load_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open problem file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  return parse_problem(doc);
}

nlohmann::json problem_to_json(const Problem& p) {
  json doc;
  doc["n"] = p.n();
  doc["A"] = json::array();
  for (int i = 0; i < p.n(); ++i) {
    json row = json::array();
    for (int j = 0; j < p.n(); ++j) row.push_back(p.A()(i, j));
    doc["A"].push_back(std::move(row));
  }
  doc["c"] = std::vector<double>(p.c().begin(), p.c().end());
  if (p.f_term()) doc["f_term"] = term_to_json(*p.f_term());
  doc["inequalities"] = json::array();
  for (const auto& t : p.g_terms()) doc["inequalities"].push_back(term_to_json(t));
  doc["equalities"] = json::array();
  for (const auto& t : p.h_terms()) doc["equalities"].push_back(term_to_json(t));
  return doc;
}

}  // namespace candual
