#include "candual/report.hpp"

#include <cstdio>
#include <sstream>

namespace candual {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string vec(const VectorXd& v) {
  if (v.size() == 1) return num(v[0]);
  std::string out = "[";
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += num(v[i]);
  }
  return out + "]";
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : "-"; }

void render_rows(std::ostringstream& os, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width(header.size());
  for (size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto emit = [&](const std::vector<std::string>& row) {
    for (size_t c = 0; c < row.size(); ++c) {
      os << (c ? "  " : "") << row[c];
      if (c + 1 < row.size()) os << std::string(width[c] - row[c].size(), ' ');
    }
    os << '\n';
  };
  emit(header);
  size_t total = 0;
  for (size_t c = 0; c < header.size(); ++c) total += width[c] + (c ? 2 : 0);
  os << std::string(total, '-') << '\n';
  for (const auto& row : rows) emit(row);
}

std::vector<double> to_std(const VectorXd& v) { return {v.begin(), v.end()}; }

json point_to_json(const CriticalPoint& pt) {
  json out;
  out["x"] = to_std(pt.x);
  out["lambda"] = to_std(pt.dual.lambda);
  out["mu"] = to_std(pt.dual.mu);
  if (pt.dual.sigma_f) {
    out["sigma_f"] = *pt.dual.sigma_f;
  } else {
    out["sigma_f"] = nullptr;
  }
  out["sigma_g"] = to_std(pt.dual.sigma_g);
  out["sigma_h"] = to_std(pt.dual.sigma_h);
  out["primal_value"] = pt.primal_value;
  out["dual_value"] = pt.dual_value;
  out["xi1_value"] = pt.xi1_value;
  out["gap"] = verify_gap(pt);
  out["g_eigenvalues"] = to_std(pt.g_eigenvalues);
  out["kkt_residual_inf"] = pt.kkt_residual_inf;
  out["classification"] = to_string(pt.classification);
  return out;
}

}  // namespace

std::string render_solve_table(const std::vector<CriticalPoint>& points, double gap_tol) {
  std::ostringstream os;
  std::vector<std::string> header{"x", "lambda", "mu", "sigma_f", "sigma_g", "sigma_h",
                                  "f", "P^d", "G_eig", "class"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& pt : points) {
    const bool flagged = verify_gap(pt) > gap_tol * (1.0 + std::abs(pt.primal_value));
    rows.push_back({vec(pt.x), vec(pt.dual.lambda), vec(pt.dual.mu), opt(pt.dual.sigma_f),
                    vec(pt.dual.sigma_g), vec(pt.dual.sigma_h), num(pt.primal_value),
                    num(pt.dual_value), vec(pt.g_eigenvalues),
                    std::string(to_string(pt.classification)) + (flagged ? " *" : "")});
  }
  render_rows(os, header, rows);
  os << "note: " << kConvexityCaveat << '\n';
  return os.str();
}

std::string render_subproblem_table(const std::vector<AugCriticalPoint>& points,
                                    double gap_tol) {
  std::ostringstream os;
  std::vector<std::string> header{"x", "tau", "sigma_h", "L", "P^d_nu", "G_eig",
                                  "mu+tau", "class"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& pt : points) {
    const bool flagged =
        std::abs(pt.L_value - pt.dual_value) > gap_tol * (1.0 + std::abs(pt.L_value));
    rows.push_back({vec(pt.x), vec(pt.tau), vec(pt.sigma_h), num(pt.L_value),
                    num(pt.dual_value), vec(pt.g_eigenvalues), vec(pt.mu_plus_tau),
                    std::string(to_string(pt.classification)) + (flagged ? " *" : "")});
  }
  render_rows(os, header, rows);
  os << "note: " << kConvexityCaveat << '\n';
  return os.str();
}

std::string render_outer_history(const OuterLoopResult& result) {
  std::ostringstream os;
  std::vector<std::string> header{"k", "mu_k", "nu_k", "x_k", "|h|", "L", "P^d_nu",
                                  "certified"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& it : result.history) {
    char hbuf[32];
    std::snprintf(hbuf, sizeof(hbuf), "%.3e", it.h_inf);
    rows.push_back({std::to_string(it.k), vec(it.mu), num(it.nu), vec(it.x), hbuf,
                    num(it.L_value), num(it.dual_value), it.certified ? "yes" : "no"});
  }
  render_rows(os, header, rows);
  os << "final multipliers: " << vec(result.final_mu)
     << (result.reached_feasibility ? " (feasibility reached)" : " (tolerance not reached)")
     << '\n';
  if (!result.all_certified) {
    os << "warning: some sub-problems had no certified global solution\n";
  }
  return os.str();
}

json config_to_json(const SolverConfig& cfg) {
  json box;
  box["x"] = json::array();
  for (const auto& iv : cfg.seed_box.x) box["x"].push_back({iv.lo, iv.hi});
  box["mu"] = json::array();
  for (const auto& iv : cfg.seed_box.mu) box["mu"].push_back({iv.lo, iv.hi});
  return json{{"seed_box", std::move(box)},
              {"grid_density", cfg.grid_density},
              {"newton_max_iter", cfg.newton_max_iter},
              {"newton_tol", cfg.newton_tol},
              {"dedup_radius", cfg.dedup_radius},
              {"mu_nonzero_tol", cfg.mu_nonzero_tol},
              {"psd_tol", cfg.psd_tol}};
}

json solve_report_json(const Problem& p, const SolverConfig& cfg, const SolveResult& result,
                       double elapsed_ms) {
  json report;
  report["problem"] = problem_to_json(p);
  report["config"] = config_to_json(cfg);
  report["points"] = json::array();
  for (const auto& pt : result.points) report["points"].push_back(point_to_json(pt));
  // Points arrive sorted by (dual value, lexicographic x); keeping the first
  // strictly-better certified point reproduces select_global's tie-breaking.
  report["selected_global"] = nullptr;
  std::optional<size_t> sel;
  for (size_t i = 0; i < result.points.size(); ++i) {
    if (result.points[i].classification != Classification::GlobalMinCertified) continue;
    if (!sel || result.points[i].dual_value > result.points[*sel].dual_value) sel = i;
  }
  if (sel) report["selected_global"] = *sel;
  report["caveats"] = json::array({kConvexityCaveat});
  report["diagnostics"] = {{"seeds", result.stats.seeds},
                           {"branches", result.stats.branches},
                           {"converged", result.stats.converged},
                           {"discarded_multiplier_sign", result.stats.discarded_multiplier_sign},
                           {"discarded_infeasible", result.stats.discarded_infeasible},
                           {"deduplicated", result.stats.deduplicated}};
  report["timings_ms"] = {{"solve", elapsed_ms}};
  return report;
}

json subproblem_report_json(const Problem& p, const SolverConfig& cfg, const VectorXd& mu0,
                            double nu, const SubproblemResult& result, double elapsed_ms) {
  json report;
  report["problem"] = problem_to_json(p);
  report["config"] = config_to_json(cfg);
  report["mu0"] = to_std(mu0);
  report["nu"] = nu;
  report["points"] = json::array();
  for (const auto& pt : result.points) {
    json row;
    row["x"] = to_std(pt.x);
    row["tau"] = to_std(pt.tau);
    if (pt.sigma_f) {
      row["sigma_f"] = *pt.sigma_f;
    } else {
      row["sigma_f"] = nullptr;
    }
    row["sigma_h"] = to_std(pt.sigma_h);
    row["mu_plus_tau"] = to_std(pt.mu_plus_tau);
    row["L_value"] = pt.L_value;
    row["dual_value"] = pt.dual_value;
    row["gap"] = std::abs(pt.L_value - pt.dual_value);
    row["g_eigenvalues"] = to_std(pt.g_eigenvalues);
    row["kkt_residual_inf"] = pt.kkt_residual_inf;
    row["classification"] = to_string(pt.classification);
    report["points"].push_back(std::move(row));
  }
  report["caveats"] = json::array({kConvexityCaveat});
  report["timings_ms"] = {{"solve", elapsed_ms}};
  return report;
}

json outer_report_json(const Problem& p, const AugLagConfig& cfg,
                       const OuterLoopResult& result, double elapsed_ms) {
  json report;
  report["problem"] = problem_to_json(p);
  report["auglag_config"] = {{"nu0", cfg.nu0},
                             {"alpha", cfg.alpha},
                             {"mu0", to_std(cfg.mu0)},
                             {"max_outer_iter", cfg.max_outer_iter},
                             {"feasibility_tol", cfg.feasibility_tol}};
  report["iterations"] = json::array();
  for (const auto& it : result.history) {
    report["iterations"].push_back({{"k", it.k},
                                    {"mu", to_std(it.mu)},
                                    {"nu", it.nu},
                                    {"x", to_std(it.x)},
                                    {"h_inf", it.h_inf},
                                    {"L_value", it.L_value},
                                    {"dual_value", it.dual_value},
                                    {"certified", it.certified}});
  }
  report["final_mu"] = to_std(result.final_mu);
  report["reached_feasibility"] = result.reached_feasibility;
  report["all_certified"] = result.all_certified;
  report["subproblem_failed"] = result.subproblem_failed;
  report["timings_ms"] = {{"total", elapsed_ms}};
  return report;
}

std::vector<CriticalPoint> points_from_report(const json& report) {
  std::vector<CriticalPoint> points;
  if (!report.contains("points") || !report.at("points").is_array()) {
    throw SchemaError("report: missing \"points\" array");
  }
  for (const auto& row : report.at("points")) {
    CriticalPoint pt;
    const auto xs = row.at("x").get<std::vector<double>>();
    pt.x = Eigen::Map<const VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    pt.primal_value = row.at("primal_value").get<double>();
    pt.dual_value = row.at("dual_value").get<double>();
    pt.xi1_value = row.value("xi1_value", pt.dual_value);
    const std::string cls = row.at("classification").get<std::string>();
    pt.classification = Classification::Unclassified;
    for (auto c : {Classification::GlobalMinCertified, Classification::BiggestLocalMaxCertified,
                   Classification::Saddle, Classification::DegenerateMultiplier,
                   Classification::SingularG}) {
      if (cls == to_string(c)) pt.classification = c;
    }
    points.push_back(std::move(pt));
  }
  return points;
}

}  // namespace candual
