#include "candual/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace candual;

// Exit codes: 0 success / certified optimum; 2 results without certification
// (or no feasible grid point for `oracle`); 3 no critical point found;
// 64 usage; 65 problem file or schema error; 70 internal error.
constexpr int kOk = 0;
constexpr int kUncertified = 2;
constexpr int kNoPoints = 3;
constexpr int kUsage = 64;
constexpr int kSchema = 65;
constexpr int kInternal = 70;

constexpr double kGapDisplayTol = 1e-6;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    size_t pos = 0;
    const double v = std::stod(item, &pos);
    if (pos != item.size()) throw CLI::ValidationError("expected a comma-separated number list");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("expected a comma-separated number list");
  return out;
}

// "lo:hi" or "lo:hi,lo:hi,..."
std::vector<Interval> parse_intervals(const std::string& s) {
  std::vector<Interval> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("expected lo:hi");
    out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
  }
  if (out.empty()) throw CLI::ValidationError("expected lo:hi");
  return out;
}

// "x=lo:hi,mu=lo:hi" (either part optional, unprefixed applies to x)
SeedBox parse_seed_box(const std::string& s) {
  SeedBox box;
  std::string item;
  std::istringstream is(s);
  bool saw_x = false, saw_mu = false;
  std::vector<Interval> xs, mus;
  while (std::getline(is, item, ',')) {
    std::string target = "x";
    std::string body = item;
    const auto eq = item.find('=');
    if (eq != std::string::npos) {
      target = item.substr(0, eq);
      body = item.substr(eq + 1);
    }
    const auto colon = body.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("expected [x=|mu=]lo:hi");
    Interval iv{std::stod(body.substr(0, colon)), std::stod(body.substr(colon + 1))};
    if (target == "x") {
      xs.push_back(iv);
      saw_x = true;
    } else if (target == "mu") {
      mus.push_back(iv);
      saw_mu = true;
    } else {
      throw CLI::ValidationError("seed box target must be x or mu");
    }
  }
  if (saw_x) box.x = xs;
  if (saw_mu) box.mu = mus;
  return box;
}

VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<long>(v.size()));
}

int run_solve(const std::string& file, const std::string& seed_box, int grid, double tol,
              bool as_json) {
  const Problem p = load_problem_file(file);
  SolverConfig cfg;
  if (!seed_box.empty()) cfg.seed_box = parse_seed_box(seed_box);
  if (grid > 0) cfg.grid_density = grid;
  if (tol > 0) cfg.newton_tol = tol;

  Timer timer;
  const SolveResult result = solve_critical_points(p, cfg);
  const double elapsed = timer.ms();

  if (as_json) {
    std::cout << solve_report_json(p, cfg, result, elapsed).dump(2) << '\n';
  } else {
    std::cout << render_solve_table(result.points, kGapDisplayTol);
    std::cerr << "seeds=" << result.stats.seeds << " converged=" << result.stats.converged
              << " elapsed_ms=" << elapsed << '\n';
  }
  if (result.points.empty()) {
    std::cerr << "no critical point converged (seeds=" << result.stats.seeds
              << ", branches=" << result.stats.branches << ")\n";
    return kNoPoints;
  }
  return select_global(result.points) ? kOk : kUncertified;
}

int run_auglag(const std::string& file, const std::string& seed_box, int grid, double tol,
               const std::string& mu0_str, double nu0, double alpha, int iters,
               double feas_tol, bool subtable, bool as_json) {
  const Problem p = load_problem_file(file);
  SolverConfig scfg;
  if (!seed_box.empty()) scfg.seed_box = parse_seed_box(seed_box);
  if (grid > 0) scfg.grid_density = grid;
  if (tol > 0) scfg.newton_tol = tol;

  const VectorXd mu0 = to_eigen(parse_number_list(mu0_str));

  Timer timer;
  if (subtable) {
    const SubproblemResult result = solve_subproblem_dual(p, mu0, nu0, scfg);
    const double elapsed = timer.ms();
    if (as_json) {
      std::cout << subproblem_report_json(p, scfg, mu0, nu0, result, elapsed).dump(2) << '\n';
    } else {
      std::cout << render_subproblem_table(result.points, kGapDisplayTol);
      std::cerr << "seeds=" << result.stats.seeds << " elapsed_ms=" << elapsed << '\n';
    }
    if (result.points.empty()) return kNoPoints;
    const bool certified =
        std::any_of(result.points.begin(), result.points.end(), [](const auto& pt) {
          return pt.classification == Classification::GlobalMinCertified;
        });
    return certified ? kOk : kUncertified;
  }

  AugLagConfig acfg;
  acfg.mu0 = mu0;
  acfg.nu0 = nu0;
  acfg.alpha = alpha;
  acfg.max_outer_iter = iters;
  acfg.feasibility_tol = feas_tol;
  const OuterLoopResult result = outer_loop(p, acfg, scfg);
  const double elapsed = timer.ms();
  if (as_json) {
    std::cout << outer_report_json(p, acfg, result, elapsed).dump(2) << '\n';
  } else {
    std::cout << render_outer_history(result);
    std::cerr << "elapsed_ms=" << elapsed << '\n';
  }
  if (result.history.empty()) return kNoPoints;
  return result.reached_feasibility ? kOk : kUncertified;
}

int run_curve(const std::string& file, const std::string& function, const std::string& mu_str,
              const std::string& lambda_str, double nu, const std::string& range, long samples,
              const std::string& out_path) {
  const Problem p = load_problem_file(file);
  if (p.n() != 1) {
    std::cerr << "curve sampling requires a one-dimensional problem\n";
    return kSchema;
  }
  if (samples < 2) throw CLI::ValidationError("--samples must be >= 2");
  const auto ivs = parse_intervals(range);
  if (ivs.size() != 1) throw CLI::ValidationError("--range expects a single lo:hi");
  const double lo = ivs[0].lo, hi = ivs[0].hi;

  const VectorXd mu =
      mu_str.empty() ? VectorXd::Zero(p.p()) : to_eigen(parse_number_list(mu_str));
  const VectorXd lam =
      lambda_str.empty() ? VectorXd::Zero(p.m()) : to_eigen(parse_number_list(lambda_str));
  if (mu.size() != p.p()) throw CLI::ValidationError("--mu length must match equality count");
  if (lam.size() != p.m()) {
    throw CLI::ValidationError("--lambda length must match inequality count");
  }

  std::function<double(const VectorXd&)> fn;
  if (function == "objective") {
    fn = [&](const VectorXd& x) { return eval_objective(p, x); };
  } else if (function.rfind("constraint:", 0) == 0) {
    const int j = std::stoi(function.substr(std::string("constraint:").size()));
    const int total = p.m() + p.p();
    if (j < 0 || j >= total) throw CLI::ValidationError("constraint index out of range");
    const CanonicalTerm& term = j < p.m() ? p.g_terms()[j] : p.h_terms()[j - p.m()];
    fn = [&term](const VectorXd& x) { return eval_constraint(term, x); };
  } else if (function == "lagrangian") {
    fn = [&](const VectorXd& x) {
      double v = eval_objective(p, x);
      for (int i = 0; i < p.m(); ++i) v += lam[i] * eval_constraint(p.g_terms()[i], x);
      for (int j = 0; j < p.p(); ++j) v += mu[j] * eval_constraint(p.h_terms()[j], x);
      return v;
    };
  } else if (function == "auglag") {
    if (!(nu > 0)) throw CLI::ValidationError("--nu must be > 0 for auglag curves");
    fn = [&](const VectorXd& x) { return eval_auglag(p, x, mu, nu); };
  } else {
    throw CLI::ValidationError(
        "--function must be objective, constraint:j, lagrangian or auglag");
  }

  std::ofstream file_out;
  std::ostream* os = &std::cout;
  if (!out_path.empty()) {
    file_out.open(out_path);
    if (!file_out) {
      std::cerr << "cannot open output file: " << out_path << '\n';
      return kInternal;
    }
    os = &file_out;
  }
  (*os) << "x,value\n";
  VectorXd x(1);
  char buf[80];
  for (long i = 0; i < samples; ++i) {
    x[0] = lo + (hi - lo) * static_cast<double>(i) / (samples - 1);
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", x[0], fn(x));
    (*os) << buf;
  }
  return kOk;
}

int run_oracle(const std::string& file, const std::string& box_str, long density,
               double feas_tol, const std::string& against, double budget, bool as_json) {
  const Problem p = load_problem_file(file);
  GridSpec gs;
  const auto ivs = parse_intervals(box_str);
  if (static_cast<int>(ivs.size()) == p.n()) {
    for (const auto& iv : ivs) gs.box.emplace_back(iv.lo, iv.hi);
  } else if (ivs.size() == 1) {
    gs.box.assign(p.n(), {ivs[0].lo, ivs[0].hi});
  } else {
    throw CLI::ValidationError("--box must give one interval or one per coordinate");
  }
  gs.points_per_axis = density;
  gs.feas_tol = feas_tol;
  if (p.n() > 3) {
    std::cerr << "grid search supports n <= 3\n";
    return kUsage;
  }

  nlohmann::json out;
  GridMinimum gm;
  try {
    gm = grid_constrained_min(p, gs);
  } catch (const NoFeasiblePoint& e) {
    std::cerr << e.what() << '\n';
    return kUncertified;
  }
  out["x_best"] = std::vector<double>(gm.x_best.begin(), gm.x_best.end());
  out["f_best"] = gm.f_best;
  out["feas_count"] = gm.feas_count;
  out["feas_tol"] = gs.feas_tol;
  out["density"] = gs.points_per_axis;

  bool contradicted = false;
  if (!against.empty()) {
    std::ifstream in(against);
    if (!in) {
      std::cerr << "cannot open report file: " << against << '\n';
      return kSchema;
    }
    nlohmann::json report;
    try {
      in >> report;
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "invalid report JSON: " << e.what() << '\n';
      return kSchema;
    }
    const auto points = points_from_report(report);
    const CrossValidation cv = cross_validate(p, points, gs, budget);
    contradicted = cv.contradicted;
    out["verdict"] = cv.contradicted ? "contradicted" : "consistent";
    out["budget"] = cv.budget;
    out["notes"] = cv.notes;
  }

  if (as_json) {
    std::cout << out.dump(2) << '\n';
  } else {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "grid minimum f=%.6f at x=%.6f (feasible nodes: %ld)\n",
                  gm.f_best, gm.x_best[0], gm.feas_count);
    std::cout << buf;
    if (!against.empty()) {
      std::cout << (contradicted ? "certification CONTRADICTED by grid\n"
                                 : "certification consistent\n");
      for (const auto& note : out["notes"]) std::cout << "  " << note.get<std::string>() << '\n';
    }
  }
  return contradicted ? kInternal : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"canonical-dual solver for nonconvex constrained problems"};
  app.require_subcommand(1);

  std::string file, seed_box, mu0_str = "0", function = "objective", range = "-6:6";
  std::string out_path, against, box_str = "-6:6", mu_str, lambda_str;
  int grid = 0, iters = 25;
  double tol = 0, nu0 = 5.0, alpha = 0.5, feas_tol = 1e-6, nu = 0;
  long samples = 401, density = 10001;
  double oracle_feas_tol = 1e-3, budget = 0.02;
  bool as_json = false, subtable = false;

  auto* solve = app.add_subcommand("solve", "enumerate and certify critical points");
  solve->add_option("file", file)->required();
  solve->add_option("--seed-box", seed_box, "seed intervals, e.g. x=-6:6,mu=-2:2");
  solve->add_option("--grid", grid, "seeds per axis")->check(CLI::Range(2, 100000));
  solve->add_option("--tol", tol, "Newton residual tolerance");
  auto* solve_json = solve->add_flag("--json", as_json, "full-precision JSON report");
  solve->add_flag("--table", "fixed-width table (default)")->excludes(solve_json);

  auto* auglag = app.add_subcommand("auglag", "penalized dual / multiplier iteration");
  auglag->add_option("file", file)->required();
  auglag->add_option("--mu0", mu0_str, "initial multipliers (comma list)");
  auglag->add_option("--nu0", nu0, "initial penalty");
  auglag->add_option("--alpha", alpha, "penalty shrink factor in (0,1)");
  auglag->add_option("--iters", iters, "max outer iterations");
  auglag->add_option("--feas-tol", feas_tol, "outer-loop feasibility stop");
  auglag->add_flag("--subtable", subtable, "print the sub-problem critical points");
  auglag->add_option("--seed-box", seed_box);
  auglag->add_option("--grid", grid)->check(CLI::Range(2, 100000));
  auglag->add_option("--tol", tol);
  auto* auglag_json = auglag->add_flag("--json", as_json);
  auglag->add_flag("--table")->excludes(auglag_json);

  auto* curve = app.add_subcommand("curve", "sample a scalar curve to CSV (n = 1)");
  curve->add_option("file", file)->required();
  curve->add_option("--function", function, "objective | constraint:j | lagrangian | auglag");
  curve->add_option("--mu", mu_str, "equality multipliers (comma list)");
  curve->add_option("--lambda", lambda_str, "inequality multipliers (comma list)");
  curve->add_option("--nu", nu, "penalty (auglag curves)");
  curve->add_option("--range", range, "sampling interval lo:hi");
  curve->add_option("--samples", samples, "sample count (>= 2)");
  curve->add_option("--out", out_path, "CSV output path (default stdout)");

  auto* oracle = app.add_subcommand("oracle", "brute-force grid verification (n <= 3)");
  oracle->add_option("file", file)->required();
  oracle->add_option("--box", box_str, "grid box lo:hi[,lo:hi...]");
  oracle->add_option("--density", density, "grid points per axis");
  oracle->add_option("--feas-tol", oracle_feas_tol, "constraint band half-width");
  oracle->add_option("--against", against, "solve report JSON to cross-validate");
  oracle->add_option("--budget", budget, "grid error budget for cross-validation");
  oracle->add_flag("--json", as_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (app.got_subcommand(solve)) return run_solve(file, seed_box, grid, tol, as_json);
    if (app.got_subcommand(auglag)) {
      return run_auglag(file, seed_box, grid, tol, mu0_str, nu0, alpha, iters, feas_tol,
                        subtable, as_json);
    }
    if (app.got_subcommand(curve)) {
      return run_curve(file, function, mu_str, lambda_str, nu, range, samples, out_path);
    }
    if (app.got_subcommand(oracle)) {
      return run_oracle(file, box_str, density, oracle_feas_tol, against, budget, as_json);
    }
    return kUsage;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  } catch (const SchemaError& e) {
    std::cerr << e.what() << '\n';
    return kSchema;
  } catch (const DimensionError& e) {
    std::cerr << e.what() << '\n';
    return kSchema;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
