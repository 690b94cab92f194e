#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace {

struct RunResult {
  std::string out;
  int code = -1;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(CANDUAL_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) result.out.append(buf, got);
  const int status = pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string fixture(const std::string& name) {
  return std::string(CANDUAL_FIXTURE_DIR) + "/" + name;
}

std::vector<std::pair<double, double>> parse_csv(const std::string& text) {
  std::vector<std::pair<double, double>> rows;
  std::istringstream is(text);
  std::string line;
  REQUIRE(std::getline(is, line));
  REQUIRE(line == "x,value");
  while (std::getline(is, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return rows;
}

int count_local_minima(const std::vector<std::pair<double, double>>& rows) {
  int minima = 0, prev_sign = 0;
  for (size_t i = 1; i < rows.size(); ++i) {
    const double diff = rows[i].second - rows[i - 1].second;
    const int sign = diff > 0 ? 1 : (diff < 0 ? -1 : 0);
    if (sign == 0) continue;
    if (prev_sign < 0 && sign > 0) ++minima;
    prev_sign = sign;
  }
  return minima;
}

}  // namespace

TEST_CASE("solve exit codes") {
  CHECK(run("solve " + fixture("example1.json")).code == 0);
  CHECK(run("solve " + fixture("unconstrained_qp.json")).code == 0);
  CHECK(run("solve " + fixture("infeasible.json")).code == 3);
  CHECK(run("solve /nonexistent.json").code == 65);
  CHECK(run("solve").code == 64);
  CHECK(run("frobnicate x").code == 64);
  CHECK(run("solve " + fixture("example1.json") + " --grid 1").code == 64);
}

TEST_CASE("schema errors exit 65") {
  const std::string path = "/tmp/candual_bad_schema.json";
  {
    std::ofstream out(path);
    out << R"({"n": 1, "A": [[1.0]], "c": [1.0], "bogus": 3})";
  }
  CHECK(run("solve " + path).code == 65);
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK(run("solve " + path).code == 65);
  std::remove(path.c_str());
}

TEST_CASE("solve table matches the published rows at two decimals") {
  const RunResult result = run("solve " + fixture("example1.json"));
  CHECK(result.code == 0);
  for (const char* needle :
       {"1.0225", "-5.4772", "0.0040", "-0.4997", "0.3611", "-0.1445", "-0.2207",
        "16.2683", "global_min_certified", "biggest_local_max_certified"}) {
    CHECK_MESSAGE(result.out.find(needle) != std::string::npos, "missing: " << needle);
  }
}

TEST_CASE("table rendering is byte-stable and locale independent") {
  const std::string cmd = "solve " + fixture("example1.json");
  const RunResult a = run(cmd);
  const RunResult b = run(cmd);
  CHECK(a.out == b.out);

  const std::string wrapped =
      std::string("env LC_ALL=de_DE.UTF-8 LANG=de_DE.UTF-8 ") + CANDUAL_CLI_PATH + " " + cmd +
      " 2>/dev/null";
  FILE* pipe = popen(wrapped.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, got);
  pclose(pipe);
  CHECK(out == a.out);
}

TEST_CASE("json report schema") {
  const RunResult result = run("solve " + fixture("example1.json") + " --json");
  CHECK(result.code == 0);
  const auto report = nlohmann::json::parse(result.out);
  REQUIRE(report.at("points").size() == 4);
  CHECK(report.at("selected_global").is_number_integer());
  const auto& pt = report.at("points")[0];
  for (const char* key : {"x", "lambda", "mu", "sigma_f", "sigma_g", "sigma_h",
                          "primal_value", "dual_value", "xi1_value", "gap", "g_eigenvalues",
                          "kkt_residual_inf", "classification"}) {
    CHECK_MESSAGE(pt.contains(key), "missing key: " << key);
  }
  CHECK(report.at("points")[0].at("classification") == "global_min_certified");
  // Full precision survives the JSON round trip.
  const double x0 = pt.at("x")[0].get<double>();
  CHECK(std::abs(x0 - 1.0225208310332983) <= 1e-12);
}

TEST_CASE("auglag subtable and history") {
  const RunResult sub =
      run("auglag " + fixture("example1.json") + " --mu0 1 --nu0 5 --subtable");
  CHECK(sub.code == 0);
  for (const char* needle : {"1.6906", "-0.9106", "-4.5710", "-2.7416", "0.5915", "0.0894"}) {
    CHECK_MESSAGE(sub.out.find(needle) != std::string::npos, "missing: " << needle);
  }

  const RunResult hist =
      run("auglag " + fixture("example1.json") + " --mu0 1 --nu0 5 --iters 1 --json");
  CHECK(hist.code == 2);  // one iteration cannot reach feasibility from mu0 = 1
  const auto report = nlohmann::json::parse(hist.out);
  REQUIRE(report.at("iterations").size() == 1);
  CHECK(std::abs(report.at("final_mu")[0].get<double>() - 0.09) <= 0.01);

  const RunResult full = run("auglag " + fixture("example1.json") + " --mu0 1 --nu0 5 --json");
  CHECK(full.code == 0);
  const auto full_report = nlohmann::json::parse(full.out);
  CHECK(full_report.at("reached_feasibility").get<bool>());

  const RunResult warm =
      run("auglag " + fixture("example1.json") + " --mu0 0.004 --nu0 5 --iters 1 --json");
  const auto warm_report = nlohmann::json::parse(warm.out);
  CHECK(warm_report.at("iterations")[0].at("h_inf").get<double>() <= 1e-3);

  CHECK(run("auglag " + fixture("unconstrained_qp.json") + " --mu0 1").code == 65);
}

TEST_CASE("curve CSV output") {
  const RunResult result = run("curve " + fixture("example1.json") +
                               " --function objective --range -6:6 --samples 5");
  CHECK(result.code == 0);
  const auto rows = parse_csv(result.out);
  REQUIRE(rows.size() == 5);
  const double xs[] = {-6, -3, 0, 3, 6};
  for (int i = 0; i < 5; ++i) {
    CHECK(rows[i].first == xs[i]);
    CHECK(rows[i].second == 0.5 * xs[i] * xs[i] - xs[i]);
  }
  CHECK(result.out.find("\r") == std::string::npos);
}

TEST_CASE("curve constraint and output file") {
  const std::string path = "/tmp/candual_curve.csv";
  const RunResult result = run("curve " + fixture("example1.json") +
                               " --function constraint:0 --range 0:2 --samples 3 --out " + path);
  CHECK(result.code == 0);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  const auto rows = parse_csv(ss.str());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].second == doctest::Approx(3.0));  // h(0)
  std::remove(path.c_str());
}

TEST_CASE("curve shape counting") {
  const RunResult lag = run("curve " + fixture("example1.json") +
                            " --function lagrangian --mu 1 --range -6:6 --samples 2001");
  CHECK(lag.code == 0);
  CHECK(count_local_minima(parse_csv(lag.out)) == 2);

  const RunResult aug = run("curve " + fixture("example1.json") +
                            " --function auglag --mu 1 --nu 5 --range -6:6 --samples 2001");
  CHECK(aug.code == 0);
  CHECK(count_local_minima(parse_csv(aug.out)) >= 2);
}

TEST_CASE("curve requires one dimension") {
  const std::string path = "/tmp/candual_2d.json";
  {
    std::ofstream out(path);
    out << R"({"n": 2, "A": [[1.0, 0.0], [0.0, 1.0]], "c": [1.0, 1.0],
               "inequalities": [], "equalities": []})";
  }
  CHECK(run("curve " + path + " --function objective").code == 65);
  std::remove(path.c_str());
}

TEST_CASE("oracle command and cross-validation") {
  const RunResult gm = run("oracle " + fixture("example1.json") +
                           " --box -6:6 --density 200001 --feas-tol 0.05 --json");
  CHECK(gm.code == 0);
  const auto report = nlohmann::json::parse(gm.out);
  CHECK(std::abs(report.at("f_best").get<double>() - (-0.5)) <= 0.02);

  const std::string report_path = "/tmp/candual_solve_report.json";
  {
    const RunResult solve = run("solve " + fixture("example1.json") + " --json");
    std::ofstream out(report_path);
    out << solve.out;
  }
  const RunResult against =
      run("oracle " + fixture("example1.json") +
          " --box -6:6 --density 200001 --feas-tol 0.05 --against " + report_path);
  CHECK(against.code == 0);
  CHECK(against.out.find("certification consistent") != std::string::npos);
  std::remove(report_path.c_str());

  CHECK(run("oracle " + fixture("infeasible.json") + " --box -6:6 --density 10001").code == 2);
}
