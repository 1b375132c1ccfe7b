#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "piag/experiment.hpp"
#include "piag/problems.hpp"
#include "piag/rates.hpp"

using namespace piag;
using nlohmann::json;

namespace {

const std::filesystem::path kTmp = PIAG_TEST_TMPDIR;

json base_config(const std::string& name) {
  json j = json::parse(R"({
    "problem": {"kind": "quadratic", "seed": 3, "d": 8, "N": 4, "m": 16},
    "schedule": {"kind": "zero", "tau": 0, "seed": 0},
    "alpha": "auto",
    "max_iters": 300,
    "checks": ["envelope", "lemma2", "certificate"]
  })");
  j["output"] = (kTmp / name).string();
  return j;
}

std::filesystem::path write_config(const std::string& name, const json& j) {
  std::filesystem::create_directories(kTmp);
  const auto path = kTmp / (name + ".json");
  std::ofstream(path) << j.dump(2);
  return path;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_file(const std::string& name, const json& j, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_command(write_config(name, j), {true, false}, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string cell;
  while (std::getline(s, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

TEST_CASE("quadratic run without delays decays under its envelope") {
  const auto config = parse_experiment_config(base_config("quad"));
  const auto result = run_experiment(config);
  CHECK(result.exit_code == kExitOk);
  CHECK(result.summary.at("checks").at("envelope").at("passed") == true);
  CHECK(result.summary.at("passed") == true);

  std::istringstream csv(slurp(config.output + "_trace.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "k,phi_err,dist_sq,psi,step_norm_sq,envelope,lemma2_residual_at_xk,lemma2_residual_at_proj,"
                "max_realized_delay");
  std::vector<double> psi;
  while (std::getline(csv, line)) {
    const auto cells = split(line);
    REQUIRE(cells.size() == 9);
    psi.push_back(std::stod(cells[3]));
    if (!cells[5].empty()) CHECK(psi.back() <= std::stod(cells[5]) * (1 + kEnvelopeSlack));
  }
  REQUIRE(psi.size() == 301);
  for (std::size_t k = 1; k < psi.size(); ++k) CHECK(psi[k] <= psi[k - 1]);
  CHECK(psi.back() < psi.front());
}

TEST_CASE("alpha auto records the step-size bound") {
  auto j = base_config("auto");
  j["schedule"] = {{"kind", "cyclic"}, {"tau", 3}, {"seed", 1}};
  const auto config = parse_experiment_config(j);
  const auto result = execute_experiment(config);
  const auto& problem = result.summary.at("problem");
  const double expected =
      max_step_size(problem.at("beta").get<double>(), problem.at("L").get<double>(), 3);
  CHECK(result.summary.at("alpha").get<double>() == expected);
  CHECK(result.summary.at("alpha_auto") == true);
  CHECK(result.summary.at("config").at("alpha") == "auto");
}

TEST_CASE("schema violations exit with code 2") {
  std::string err;
  auto j = base_config("bad");
  j["schedule"]["kind"] = "poisson";
  CHECK(run_file("bad_schedule", j, &err) == kExitConfigError);
  CHECK(err.find("poisson") != std::string::npos);

  j = base_config("bad");
  j["colour"] = "blue";
  CHECK(run_file("bad_field", j) == kExitConfigError);

  j = base_config("bad");
  j["alpha"] = -1.0;
  CHECK(run_file("bad_alpha", j) == kExitConfigError);

  j = base_config("bad");
  j["alpha"] = "largest";
  CHECK(run_file("bad_alpha_name", j) == kExitConfigError);

  j = base_config("bad");
  j["checks"] = {"envelope", "vibes"};
  CHECK(run_file("bad_check", j) == kExitConfigError);

  j = base_config("bad");
  j["problem"]["d"] = -3;
  CHECK(run_file("bad_d", j) == kExitConfigError);

  j = base_config("bad");
  j.erase("output");
  CHECK(run_file("no_output", j) == kExitConfigError);

  j = base_config("bad");
  j["problem"]["kind"] = "lasso";
  CHECK(run_file("lasso_without_lambda", j) == kExitConfigError);

  std::ostringstream out, errs;
  CHECK(run_command(kTmp / "does_not_exist.json", {}, out, errs) == kExitConfigError);

  std::filesystem::create_directories(kTmp);
  std::ofstream(kTmp / "garbage.json") << "{ not json";
  CHECK(run_command(kTmp / "garbage.json", {}, out, errs) == kExitConfigError);
}

TEST_CASE("failed checks exit with code 1") {
  auto j = base_config("too_long");
  j["alpha"] = 1.0;  // far above the bound: the certificate is inadmissible
  j["checks"] = {"certificate"};
  j["max_iters"] = 3;
  CHECK(run_file("too_long", j) == kExitChecksFailed);
}

TEST_CASE("divergence exits with code 3 and keeps the partial trace") {
  auto j = base_config("diverge");
  j["alpha"] = 1e4;
  j["max_iters"] = 100000;
  j["checks"] = json::array();
  std::string err;
  CHECK(run_file("diverge", j, &err) == kExitDiverged);
  CHECK(err.find("non-finite") != std::string::npos);
  const auto summary = json::parse(slurp(kTmp / "diverge_summary.json"));
  CHECK(summary.at("status") == "diverged");
  const auto csv = slurp(kTmp / "diverge_trace.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') > 2);
}

TEST_CASE("identical configs give byte-identical artifacts") {
  for (const char* kind : {"uniform-random", "cyclic", "adversarial-max"}) {
    auto j = base_config("det_a");
    j["problem"] = {{"kind", "least_squares"}, {"seed", 5}, {"d", 12}, {"N", 5}, {"m", 20}};
    j["schedule"] = {{"kind", kind}, {"tau", 4}, {"seed", 11}};
    auto k = j;
    k["output"] = (kTmp / "det_b").string();
    run_experiment(parse_experiment_config(j), {false, true});
    run_experiment(parse_experiment_config(k), {false, true});
    CHECK(slurp(kTmp / "det_a_trace.csv") == slurp(kTmp / "det_b_trace.csv"));
    CHECK(slurp(kTmp / "det_a_instance.json") == slurp(kTmp / "det_b_instance.json"));
    // Summaries differ only in the output prefix they echo.
    auto sa = json::parse(slurp(kTmp / "det_a_summary.json"));
    auto sb = json::parse(slurp(kTmp / "det_b_summary.json"));
    sa.erase("artifacts");
    sb.erase("artifacts");
    sa["config"].erase("output");
    sb["config"].erase("output");
    CHECK(sa.dump() == sb.dump());
  }
  // Same prefix: the summary itself is byte-identical.
  const auto config = parse_experiment_config(base_config("det_same"));
  run_experiment(config);
  const auto first = slurp(kTmp / "det_same_summary.json");
  run_experiment(config);
  CHECK(slurp(kTmp / "det_same_summary.json") == first);
}

TEST_CASE("summary embeds the resolved config") {
  auto j = base_config("resolved");
  j["problem"].erase("m");
  const auto config = parse_experiment_config(j);
  const auto result = execute_experiment(config);
  const auto& embedded = result.summary.at("config");
  CHECK(embedded.at("problem").at("m") == 16);
  CHECK(embedded.at("problem").at("rank") == 8);
  CHECK(embedded.at("mode") == "cache");
  CHECK(embedded.at("schedule").at("kind") == "zero");
  // Re-parsing the embedded config reproduces the same run.
  auto again = embedded;
  again.erase("psi_tolerance");
  again.erase("x0");
  CHECK(execute_experiment(parse_experiment_config(again)).trace_csv == result.trace_csv);
}

TEST_CASE("trace iterates add x columns") {
  auto j = base_config("iterates");
  j["max_iters"] = 5;
  const auto result = execute_experiment(parse_experiment_config(j), {false, true});
  std::istringstream csv(result.trace_csv);
  std::string header;
  std::getline(csv, header);
  CHECK(split(header).size() == 9 + 8);
  CHECK(split(header).back() == "x_7");
}

TEST_CASE("numbers are written with 17 significant digits") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(1.0) == "1");
  CHECK(std::stod(format_number(M_PI)) == M_PI);
  CHECK(format_number(kInfinity) == "inf");
}

TEST_CASE("instances replay from file") {
  auto j = base_config("replay_src");
  j["problem"] = {{"kind", "least_squares"}, {"seed", 8}, {"d", 10}, {"N", 2}, {"m", 12}};
  j["max_iters"] = 50;
  run_experiment(parse_experiment_config(j));
  auto replay = j;
  // Relative paths resolve against the config file's directory.
  replay["problem"] = {{"kind", "file"}, {"path", "replay_src_instance.json"}};
  replay["output"] = (kTmp / "replay").string();
  CHECK(run_file("replay", replay) == kExitOk);
  CHECK(slurp(kTmp / "replay_instance.json") == slurp(kTmp / "replay_src_instance.json"));
}

TEST_CASE("other problem kinds run") {
  auto j = base_config("lasso");
  j["problem"] = {{"kind", "lasso"}, {"seed", 1}, {"d", 6}, {"N", 3}, {"m", 12}, {"lambda", 0.1}};
  j["schedule"] = {{"kind", "cyclic"}, {"tau", 2}, {"seed", 0}};
  j["max_iters"] = 200;
  auto r = execute_experiment(parse_experiment_config(j));
  CHECK(r.exit_code != kExitDiverged);
  CHECK(r.summary.at("problem").at("beta_estimated") == true);

  j["problem"] = {{"kind", "box_qp"}, {"seed", 1}, {"d", 5}, {"N", 2}, {"m", 10}, {"box", {{"lo", -0.3}, {"hi", 0.3}}}};
  j["mode"] = "history";
  r = execute_experiment(parse_experiment_config(j));
  CHECK(r.exit_code != kExitDiverged);
}

TEST_CASE("rate table rows") {
  RateGridConfig grid;
  grid.eta = {1.0};
  grid.tau = {0, 47};
  const auto rows = compare_rates(grid);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rate_a == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rows[0].rate_result4 == 0.5);
  CHECK(rows[0].prior == doctest::Approx(48.0 / 49.0).epsilon(1e-15));
  CHECK(rows[1].rate_result4 == doctest::Approx(1.0 - 1.0 / 2352.0).epsilon(1e-15));
  CHECK(std::abs(rows[1].rate_result4 - rows[1].prior) <= 1e-15);
  CHECK(rows[1].rate_a <= rows[1].rate_result4);
}

TEST_CASE("empty rate grid") {
  const auto path = write_config("empty_grid", json::parse(R"({"grid": {"eta": [], "tau": [0, 1]}})"));
  std::ostringstream out, err;
  CHECK(compare_rates_command(path, {}, out, err) == kExitOk);
  CHECK(out.str() == "eta,tau,rate_a,rate_result4,prior\n");

  const auto bad = write_config("bad_grid", json::parse(R"({"grid": {"eta": [0.5], "tau": [0]}})"));
  CHECK(compare_rates_command(bad, {}, out, err) == kExitConfigError);
}

TEST_CASE("rate table file output") {
  const auto prefix = (kTmp / "rates").string();
  const auto path =
      write_config("rates", json{{"grid", {{"eta", {1.0, 10.0}}, {"tau", {0, 5, 47}}}}, {"output", prefix}});
  std::ostringstream out, err;
  CHECK(compare_rates_command(path, {true, false}, out, err) == kExitOk);
  CHECK(out.str().empty());
  const auto table = slurp(prefix + "_rates.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 7);
}
