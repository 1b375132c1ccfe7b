#include "piag/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "piag/problems.hpp"
#include "piag/rates.hpp"
#include "piag/serialization.hpp"

namespace piag {

namespace {

using nlohmann::json;

// --- strict field access ---------------------------------------------------

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
}

void allow_only(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw ConfigError(where + ": unknown field '" + item.key() + "'");
}

const json& required(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

std::uint64_t as_unsigned(const json& v, const std::string& what) {
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(what + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::uint64_t as_positive(const json& v, const std::string& what) {
  const auto value = as_unsigned(v, what);
  if (value == 0) throw ConfigError(what + " must be positive");
  return value;
}

double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  const double value = v.get<double>();
  if (!std::isfinite(value)) throw ConfigError(what + " must be finite");
  return value;
}

std::string as_string(const json& v, const std::string& what) {
  if (!v.is_string()) throw ConfigError(what + " must be a string");
  return v.get<std::string>();
}

json number_or_null(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

json optional_number(const std::optional<double>& value) { return value ? number_or_null(*value) : json(nullptr); }

std::string_view to_string(Check check) {
  switch (check) {
    case Check::envelope: return "envelope";
    case Check::lemma2: return "lemma2";
    case Check::certificate: return "certificate";
  }
  return "unknown";
}

bool wants(const ExperimentConfig& config, Check check) {
  return std::find(config.checks.begin(), config.checks.end(), check) != config.checks.end();
}

// --- problem section -------------------------------------------------------

ProblemConfig parse_problem(const json& j, const std::filesystem::path& base_dir) {
  const std::string where = "problem";
  require_object(j, where);
  ProblemConfig out;
  out.kind = as_string(required(j, where, "kind"), "problem.kind");

  static const std::set<std::string> generated = {"kind", "seed", "d", "N", "m"};
  std::set<std::string> allowed = generated;
  if (out.kind == "least_squares" || out.kind == "quadratic") {
    allowed.insert("rank");
  } else if (out.kind == "lasso") {
    allowed.insert("lambda");
  } else if (out.kind == "box_qp") {
    allowed.insert("box");
  } else if (out.kind == "file") {
    allowed = {"kind", "path"};
  } else {
    throw ConfigError("problem.kind: unknown kind '" + out.kind +
                      "' (expected least_squares, quadratic, lasso, box_qp or file)");
  }
  allow_only(j, where, allowed);

  if (out.kind == "file") {
    std::filesystem::path path = as_string(required(j, where, "path"), "problem.path");
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    out.path = path.string();
    return out;
  }

  if (j.contains("seed")) out.seed = as_unsigned(j.at("seed"), "problem.seed");
  if (j.contains("d")) out.d = static_cast<Index>(as_positive(j.at("d"), "problem.d"));
  if (j.contains("N")) out.N = as_positive(j.at("N"), "problem.N");
  out.m = j.contains("m") ? static_cast<Index>(as_positive(j.at("m"), "problem.m")) : 2 * out.d;
  if (static_cast<Index>(out.N) > out.m) throw ConfigError("problem: N must not exceed m (every block needs a row)");

  if (j.contains("rank")) {
    out.rank = static_cast<Index>(as_positive(j.at("rank"), "problem.rank"));
    if (*out.rank > std::min(out.d, out.m)) throw ConfigError("problem.rank must not exceed min(d, m)");
  }
  if (out.kind == "lasso") {
    out.lambda = as_number(required(j, where, "lambda"), "problem.lambda");
    if (!(*out.lambda > 0.0)) throw ConfigError("problem.lambda must be positive");
  }
  if (out.kind == "box_qp") {
    const json& box = required(j, where, "box");
    require_object(box, "problem.box");
    allow_only(box, "problem.box", {"lo", "hi"});
    const double lo = as_number(required(box, "problem.box", "lo"), "problem.box.lo");
    const double hi = as_number(required(box, "problem.box", "hi"), "problem.box.hi");
    if (!(lo <= hi)) throw ConfigError("problem.box: lo must not exceed hi");
    out.box = std::make_pair(lo, hi);
  }
  return out;
}

json problem_json(const ProblemConfig& p) {
  if (p.kind == "file") return {{"kind", p.kind}, {"path", *p.path}};
  json out = {{"kind", p.kind}, {"seed", p.seed}, {"d", p.d}, {"N", p.N}, {"m", p.m}};
  if (p.kind == "least_squares" || p.kind == "quadratic")
    out["rank"] = p.rank.value_or(p.kind == "quadratic" ? std::min(p.d, p.m) : std::max<Index>(1, std::min(p.d, p.m) / 2));
  if (p.lambda) out["lambda"] = *p.lambda;
  if (p.box) out["box"] = {{"lo", p.box->first}, {"hi", p.box->second}};
  return out;
}

// --- trace rendering -------------------------------------------------------

void append_optional(std::string& line, const std::optional<double>& value) {
  line += ',';
  if (value) line += format_number(*value);
}

// --- run helpers -----------------------------------------------------------

struct Lemma2Summary {
  double min_residual = kInfinity;
  std::optional<std::size_t> first_violation;
  std::size_t evaluated = 0;
};

Lemma2Summary summarize_lemma2(const ConvergenceTrace& trace) {
  Lemma2Summary out;
  for (const auto& row : trace.rows) {
    for (const auto& value : {row.lemma2_at_iterate, row.lemma2_at_projection}) {
      if (!value) continue;
      ++out.evaluated;
      out.min_residual = std::min(out.min_residual, *value);
      if (!(*value >= kLemma2Tolerance) && !out.first_violation) out.first_violation = row.k;
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << contents;
  if (!out) throw InputError("failed writing " + path.string());
}

json load_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace

// --- config parsing --------------------------------------------------------

ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir) {
  require_object(j, "config");
  allow_only(j, "config",
             {"problem", "schedule", "alpha", "max_iters", "mode", "psi_tolerance", "x0", "checks", "output"});
  ExperimentConfig out;
  out.problem = parse_problem(required(j, "config", "problem"), base_dir);

  const json& schedule = required(j, "config", "schedule");
  require_object(schedule, "schedule");
  allow_only(schedule, "schedule", {"kind", "tau", "seed"});
  const auto kind_name = as_string(required(schedule, "schedule", "kind"), "schedule.kind");
  const auto kind = parse_schedule_kind(kind_name);
  if (!kind)
    throw ConfigError("schedule.kind: unknown kind '" + kind_name +
                      "' (expected zero, fixed, cyclic, uniform-random or adversarial-max)");
  out.schedule.kind = *kind;
  if (schedule.contains("tau")) out.schedule.tau = as_unsigned(schedule.at("tau"), "schedule.tau");
  if (*kind == ScheduleKind::zero && out.schedule.tau != 0) throw ConfigError("schedule: the zero kind needs tau = 0");
  if (schedule.contains("seed")) out.schedule.seed = as_unsigned(schedule.at("seed"), "schedule.seed");

  const json& alpha = required(j, "config", "alpha");
  if (alpha.is_string()) {
    if (alpha.get<std::string>() != "auto") throw ConfigError("alpha must be a positive number or \"auto\"");
  } else {
    out.alpha = as_number(alpha, "alpha");
    if (!(*out.alpha > 0.0)) throw ConfigError("alpha must be positive");
  }

  out.max_iters = as_unsigned(required(j, "config", "max_iters"), "max_iters");
  if (j.contains("mode")) {
    const auto name = as_string(j.at("mode"), "mode");
    const auto mode = parse_solver_mode(name);
    if (!mode) throw ConfigError("mode: unknown mode '" + name + "' (expected cache or history)");
    out.mode = *mode;
  }
  if (j.contains("psi_tolerance")) {
    out.psi_tolerance = as_number(j.at("psi_tolerance"), "psi_tolerance");
    if (!(*out.psi_tolerance >= 0.0)) throw ConfigError("psi_tolerance must be nonnegative");
  }
  if (j.contains("x0")) {
    const json& x0 = j.at("x0");
    if (!x0.is_array()) throw ConfigError("x0 must be an array of numbers");
    std::vector<double> values;
    for (const auto& v : x0) values.push_back(as_number(v, "x0 entry"));
    out.x0 = std::move(values);
  }
  if (j.contains("checks")) {
    const json& checks = j.at("checks");
    if (!checks.is_array()) throw ConfigError("checks must be an array");
    for (const auto& c : checks) {
      const auto name = as_string(c, "checks entry");
      Check check;
      if (name == "envelope")
        check = Check::envelope;
      else if (name == "lemma2")
        check = Check::lemma2;
      else if (name == "certificate")
        check = Check::certificate;
      else
        throw ConfigError("checks: unknown check '" + name + "' (expected envelope, lemma2 or certificate)");
      if (std::find(out.checks.begin(), out.checks.end(), check) == out.checks.end()) out.checks.push_back(check);
    }
  }
  out.output = as_string(required(j, "config", "output"), "output");
  if (out.output.empty()) throw ConfigError("output must be a nonempty path prefix");
  return out;
}

RateGridConfig parse_rate_grid_config(const json& j) {
  require_object(j, "config");
  allow_only(j, "config", {"grid", "output"});
  RateGridConfig out;
  const json& grid = required(j, "config", "grid");
  require_object(grid, "grid");
  allow_only(grid, "grid", {"eta", "tau"});
  const json& eta = required(grid, "grid", "eta");
  const json& tau = required(grid, "grid", "tau");
  if (!eta.is_array() || !tau.is_array()) throw ConfigError("grid.eta and grid.tau must be arrays");
  for (const auto& v : eta) {
    const double value = as_number(v, "grid.eta entry");
    if (!(value >= 1.0)) throw ConfigError("grid.eta entries must be >= 1");
    out.eta.push_back(value);
  }
  for (const auto& v : tau) out.tau.push_back(as_unsigned(v, "grid.tau entry"));
  if (j.contains("output")) out.output = as_string(j.at("output"), "output");
  return out;
}

json to_json(const ExperimentConfig& config) {
  json out;
  out["problem"] = problem_json(config.problem);
  out["schedule"] = {{"kind", std::string(to_string(config.schedule.kind))},
                     {"tau", config.schedule.tau},
                     {"seed", config.schedule.seed}};
  out["alpha"] = config.alpha ? json(*config.alpha) : json("auto");
  out["max_iters"] = config.max_iters;
  out["mode"] = std::string(to_string(config.mode));
  out["psi_tolerance"] = optional_number(config.psi_tolerance);
  out["x0"] = config.x0 ? json(*config.x0) : json(nullptr);
  auto checks = json::array();
  for (Check c : config.checks) checks.push_back(std::string(to_string(c)));
  out["checks"] = std::move(checks);
  out["output"] = config.output;
  return out;
}

json to_json(const RateGridConfig& config) {
  return {{"grid", {{"eta", config.eta}, {"tau", config.tau}}}, {"output", config.output}};
}

// --- problems --------------------------------------------------------------

ProblemInstance build_problem(const ProblemConfig& p) {
  if (p.kind == "file") {
    if (!p.path) throw ConfigError("problem.path is required for kind 'file'");
    return instance_from_json(load_json(*p.path));
  }
  if (p.kind == "least_squares" || p.kind == "quadratic") {
    RandomLeastSquaresOptions options;
    options.d = p.d;
    options.m = p.m;
    options.N = p.N;
    options.seed = p.seed;
    options.rank =
        p.rank.value_or(p.kind == "quadratic" ? std::min(p.d, p.m) : std::max<Index>(1, std::min(p.d, p.m) / 2));
    return random_least_squares(options);
  }
  if (p.kind == "lasso") return random_lasso(p.d, p.m, p.lambda.value(), p.N, p.seed);
  if (p.kind == "box_qp") return random_box_quadratic(p.d, p.m, p.box->first, p.box->second, p.N, p.seed);
  throw ConfigError("problem.kind: unknown kind '" + p.kind + "'");
}

// --- formatting ------------------------------------------------------------

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string trace_csv(const ConvergenceTrace& trace, std::optional<double> beta, bool with_iterates) {
  std::string out =
      "k,phi_err,dist_sq,psi,step_norm_sq,envelope,lemma2_residual_at_xk,lemma2_residual_at_proj,max_realized_delay";
  Index d = 0;
  if (with_iterates && !trace.empty() && trace.rows.front().iterate) {
    d = trace.rows.front().iterate->size();
    for (Index i = 0; i < d; ++i) out += ",x_" + std::to_string(i);
  }
  out += '\n';

  std::optional<ContractionRate> rate;
  if (beta && *beta > 0.0) rate = ContractionRate::from_step(trace.alpha, *beta);
  const std::optional<double> psi0 = trace.empty() ? std::nullopt : trace.rows.front().psi;

  for (const auto& row : trace.rows) {
    std::string line = std::to_string(row.k);
    append_optional(line, row.phi_err);
    append_optional(line, row.dist_sq);
    append_optional(line, row.psi);
    append_optional(line, row.step_norm_sq);
    std::optional<double> envelope;
    if (rate && psi0) envelope = *psi0 > 0.0 ? std::exp(std::log(*psi0) + rate->log_power(row.k)) : 0.0;
    append_optional(line, envelope);
    append_optional(line, row.lemma2_at_iterate);
    append_optional(line, row.lemma2_at_projection);
    line += ',';
    if (!row.delays.empty()) line += std::to_string(row.max_delay());
    if (d > 0) {
      for (Index i = 0; i < d; ++i) {
        line += ',';
        if (row.iterate) line += format_number((*row.iterate)[i]);
      }
    }
    out += line;
    out += '\n';
  }
  return out;
}

// --- experiments -----------------------------------------------------------

ExperimentResult execute_experiment(const ExperimentConfig& config, const RunFlags& flags) {
  const ProblemInstance problem = build_problem(config.problem);
  const auto& truth = problem.ground_truth();
  const bool needs_truth = !config.alpha || config.psi_tolerance || !config.checks.empty();
  if (needs_truth && !truth)
    throw CapabilityError("alpha \"auto\", psi_tolerance and every check need an instance with ground truth");

  const DelaySchedule schedule(config.schedule.kind, config.schedule.tau, problem.size(), config.schedule.seed);
  const double L = problem.total_lipschitz();
  std::optional<double> beta;
  std::optional<double> alpha_max;
  if (truth) {
    beta = truth->qg_constant;
    if (L > 0.0) alpha_max = max_step_size(*beta, L, schedule.tau());
  }
  if (!config.alpha && !alpha_max) throw ParameterError("alpha \"auto\" needs L > 0");
  const double alpha = config.alpha.value_or(alpha_max.value_or(0.0));

  Vector x0;
  if (config.x0) {
    x0 = Eigen::Map<const Vector>(config.x0->data(), static_cast<Index>(config.x0->size()));
    if (x0.size() != problem.dimension())
      throw ConfigError("x0 has " + std::to_string(x0.size()) + " entries, the problem dimension is " +
                        std::to_string(problem.dimension()));
  } else {
    x0 = random_point(problem.dimension(), config.problem.seed);
  }

  StoppingRule stop;
  stop.max_iterations = config.max_iters;
  stop.psi_tolerance = config.psi_tolerance;
  RunOptions options;
  options.mode = config.mode;
  options.record_iterates = flags.trace_iterates;
  options.lemma2_diagnostics = true;

  ExperimentResult result;
  ConvergenceTrace trace;
  std::optional<std::string> divergence;
  try {
    trace = run(problem, schedule, alpha, x0, stop, options);
  } catch (const DivergenceError& e) {
    trace = e.partial_trace();
    divergence = e.what();
  }

  json summary;
  summary["config"] = to_json(config);
  summary["status"] = divergence ? "diverged" : "completed";
  if (divergence) summary["divergence"] = *divergence;

  json info = {{"dimension", problem.dimension()}, {"components", problem.size()}, {"L", L}};
  if (truth) {
    info["beta"] = truth->qg_constant;
    info["beta_estimated"] = truth->beta_estimated;
    info["optimal_value"] = truth->optimal_value;
    info["eta"] = L / truth->qg_constant;
    info["solution_set_dimension"] = truth->solutions.null_basis.cols();
  }
  summary["problem"] = std::move(info);

  summary["alpha"] = alpha;
  summary["alpha_auto"] = !config.alpha.has_value();
  summary["alpha_max"] = alpha_max ? json(*alpha_max) : json(nullptr);
  if (beta) {
    summary["rate_a"] = convergence_rate(alpha, *beta);
    const double eta = L / *beta;
    summary["rate_result4"] = eta >= 1.0 ? json(rate_result4(eta, schedule.tau())) : json(nullptr);
  }
  summary["iterations"] = trace.empty() ? 0 : trace.rows.back().k;
  if (!trace.empty()) {
    const auto& last = trace.rows.back();
    summary["final"] = {{"objective", number_or_null(last.objective)},
                        {"phi_err", optional_number(last.phi_err)},
                        {"dist_sq", optional_number(last.dist_sq)},
                        {"psi", optional_number(last.psi)}};
  }

  bool passed = true;
  json checks = json::object();
  if (wants(config, Check::envelope)) {
    const auto envelope = envelope_check(trace, ContractionRate::from_step(alpha, *beta));
    checks["envelope"] = {{"passed", envelope.holds()},
                          {"status", std::string(to_string(envelope.status))},
                          {"worst_ratio", number_or_null(envelope.worst_ratio)},
                          {"first_violation", envelope.first_violation ? json(*envelope.first_violation) : json(nullptr)},
                          {"beta_estimated", truth->beta_estimated}};
    passed = passed && envelope.holds();
  }
  if (wants(config, Check::lemma2)) {
    const auto lemma2 = summarize_lemma2(trace);
    const bool ok = !lemma2.first_violation;
    checks["lemma2"] = {{"passed", ok},
                        {"tolerance", kLemma2Tolerance},
                        {"evaluated", lemma2.evaluated},
                        {"min_residual", lemma2.evaluated ? number_or_null(lemma2.min_residual) : json(nullptr)},
                        {"first_violation", lemma2.first_violation ? json(*lemma2.first_violation) : json(nullptr)}};
    passed = passed && ok;
  }
  if (wants(config, Check::certificate)) {
    const auto certificate = certificate_for(problem, alpha, schedule.tau());
    checks["certificate"] = {{"passed", certificate.admissible()},
                             {"a", certificate.a()},
                             {"b", certificate.b()},
                             {"c", certificate.c()},
                             {"k0", certificate.k0()},
                             {"admissibility_lhs", certificate.admissibility_lhs()},
                             {"relative_slack", certificate.relative_slack()}};
    passed = passed && certificate.admissible();
  }
  summary["checks"] = std::move(checks);
  summary["passed"] = passed && !divergence;
  summary["artifacts"] = {{"trace", config.output + "_trace.csv"},
                          {"summary", config.output + "_summary.json"},
                          {"instance", config.output + "_instance.json"}};

  result.exit_code = divergence ? kExitDiverged : (passed ? kExitOk : kExitChecksFailed);
  summary["exit_code"] = result.exit_code;
  result.trace_csv = trace_csv(trace, beta, flags.trace_iterates);
  result.summary = std::move(summary);
  result.instance = instance_to_json(problem);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunFlags& flags) {
  ExperimentResult result = execute_experiment(config, flags);
  write_file(config.output + "_trace.csv", result.trace_csv);
  write_file(config.output + "_summary.json", result.summary.dump(2) + "\n");
  write_file(config.output + "_instance.json", result.instance.dump(2) + "\n");
  return result;
}

std::vector<RateRow> compare_rates(const RateGridConfig& config) {
  std::vector<RateRow> rows;
  rows.reserve(config.eta.size() * config.tau.size());
  for (double eta : config.eta) {
    for (std::size_t tau : config.tau) {
      RateRow row;
      row.eta = eta;
      row.tau = tau;
      row.rate_a = convergence_rate(max_step_size(1.0, eta, tau), 1.0);
      row.rate_result4 = rate_result4(eta, tau);
      row.prior = prior_rate(eta, tau);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string rates_csv(const std::vector<RateRow>& rows) {
  std::string out = "eta,tau,rate_a,rate_result4,prior\n";
  for (const auto& r : rows) {
    out += format_number(r.eta) + ',' + std::to_string(r.tau) + ',' + format_number(r.rate_a) + ',' +
           format_number(r.rate_result4) + ',' + format_number(r.prior) + '\n';
  }
  return out;
}

// --- command entry points --------------------------------------------------

int run_command(const std::filesystem::path& config_path, const RunFlags& flags, std::ostream& out,
                std::ostream& err) {
  try {
    const auto config = parse_experiment_config(load_json(config_path), config_path.parent_path());
    const auto result = run_experiment(config, flags);
    if (!flags.quiet) {
      out << "status: " << result.summary.at("status").get<std::string>() << "\n";
      out << "alpha: " << format_number(result.summary.at("alpha").get<double>()) << "\n";
      for (const auto& item : result.summary.at("checks").items())
        out << "check " << item.key() << ": " << (item.value().at("passed").get<bool>() ? "pass" : "FAIL") << "\n";
      out << "trace: " << config.output << "_trace.csv\n";
    }
    if (result.exit_code == kExitDiverged)
      err << "error: " << result.summary.at("divergence").get<std::string>() << "\n";
    return result.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

int compare_rates_command(const std::filesystem::path& config_path, const RunFlags& flags, std::ostream& out,
                          std::ostream& err) {
  try {
    const auto config = parse_rate_grid_config(load_json(config_path));
    const std::string table = rates_csv(compare_rates(config));
    if (!config.output.empty()) write_file(config.output + "_rates.csv", table);
    if (!flags.quiet) out << table;
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

}  // namespace piag
