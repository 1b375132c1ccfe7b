#pragma once

// Configuration-driven experiment runner behind the `piag` command.
//
// A run config is a single JSON document:
//   {
//     "problem":  {"kind": "least_squares" | "quadratic" | "lasso" | "box_qp" | "file",
//                  "seed", "d", "N", "m", "rank"?, "lambda"?, "box": {"lo", "hi"}?, "path"?},
//     "schedule": {"kind", "tau", "seed"},
//     "alpha":    number | "auto",
//     "max_iters": integer,
//     "mode":     "cache" | "history"        (optional, default cache)
//     "psi_tolerance": number                (optional)
//     "x0":       [numbers]                  (optional, default seeded Gaussian)
//     "checks":   ["envelope", "lemma2", "certificate"],
//     "output":   "path/prefix"
//   }
// and produces <prefix>_trace.csv, <prefix>_summary.json and
// <prefix>_instance.json. Identical configs give byte-identical files.
//
// A compare-rates config is {"grid": {"eta": [...], "tau": [...]}, "output": prefix}.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "piag/delays.hpp"
#include "piag/model.hpp"
#include "piag/solver.hpp"

namespace piag {

/// Schema violation in a config document.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitChecksFailed = 1,
  kExitConfigError = 2,
  kExitDiverged = 3,
};

struct ProblemConfig {
  std::string kind;
  std::uint64_t seed = 0;
  Index d = 20;
  std::size_t N = 4;
  Index m = 40;
  std::optional<Index> rank;
  std::optional<double> lambda;
  std::optional<std::pair<double, double>> box;
  std::optional<std::string> path;
};

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::zero;
  std::size_t tau = 0;
  std::uint64_t seed = 0;
};

enum class Check { envelope, lemma2, certificate };

struct ExperimentConfig {
  ProblemConfig problem;
  ScheduleConfig schedule;
  std::optional<double> alpha;  // nullopt = "auto"
  std::size_t max_iters = 1000;
  SolverMode mode = SolverMode::cache;
  std::optional<double> psi_tolerance;
  std::optional<std::vector<double>> x0;
  std::vector<Check> checks;
  std::string output;
};

struct RateGridConfig {
  std::vector<double> eta;
  std::vector<std::size_t> tau;
  std::string output;
};

struct RunFlags {
  bool quiet = false;
  bool trace_iterates = false;
};

/// descent-inequality residuals below this count as violations.
inline constexpr double kLemma2Tolerance = -1e-9;

/// Strict parsing: unknown fields, wrong types and out-of-range values throw
/// ConfigError. Relative "file" paths resolve against base_dir.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RateGridConfig parse_rate_grid_config(const nlohmann::json& j);

/// The config with every default filled in, as embedded in the summary.
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const RateGridConfig& config);

ProblemInstance build_problem(const ProblemConfig& config);

struct ExperimentResult {
  int exit_code = kExitOk;
  std::string trace_csv;
  nlohmann::json summary;
  nlohmann::json instance;
};

/// Runs without touching the filesystem (except reading a "file" problem).
/// Divergence is reported through exit_code = 3 with the partial trace.
ExperimentResult execute_experiment(const ExperimentConfig& config, const RunFlags& flags = {});

/// Executes and writes the three artifacts under config.output.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunFlags& flags = {});

struct RateRow {
  double eta = 0.0;
  std::size_t tau = 0;
  double rate_a = 0.0;  // 1 / (1 + alpha_max beta) with beta = 1, L = eta
  double rate_result4 = 0.0;
  double prior = 0.0;
};

std::vector<RateRow> compare_rates(const RateGridConfig& config);
std::string rates_csv(const std::vector<RateRow>& rows);

/// 17 significant digits, "inf"/"-inf"/"nan" for non-finite values.
std::string format_number(double value);

/// CSV rendering of a trace. The envelope column is a^k Psi(x_0) with
/// a = 1 / (1 + alpha beta); x_i columns are appended when the trace carries
/// iterates.
std::string trace_csv(const ConvergenceTrace& trace, std::optional<double> beta, bool with_iterates);

/// Entry points of the command-line tool; return the process exit code.
/// Errors are reported on err.
int run_command(const std::filesystem::path& config_path, const RunFlags& flags, std::ostream& out,
                std::ostream& err);
int compare_rates_command(const std::filesystem::path& config_path, const RunFlags& flags, std::ostream& out,
                          std::ostream& err);

}  // namespace piag
