#pragma once

#include "svrs/problems.hpp"
#include "svrs/solvers.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace svrs {

inline constexpr std::array<double, 5> kTauScaleGrid{0.5, 1.0, 2.0, 5.0, 10.0};

struct SolverOverrides {
  std::optional<double> theta;
  std::optional<double> p;
  std::optional<double> tau_scale;
};

enum class ProblemKind { Synthetic, Libsvm, Hard };
std::string to_string(ProblemKind k);
ProblemKind parse_problem_kind(const std::string& s);

struct BenchConfig {
  ProblemKind problem = ProblemKind::Synthetic;
  // synthetic (desk scale unless `full`)
  bool full = false;
  Index d = 30;
  Index n = 40;
  double base_norm = 10.0;
  double perturb_norm = 0.1;
  // libsvm
  std::string libsvm_path;
  long per_client = 600;
  // hard instance
  double hard_delta = 10.0;
  double hard_Delta = 1.0;

  double mu = 0.01;
  DeltaSource delta_source = DeltaSource::Paper;
  /// Fixes the problem across seeds; otherwise each seed draws its own instance.
  std::optional<std::uint64_t> problem_seed;

  std::vector<SolverKind> solvers{SolverKind::Svrs, SolverKind::AccSvrs, SolverKind::Svrp};
  std::map<SolverKind, SolverOverrides> overrides;
  double tau_scale = 1.0;
  InnerMode inner = InnerMode::ExactQuadratic;

  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double eps = 1e-6;
  /// 0: twice the predicted iteration count (svrs, accsvrs, loopless), unbounded for svrp.
  long max_iters = 0;
  std::uint64_t max_comm = 5'000'000;
  bool stop_at_eps = true;
  long record_every = 10;
  CountingMode counting = CountingMode::Paper;
  std::string out_dir = "bench_out";
  int threads = 0;

  /// Switches to d = 100, n = 400, |Z_0| = 3000, |N_i| = 30.
  void apply_full();
  /// One `key = value` assignment; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  nlohmann::json to_json() const;
};

/// Reads a key/value file (`key = value`, `#` comments, optional [section] prefixes keys).
BenchConfig load_config(const std::string& path, BenchConfig base = {});
/// "1,2,3", "[1, 2]" or "1-50".
std::vector<std::uint64_t> parse_seed_list(const std::string& s);

/// Builds the configured instance for one seed.
ProblemBundle build_problem(const BenchConfig& cfg, std::uint64_t seed);
Vector initial_point(const BenchConfig& cfg, const Problem& problem, std::uint64_t seed);

struct SolverRun {
  SolverKind solver;
  std::uint64_t seed;
  RunTrace trace;
};

/// Runs one solver on one instance with the configured defaults and overrides.
RunTrace run_solver(const BenchConfig& cfg, SolverKind which, const Problem& problem, const Vector& x0,
                    std::uint64_t seed);

struct ComparisonRow {
  std::string solver;
  long runs = 0;
  long reached = 0;
  /// Censored runs count as +infinity.
  double median_comm = 0.0;
  double iqr_comm = 0.0;
  double median_grads = 0.0;
};

/// Median and interquartile range (linear interpolation between order statistics).
double quantile(std::vector<double> values, double q);
std::vector<ComparisonRow> summarize(const std::vector<SolverRun>& runs, const std::vector<SolverKind>& order,
                                     double eps);
void write_summary_csv(std::ostream& os, const std::vector<ComparisonRow>& rows);

struct BenchResult {
  std::vector<SolverRun> runs;
  std::vector<ComparisonRow> rows;
  std::vector<std::string> trace_files;
  std::string summary_path;
};

/// Seeds run in parallel; files are written afterwards by the calling thread.
BenchResult run_bench(const BenchConfig& cfg, bool write_files = true);

struct PlotTrace {
  std::string label;
  std::string path;
};

/// gnuplot script: f_gap (log scale) against cumulative communications.
std::string emit_plotscript(const std::vector<PlotTrace>& traces, const std::string& title = "function gap");
/// Collects `<solver>_seed<k>.csv` files of a run directory.
std::vector<PlotTrace> find_traces(const std::string& dir);

/// Output directory: SVRS_OUT_DIR when set, else the fallback.
std::string resolve_out_dir(const std::string& fallback);

}  // namespace svrs
