#include "svrs/bench.hpp"
#include "svrs/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

int emit_report(const nlohmann::json& report, const std::string& path) {
  const std::string text = report.dump(2);
  if (!path.empty()) {
    std::ofstream f(path);
    if (!f) {
      std::cerr << "cannot write " << path << "\n";
      return 2;
    }
    f << text << '\n';
  }
  std::cout << text << '\n';
  return report.value("pass", false) ? 0 : 1;
}

void print_rows(const std::vector<svrs::ComparisonRow>& rows) {
  std::printf("%-10s %6s %8s %14s %14s %14s\n", "solver", "runs", "reached", "median_comm", "iqr_comm", "median_grads");
  for (const auto& r : rows)
    std::printf("%-10s %6ld %8ld %14s %14s %14s\n", r.solver.c_str(), r.runs, r.reached,
                svrs::format_double(r.median_comm).c_str(), svrs::format_double(r.iqr_comm).c_str(),
                svrs::format_double(r.median_grads).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-reduced sliding solvers: benchmark and verification harness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a seed sweep and write traces plus summary.csv");
  std::string config_path, out_dir, seeds, counting, solvers, problem, delta;
  std::optional<double> mu, eps, tau_scale;
  bool full = false;
  int threads = 0;
  std::vector<std::string> sets;
  run->add_option("config", config_path, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--mu", mu, "strong convexity / regularizer");
  run->add_option("--seeds", seeds, "seed list: 1,2,3 or 1-50");
  run->add_option("--eps", eps, "target function gap");
  run->add_option("--counting", counting, "paper|exact")->check(CLI::IsMember({"paper", "exact"}));
  run->add_option("--tau-scale", tau_scale, "AccSVRS interpolation scale s (tau = s tau0)");
  run->add_option("--solvers", solvers, "comma separated: svrs,accsvrs,loopless,svrp");
  run->add_option("--problem", problem, "synthetic|libsvm|hard");
  run->add_option("--delta", delta, "declared similarity: paper|exact")->check(CLI::IsMember({"paper", "exact"}));
  run->add_flag("--full", full, "d = 100, n = 400 synthetic setting");
  run->add_option("--threads", threads, "worker threads (0: hardware)");
  run->add_option("--out", out_dir, "output directory (default: SVRS_OUT_DIR or config out_dir)");
  run->add_option("--set", sets, "extra key=value assignments")->take_all();

  // verify
  auto* verify = app.add_subcommand("verify", "run the invariant suite and print a JSON report");
  bool quick = false;
  std::string verify_out;
  verify->add_flag("--quick", quick, "100 tracked hard-instance runs instead of 1000");
  verify->add_option("-o,--output", verify_out, "also write the report here");

  // plot
  auto* plot = app.add_subcommand("plot", "write a gnuplot script for the traces of a run directory");
  std::string plot_dir, plot_out;
  plot->add_option("dir", plot_dir, "run directory")->required();
  plot->add_option("-o,--output", plot_out, "script path (default: <dir>/plot.gp)");

  // hardlab verify
  auto* hardlab = app.add_subcommand("hardlab", "hard-instance laboratory");
  hardlab->require_subcommand(1);
  auto* hv = hardlab->add_subcommand("verify", "hard-instance checks as a JSON report");
  svrs::HardlabVerifyOptions hopt;
  std::string hv_out;
  hv->add_option("--runs", hopt.runs, "tracked runs per solver");
  hv->add_option("--n", hopt.n, "components");
  hv->add_option("--m", hopt.m, "dimension");
  hv->add_option("--seed", hopt.seed, "seed");
  hv->add_option("--pairs", hopt.avess_pairs, "random pairs for the similarity ratio test");
  hv->add_option("-o,--output", hv_out, "also write the report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      svrs::BenchConfig cfg;
      cfg.out_dir = svrs::resolve_out_dir(cfg.out_dir);
      if (!config_path.empty()) {
        cfg = svrs::load_config(config_path, cfg);
        if (const char* env = std::getenv("SVRS_OUT_DIR"); env && *env) cfg.out_dir = env;
      }
      if (full) cfg.apply_full();
      if (!problem.empty()) cfg.set("problem", problem);
      if (mu) cfg.mu = *mu;
      if (!seeds.empty()) cfg.seeds = svrs::parse_seed_list(seeds);
      if (eps) cfg.eps = *eps;
      if (!counting.empty()) cfg.set("counting", counting);
      if (tau_scale) cfg.tau_scale = *tau_scale;
      if (!solvers.empty()) cfg.set("solvers", solvers);
      if (!delta.empty()) cfg.set("delta", delta);
      if (threads > 0) cfg.threads = threads;
      for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      const auto result = svrs::run_bench(cfg);
      print_rows(result.rows);
      std::cout << "wrote " << result.trace_files.size() << " traces and " << result.summary_path << "\n";
      return 0;
    }
    if (*verify) {
      svrs::VerifyOptions o;
      if (quick) o.hardlab.runs = 100;
      return emit_report(svrs::verify_suite(o), verify_out);
    }
    if (*plot) {
      const auto traces = svrs::find_traces(plot_dir);
      const std::string path = plot_out.empty() ? (std::filesystem::path(plot_dir) / "plot.gp").string() : plot_out;
      const std::string script = svrs::emit_plotscript(traces);
      std::ofstream f(path);
      if (!f) throw std::runtime_error("cannot write '" + path + "'");
      f << script;
      std::cout << "wrote " << path << " (" << traces.size() << " curves)\n";
      return 0;
    }
    if (*hv) return emit_report(svrs::hardlab_verify(hopt), hv_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
