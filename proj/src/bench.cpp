#include "svrs/bench.hpp"

#include "svrs/hardlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fs = std::filesystem;

namespace svrs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_list(std::string s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw std::invalid_argument("unterminated list '" + s + "'");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument("config key '" + key + "': not a number: '" + v + "'");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw std::invalid_argument("config key '" + key + "': not an integer: '" + v + "'");
  return static_cast<long>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const long x = to_long(key, v);
  if (x < 0) throw std::invalid_argument("config key '" + key + "': must be nonnegative");
  return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: '" + v + "'");
}

double median_of(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Synthetic: return "synthetic";
    case ProblemKind::Libsvm: return "libsvm";
    case ProblemKind::Hard: return "hard";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(const std::string& s) {
  if (s == "synthetic") return ProblemKind::Synthetic;
  if (s == "libsvm") return ProblemKind::Libsvm;
  if (s == "hard") return ProblemKind::Hard;
  throw std::invalid_argument("unknown problem '" + s + "' (expected synthetic|libsvm|hard)");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  const std::string t = trim(s);
  static const std::regex range(R"((\d+)\s*-\s*(\d+))");
  std::smatch m;
  if (std::regex_match(t, m, range)) {
    const auto a = std::stoull(m[1]), b = std::stoull(m[2]);
    if (b < a) throw std::invalid_argument("empty seed range '" + t + "'");
    for (auto k = a; k <= b; ++k) out.push_back(k);
    return out;
  }
  for (const auto& item : split_list(t)) out.push_back(to_u64("seeds", item));
  if (out.empty()) throw std::invalid_argument("empty seed list");
  return out;
}

void BenchConfig::apply_full() {
  full = true;
  d = 100;
  n = 400;
  base_norm = 3000.0;
  perturb_norm = 30.0;
}

void BenchConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = unquote(raw_value);
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    const SolverKind kind = parse_solver(key.substr(0, dot));
    const std::string field = key.substr(dot + 1);
    auto& o = overrides[kind];
    if (field == "theta") o.theta = to_double(key, v);
    else if (field == "p") o.p = to_double(key, v);
    else if (field == "tau_scale") o.tau_scale = to_double(key, v);
    else throw std::invalid_argument("unknown solver override '" + key + "'");
    return;
  }
  if (key == "problem") problem = parse_problem_kind(v);
  else if (key == "full") {
    if (to_bool(key, v)) apply_full();
    else full = false;
  } else if (key == "d") d = to_long(key, v);
  else if (key == "n") n = to_long(key, v);
  else if (key == "base_norm") base_norm = to_double(key, v);
  else if (key == "perturb_norm") perturb_norm = to_double(key, v);
  else if (key == "libsvm_path") libsvm_path = v;
  else if (key == "per_client") per_client = to_long(key, v);
  else if (key == "hard_delta") hard_delta = to_double(key, v);
  else if (key == "hard_Delta") hard_Delta = to_double(key, v);
  else if (key == "mu") mu = to_double(key, v);
  else if (key == "delta") delta_source = parse_delta_source(v);
  else if (key == "problem_seed") problem_seed = to_u64(key, v);
  else if (key == "solvers") {
    solvers.clear();
    for (const auto& s : split_list(v)) solvers.push_back(parse_solver(s));
  } else if (key == "tau_scale") tau_scale = to_double(key, v);
  else if (key == "inner") inner = parse_inner_mode(v);
  else if (key == "seeds") seeds = parse_seed_list(v);
  else if (key == "eps") eps = to_double(key, v);
  else if (key == "max_iters") max_iters = to_long(key, v);
  else if (key == "max_comm") max_comm = to_u64(key, v);
  else if (key == "stop_at_eps") stop_at_eps = to_bool(key, v);
  else if (key == "record_every") record_every = to_long(key, v);
  else if (key == "counting") counting = parse_counting_mode(v);
  else if (key == "out_dir") out_dir = v;
  else if (key == "threads") threads = static_cast<int>(to_long(key, v));
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

void BenchConfig::validate() const {
  auto in_grid = [](double s) { return std::find(kTauScaleGrid.begin(), kTauScaleGrid.end(), s) != kTauScaleGrid.end(); };
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be > 0");
  if (!in_grid(tau_scale)) throw std::invalid_argument("tau_scale must be one of 0.5, 1, 2, 5, 10");
  for (const auto& [k, o] : overrides) {
    if (o.tau_scale && !in_grid(*o.tau_scale)) throw std::invalid_argument("tau_scale must be one of 0.5, 1, 2, 5, 10");
    if (o.theta && !(*o.theta > 0.0)) throw std::invalid_argument(to_string(k) + ".theta must be > 0");
    if (o.p && (!(*o.p > 0.0) || *o.p > 1.0)) throw std::invalid_argument(to_string(k) + ".p must lie in (0, 1]");
  }
  if (solvers.empty()) throw std::invalid_argument("no solvers configured");
  if (seeds.empty()) throw std::invalid_argument("no seeds configured");
  if (n < 1 || d < 1) throw std::invalid_argument("d and n must be >= 1");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (problem == ProblemKind::Libsvm && libsvm_path.empty()) throw std::invalid_argument("libsvm problem needs libsvm_path");
  if (problem == ProblemKind::Hard && !(hard_delta > mu)) throw std::invalid_argument("hard instance needs hard_delta > mu");
}

nlohmann::json BenchConfig::to_json() const {
  nlohmann::json j{{"problem", to_string(problem)}, {"full", full}, {"d", d}, {"n", n},
                   {"base_norm", base_norm}, {"perturb_norm", perturb_norm}, {"mu", mu},
                   {"delta", to_string(delta_source)}, {"tau_scale", tau_scale}, {"inner", to_string(inner)},
                   {"seeds", seeds}, {"eps", eps}, {"max_iters", max_iters}, {"max_comm", max_comm},
                   {"stop_at_eps", stop_at_eps}, {"record_every", record_every},
                   {"counting", to_string(counting)}};
  if (problem == ProblemKind::Libsvm) {
    j["libsvm_path"] = libsvm_path;
    j["per_client"] = per_client;
  }
  if (problem == ProblemKind::Hard) {
    j["hard_delta"] = hard_delta;
    j["hard_Delta"] = hard_Delta;
  }
  if (problem_seed) j["problem_seed"] = *problem_seed;
  std::vector<std::string> names;
  for (auto s : solvers) names.push_back(to_string(s));
  j["solvers"] = names;
  for (const auto& [k, o] : overrides) {
    auto& e = j["overrides"][to_string(k)];
    if (o.theta) e["theta"] = *o.theta;
    if (o.p) e["p"] = *o.p;
    if (o.tau_scale) e["tau_scale"] = *o.tau_scale;
  }
  return j;
}

BenchConfig load_config(const std::string& path, BenchConfig base) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config '" + path + "'");
  std::string line, section;
  long no = 0;
  while (std::getline(f, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(path + ":" + std::to_string(no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      base.set(section.empty() ? key : section + "." + key, line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(no) + ": " + e.what());
    }
  }
  return base;
}

ProblemBundle build_problem(const BenchConfig& cfg, std::uint64_t seed) {
  const std::uint64_t ps = cfg.problem_seed.value_or(seed);
  switch (cfg.problem) {
    case ProblemKind::Synthetic: {
      SyntheticSpec s;
      s.d = cfg.d;
      s.n = cfg.n;
      s.base_norm = cfg.base_norm;
      s.perturb_norm = cfg.perturb_norm;
      s.mu = cfg.mu;
      s.seed = ps;
      s.delta_source = cfg.delta_source;
      return gen_synthetic(s);
    }
    case ProblemKind::Libsvm:
      return load_libsvm(cfg.libsvm_path, static_cast<long>(cfg.n), cfg.per_client, cfg.mu, cfg.delta_source);
    case ProblemKind::Hard: {
      HardInstance h = build_scaled(static_cast<long>(cfg.n), cfg.hard_delta, cfg.mu, cfg.hard_Delta, cfg.eps);
      ProblemBundle b{h.problem, h.problem.delta(), h.problem.delta(), {}};
      b.descriptor = {{"kind", "hard"}, {"d", h.problem.dim()}, {"n", h.problem.n()}, {"mu", cfg.mu},
                      {"delta_paper", b.delta_paper}, {"delta_exact", b.delta_exact},
                      {"L", h.problem.smoothness().value_or(0.0)}, {"seed", ps}, {"instance", h.params.to_json()}};
      return b;
    }
  }
  throw std::logic_error("unreachable");
}

Vector initial_point(const BenchConfig& cfg, const Problem& problem, std::uint64_t seed) {
  if (cfg.problem == ProblemKind::Hard) return Vector::Zero(problem.dim());
  SeededRng rng = SeededRng(seed).split(1);
  return sphere_point(rng, problem.dim());
}

RunTrace run_solver(const BenchConfig& cfg, SolverKind which, const Problem& problem, const Vector& x0,
                    std::uint64_t seed) {
  const SolverOverrides o = cfg.overrides.count(which) ? cfg.overrides.at(which) : SolverOverrides{};
  NetProblem net(problem, cfg.counting);
  SeededRng rng = SeededRng(seed).split(100 + static_cast<std::uint64_t>(which));
  RunOptions opt;
  if (cfg.stop_at_eps) opt.stop_gap = cfg.eps;
  if (cfg.max_comm > 0) opt.max_comm = cfg.max_comm;
  opt.record_every = cfg.record_every;

  const auto& opt_pt = problem.optimum();
  const double gap0 = opt_pt ? full_value(problem, x0) - opt_pt->value : 1.0;
  auto iterations = [&](SolverKind k) -> long {
    if (cfg.max_iters > 0) return cfg.max_iters;
    if (k == SolverKind::Svrp) return std::numeric_limits<long>::max() / 4;
    return 2 * predicted_iterations(problem, k, std::max(gap0, cfg.eps), cfg.eps);
  };

  RunTrace t;
  switch (which) {
    case SolverKind::Svrs:
    case SolverKind::Loopless: {
      SvrsHyper h = default_svrs_hyper(problem);
      if (o.theta) h.theta = *o.theta;
      if (o.p) h.p = *o.p;
      const auto spec = make_inner_spec(problem, cfg.inner);
      t = which == SolverKind::Svrs ? svrs(net, x0, h, spec, iterations(which), rng, opt)
                                    : loopless_svrs(net, x0, h, spec, iterations(which), rng, opt);
      t.metadata["hyper"] = {{"theta", h.theta}, {"p", h.p}};
      break;
    }
    case SolverKind::AccSvrs: {
      // any delta-similar problem is also max(delta, mu)-similar
      Problem lifted = problem;
      if (lifted.delta() < lifted.mu()) {
        lifted.set_delta(lifted.mu());
        t.metadata["delta_lifted_to_mu"] = true;
      }
      AccHyper h = default_acc_hyper(lifted, o.tau_scale.value_or(cfg.tau_scale));
      if (o.theta || o.p) h = AccHyper::make(o.theta.value_or(h.theta), o.p.value_or(h.p), h.tau, h.alpha);
      RunTrace run = accsvrs(net, x0, h, make_inner_spec(problem, cfg.inner), iterations(which), rng, opt);
      run.metadata.update(t.metadata);
      t = std::move(run);
      t.metadata["hyper"] = {{"theta", h.theta}, {"p", h.p}, {"tau", h.tau}, {"alpha", h.alpha},
                             {"tau_scale", o.tau_scale.value_or(cfg.tau_scale)}};
      break;
    }
    case SolverKind::Svrp: {
      const double theta = o.theta.value_or(default_svrp_step(problem));
      const double p = o.p.value_or(1.0 / static_cast<double>(problem.n()));
      if (!opt.max_comm && cfg.max_iters == 0)
        throw std::invalid_argument("svrp needs max_iters or max_comm");
      t = svrp(net, x0, theta, p, iterations(which), rng, opt);
      t.metadata["hyper"] = {{"theta", theta}, {"p", p}};
      break;
    }
  }
  t.metadata["bench_seed"] = seed;
  t.metadata["eps"] = cfg.eps;
  return t;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (lo == hi || v[lo] == v[hi]) return v[lo];
  if (std::isinf(v[hi])) return v[hi];
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<ComparisonRow> summarize(const std::vector<SolverRun>& runs, const std::vector<SolverKind>& order,
                                     double eps) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<ComparisonRow> rows;
  for (SolverKind k : order) {
    ComparisonRow row;
    row.solver = to_string(k);
    std::vector<double> comm, grads;
    for (const auto& r : runs) {
      if (r.solver != k) continue;
      ++row.runs;
      const auto c = r.trace.comm_to_reach(eps);
      const auto g = r.trace.grads_to_reach(eps);
      if (c) ++row.reached;
      comm.push_back(c ? static_cast<double>(*c) : inf);
      grads.push_back(g ? static_cast<double>(*g) : inf);
    }
    if (row.runs == 0) continue;
    row.median_comm = median_of(comm);
    const double q1 = quantile(comm, 0.25), q3 = quantile(comm, 0.75);
    row.iqr_comm = std::isinf(q3) ? inf : q3 - q1;
    row.median_grads = median_of(grads);
    rows.push_back(row);
  }
  return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << "solver,runs,reached,median_comm,iqr_comm,median_grads\n";
  for (const auto& r : rows)
    os << r.solver << ',' << r.runs << ',' << r.reached << ',' << format_double(r.median_comm) << ','
       << format_double(r.iqr_comm) << ',' << format_double(r.median_grads) << '\n';
}

BenchResult run_bench(const BenchConfig& cfg, bool write_files) {
  cfg.validate();
  const std::size_t jobs = cfg.seeds.size();
  struct Slot {
    std::vector<RunTrace> traces;
    nlohmann::json descriptor;
    std::exception_ptr error;
  };
  std::vector<Slot> slots(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::uint64_t seed = cfg.seeds[j];
      std::string who = "problem";
      try {
        ProblemBundle b = build_problem(cfg, seed);
        const Vector x0 = initial_point(cfg, b.problem, seed);
        slots[j].descriptor = b.descriptor;
        for (SolverKind k : cfg.solvers) {
          who = to_string(k);
          slots[j].traces.push_back(run_solver(cfg, k, b.problem, x0, seed));
        }
      } catch (const std::exception& e) {
        slots[j].error = std::make_exception_ptr(
            std::runtime_error("run solver=" + who + " seed=" + std::to_string(seed) + ": " + e.what()));
      }
    }
  };
  unsigned nthreads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  nthreads = std::max(1u, std::min<unsigned>(nthreads, static_cast<unsigned>(jobs)));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& s : slots)
    if (s.error) std::rethrow_exception(s.error);

  BenchResult out;
  for (std::size_t j = 0; j < jobs; ++j)
    for (std::size_t k = 0; k < cfg.solvers.size(); ++k)
      out.runs.push_back({cfg.solvers[k], cfg.seeds[j], std::move(slots[j].traces[k])});
  out.rows = summarize(out.runs, cfg.solvers, cfg.eps);
  if (!write_files) return out;

  fs::create_directories(cfg.out_dir);
  for (std::size_t j = 0; j < jobs; ++j) {
    for (std::size_t k = 0; k < cfg.solvers.size(); ++k) {
      const auto& run = out.runs[j * cfg.solvers.size() + k];
      const std::string stem = to_string(run.solver) + "_seed" + std::to_string(run.seed);
      const std::string csv = (fs::path(cfg.out_dir) / (stem + ".csv")).string();
      std::ofstream f(csv);
      if (!f) throw std::runtime_error("cannot write '" + csv + "'");
      run.trace.write_csv(f);
      std::ofstream side((fs::path(cfg.out_dir) / (stem + ".json")).string());
      nlohmann::json meta = run.trace.metadata;
      meta["problem_descriptor"] = slots[j].descriptor;
      side << meta.dump(2) << '\n';
      out.trace_files.push_back(csv);
    }
  }
  out.summary_path = (fs::path(cfg.out_dir) / "summary.csv").string();
  std::ofstream sf(out.summary_path);
  write_summary_csv(sf, out.rows);
  std::ofstream cf((fs::path(cfg.out_dir) / "config.json").string());
  cf << cfg.to_json().dump(2) << '\n';
  return out;
}

std::string emit_plotscript(const std::vector<PlotTrace>& traces, const std::string& title) {
  if (traces.empty()) throw std::invalid_argument("emit_plotscript: no traces");
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set logscale y\n"
     << "set format y '10^{%L}'\n"
     << "set xlabel 'communications'\n"
     << "set ylabel 'f(x) - f*'\n"
     << "set title '" << title << "'\n"
     << "plot \\\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (!fs::exists(traces[i].path)) throw std::invalid_argument("emit_plotscript: missing trace '" + traces[i].path + "'");
    os << "  '" << traces[i].path << "' using 2:($5 > 0 ? $5 : NaN) with lines title '" << traces[i].label << "'"
       << (i + 1 < traces.size() ? ", \\\n" : "\n");
  }
  return os.str();
}

std::vector<PlotTrace> find_traces(const std::string& dir) {
  static const std::regex name(R"(([a-z]+)_seed(\d+)\.csv)");
  std::vector<PlotTrace> out;
  if (!fs::is_directory(dir)) throw std::invalid_argument("not a directory: '" + dir + "'");
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string fname = e.path().filename().string();
    if (e.is_regular_file() && std::regex_match(fname, m, name))
      out.push_back({m[1].str() + " seed " + m[2].str(), e.path().string()});
  }
  std::sort(out.begin(), out.end(), [](const PlotTrace& a, const PlotTrace& b) { return a.path < b.path; });
  return out;
}

std::string resolve_out_dir(const std::string& fallback) {
  if (const char* env = std::getenv("SVRS_OUT_DIR"); env && *env) return env;
  return fallback;
}

}  // namespace svrs
