#include "svrs/solvers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace svrs {

namespace {

void require_positive_delta(const Problem& problem, const char* who) {
  if (!(problem.delta() > 0.0)) throw std::invalid_argument(std::string(who) + ": delta must be positive");
}

double sqrt_n(const Problem& problem) { return std::sqrt(static_cast<double>(problem.n())); }

// ceil with a relative slack so 2 * 1.0000000001 does not round up to 3.
long ceil_tol(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("iteration bound is not finite");
  return static_cast<long>(std::ceil(v - 1e-9 * std::max(1.0, std::abs(v))));
}

}  // namespace

AccHyper AccHyper::make(double theta, double p, double tau, double alpha) {
  if (!(theta > 0.0)) throw std::invalid_argument("AccHyper: theta must be positive");
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("AccHyper: p must lie in (0, 1]");
  if (!(tau > 0.0) || tau > 1.0) throw std::invalid_argument("AccHyper: tau must lie in (0, 1]");
  if (!(alpha > 0.0)) throw std::invalid_argument("AccHyper: alpha must be positive");
  if (2.0 * tau * alpha * p > theta * (1.0 + 1e-12))
    throw std::invalid_argument("AccHyper: 2 tau alpha p exceeds theta");
  return AccHyper{theta, p, tau, alpha};
}

SvrsHyper default_svrs_hyper(const Problem& problem) {
  require_positive_delta(problem, "default_svrs_hyper");
  return SvrsHyper{1.0 / (4.0 * sqrt_n(problem) * problem.delta()), 1.0 / static_cast<double>(problem.n())};
}

AccHyper default_acc_hyper(const Problem& problem, double tau_scale) {
  require_positive_delta(problem, "default_acc_hyper");
  if (problem.delta() < problem.mu()) throw std::invalid_argument("default_acc_hyper: requires delta >= mu");
  if (!(tau_scale > 0.0)) throw std::invalid_argument("default_acc_hyper: tau scale must be positive");
  const SvrsHyper base = default_svrs_hyper(problem);
  const double n4 = std::pow(static_cast<double>(problem.n()), 0.25);
  const double tau0 = 0.25 * std::min(1.0, 0.5 * n4 * std::sqrt(problem.mu() / problem.delta()));
  const double tau = std::min(1.0, tau_scale * tau0);
  const double alpha = sqrt_n(problem) / (8.0 * problem.delta() * tau);
  return AccHyper::make(base.theta, base.p, tau, alpha);
}

double default_svrp_step(const Problem& problem) {
  require_positive_delta(problem, "default_svrp_step");
  return problem.mu() / (2.0 * problem.delta() * problem.delta());
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Svrs: return "svrs";
    case SolverKind::AccSvrs: return "accsvrs";
    case SolverKind::Loopless: return "loopless";
    case SolverKind::Svrp: return "svrp";
  }
  return "unknown";
}

SolverKind parse_solver(const std::string& s) {
  if (s == "svrs") return SolverKind::Svrs;
  if (s == "accsvrs") return SolverKind::AccSvrs;
  if (s == "loopless") return SolverKind::Loopless;
  if (s == "svrp") return SolverKind::Svrp;
  throw std::invalid_argument("unknown solver '" + s + "' (expected svrs|accsvrs|loopless|svrp)");
}

long predicted_iterations(const Problem& problem, SolverKind which, double f_gap0, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("predicted_iterations: eps must be positive");
  if (!(f_gap0 > 0.0)) throw std::invalid_argument("predicted_iterations: initial gap must be positive");
  const double n = static_cast<double>(problem.n());
  const double ratio = problem.delta() / problem.mu();
  const double shift = 3.0 * (1.0 + ratio / std::sqrt(n));
  double k = 0.0;
  switch (which) {
    case SolverKind::Svrs:
      k = std::max(2.0, 5.0 * ratio / std::sqrt(n)) * std::log(shift * f_gap0 / eps);
      break;
    case SolverKind::AccSvrs:
      k = std::max(4.0, 8.0 * std::pow(n, -0.25) * std::sqrt(ratio)) * std::log(2.0 * f_gap0 / eps);
      break;
    case SolverKind::Loopless:
      k = std::max(2.0 * n, 11.0 * std::sqrt(n) * ratio) * std::log(shift * f_gap0 / eps);
      break;
    case SolverKind::Svrp:
      throw std::invalid_argument("predicted_iterations: no bound for svrp");
  }
  return std::max(0L, ceil_tol(k));
}

// ---------------------------------------------------------------------------

std::string to_string(InnerMode mode) { return mode == InnerMode::ExactQuadratic ? "exact" : "agd"; }

InnerMode parse_inner_mode(const std::string& s) {
  if (s == "exact" || s == "exact_quadratic") return InnerMode::ExactQuadratic;
  if (s == "agd") return InnerMode::Agd;
  throw std::invalid_argument("unknown inner mode '" + s + "' (expected exact|agd)");
}

InnerSolveSpec make_inner_spec(const Problem& problem, InnerMode mode) {
  const ComponentOracle& master = problem.component(problem.master());
  InnerSolveSpec spec;
  spec.mode = mode;
  spec.mu_for_criterion = problem.mu();
  spec.similarity = sqrt_n(problem) * problem.delta();
  if (auto l = master.smoothness()) spec.master_smoothness = *l;
  else if (auto lp = problem.smoothness()) spec.master_smoothness = *lp;
  if (mode == InnerMode::ExactQuadratic && !master.has_closed_prox())
    throw std::invalid_argument("exact inner mode needs a master component with a proximal oracle");
  if (mode == InnerMode::Agd && !(spec.master_smoothness > 0.0))
    throw std::invalid_argument("agd inner mode needs the master smoothness constant");
  return spec;
}

namespace {

struct SubproblemConstants {
  double mu_a;
  double l_a;
};

SubproblemConstants subproblem_constants(const InnerSolveSpec& spec, double theta) {
  const double mu_a = 1.0 / theta - spec.similarity;
  if (!(mu_a > 0.0)) throw std::invalid_argument("inner subproblem is not strongly convex: theta too large");
  return {mu_a, 1.0 / theta + spec.master_smoothness};
}

}  // namespace

int inner_iteration_budget(const InnerSolveSpec& spec, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("inner_iteration_budget: theta must be positive");
  if (!(spec.mu_for_criterion > 0.0)) throw std::invalid_argument("inner_iteration_budget: mu must be positive");
  const auto [mu_a, l_a] = subproblem_constants(spec, theta);
  const double kappa = l_a / mu_a;
  const double arg = 20.0 * theta * l_a * l_a * l_a * (l_a + mu_a) / (spec.mu_for_criterion * mu_a * mu_a);
  const double t_app = std::ceil(std::sqrt(kappa) * std::log(std::max(arg, 1.0))) + 1.0;
  return static_cast<int>(std::min(4.0 * t_app, 1e8));
}

InnerResult solve_inner(NetProblem& net, const Vector& x_t, const Vector& v, const Vector& grad_at_start,
                        double theta, const InnerSolveSpec& spec) {
  if (!(theta > 0.0)) throw std::invalid_argument("solve_inner: theta must be positive");
  require_same_dim(x_t, v, "solve_inner");
  require_same_dim(x_t, grad_at_start, "solve_inner");
  const double g0 = grad_at_start.norm();
  InnerResult out;
  const double l_a = 1.0 / theta + spec.master_smoothness;
  out.certificate.rhs = spec.mu_for_criterion / (20.0 * theta) * (g0 / l_a) * (g0 / l_a);
  if (g0 == 0.0) {
    out.x = x_t;
    return out;
  }

  if (spec.mode == InnerMode::ExactQuadratic) {
    out.x = net.master_prox(x_t - theta * v, theta);
    out.certificate.lhs = 0.0;
    out.certificate.iterations = 1;
    return out;
  }

  const auto [mu_a, la] = subproblem_constants(spec, theta);
  const double sk = std::sqrt(la / mu_a);
  const double beta = (sk - 1.0) / (sk + 1.0);
  const int budget = spec.max_iters > 0 ? spec.max_iters : inner_iteration_budget(spec, theta);
  const double rhs = out.certificate.rhs;
  const double tol_sq = spec.grad_tol * spec.grad_tol;

  auto grad_a = [&](const Vector& y) -> Vector { return v + (y - x_t) / theta + net.master_gradient(y); };

  Vector x = x_t;
  Vector x_prev = x_t;
  for (int k = 1; k <= budget; ++k) {
    const Vector y = x + beta * (x - x_prev);
    const Vector g = k == 1 ? grad_at_start : grad_a(y);
    const double gsq = g.squaredNorm();
    if (k > 1 && gsq <= rhs && (spec.grad_tol <= 0.0 || gsq <= tol_sq)) {
      out.x = y;
      out.certificate.lhs = gsq;
      out.certificate.iterations = k - 1;
      return out;
    }
    x_prev = x;
    x = y - g / la;
  }
  const Vector g = grad_a(x);
  if (g.squaredNorm() <= rhs && (spec.grad_tol <= 0.0 || g.squaredNorm() <= tol_sq)) {
    out.x = x;
    out.certificate.lhs = g.squaredNorm();
    out.certificate.iterations = budget;
    return out;
  }
  throw InexactnessError("inner solver exceeded " + std::to_string(budget) +
                         " iterations without meeting the inexactness certificate");
}

void CertificateLog::add(const InnerCertificate& c) {
  ++checked;
  if (!c.holds()) ++violations;
  if (c.rhs > 0.0) worst_ratio = std::max(worst_ratio, c.lhs / c.rhs);
  else if (c.lhs > 0.0) worst_ratio = std::numeric_limits<double>::infinity();
  inner_iterations += static_cast<std::uint64_t>(c.iterations);
}

void CertificateLog::merge(const CertificateLog& other) {
  checked += other.checked;
  violations += other.violations;
  worst_ratio = std::max(worst_ratio, other.worst_ratio);
  inner_iterations += other.inner_iterations;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<std::uint64_t> RunTrace::comm_to_reach(double eps) const {
  for (const auto& r : records)
    if (r.f_gap <= eps) return r.comm;
  return std::nullopt;
}

std::optional<std::uint64_t> RunTrace::grads_to_reach(double eps) const {
  for (const auto& r : records)
    if (r.f_gap <= eps) return r.grads;
  return std::nullopt;
}

void RunTrace::write_csv(std::ostream& os) const {
  os << "k,comm,grads,proxes,f_gap,dist_sq\n";
  for (const auto& r : records)
    os << r.k << ',' << r.comm << ',' << r.grads << ',' << r.proxes << ',' << format_double(r.f_gap) << ','
       << format_double(r.dist_sq) << '\n';
}

namespace {

class Recorder {
 public:
  Recorder(NetProblem& net, const RunOptions& options, RunTrace& trace)
      : net_(net), options_(options), trace_(trace) {}

  // Returns true when the run should stop.
  bool record(long k, const Vector& x) {
    const Problem& p = net_.inner();
    TraceRecord r;
    r.k = k;
    r.comm = net_.ledger().vector_exchanges();
    r.grads = net_.ledger().component_grad_calls();
    r.proxes = net_.ledger().component_prox_calls();
    if (const auto& opt = p.optimum()) {
      r.f_gap = full_value(p, x) - opt->value;
      r.dist_sq = (x - opt->x).squaredNorm();
    } else {
      r.f_gap = std::numeric_limits<double>::quiet_NaN();
      r.dist_sq = std::numeric_limits<double>::quiet_NaN();
    }
    trace_.records.push_back(r);
    if (options_.stop_gap && r.f_gap <= *options_.stop_gap) {
      stop_reason_ = "gap";
      return true;
    }
    if (options_.max_comm && r.comm >= *options_.max_comm) {
      stop_reason_ = "max_comm";
      return true;
    }
    return false;
  }

  void finish(const Vector& x, const char* solver) {
    trace_.final_point = x;
    auto& m = trace_.metadata;
    m["solver"] = solver;
    m["counting"] = to_string(net_.mode());
    m["problem"] = net_.inner().label();
    m["stopped"] = stop_reason_;
    m["certificates"] = {{"checked", trace_.certificates.checked},
                         {"violations", trace_.certificates.violations},
                         {"worst_ratio", trace_.certificates.worst_ratio},
                         {"inner_iterations", trace_.certificates.inner_iterations}};
  }

 private:
  NetProblem& net_;
  const RunOptions& options_;
  RunTrace& trace_;
  std::string stop_reason_ = "iterations";
};

void stamp_rng(RunTrace& trace, const SeededRng& rng) {
  trace.metadata["seed"] = rng.seed();
  trace.metadata["rng"] = rng.algorithm();
}

void require_iterations(long K) {
  if (K < 0) throw std::invalid_argument("iteration count must be nonnegative");
}

void require_svrs_hyper(const SvrsHyper& h) {
  if (!(h.theta > 0.0)) throw std::invalid_argument("theta must be positive");
  if (!(h.p > 0.0) || h.p > 1.0) throw std::invalid_argument("p must lie in (0, 1]");
}

// One sliding step from x using the current anchor. Client i is sampled by the caller.
Vector sliding_step(NetProblem& net, const Vector& x, Index i, double theta, const InnerSolveSpec& inner,
                    CertificateLog& log) {
  const Vector gi = net.fetch_component_gradient(i, x);
  const Vector g = net.anchor_component_gradient(i) - net.anchor_full_gradient();
  const Vector g1 = net.master_gradient(x);
  const Vector v = gi - g1 - g;
  InnerResult res = solve_inner(net, x, v, gi - g, theta, inner);
  log.add(res.certificate);
  net.note_point(res.x);
  return std::move(res.x);
}

Index draw_client(NetProblem& net, SeededRng& rng) {
  return static_cast<Index>(rng.index(static_cast<std::uint64_t>(net.n())));
}

}  // namespace

EpochResult svrs_epoch(NetProblem& net, const Vector& w0, const SvrsHyper& hyper, const InnerSolveSpec& inner,
                       SeededRng& rng, std::optional<int> forced_T) {
  require_svrs_hyper(hyper);
  if (w0.size() != net.dim()) throw std::invalid_argument("svrs_epoch: dimension mismatch");
  if (forced_T && *forced_T < 1) throw std::invalid_argument("svrs_epoch: forced T must be >= 1");
  net.broadcast_full_gradient(w0);
  const int T = forced_T ? *forced_T : sample_geometric(rng, hyper.p);
  EpochResult out;
  out.x = w0;
  for (int t = 0; t < T; ++t) {
    const Index i = draw_client(net, rng);
    out.x = sliding_step(net, out.x, i, hyper.theta, inner, out.certificates);
    if (t + 1 < T) net.end_round(false, i, out.x);
    else net.defer_anchor_round(i);
  }
  out.inner_steps = T;
  return out;
}

RunTrace svrs(NetProblem& net, const Vector& w0, const SvrsHyper& hyper, const InnerSolveSpec& inner, long K,
              SeededRng& rng, const RunOptions& options) {
  require_iterations(K);
  RunTrace trace;
  stamp_rng(trace, rng);
  trace.metadata["theta"] = hyper.theta;
  trace.metadata["p"] = hyper.p;
  Recorder rec(net, options, trace);
  Vector w = w0;
  if (!rec.record(0, w)) {
    for (long k = 1; k <= K; ++k) {
      EpochResult e = svrs_epoch(net, w, hyper, inner, rng);
      trace.certificates.merge(e.certificates);
      w = std::move(e.x);
      if (rec.record(k, w)) break;
    }
  }
  net.flush_rounds(w);
  rec.finish(w, "svrs");
  return trace;
}

RunTrace loopless_svrs(NetProblem& net, const Vector& x0, const SvrsHyper& hyper, const InnerSolveSpec& inner,
                       long K, SeededRng& rng, const RunOptions& options) {
  require_iterations(K);
  require_svrs_hyper(hyper);
  if (options.record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  RunTrace trace;
  stamp_rng(trace, rng);
  trace.metadata["theta"] = hyper.theta;
  trace.metadata["p"] = hyper.p;
  Recorder rec(net, options, trace);
  Vector x = x0;
  Vector w = x0;
  if (!rec.record(0, w)) {
    net.broadcast_full_gradient(w);
    for (long k = 1; k <= K; ++k) {
      const Index i = draw_client(net, rng);
      x = sliding_step(net, x, i, hyper.theta, inner, trace.certificates);
      const bool refresh = rng.bernoulli(hyper.p);
      if (refresh) {
        w = x;
        net.broadcast_full_gradient(w);
      }
      net.end_round(refresh, i, x);
      if ((k % options.record_every == 0 || k == K) && rec.record(k, w)) break;
    }
  }
  rec.finish(w, "loopless");
  return trace;
}

Vector acc_estimator(const Vector& master_grad_x, const Vector& client_grad_x, const Vector& master_grad_y,
                     const Vector& client_grad_y, const Vector& x, const Vector& y, double theta, double p) {
  return p * ((master_grad_x - client_grad_x) - (master_grad_y - client_grad_y) + (x - y) / theta);
}

Vector acc_z_update(const Vector& z, const Vector& y_next, const Vector& estimator, double mu, double alpha) {
  const double r = 0.3 * mu * alpha;
  return (z + r * y_next - alpha * estimator) / (1.0 + r);
}

RunTrace accsvrs(NetProblem& net, const Vector& y0, const AccHyper& hyper, const InnerSolveSpec& inner, long K,
                 SeededRng& rng, const RunOptions& options) {
  require_iterations(K);
  const AccHyper h = AccHyper::make(hyper.theta, hyper.p, hyper.tau, hyper.alpha);
  const double mu = net.inner().mu();
  RunTrace trace;
  stamp_rng(trace, rng);
  trace.metadata["theta"] = h.theta;
  trace.metadata["p"] = h.p;
  trace.metadata["tau"] = h.tau;
  trace.metadata["alpha"] = h.alpha;
  Recorder rec(net, options, trace);
  const SvrsHyper epoch_hyper{h.theta, h.p};
  Vector y = y0;
  Vector z = y0;
  if (!rec.record(0, y)) {
    for (long k = 1; k <= K; ++k) {
      const Vector x = h.tau * z + (1.0 - h.tau) * y;
      net.note_point(x);
      EpochResult e = svrs_epoch(net, x, epoch_hyper, inner, rng);
      trace.certificates.merge(e.certificates);
      const Index j = draw_client(net, rng);
      const Vector cx = net.fetch_component_gradient(j, x);
      const Vector cy = net.fetch_component_gradient(j, e.x);
      const Vector mx = net.master_gradient(x);
      const Vector my = net.master_gradient(e.x);
      const Vector G = acc_estimator(mx, cx, my, cy, x, e.x, h.theta, h.p);
      z = acc_z_update(z, e.x, G, mu, h.alpha);
      net.note_point(z);
      y = std::move(e.x);
      if (rec.record(k, y)) break;
    }
  }
  net.flush_rounds(y);
  rec.finish(y, "accsvrs");
  return trace;
}

RunTrace svrp(NetProblem& net, const Vector& x0, double theta, double p, long K, SeededRng& rng,
              const RunOptions& options) {
  require_iterations(K);
  require_svrs_hyper(SvrsHyper{theta, p});
  if (options.record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  RunTrace trace;
  stamp_rng(trace, rng);
  trace.metadata["theta"] = theta;
  trace.metadata["p"] = p;
  Recorder rec(net, options, trace);
  Vector x = x0;
  if (!rec.record(0, x)) {
    net.broadcast_full_gradient(x);
    for (long k = 1; k <= K; ++k) {
      const Index i = draw_client(net, rng);
      const Vector g = net.anchor_component_gradient(i) - net.anchor_full_gradient();
      const Vector q = x + theta * g;
      net.note_point(q);
      x = net.fetch_component_prox(i, q, theta);
      const bool refresh = rng.bernoulli(p);
      if (refresh) net.broadcast_full_gradient(x);
      net.end_round(refresh, i, x);
      if ((k % options.record_every == 0 || k == K) && rec.record(k, x)) break;
    }
  }
  rec.finish(x, "svrp");
  return trace;
}

}  // namespace svrs
