#pragma once

#include "svrs/netsim.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace svrs {

struct SvrsHyper {
  double theta = 0.0;
  double p = 0.0;
};

/// Interpolation hyperparameters. Construction enforces 2*tau*alpha*p <= theta.
struct AccHyper {
  double theta = 0.0;
  double p = 0.0;
  double tau = 0.0;
  double alpha = 0.0;

  static AccHyper make(double theta, double p, double tau, double alpha);
};

/// theta = 1/(4 sqrt(n) delta), p = 1/n.
SvrsHyper default_svrs_hyper(const Problem& problem);

/// theta, p as above; tau = min(1, s * tau0) with
/// tau0 = 1/4 min{1, n^{1/4}/2 sqrt(mu/delta)}, and alpha = sqrt(n)/(8 delta tau).
AccHyper default_acc_hyper(const Problem& problem, double tau_scale = 1.0);

/// mu / (2 delta^2).
double default_svrp_step(const Problem& problem);

enum class SolverKind { Svrs, AccSvrs, Loopless, Svrp };

std::string to_string(SolverKind kind);
SolverKind parse_solver(const std::string& s);

/// Ceiling of the outer-iteration bound K for the given solver
/// (svrs: K_1, accsvrs: K_2, loopless: loopless K_1).
long predicted_iterations(const Problem& problem, SolverKind which, double f_gap0, double eps);

// ---------------------------------------------------------------------------
// Inner proximal subproblem
//
//   A(x) = <v, x - x_t> + |x - x_t|^2 / (2 theta) + f_master(x)
//
// Accepted solutions must satisfy
//   |grad A(x+)|^2 <= (mu / (20 theta)) * (|grad A(x_t)| / L_A)^2,  L_A = 1/theta + L,
// which implies the inexactness criterion since |x_t - argmin A| >= |grad A(x_t)| / L_A.

enum class InnerMode { ExactQuadratic, Agd };

std::string to_string(InnerMode mode);
InnerMode parse_inner_mode(const std::string& s);

struct InnerSolveSpec {
  InnerMode mode = InnerMode::ExactQuadratic;
  double mu_for_criterion = 0.0;
  /// Smoothness of the master component (needed by agd and by the certificate).
  double master_smoothness = 0.0;
  /// sqrt(n) * delta; the subproblem is (1/theta - similarity)-strongly convex.
  double similarity = 0.0;
  /// 0 selects 4 * T_app.
  int max_iters = 0;
  /// Optional extra stopping target |grad A| <= grad_tol (agd only).
  double grad_tol = 0.0;
};

InnerSolveSpec make_inner_spec(const Problem& problem, InnerMode mode);

/// Predicted agd iteration count for the certificate to hold.
int inner_iteration_budget(const InnerSolveSpec& spec, double theta);

struct InnerCertificate {
  double lhs = 0.0;
  double rhs = 0.0;
  int iterations = 0;
  bool holds() const { return lhs <= rhs; }
};

struct InnerResult {
  Vector x;
  InnerCertificate certificate;
};

class InexactnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Approximately minimize A. `grad_at_start` is grad A(x_t) = v + grad f_master(x_t).
InnerResult solve_inner(NetProblem& net, const Vector& x_t, const Vector& v, const Vector& grad_at_start,
                        double theta, const InnerSolveSpec& spec);

struct CertificateLog {
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  double worst_ratio = 0.0;
  std::uint64_t inner_iterations = 0;

  void add(const InnerCertificate& c);
  void merge(const CertificateLog& other);
};

// ---------------------------------------------------------------------------
// Traces

struct TraceRecord {
  long k = 0;
  std::uint64_t comm = 0;
  std::uint64_t grads = 0;
  std::uint64_t proxes = 0;
  double f_gap = 0.0;
  double dist_sq = 0.0;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  nlohmann::json metadata = nlohmann::json::object();
  CertificateLog certificates;
  Vector final_point;

  /// First recorded comm count with f_gap <= eps.
  std::optional<std::uint64_t> comm_to_reach(double eps) const;
  std::optional<std::uint64_t> grads_to_reach(double eps) const;

  /// `k,comm,grads,proxes,f_gap,dist_sq`, doubles in shortest round-trip form.
  void write_csv(std::ostream& os) const;
};

std::string format_double(double v);

struct RunOptions {
  /// Record every this many iterations (loopless solvers); epochs always record.
  long record_every = 1;
  /// Stop as soon as the recorded point reaches this gap.
  std::optional<double> stop_gap;
  /// Stop once the ledger exceeds this many exchanges.
  std::optional<std::uint64_t> max_comm;
};

// ---------------------------------------------------------------------------
// Algorithms

struct EpochResult {
  Vector x;
  int inner_steps = 0;
  CertificateLog certificates;
};

/// One variance-reduced sliding epoch started at w0. T ~ Geom(p) unless forced.
EpochResult svrs_epoch(NetProblem& net, const Vector& w0, const SvrsHyper& hyper, const InnerSolveSpec& inner,
                       SeededRng& rng, std::optional<int> forced_T = std::nullopt);

RunTrace svrs(NetProblem& net, const Vector& w0, const SvrsHyper& hyper, const InnerSolveSpec& inner, long K,
              SeededRng& rng, const RunOptions& options = {});

RunTrace loopless_svrs(NetProblem& net, const Vector& x0, const SvrsHyper& hyper, const InnerSolveSpec& inner,
                       long K, SeededRng& rng, const RunOptions& options = {});

RunTrace accsvrs(NetProblem& net, const Vector& y0, const AccHyper& hyper, const InnerSolveSpec& inner, long K,
                 SeededRng& rng, const RunOptions& options = {});

/// Stochastic proximal point baseline with loopless anchors refreshed with
/// probability p; each step is prox_{f_i}^theta(x + theta g) computed on client i.
RunTrace svrp(NetProblem& net, const Vector& x0, double theta, double p, long K, SeededRng& rng,
              const RunOptions& options = {});

/// p (grad[f_1 - f_j](x) - grad[f_1 - f_j](y) + (x - y)/theta).
Vector acc_estimator(const Vector& master_grad_x, const Vector& client_grad_x, const Vector& master_grad_y,
                     const Vector& client_grad_y, const Vector& x, const Vector& y, double theta, double p);

/// (z + 0.3 mu alpha y - alpha G) / (1 + 0.3 mu alpha).
Vector acc_z_update(const Vector& z, const Vector& y_next, const Vector& estimator, double mu, double alpha);

}  // namespace svrs
