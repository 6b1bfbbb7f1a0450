#pragma once

#include "svrs/solvers.hpp"

#include <json.hpp>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace svrs {

/// Upper bidiagonal B(m, zeta): ones on the diagonal, -1 above it, B[m][m] = zeta.
Matrix build_B(Index m, double zeta);
/// A(m, zeta) = B'B.
Matrix build_A(Index m, double zeta);

/// Index sets L_i over the coordinates 1..m (1-based, as in the construction).
/// L_1 is empty and L_i = { l : l = i - 1 mod (n - 1) } for i >= 2.
class PartitionTable {
 public:
  PartitionTable(long n, long m);
  /// Arbitrary sets, used to build deliberately broken instances.
  PartitionTable(long n, long m, std::vector<std::vector<long>> sets);

  long n() const { return n_; }
  long m() const { return m_; }
  /// Sets are addressed by 0-based component index.
  const std::vector<long>& set(Index i) const;
  /// 0-based component owning coordinate l (1-based), -1 if none.
  Index owner(long l) const;
  bool contains(Index i, long l) const;
  /// True when every set is pairwise separated by at least two (b_l rows orthogonal).
  bool separated() const;

 private:
  long n_;
  long m_;
  std::vector<std::vector<long>> sets_;
  std::vector<Index> owner_;
};

PartitionTable partition(long n, long m);

struct HardInstanceParams {
  long n = 0;
  long m = 0;
  double zeta = 1.0;
  double c = 1.0;
  double lambda = 1.0;
  double beta = 1.0;
  // Filled only for the scaled instance.
  double delta = 0.0;
  double mu = 0.0;
  double Delta = 0.0;
  double rho = 0.0;
  double q = 0.0;

  bool scaled() const { return rho > 0.0; }
  /// lambda / beta^2
  double xi() const { return lambda / (beta * beta); }

  static HardInstanceParams unscaled(long n, long m, double zeta, double c = 1.0);
  /// rho, q, lambda, beta, zeta, c from (n, delta, mu, Delta); m supplied separately.
  static HardInstanceParams scaled_from(long n, double delta, double mu, double Delta, long m);
  /// floor(log(Delta / (9 eps)) / (2 log(1/q)) + 2); rejects eps > Delta q^3 / 9.
  static long dimension_for(long n, double delta, double mu, double Delta, double eps);

  nlohmann::json to_json() const;
};

constexpr long kMaxHardDimension = 4096;

/// f_i(x) = lambda * r_i(x / beta) with
///   r_i(u) = (c/2)|u|^2 + (n/2) sum_{l in L_i} (b_l'u)^2 - [i = 1] n <e_1, u>.
/// Gradients and proxes are evaluated with sparse row operations, so
/// coordinates outside the reachable subspace stay exactly zero.
class HardComponent : public ComponentOracle {
 public:
  HardComponent(const HardInstanceParams& params, const PartitionTable& table, Index i);

  Index dim() const override { return params_.m; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  bool has_closed_prox() const override { return true; }
  Vector prox(const Vector& x, double gamma) const override;
  std::optional<double> smoothness() const override { return smoothness_; }

  /// Dense Hessian lambda/beta^2 (c I + n sum b_l b_l').
  Matrix hessian() const;
  /// Prox of the unscaled r_i.
  Vector prox_r(const Vector& y, double g) const;

 private:
  HardInstanceParams params_;
  std::vector<long> set_;
  bool linear_;
  bool separated_;
  double smoothness_;
};

/// Problem with the given component oracles; declared mu = c xi, delta = xi sqrt(8n + 4)
/// (exactly delta for the scaled instance), optimum from the closed form when scaled.
Problem build_hard_problem(const HardInstanceParams& params, const PartitionTable& table);

struct HardInstance {
  HardInstanceParams params;
  PartitionTable table;
  Problem problem;
};

HardInstance build_scaled(long n, double delta, double mu, double Delta, double eps);
HardInstance build_scaled_m(long n, double delta, double mu, double Delta, long m);
HardInstance build_unscaled(long n, long m, double zeta, double c = 1.0);

/// beta (rho + 1)/2 (q, q^2, ..., q^m).
Vector hard_minimizer(const HardInstanceParams& params);

/// Dense Hessians of every component.
std::vector<Matrix> hard_hessians(const Problem& problem);

struct SubspaceGap {
  double f_gap;
  double dist_sq;
};

/// min over span{e_1..e_k} of f - f* and of |x - x*|^2, by restricted solve (scaled instance only).
SubspaceGap subspace_gap(const HardInstanceParams& params, long k);
/// Delta q^{2k} and 4 Delta / (mu (rho + 1)) q^{2k}.
SubspaceGap subspace_floor(const HardInstanceParams& params, long k);

// ---------------------------------------------------------------------------
// Information-set tracking

struct RoundLog {
  bool anchor;
  Index sampled;
  long dim_after;
};

struct InfoViolation {
  std::string what;
  long round;
  Index node;
  long before;
  long after;
};

/// Follows every vector a run produces and checks the subspace transition rules
/// of the hard instance: a call to component i at a point with support k > 0 may
/// raise the support to k + 1 only when k is in L_i; component 1 only leaves
/// the origin. Round growth is at most 1 (3 for anchor rounds).
class InfoDimTracker : public OracleObserver {
 public:
  /// `rules` is the true partition; the instance being run may differ from it.
  InfoDimTracker(const Problem& problem, PartitionTable rules, std::optional<double> f_star = std::nullopt,
                 std::optional<HardInstanceParams> floor_params = std::nullopt);

  void on_oracle(EventKind kind, Index node, const Vector& query, const Vector& answer) override;
  void on_point(const Vector& point) override;
  void on_round_end(bool anchor, Index sampled, const Vector& iterate) override;

  long dim() const { return k_; }
  const std::vector<RoundLog>& rounds() const { return rounds_; }
  const std::vector<InfoViolation>& violations() const { return violations_; }
  std::uint64_t floor_checks() const { return floor_checks_; }
  std::uint64_t floor_violations() const { return floor_violations_; }
  std::uint64_t events() const { return events_; }

 private:
  void raise(long s, Index node, const char* what);

  const Problem* problem_;
  PartitionTable rules_;
  std::optional<double> f_star_;
  std::optional<HardInstanceParams> floor_params_;
  long k_ = 0;
  long k_round_start_ = 0;
  long round_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  std::uint64_t events_ = 0;
  std::uint64_t floor_checks_ = 0;
  std::uint64_t floor_violations_ = 0;
  std::vector<RoundLog> rounds_;
  std::vector<InfoViolation> violations_;
};

/// Stopping-time check on a recorded run: T_k = first round after T_{k-1} sampling the owner
/// of 3k-2 or ending with an anchor; the dimension before T_k must stay <= 3k - 2.
struct StoppingTimeReport {
  std::vector<long> hit_gaps;
  long violations = 0;
};
StoppingTimeReport stopping_times(const std::vector<RoundLog>& rounds, const PartitionTable& table);

// ---------------------------------------------------------------------------

struct HardlabVerifyOptions {
  int avess_pairs = 10000;
  int prox_inputs = 100;
  int runs = 1000;
  long n = 5;
  long m = 31;
  std::uint64_t seed = 1;
};

/// {avess_check, prox_check, minimizer_check, info_dim_violations, floor_violations, pass}
nlohmann::json hardlab_verify(const HardlabVerifyOptions& options);

}  // namespace svrs
