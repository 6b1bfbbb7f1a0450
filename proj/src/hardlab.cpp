#include "svrs/hardlab.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace svrs {

Matrix build_B(Index m, double zeta) {
  if (m < 1) throw std::invalid_argument("build_B: m must be >= 1");
  if (!(zeta > 0.0)) throw std::invalid_argument("build_B: zeta must be positive");
  Matrix b = Matrix::Zero(m, m);
  for (Index l = 0; l + 1 < m; ++l) {
    b(l, l) = 1.0;
    b(l, l + 1) = -1.0;
  }
  b(m - 1, m - 1) = zeta;
  return b;
}

Matrix build_A(Index m, double zeta) {
  const Matrix b = build_B(m, zeta);
  return b.transpose() * b;
}

// ---------------------------------------------------------------------------

PartitionTable::PartitionTable(long n, long m) : n_(n), m_(m) {
  if (n < 3) throw std::invalid_argument("partition: n must be >= 3");
  if (m < 1) throw std::invalid_argument("partition: m must be >= 1");
  sets_.assign(static_cast<std::size_t>(n), {});
  owner_.assign(static_cast<std::size_t>(m + 1), -1);
  for (long l = 1; l <= m; ++l) {
    // l = i - 1 (mod n - 1) with 2 <= i <= n
    long r = l % (n - 1);
    if (r == 0) r = n - 1;
    const Index i = r;  // 0-based index of component r + 1
    sets_[static_cast<std::size_t>(i)].push_back(l);
    owner_[static_cast<std::size_t>(l)] = i;
  }
}

PartitionTable::PartitionTable(long n, long m, std::vector<std::vector<long>> sets)
    : n_(n), m_(m), sets_(std::move(sets)) {
  if (n < 1 || static_cast<long>(sets_.size()) != n) throw std::invalid_argument("partition: need one set per component");
  owner_.assign(static_cast<std::size_t>(m + 1), -1);
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    std::sort(sets_[i].begin(), sets_[i].end());
    for (long l : sets_[i]) {
      if (l < 1 || l > m) throw std::invalid_argument("partition: coordinate out of range");
      owner_[static_cast<std::size_t>(l)] = static_cast<Index>(i);
    }
  }
}

PartitionTable partition(long n, long m) { return PartitionTable(n, m); }

const std::vector<long>& PartitionTable::set(Index i) const {
  if (i < 0 || i >= n_) throw std::out_of_range("partition: component index out of range");
  return sets_[static_cast<std::size_t>(i)];
}

Index PartitionTable::owner(long l) const {
  if (l < 1 || l > m_) return -1;
  return owner_[static_cast<std::size_t>(l)];
}

bool PartitionTable::contains(Index i, long l) const {
  const auto& s = set(i);
  return std::binary_search(s.begin(), s.end(), l);
}

bool PartitionTable::separated() const {
  for (const auto& s : sets_)
    for (std::size_t a = 1; a < s.size(); ++a)
      if (s[a] - s[a - 1] < 2) return false;
  return true;
}

// ---------------------------------------------------------------------------

HardInstanceParams HardInstanceParams::unscaled(long n, long m, double zeta, double c) {
  if (n < 3) throw std::invalid_argument("hard instance: n must be >= 3");
  if (m < 3) throw std::invalid_argument("hard instance: m must be >= 3");
  if (!(zeta > 0.0) || zeta > std::sqrt(2.0) * (1 + 1e-15)) throw std::invalid_argument("hard instance: zeta must lie in (0, sqrt 2]");
  if (!(c > 0.0)) throw std::invalid_argument("hard instance: c must be positive");
  HardInstanceParams p;
  p.n = n;
  p.m = m;
  p.zeta = zeta;
  p.c = c;
  return p;
}

HardInstanceParams HardInstanceParams::scaled_from(long n, double delta, double mu, double Delta, long m) {
  if (n < 3) throw std::invalid_argument("hard instance: n must be >= 3");
  if (m < 3 || m > kMaxHardDimension) throw std::invalid_argument("hard instance: m must lie in [3, 4096]");
  if (!(mu > 0.0) || !(delta > 0.0) || !(Delta > 0.0))
    throw std::invalid_argument("hard instance: delta, mu, Delta must be positive");
  HardInstanceParams p;
  p.n = n;
  p.m = m;
  p.delta = delta;
  p.mu = mu;
  p.Delta = Delta;
  p.rho = std::sqrt(2.0 * (delta / mu) / std::sqrt(2.0 * static_cast<double>(n) + 1.0) + 1.0);
  p.q = (p.rho - 1.0) / (p.rho + 1.0);
  p.lambda = 4.0 * Delta / (p.rho - 1.0);
  p.beta = 4.0 / (p.rho - 1.0) * std::sqrt(Delta / (mu * (p.rho + 1.0)));
  p.zeta = std::sqrt(2.0 / (1.0 + p.rho));
  p.c = 4.0 / (p.rho * p.rho - 1.0);
  return p;
}

long HardInstanceParams::dimension_for(long n, double delta, double mu, double Delta, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("hard instance: eps must be positive");
  const HardInstanceParams p = scaled_from(n, delta, mu, Delta, 3);
  if (eps > Delta * p.q * p.q * p.q / 9.0)
    throw std::invalid_argument("hard instance: eps too large, need eps <= Delta q^3 / 9");
  const double m = std::floor(std::log(Delta / (9.0 * eps)) / (2.0 * std::log(1.0 / p.q)) + 2.0);
  if (m > static_cast<double>(kMaxHardDimension)) throw std::invalid_argument("hard instance: m exceeds 4096");
  return static_cast<long>(m);
}

nlohmann::json HardInstanceParams::to_json() const {
  nlohmann::json j = {{"n", n}, {"m", m}, {"zeta", zeta}, {"c", c}, {"lambda", lambda}, {"beta", beta}};
  if (scaled()) {
    j["delta"] = delta;
    j["mu"] = mu;
    j["Delta"] = Delta;
    j["rho"] = rho;
    j["q"] = q;
  }
  return j;
}

// ---------------------------------------------------------------------------

namespace {

// b_l'u for 1-based l.
inline double row_dot(const Vector& u, long l, long m, double zeta) {
  if (l < m) return u[l - 1] - u[l];
  return zeta * u[m - 1];
}

// u += s * b_l
inline void add_row(Vector& u, long l, long m, double zeta, double s) {
  if (l < m) {
    u[l - 1] += s;
    u[l] -= s;
  } else {
    u[m - 1] += zeta * s;
  }
}

inline double row_norm_sq(long l, long m, double zeta) { return l < m ? 2.0 : zeta * zeta; }

}  // namespace

HardComponent::HardComponent(const HardInstanceParams& params, const PartitionTable& table, Index i)
    : params_(params), set_(table.set(i)), linear_(i == 0), separated_(true) {
  if (table.m() != params.m || table.n() != params.n) throw std::invalid_argument("HardComponent: table does not match parameters");
  for (std::size_t a = 1; a < set_.size(); ++a)
    if (set_[a] - set_[a - 1] < 2) separated_ = false;
  double top = 0.0;
  if (separated_) {
    for (long l : set_) top = std::max(top, row_norm_sq(l, params_.m, params_.zeta));
    smoothness_ = params_.xi() * (params_.c + static_cast<double>(params_.n) * top);
  } else {
    smoothness_ = spectral_norm(hessian());
  }
}

double HardComponent::value(const Vector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("HardComponent::value: dimension mismatch");
  const Vector u = x / params_.beta;
  double s = 0.0;
  for (long l : set_) {
    const double d = row_dot(u, l, params_.m, params_.zeta);
    s += d * d;
  }
  double r = 0.5 * params_.c * u.squaredNorm() + 0.5 * static_cast<double>(params_.n) * s;
  if (linear_) r -= static_cast<double>(params_.n) * u[0];
  return params_.lambda * r;
}

Vector HardComponent::gradient(const Vector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("HardComponent::gradient: dimension mismatch");
  const Vector u = x / params_.beta;
  Vector g = params_.c * u;
  const double n = static_cast<double>(params_.n);
  for (long l : set_) add_row(g, l, params_.m, params_.zeta, n * row_dot(u, l, params_.m, params_.zeta));
  if (linear_) g[0] -= n;
  return (params_.lambda / params_.beta) * g;
}

Matrix HardComponent::hessian() const {
  const Index m = params_.m;
  Matrix h = Matrix::Identity(m, m) * params_.c;
  const double n = static_cast<double>(params_.n);
  for (long l : set_) {
    Vector b = Vector::Zero(m);
    add_row(b, l, m, params_.zeta, 1.0);
    h += n * b * b.transpose();
  }
  return params_.xi() * h;
}

Vector HardComponent::prox_r(const Vector& y, double g) const {
  if (!(g > 0.0)) throw std::invalid_argument("prox: gamma must be positive");
  if (y.size() != dim()) throw std::invalid_argument("HardComponent::prox: dimension mismatch");
  const double n = static_cast<double>(params_.n);
  const double a = params_.c * g + 1.0;
  Vector w = y;
  if (linear_) w[0] += n * g;
  if (!separated_) {
    Matrix sys = hessian() / params_.xi() * g;
    sys.diagonal().array() += 1.0;
    return sys.llt().solve(w);
  }
  // (a I + n g sum b_l b_l') u = w with mutually orthogonal rows
  Vector u = w;
  for (long l : set_) {
    const double d = 1.0 / (a / (n * g) + row_norm_sq(l, params_.m, params_.zeta));
    add_row(u, l, params_.m, params_.zeta, -d * row_dot(w, l, params_.m, params_.zeta));
  }
  return u / a;
}

Vector HardComponent::prox(const Vector& x, double gamma) const {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox: gamma must be positive");
  return params_.beta * prox_r(x / params_.beta, gamma * params_.xi());
}

// ---------------------------------------------------------------------------

Vector hard_minimizer(const HardInstanceParams& params) {
  if (!params.scaled()) throw std::invalid_argument("hard_minimizer: needs the scaled instance");
  Vector x(params.m);
  double qk = 1.0;
  const double s = params.beta * (params.rho + 1.0) / 2.0;
  for (Index j = 0; j < params.m; ++j) {
    qk *= params.q;
    x[j] = s * qk;
  }
  return x;
}

Problem build_hard_problem(const HardInstanceParams& params, const PartitionTable& table) {
  std::vector<ComponentPtr> comps;
  for (Index i = 0; i < params.n; ++i) comps.push_back(std::make_shared<HardComponent>(params, table, i));
  const double xi = params.xi();
  const double delta = params.scaled() ? params.delta : xi * std::sqrt(8.0 * params.n + 4.0);
  const double mu = params.scaled() ? params.mu : xi * params.c;
  Problem p(std::move(comps), mu, delta);
  p.set_label(params.scaled() ? "hard-scaled" : "hard");
  if (params.scaled()) {
    Optimum opt;
    opt.x = hard_minimizer(params);
    opt.value = full_value(p, opt.x);
    p.set_optimum(std::move(opt));
  }
  return p;
}

HardInstance build_scaled_m(long n, double delta, double mu, double Delta, long m) {
  HardInstanceParams params = HardInstanceParams::scaled_from(n, delta, mu, Delta, m);
  PartitionTable table = partition(n, m);
  Problem problem = build_hard_problem(params, table);
  return HardInstance{params, std::move(table), std::move(problem)};
}

HardInstance build_scaled(long n, double delta, double mu, double Delta, double eps) {
  return build_scaled_m(n, delta, mu, Delta, HardInstanceParams::dimension_for(n, delta, mu, Delta, eps));
}

HardInstance build_unscaled(long n, long m, double zeta, double c) {
  HardInstanceParams params = HardInstanceParams::unscaled(n, m, zeta, c);
  PartitionTable table = partition(n, m);
  Problem problem = build_hard_problem(params, table);
  return HardInstance{params, std::move(table), std::move(problem)};
}

std::vector<Matrix> hard_hessians(const Problem& problem) {
  std::vector<Matrix> hs;
  for (const auto& c : problem.components()) {
    const auto* h = dynamic_cast<const HardComponent*>(c.get());
    if (!h) throw std::invalid_argument("hard_hessians: not a hard-instance component");
    hs.push_back(h->hessian());
  }
  return hs;
}

SubspaceGap subspace_gap(const HardInstanceParams& params, long k) {
  if (!params.scaled()) throw std::invalid_argument("subspace_gap: needs the scaled instance");
  if (k < 0 || k > params.m - 1) throw std::out_of_range("subspace_gap: k must lie in [0, m-1]");
  const Vector xs = hard_minimizer(params);
  const Index m = params.m;
  const double xi = params.xi();
  Vector x = Vector::Zero(m);
  if (k > 0) {
    // leading k x k block of xi A + mu I is tridiagonal
    Eigen::SparseMatrix<double> sys(k, k);
    std::vector<Eigen::Triplet<double>> t;
    for (Index j = 0; j < k; ++j) {
      const double diag = (j == 0 ? 1.0 : 2.0);  // k < m, so the zeta^2 + 1 corner is never inside
      t.emplace_back(j, j, xi * diag + params.mu);
      if (j + 1 < k) {
        t.emplace_back(j, j + 1, -xi);
        t.emplace_back(j + 1, j, -xi);
      }
    }
    sys.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys);
    Vector rhs = Vector::Zero(k);
    rhs[0] = xi * params.beta;
    x.head(k) = ldlt.solve(rhs);
  }
  // f(x) - f(x*) = (1/2)(xi |B e|^2 + mu |e|^2) with e = x - x*
  const Vector e = x - xs;
  double be = 0.0;
  for (long l = 1; l <= m; ++l) {
    const double d = row_dot(e, l, m, params.zeta);
    be += d * d;
  }
  SubspaceGap out;
  out.f_gap = 0.5 * (xi * be + params.mu * e.squaredNorm());
  out.dist_sq = xs.tail(m - k).squaredNorm();
  return out;
}

SubspaceGap subspace_floor(const HardInstanceParams& params, long k) {
  if (!params.scaled()) throw std::invalid_argument("subspace_floor: needs the scaled instance");
  const double q2k = std::pow(params.q, 2.0 * static_cast<double>(k));
  return {params.Delta * q2k, 4.0 * params.Delta / (params.mu * (params.rho + 1.0)) * q2k};
}

// ---------------------------------------------------------------------------

InfoDimTracker::InfoDimTracker(const Problem& problem, PartitionTable rules, std::optional<double> f_star,
                               std::optional<HardInstanceParams> floor_params)
    : problem_(&problem), rules_(std::move(rules)), f_star_(f_star), floor_params_(std::move(floor_params)) {}

void InfoDimTracker::raise(long s, Index node, const char* what) {
  if (s > k_ + 1) violations_.push_back({std::string(what) + ": jump of more than one dimension", round_, node, k_, s});
  k_ = std::max(k_, s);
}

void InfoDimTracker::on_oracle(EventKind, Index node, const Vector& query, const Vector& answer) {
  ++events_;
  const long kq = static_cast<long>(support_dim(query));
  if (kq > k_) violations_.push_back({"query outside the information set", round_, node, k_, kq});
  long allowed;
  if (kq == 0) allowed = node == 0 ? 1 : 0;
  else allowed = rules_.contains(node, kq) ? kq + 1 : kq;
  const long s = static_cast<long>(support_dim(answer));
  if (s > allowed) violations_.push_back({"oracle answer leaves the allowed subspace", round_, node, kq, s});
  raise(s, node, "oracle");
}

void InfoDimTracker::on_point(const Vector& point) {
  const long s = static_cast<long>(support_dim(point));
  if (s > k_) violations_.push_back({"combination leaves the span", round_, -1, k_, s});
  k_ = std::max(k_, s);
}

void InfoDimTracker::on_round_end(bool anchor, Index sampled, const Vector& iterate) {
  const long growth = k_ - k_round_start_;
  if (growth > (anchor ? 3 : 1))
    violations_.push_back({anchor ? "anchor round grew by more than 3" : "round grew by more than 1", round_, sampled,
                           k_round_start_, k_});
  rounds_.push_back({anchor, sampled, k_});
  if (f_star_ && floor_params_) {
    best_ = std::min(best_, full_value(*problem_, iterate));
    if (k_ < floor_params_->m) {
      const double floor = subspace_floor(*floor_params_, k_).f_gap;
      const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(best_) + std::abs(*f_star_));
      ++floor_checks_;
      if (best_ - *f_star_ < floor - slack) ++floor_violations_;
    }
  }
  k_round_start_ = k_;
  ++round_;
}

StoppingTimeReport stopping_times(const std::vector<RoundLog>& rounds, const PartitionTable& table) {
  StoppingTimeReport rep;
  long prev = -1;
  const long kmax = (table.m() - 1) / 3;
  std::size_t t = 0;
  for (long k = 1; k <= kmax; ++k) {
    const long target = 3 * k - 2;
    const Index own = table.owner(target);
    long hit = -1;
    for (; t < rounds.size(); ++t) {
      const bool fires = rounds[t].anchor || rounds[t].sampled == own;
      if (fires) {
        hit = static_cast<long>(t);
        break;
      }
      if (rounds[t].dim_after > target) ++rep.violations;
    }
    if (hit < 0) break;
    rep.hit_gaps.push_back(hit - prev);
    prev = hit;
    ++t;
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json avess_check(const HardlabVerifyOptions& o, SeededRng& rng) {
  nlohmann::json out = nlohmann::json::array();
  const long n = 5, m = 9;
  const double bound = 8.0 * n + 4.0;
  for (double zeta : {0.5, 1.0, std::sqrt(2.0)}) {
    HardInstance h = build_unscaled(n, m, zeta, 1.0);
    const double exact = exact_avess_quadratic(hard_hessians(h.problem));
    double worst = 0.0;
    for (int t = 0; t < o.avess_pairs; ++t) {
      const Vector x = 10.0 * rng.normal_vector(m), y = 10.0 * rng.normal_vector(m);
      const Vector gx = full_gradient(h.problem, x), gy = full_gradient(h.problem, y);
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        const auto& c = h.problem.component(i);
        acc += ((c.gradient(x) - gx) - (c.gradient(y) - gy)).squaredNorm();
      }
      worst = std::max(worst, acc / static_cast<double>(n) / (x - y).squaredNorm());
    }
    out.push_back({{"zeta", zeta},
                   {"exact_avehs", exact},
                   {"exact_bound", std::sqrt(bound)},
                   {"worst_sq_ratio", worst},
                   {"ratio_bound", bound},
                   {"pass", exact <= std::sqrt(bound) + 1e-9 && worst <= bound}});
  }
  return out;
}

double prox_error(const HardComponent& c, const Vector& x, double gamma) {
  const Vector u = c.prox(x, gamma);
  // numerical oracle: CG on (H + I/gamma) u = x/gamma - grad(0)
  Matrix sys = c.hessian();
  sys.diagonal().array() += 1.0 / gamma;
  const Vector rhs = x / gamma - c.gradient(Vector::Zero(x.size()));
  Eigen::ConjugateGradient<Matrix, Eigen::Lower | Eigen::Upper> cg(sys);
  cg.setTolerance(1e-15);
  const Vector ref = cg.solve(rhs);
  return (u - ref).norm() / std::max(1.0, ref.norm());
}

nlohmann::json prox_check(const HardlabVerifyOptions& o, SeededRng& rng) {
  HardInstance unscaled = build_unscaled(5, 9, 1.0);
  HardInstance scaled = build_scaled_m(o.n, 10.0, 1.0, 1.0, o.m);
  double worst = 0.0;
  for (const HardInstance* h : {&unscaled, &scaled}) {
    for (int t = 0; t < o.prox_inputs; ++t) {
      const Index i = static_cast<Index>(rng.index(static_cast<std::uint64_t>(h->problem.n())));
      const Vector x = 3.0 * rng.normal_vector(h->problem.dim());
      const double gamma = std::exp(6.0 * rng.uniform() - 3.0);
      const auto& c = dynamic_cast<const HardComponent&>(h->problem.component(i));
      worst = std::max(worst, prox_error(c, x, gamma));
    }
  }
  return {{"max_rel_error", worst}, {"tolerance", 1e-9}, {"pass", worst <= 1e-9}};
}

nlohmann::json minimizer_check() {
  double worst_x = 0.0, worst_gap = 0.0;
  int cases = 0;
  for (long n : {3L, 5L, 20L})
    for (double ratio : {1.0, 10.0, 1000.0})
      for (double Delta : {0.1, 1.0, 50.0})
        for (long m : {3L, 17L, 64L}) {
          HardInstance h = build_scaled_m(n, ratio * 0.5, 0.5, Delta, m);
          const double xi = h.params.xi();
          Matrix sys = xi * build_A(m, h.params.zeta);
          sys.diagonal().array() += h.params.mu;
          Vector rhs = Vector::Zero(m);
          rhs[0] = xi * h.params.beta;
          const Vector dense = sys.ldlt().solve(rhs);
          const Vector& xs = h.problem.optimum()->x;
          worst_x = std::max(worst_x, (xs - dense).norm() / dense.norm());
          const double gap = full_value(h.problem, Vector::Zero(m)) - full_value(h.problem, xs);
          worst_gap = std::max(worst_gap, std::abs(gap - Delta) / Delta);
          ++cases;
        }
  return {{"cases", cases},
          {"max_rel_error_x", worst_x},
          {"max_rel_error_gap", worst_gap},
          {"pass", worst_x <= 1e-10 && worst_gap <= 1e-9}};
}

}  // namespace

nlohmann::json hardlab_verify(const HardlabVerifyOptions& o) {
  SeededRng rng(o.seed);
  nlohmann::json report;
  report["avess_check"] = avess_check(o, rng);
  report["prox_check"] = prox_check(o, rng);
  report["minimizer_check"] = minimizer_check();

  HardInstance h = build_scaled_m(o.n, 10.0, 1.0, 1.0, o.m);
  const InnerSolveSpec inner = make_inner_spec(h.problem, InnerMode::ExactQuadratic);
  const SvrsHyper sh = default_svrs_hyper(h.problem);
  const AccHyper ah = default_acc_hyper(h.problem);
  std::uint64_t info_violations = 0, floor_violations = 0, floor_checks = 0, runs = 0;
  nlohmann::json first_violation;
  for (int r = 0; r < o.runs; ++r) {
    for (int which = 0; which < 2; ++which) {
      NetProblem net(h.problem);
      InfoDimTracker tracker(h.problem, h.table, h.problem.optimum()->value, h.params);
      net.set_observer(&tracker);
      SeededRng run_rng = rng.split(static_cast<std::uint64_t>(2 * r + which));
      const Vector x0 = Vector::Zero(o.m);
      if (which == 0) loopless_svrs(net, x0, sh, inner, 200, run_rng);
      else accsvrs(net, x0, ah, inner, 25, run_rng);
      info_violations += tracker.violations().size();
      floor_violations += tracker.floor_violations();
      floor_checks += tracker.floor_checks();
      if (first_violation.is_null() && !tracker.violations().empty()) {
        const auto& v = tracker.violations().front();
        first_violation = {{"solver", which == 0 ? "loopless" : "accsvrs"}, {"run", r}, {"what", v.what},
                           {"round", v.round}, {"node", v.node + 1}, {"before", v.before}, {"after", v.after}};
      }
      ++runs;
    }
  }
  report["info_dim_violations"] = info_violations;
  report["floor_violations"] = floor_violations;
  report["tracked_runs"] = runs;
  report["floor_checks"] = floor_checks;
  report["instance"] = h.params.to_json();
  if (!first_violation.is_null()) report["first_violation"] = first_violation;
  bool pass = info_violations == 0 && floor_violations == 0;
  for (const auto& a : report["avess_check"]) pass = pass && a["pass"].get<bool>();
  pass = pass && report["prox_check"]["pass"].get<bool>() && report["minimizer_check"]["pass"].get<bool>();
  report["pass"] = pass;
  return report;
}

}  // namespace svrs
