#include "svrs/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace svrs {

Vector ComponentOracle::prox(const Vector&, double) const {
  throw std::logic_error("component has no closed-form proximal map");
}

QuadraticComponent::QuadraticComponent(QuadraticForm form) : form_(std::move(form)) {
  if (form_.Q.rows() != form_.Q.cols() || form_.Q.rows() != form_.b.size())
    throw std::invalid_argument("QuadraticComponent: inconsistent dimensions");
  if (!is_symmetric(form_.Q, 1e-10)) throw std::invalid_argument("QuadraticComponent: Q not symmetric");
  if (!all_finite(form_.Q) || !all_finite(form_.b)) throw std::invalid_argument("QuadraticComponent: non-finite data");
  smoothness_ = spectral_norm(form_.Q);
}

double QuadraticComponent::value(const Vector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("QuadraticComponent::value: dimension mismatch");
  return 0.5 * x.dot(form_.Q * x) - form_.b.dot(x) + form_.c;
}

Vector QuadraticComponent::gradient(const Vector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("QuadraticComponent::gradient: dimension mismatch");
  return form_.Q * x - form_.b;
}

std::shared_ptr<const Eigen::LLT<Matrix>> QuadraticComponent::factor_for(double gamma) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  for (const auto& [g, f] : cache_)
    if (g == gamma) return f;
  Matrix system = form_.Q;
  system.diagonal().array() += 1.0 / gamma;
  auto factor = std::make_shared<const Eigen::LLT<Matrix>>(system);
  if (factor->info() != Eigen::Success)
    throw std::runtime_error("QuadraticComponent::prox: proximal system is not positive definite");
  if (cache_.size() >= 8) cache_.erase(cache_.begin());
  cache_.emplace_back(gamma, factor);
  return factor;
}

Vector QuadraticComponent::prox(const Vector& x, double gamma) const {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox: gamma must be positive");
  if (x.size() != dim()) throw std::invalid_argument("QuadraticComponent::prox: dimension mismatch");
  return factor_for(gamma)->solve(form_.b + x / gamma);
}

Problem::Problem(std::vector<ComponentPtr> components, double mu, double delta, Index master)
    : components_(std::move(components)), mu_(mu), delta_(delta), master_(master) {
  if (components_.empty()) throw std::invalid_argument("Problem: need at least one component");
  if (!(mu_ > 0.0)) throw std::invalid_argument("Problem: mu must be positive");
  if (!(delta_ >= 0.0)) throw std::invalid_argument("Problem: delta must be nonnegative");
  if (master_ < 0 || master_ >= n()) throw std::invalid_argument("Problem: master index out of range");
  dim_ = components_.front()->dim();
  bool all_smooth = true;
  bool all_quadratic = true;
  double lmax = 0.0;
  for (const auto& c : components_) {
    if (!c) throw std::invalid_argument("Problem: null component");
    if (c->dim() != dim_) throw std::invalid_argument("Problem: components disagree on dimension");
    if (auto l = c->smoothness()) lmax = std::max(lmax, *l);
    else all_smooth = false;
    if (!c->quadratic()) all_quadratic = false;
  }
  if (all_smooth) smoothness_ = lmax;
  if (all_quadratic) {
    QuadraticForm mean{Matrix::Zero(dim_, dim_), Vector::Zero(dim_), 0.0};
    for (const auto& c : components_) {
      const QuadraticForm* q = c->quadratic();
      mean.Q += q->Q;
      mean.b += q->b;
      mean.c += q->c;
    }
    const double inv = 1.0 / static_cast<double>(n());
    mean.Q *= inv;
    mean.b *= inv;
    mean.c *= inv;
    mean_quadratic_ = std::move(mean);
  }
}

const ComponentOracle& Problem::component(Index i) const {
  if (i < 0 || i >= n()) throw std::out_of_range("Problem::component: index out of range");
  return *components_[static_cast<std::size_t>(i)];
}

void Problem::set_delta(double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("Problem: delta must be nonnegative");
  delta_ = delta;
}

double full_value(const Problem& p, const Vector& x) {
  if (x.size() != p.dim()) throw std::invalid_argument("full_value: dimension mismatch");
  if (const auto& q = p.mean_quadratic()) return 0.5 * x.dot(q->Q * x) - q->b.dot(x) + q->c;
  double s = 0.0;
  for (const auto& c : p.components()) s += c->value(x);
  return s / static_cast<double>(p.n());
}

Vector full_gradient(const Problem& p, const Vector& x) {
  if (x.size() != p.dim()) throw std::invalid_argument("full_gradient: dimension mismatch");
  Vector g = Vector::Zero(p.dim());
  for (const auto& c : p.components()) g += c->gradient(x);
  return g / static_cast<double>(p.n());
}

Optimum quadratic_optimum(const Problem& p) {
  const auto& q = p.mean_quadratic();
  if (!q) throw std::invalid_argument("quadratic_optimum: problem is not quadratic");
  Eigen::LDLT<Matrix> ldlt(q->Q);
  Optimum opt;
  opt.x = ldlt.solve(q->b);
  // One refinement step; the ill-conditioned benchmark instances need it.
  opt.x += ldlt.solve(q->b - q->Q * opt.x);
  opt.value = full_value(p, opt.x);
  return opt;
}

namespace {

Vector ball_point(SeededRng& rng, Index d, double radius) {
  Vector g = rng.normal_vector(d);
  const double r = radius * std::pow(rng.uniform_pos(), 1.0 / static_cast<double>(d));
  return g * (r / g.norm());
}

// Per-component gradient differences of f_i - f between two points.
std::vector<Vector> deviation_differences(const Problem& p, const Vector& x, const Vector& y) {
  std::vector<Vector> diffs;
  diffs.reserve(static_cast<std::size_t>(p.n()));
  Vector mean = Vector::Zero(p.dim());
  for (const auto& c : p.components()) {
    diffs.push_back(c->gradient(x) - c->gradient(y));
    mean += diffs.back();
  }
  mean /= static_cast<double>(p.n());
  for (auto& d : diffs) d -= mean;
  return diffs;
}

}  // namespace

double measure_avess(const Problem& p, int trials, SeededRng& rng, double radius) {
  if (trials < 1) throw std::invalid_argument("measure_avess: trials must be >= 1");
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Vector x = ball_point(rng, p.dim(), radius);
    const Vector y = ball_point(rng, p.dim(), radius);
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    double acc = 0.0;
    for (const auto& d : deviation_differences(p, x, y)) acc += d.squaredNorm();
    best = std::max(best, std::sqrt(acc / static_cast<double>(p.n())) / dist);
  }
  return best;
}

double measure_component_ss(const Problem& p, int trials, SeededRng& rng, double radius) {
  if (trials < 1) throw std::invalid_argument("measure_component_ss: trials must be >= 1");
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Vector x = ball_point(rng, p.dim(), radius);
    const Vector y = ball_point(rng, p.dim(), radius);
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    for (const auto& d : deviation_differences(p, x, y)) best = std::max(best, d.norm() / dist);
  }
  return best;
}

namespace {

Matrix mean_of(const std::vector<Matrix>& hs) {
  if (hs.empty()) throw std::invalid_argument("empty Hessian list");
  Matrix mean = Matrix::Zero(hs.front().rows(), hs.front().cols());
  for (const auto& h : hs) {
    if (h.rows() != mean.rows() || h.cols() != mean.cols())
      throw std::invalid_argument("Hessians disagree on dimension");
    if (!is_symmetric(h, 1e-10)) throw std::invalid_argument("Hessian is not symmetric");
    mean += h;
  }
  return mean / static_cast<double>(hs.size());
}

}  // namespace

double exact_avess_quadratic(const std::vector<Matrix>& hessians) {
  const Matrix mean = mean_of(hessians);
  Matrix acc = Matrix::Zero(mean.rows(), mean.cols());
  for (const auto& h : hessians) {
    const Matrix dev = h - mean;
    acc.noalias() += dev * dev;
  }
  acc /= static_cast<double>(hessians.size());
  acc = 0.5 * (acc + acc.transpose()).eval();
  return std::sqrt(std::max(0.0, max_eigenvalue(acc)));
}

double exact_component_ss_quadratic(const std::vector<Matrix>& hessians) {
  const Matrix mean = mean_of(hessians);
  double best = 0.0;
  for (const auto& h : hessians) best = std::max(best, spectral_norm(h - mean));
  return best;
}

std::vector<Matrix> component_hessians(const Problem& p) {
  std::vector<Matrix> hs;
  for (const auto& c : p.components()) {
    const QuadraticForm* q = c->quadratic();
    if (!q) throw std::invalid_argument("component_hessians: non-quadratic component");
    hs.push_back(q->Q);
  }
  return hs;
}

}  // namespace svrs
