#pragma once

#include "svrs/numkit.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace svrs {

/// f(x) = 0.5 x'Qx - b'x + c with Q symmetric.
struct QuadraticForm {
  Matrix Q;
  Vector b;
  double c = 0.0;
};

/// One component f_i of a finite-sum problem: value, gradient and proximal map
/// prox(x, gamma) = argmin_u f_i(u) + |x - u|^2 / (2 gamma).
class ComponentOracle {
 public:
  virtual ~ComponentOracle() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual bool has_closed_prox() const { return false; }
  virtual Vector prox(const Vector& x, double gamma) const;
  /// Gradient Lipschitz constant, when known.
  virtual std::optional<double> smoothness() const { return std::nullopt; }
  /// Non-null for components that are exactly quadratic.
  virtual const QuadraticForm* quadratic() const { return nullptr; }
};

using ComponentPtr = std::shared_ptr<const ComponentOracle>;

class QuadraticComponent : public ComponentOracle {
 public:
  explicit QuadraticComponent(QuadraticForm form);

  Index dim() const override { return form_.b.size(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  bool has_closed_prox() const override { return true; }
  /// Solves (Q + I/gamma) u = b + x/gamma; factorizations are cached per gamma.
  Vector prox(const Vector& x, double gamma) const override;
  std::optional<double> smoothness() const override { return smoothness_; }
  const QuadraticForm* quadratic() const override { return &form_; }

 private:
  std::shared_ptr<const Eigen::LLT<Matrix>> factor_for(double gamma) const;

  QuadraticForm form_;
  double smoothness_;
  mutable std::mutex cache_mutex_;
  mutable std::vector<std::pair<double, std::shared_ptr<const Eigen::LLT<Matrix>>>> cache_;
};

struct Optimum {
  Vector x;
  double value = 0.0;
};

/// min_x f(x) = (1/n) sum_i f_i(x). Component 0 lives on the master node unless
/// configured otherwise. `delta` is the declared similarity modulus used by
/// the solvers; `mu` the declared strong-convexity modulus of f.
class Problem {
 public:
  Problem(std::vector<ComponentPtr> components, double mu, double delta, Index master = 0);

  Index n() const { return static_cast<Index>(components_.size()); }
  Index dim() const { return dim_; }
  double mu() const { return mu_; }
  double delta() const { return delta_; }
  Index master() const { return master_; }
  const ComponentOracle& component(Index i) const;
  const std::vector<ComponentPtr>& components() const { return components_; }

  /// max_i L_i when every component reports a smoothness constant.
  std::optional<double> smoothness() const { return smoothness_; }

  const std::optional<Optimum>& optimum() const { return optimum_; }
  void set_optimum(Optimum opt) { optimum_ = std::move(opt); }

  /// Aggregate (1/n) sum of quadratic forms when every component is quadratic.
  const std::optional<QuadraticForm>& mean_quadratic() const { return mean_quadratic_; }

  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  void set_delta(double delta);

 private:
  std::vector<ComponentPtr> components_;
  Index dim_ = 0;
  double mu_;
  double delta_;
  Index master_;
  std::optional<double> smoothness_;
  std::optional<Optimum> optimum_;
  std::optional<QuadraticForm> mean_quadratic_;
  std::string label_ = "problem";
};

double full_value(const Problem& p, const Vector& x);
Vector full_gradient(const Problem& p, const Vector& x);

/// Solve the mean quadratic exactly; throws if the problem is not quadratic.
Optimum quadratic_optimum(const Problem& p);

/// Sampled lower estimate of the AveSS modulus:
/// max over pairs of sqrt((1/n) sum_i |grad(f_i - f)(x) - grad(f_i - f)(y)|^2) / |x - y|.
/// Points are drawn uniformly from the ball of the given radius.
double measure_avess(const Problem& p, int trials, SeededRng& rng, double radius = 10.0);

/// Sampled lower estimate of the component-wise similarity modulus (max over i).
double measure_component_ss(const Problem& p, int trials, SeededRng& rng, double radius = 10.0);

/// |(1/n) sum_i (H_i - Hbar)^2|^(1/2) for symmetric Hessians.
double exact_avess_quadratic(const std::vector<Matrix>& hessians);

/// max_i |H_i - Hbar|.
double exact_component_ss_quadratic(const std::vector<Matrix>& hessians);

std::vector<Matrix> component_hessians(const Problem& p);

}  // namespace svrs
