#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <string>

namespace svrs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Deterministic pseudo-random stream backed by xoshiro256**.
///
/// The state is expanded from the 64-bit seed with splitmix64, so identical
/// seeds give identical streams on every platform. All derived draws
/// (uniform, normal, index) are implemented here instead of through
/// <random> distributions, whose output is implementation-defined.
class SeededRng {
 public:
  static constexpr const char* kAlgorithm = "xoshiro256**/splitmix64";

  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  std::string algorithm() const { return kAlgorithm; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  /// Uniform integer in [0, n). Unbiased (Lemire's rejection method).
  std::uint64_t index(std::uint64_t n);
  bool bernoulli(double p);
  /// Standard normal via the Marsaglia polar method.
  double normal();
  Vector normal_vector(Index d);

  /// Independent child stream; used to give each seed/solver pair its own stream.
  SeededRng split(std::uint64_t stream);

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Draw T with P(T = k) = (1 - p)^(k-1) p, k >= 1.
int sample_geometric(SeededRng& rng, double p);

/// Geometric CDF P(T <= k).
double geometric_cdf(double p, long k);

using ScalarFn = std::function<double(const Vector&)>;
using GradFn = std::function<Vector(const Vector&)>;

/// D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>.
double bregman(const ScalarFn& h_value, const GradFn& h_grad, const Vector& x, const Vector& y);

/// Largest singular value.
double spectral_norm(const Matrix& m);

double min_eigenvalue(const Matrix& symmetric);
double max_eigenvalue(const Matrix& symmetric);

bool is_symmetric(const Matrix& m, double tol = 1e-12);
bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

/// Index of the last entry with |v_j| > threshold, plus one. Zero for the zero vector.
Index support_dim(const Vector& v, double threshold = 0.0);

void require_same_dim(const Vector& a, const Vector& b, const char* what);

}  // namespace svrs
