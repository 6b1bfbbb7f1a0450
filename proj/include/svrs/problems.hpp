#pragma once

#include "svrs/oracle.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace svrs {

/// f_i(x) = 0.5 |Z'x - y|^2 + (mu/2)|x|^2, stored as the quadratic
/// Q = ZZ' + mu I, b = Zy, c = 0.5 |y|^2.
class RidgeComponent : public QuadraticComponent {
 public:
  RidgeComponent(Matrix Z, Vector y, double mu);

  const Matrix& Z() const { return Z_; }
  const Vector& y() const { return y_; }
  double mu() const { return mu_; }

 private:
  Matrix Z_;
  Vector y_;
  double mu_;
};

/// [ZZ' + (mu + 1/theta) I]^{-1} (Zy + x0/theta).
Vector ridge_prox(const RidgeComponent& comp, const Vector& x0, double theta);

enum class DeltaSource { Paper, Exact };
std::string to_string(DeltaSource s);
DeltaSource parse_delta_source(const std::string& s);

struct SyntheticSpec {
  Index d = 100;
  Index n = 400;
  double base_norm = 3000.0;
  double perturb_norm = 30.0;
  double mu = 0.1;
  std::uint64_t seed = 0;
  /// Which similarity value is declared on the problem (and so drives step sizes).
  DeltaSource delta_source = DeltaSource::Paper;

  /// d = 30, n = 40 with norms shrunk so the desk-scale run keeps a moderate similarity.
  static SyntheticSpec desk(double mu, std::uint64_t seed = 0);
};

struct ProblemBundle {
  Problem problem;
  /// sqrt((1/n) sum |Z_i - Zbar|^2), spectral norms.
  double delta_paper = 0.0;
  /// |(1/n) sum (H_i - Hbar)^2|^(1/2) over the ridge Hessians.
  double delta_exact = 0.0;
  nlohmann::json descriptor;
};

ProblemBundle gen_synthetic(const SyntheticSpec& spec);

struct LibsvmRow {
  double label = 0.0;
  std::vector<std::pair<Index, double>> features;  // 0-based indices
};

/// Parses `label idx:val idx:val ...`; `line_no` is used in error messages.
LibsvmRow parse_libsvm_line(const std::string& line, long line_no);
Vector densify(const LibsvmRow& row, Index d);

ProblemBundle load_libsvm(std::istream& in, long n_clients, long per_client, double mu,
                          DeltaSource source = DeltaSource::Paper, const std::string& name = "libsvm");
ProblemBundle load_libsvm(const std::string& path, long n_clients, long per_client, double mu,
                          DeltaSource source = DeltaSource::Paper);

/// Uniform point on the unit sphere S^{d-1}.
Vector sphere_point(SeededRng& rng, Index d);

}  // namespace svrs
