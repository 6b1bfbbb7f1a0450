#include "svrs/numkit.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace svrs {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double SeededRng::uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

std::uint64_t SeededRng::index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("SeededRng::index: empty range");
  // 128-bit multiply-shift with rejection of the biased low region.
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

bool SeededRng::bernoulli(double p) {
  if (p >= 1.0) {
    next_u64();
    return true;
  }
  return uniform() < p;
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Vector SeededRng::normal_vector(Index d) {
  Vector v(d);
  for (Index j = 0; j < d; ++j) v[j] = normal();
  return v;
}

SeededRng SeededRng::split(std::uint64_t stream) {
  std::uint64_t mix = next_u64() ^ (stream * 0xd1342543de82ef95ULL);
  return SeededRng(splitmix64(mix));
}

int sample_geometric(SeededRng& rng, double p) {
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("sample_geometric: p must lie in (0, 1]");
  if (p == 1.0) {
    rng.next_u64();
    return 1;
  }
  const double u = rng.uniform_pos();
  const double k = std::ceil(std::log(u) / std::log1p(-p));
  if (k < 1.0) return 1;
  if (k > static_cast<double>(std::numeric_limits<int>::max())) return std::numeric_limits<int>::max();
  return static_cast<int>(k);
}

double geometric_cdf(double p, long k) {
  if (k < 1) return 0.0;
  return -std::expm1(static_cast<double>(k) * std::log1p(-p));
}

void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
}

double bregman(const ScalarFn& h_value, const GradFn& h_grad, const Vector& x, const Vector& y) {
  require_same_dim(x, y, "bregman");
  return h_value(x) - h_value(y) - h_grad(y).dot(x - y);
}

double spectral_norm(const Matrix& m) {
  if (!all_finite(m)) throw std::invalid_argument("spectral_norm: non-finite entry");
  if (m.size() == 0) return 0.0;
  if (m.rows() == m.cols() && m == m.transpose()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

Index support_dim(const Vector& v, double threshold) {
  for (Index j = v.size(); j > 0; --j)
    if (std::abs(v[j - 1]) > threshold) return j;
  return 0;
}

}  // namespace svrs
