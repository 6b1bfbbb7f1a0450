#include "svrs/numkit.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

using namespace svrs;

TEST_CASE("rng streams are reproducible") {
  SeededRng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
  CHECK(std::string(SeededRng::kAlgorithm) == "xoshiro256**/splitmix64");
}

TEST_CASE("rng frozen values") {
  // independent reference implementation of splitmix64 + xoshiro256**
  SeededRng pin(12345);
  CHECK(pin.next_u64() == 0xbe6a36374160d49bULL);
  CHECK(pin.next_u64() == 0x214aaa0637a688c6ULL);
  CHECK(pin.next_u64() == 0xf69d16de9954d388ULL);
}

TEST_CASE("uniform and index ranges") {
  SeededRng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    const double v = r.uniform_pos();
    CHECK((v > 0.0 && v <= 1.0));
    CHECK(r.index(13) < 13u);
  }
  CHECK_THROWS(r.index(0));
}

TEST_CASE("index is unbiased") {
  SeededRng r(99);
  std::vector<int> counts(5, 0);
  const int N = 200000;
  for (int i = 0; i < N; ++i) ++counts[r.index(5)];
  for (int c : counts) CHECK(std::abs(c / double(N) - 0.2) < 0.005);
}

TEST_CASE("normal moments") {
  SeededRng r(3);
  double s = 0, s2 = 0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / N) < 0.01);
  CHECK(std::abs(s2 / N - 1.0) < 0.01);
}

TEST_CASE("split gives distinct reproducible streams") {
  SeededRng a(5), b(5);
  SeededRng a1 = a.split(1), b1 = b.split(1), a2 = a.split(2);
  CHECK(a1.next_u64() == b1.next_u64());
  CHECK(a1.next_u64() != a2.next_u64());
}

TEST_CASE("geometric sampler") {
  SeededRng r(11);
  SUBCASE("p = 1 always 1") {
    for (int i = 0; i < 1000; ++i) CHECK(sample_geometric(r, 1.0) == 1);
  }
  SUBCASE("mean for p = 1/20") {
    double s = 0;
    const int N = 1000000;
    for (int i = 0; i < N; ++i) s += sample_geometric(r, 1.0 / 20);
    CHECK(s / N >= 19.6);
    CHECK(s / N <= 20.4);
  }
  SUBCASE("pmf for p = 1/2") {
    const int N = 1000000;
    int one = 0, two = 0;
    for (int i = 0; i < N; ++i) {
      const int k = sample_geometric(r, 0.5);
      CHECK(k >= 1);
      one += k == 1;
      two += k == 2;
    }
    CHECK(std::abs(one / double(N) - 0.5) < 0.01 * 0.5);
    CHECK(std::abs(two / double(N) - 0.25) < 0.01 * 0.25 * 4);
  }
  SUBCASE("invalid p") {
    CHECK_THROWS(sample_geometric(r, 0.0));
    CHECK_THROWS(sample_geometric(r, -0.1));
    CHECK_THROWS(sample_geometric(r, 1.5));
  }
}

TEST_CASE("geometric cdf") {
  CHECK(geometric_cdf(0.5, 1) == doctest::Approx(0.5));
  CHECK(geometric_cdf(0.5, 2) == doctest::Approx(0.75));
  CHECK(geometric_cdf(0.25, 0) == 0.0);
  CHECK(geometric_cdf(1.0, 1) == 1.0);
}

TEST_CASE("bregman divergence") {
  auto half_sq = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  auto id = [](const Vector& x) { return Vector(x); };
  Vector x(2), y(2);
  x << 1, 0;
  y << 0, 0;
  CHECK(bregman(half_sq, id, x, x) == 0.0);
  CHECK(bregman(half_sq, id, x, y) == doctest::Approx(0.5));
  Vector z(3);
  CHECK_THROWS(bregman(half_sq, id, x, z));

  SUBCASE("three point identity") {
    SeededRng r(1);
    const Index d = 6;
    Matrix g = Matrix::Random(d, d);
    Matrix q = g * g.transpose() + Matrix::Identity(d, d);
    auto h = [&](const Vector& v) { return 0.5 * v.dot(q * v) + std::exp(v(0) / 4); };
    auto dh = [&](const Vector& v) {
      Vector out = q * v;
      out(0) += std::exp(v(0) / 4) / 4;
      return out;
    };
    for (int t = 0; t < 200; ++t) {
      const Vector a = r.normal_vector(d), b = r.normal_vector(d), c = r.normal_vector(d);
      const double lhs = (a - b).dot(dh(b) - dh(c));
      const double rhs = bregman(h, dh, a, c) - bregman(h, dh, a, b) - bregman(h, dh, b, c);
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }
  }

  SUBCASE("strong convexity sandwich") {
    SeededRng r(2);
    const Index d = 5;
    Matrix q = Matrix::Zero(d, d);
    q.diagonal() << 0.5, 1, 2, 3, 4;
    auto h = [&](const Vector& v) { return 0.5 * v.dot(q * v); };
    auto dh = [&](const Vector& v) { return Vector(q * v); };
    for (int t = 0; t < 500; ++t) {
      const Vector a = r.normal_vector(d), b = r.normal_vector(d);
      const double dist = (a - b).squaredNorm();
      const double D = bregman(h, dh, a, b);
      CHECK(D >= 0.25 * dist - 1e-12);
      CHECK(D <= 2.0 * dist + 1e-12);
    }
  }
}

TEST_CASE("spectral norm") {
  CHECK(spectral_norm(Matrix::Identity(5, 5)) == doctest::Approx(1.0));
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, -7, 2;
  CHECK(spectral_norm(d) == doctest::Approx(7.0));
  SeededRng r(4);
  Matrix g(10, 10);
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 10; ++j) g(i, j) = r.normal();
  const Matrix s = g + g.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const double oracle = es.eigenvalues().cwiseAbs().maxCoeff();
  CHECK(std::abs(spectral_norm(s) - oracle) <= 1e-9 * oracle);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS(spectral_norm(bad));
}

TEST_CASE("eigen helpers and support") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, -7, 2;
  CHECK(min_eigenvalue(d) == doctest::Approx(-7));
  CHECK(max_eigenvalue(d) == doctest::Approx(3));
  CHECK(is_symmetric(d));
  d(0, 1) = 1;
  CHECK_FALSE(is_symmetric(d));
  Vector v = Vector::Zero(6);
  CHECK(support_dim(v) == 0);
  v(2) = 1e-300;
  CHECK(support_dim(v) == 3);
  CHECK(support_dim(v, 1e-13) == 0);
  v(5) = -1;
  CHECK(support_dim(v) == 6);
}
