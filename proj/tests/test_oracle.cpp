#include "svrs/oracle.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace svrs;
using testutil::quad;

TEST_CASE("full value and gradient") {
  SUBCASE("n = 1") {
    Matrix q = Matrix::Identity(2, 2) * 3.0;
    Vector b = Vector::Ones(2);
    Problem p({quad(q, b, 1.0)}, 1.0, 1.0);
    Vector x(2);
    x << 1, -2;
    CHECK(full_value(p, x) == doctest::Approx(p.component(0).value(x)));
  }
  SUBCASE("identical halves") {
    auto c = quad(Matrix::Identity(2, 2), Vector::Zero(2));
    Problem p({c, c, c}, 1.0, 1.0);
    Vector x(2);
    x << 2, 0;
    CHECK(full_value(p, x) == doctest::Approx(2.0));
  }
  SUBCASE("hand sum of gradients") {
    auto f1 = quad(Matrix::Identity(2, 2), Vector::Zero(2));
    Vector e1 = Vector::Zero(2);
    e1(0) = -1;  // f_2 = <e_1, x> = 0.5 x'0x - (-e_1)'x
    auto f2 = quad(Matrix::Zero(2, 2), e1);
    Problem p({f1, f2}, 0.5, 0.5);
    Vector x(2);
    x << 1, 1;
    const Vector g = full_gradient(p, x);
    // (1/2)((1, 1) + (1, 0))
    CHECK(g(0) == doctest::Approx(1.0));
    CHECK(g(1) == doctest::Approx(0.5));
  }
  SUBCASE("dimension mismatch") {
    Problem p({quad(Matrix::Identity(2, 2), Vector::Zero(2))}, 1.0, 1.0);
    CHECK_THROWS(full_value(p, Vector::Zero(3)));
    CHECK_THROWS(full_gradient(p, Vector::Zero(3)));
  }
}

TEST_CASE("gradient matches central differences and vanishes at the optimum") {
  SeededRng r(21);
  Problem p = testutil::random_quadratic_problem(r, 6, 5, 0.3, 0.5);
  const Vector x = r.normal_vector(6);
  const Vector g = full_gradient(p, x);
  const double h = 1e-5;
  for (Index j = 0; j < 6; ++j) {
    Vector e = Vector::Zero(6);
    e(j) = h;
    const double fd = (full_value(p, x + e) - full_value(p, x - e)) / (2 * h);
    CHECK(std::abs(fd - g(j)) <= 1e-6 * std::max(1.0, std::abs(g(j))));
  }
  CHECK(full_gradient(p, p.optimum()->x).norm() <= 1e-9);
}

TEST_CASE("quadratic prox stationarity") {
  SeededRng r(5);
  for (int t = 0; t < 50; ++t) {
    auto c = quad(testutil::random_spd(r, 5, 0.1), r.normal_vector(5));
    const Vector x = 3.0 * r.normal_vector(5);
    const double gamma = std::exp(4.0 * r.uniform() - 2.0);
    const Vector u = c->prox(x, gamma);
    const double res = (c->gradient(u) + (u - x) / gamma).norm();
    CHECK(res <= 1e-8 * (1.0 + x.norm() / gamma));
  }
  auto c = quad(Matrix::Identity(2, 2), Vector::Zero(2));
  CHECK_THROWS(c->prox(Vector::Zero(2), 0.0));
  CHECK_THROWS(c->prox(Vector::Zero(3), 1.0));
}

TEST_CASE("problem validation") {
  auto c = quad(Matrix::Identity(2, 2), Vector::Zero(2));
  CHECK_THROWS(Problem({}, 1.0, 1.0));
  CHECK_THROWS(Problem({c}, 0.0, 1.0));
  CHECK_THROWS(Problem({c}, 1.0, -1.0));
  CHECK_THROWS(Problem({c}, 1.0, 1.0, 3));
  auto c3 = quad(Matrix::Identity(3, 3), Vector::Zero(3));
  CHECK_THROWS(Problem({c, c3}, 1.0, 1.0));
  Matrix ns = Matrix::Identity(2, 2);
  ns(0, 1) = 1;
  CHECK_THROWS(quad(ns, Vector::Zero(2)));
}

TEST_CASE("exact avess") {
  Matrix h1 = Matrix::Zero(2, 2), h2 = Matrix::Zero(2, 2);
  h1(0, 0) = 1;
  CHECK(exact_avess_quadratic({h1, h2}) == doctest::Approx(0.5));
  CHECK(exact_avess_quadratic({h1, h1, h1}) == doctest::Approx(0.0));
  Matrix ns = Matrix::Identity(2, 2);
  ns(0, 1) = 2;
  CHECK_THROWS(exact_avess_quadratic({ns, h1}));
}

TEST_CASE("sampled similarity never exceeds exact values") {
  SeededRng r(8);
  Problem p = testutil::random_quadratic_problem(r, 5, 6, 0.4, 0.1);
  const auto hs = component_hessians(p);
  const double exact = exact_avess_quadratic(hs);
  SeededRng s(9);
  const double est = measure_avess(p, 200, s);
  CHECK(est <= exact + 1e-9);
  CHECK(est > 0.0);
  // component-wise modulus is at most sqrt(n) times the average one
  SeededRng s2(10);
  const double css = measure_component_ss(p, 200, s2);
  CHECK(css <= exact_component_ss_quadratic(hs) + 1e-9);
  CHECK(exact_component_ss_quadratic(hs) <= std::sqrt(double(p.n())) * exact + 1e-9);

  auto c = quad(Matrix::Identity(3, 3), Vector::Ones(3));
  Problem same({c, c, c}, 1.0, 1.0);
  SeededRng s3(1);
  CHECK(measure_avess(same, 50, s3) <= 1e-12);
}

TEST_CASE("similar quadratics shifted by delta - mu are psd") {
  SeededRng r(12);
  Problem p = testutil::random_quadratic_problem(r, 5, 6, 0.4, 0.1);
  const auto hs = component_hessians(p);
  const double ss = exact_component_ss_quadratic(hs);
  Matrix mean = Matrix::Zero(5, 5);
  for (const auto& h : hs) mean += h;
  mean /= double(hs.size());
  const double mu = min_eigenvalue(mean);
  for (const auto& h : hs) {
    Matrix s = h;
    s.diagonal().array() += ss - mu;
    CHECK(min_eigenvalue(s) >= -1e-9);
  }
}
