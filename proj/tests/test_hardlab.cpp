#include "svrs/hardlab.hpp"

#include <doctest.h>

#include <Eigen/IterativeLinearSolvers>

#include <cmath>

using namespace svrs;

TEST_CASE("B and A matrices") {
  Matrix b = build_B(2, 2.0);
  CHECK(b(0, 0) == 1);
  CHECK(b(0, 1) == -1);
  CHECK(b(1, 0) == 0);
  CHECK(b(1, 1) == 2);
  const Index m = 6;
  const double zeta = 0.7;
  Matrix a = build_A(m, zeta);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) {
      double expect = 0.0;
      if (i == j) expect = (i == 0) ? 1.0 : (i == m - 1 ? zeta * zeta + 1.0 : 2.0);
      else if (std::abs(i - j) == 1) expect = -1.0;
      CHECK(a(i, j) == doctest::Approx(expect));
    }
  Matrix bb = build_B(m, zeta);
  for (Index l = 0; l < m; ++l) {
    CHECK(bb.row(l).squaredNorm() == doctest::Approx(l < m - 1 ? 2.0 : zeta * zeta));
    if (l + 1 < m) CHECK(bb.row(l).dot(bb.row(l + 1)) == doctest::Approx(l + 1 < m - 1 ? -1.0 : -zeta));
    for (Index l2 = l + 2; l2 < m; ++l2) CHECK(bb.row(l).dot(bb.row(l2)) == 0.0);
  }
}

TEST_CASE("partition") {
  PartitionTable t = partition(3, 7);
  CHECK(t.set(0).empty());
  CHECK(t.set(1) == std::vector<long>{1, 3, 5, 7});
  CHECK(t.set(2) == std::vector<long>{2, 4, 6});
  CHECK(t.owner(4) == 2);
  CHECK(t.separated());
  PartitionTable big = partition(6, 40);
  std::vector<int> seen(41, 0);
  for (Index i = 0; i < 6; ++i)
    for (long l : big.set(i)) ++seen[static_cast<std::size_t>(l)];
  for (long l = 1; l <= 40; ++l) CHECK(seen[static_cast<std::size_t>(l)] == 1);
  CHECK(big.set(0).empty());
  CHECK_THROWS(partition(2, 5));
}

TEST_CASE("unscaled components") {
  HardInstance h = build_unscaled(5, 9, 1.0, 1.0);
  const auto& r1 = h.problem.component(0);
  const Vector zero = Vector::Zero(9);
  Vector expect = Vector::Zero(9);
  expect[0] = -5;
  CHECK((r1.gradient(zero) - expect).norm() == 0.0);
  const double gamma = 0.7;
  CHECK(r1.prox(zero, gamma)[0] == doctest::Approx(5.0 / (1.0 / gamma + 1.0)));
  CHECK(full_value(h.problem, zero) == 0.0);

  SUBCASE("average equals the tridiagonal quadratic") {
    SeededRng r(1);
    const Matrix a = build_A(9, 1.0);
    for (int t = 0; t < 20; ++t) {
      const Vector x = r.normal_vector(9);
      const double want = 0.5 * x.dot(a * x) + 0.5 * x.squaredNorm() - x[0];
      CHECK(full_value(h.problem, x) == doctest::Approx(want).epsilon(1e-12));
    }
  }
  SUBCASE("prox matches a CG solve") {
    SeededRng r(2);
    for (int t = 0; t < 50; ++t) {
      const Index i = static_cast<Index>(r.index(5));
      const auto& c = dynamic_cast<const HardComponent&>(h.problem.component(i));
      const Vector x = r.normal_vector(9);
      const double g = std::exp(4 * r.uniform() - 2);
      Matrix sys = c.hessian();
      sys.diagonal().array() += 1.0 / g;
      Eigen::ConjugateGradient<Matrix, Eigen::Lower | Eigen::Upper> cg(sys);
      cg.setTolerance(1e-15);
      const Vector ref = cg.solve(x / g - c.gradient(Vector::Zero(9)));
      CHECK((c.prox(x, g) - ref).norm() <= 1e-9);
    }
  }
  SUBCASE("gradient matches the dense hessian") {
    SeededRng r(3);
    for (Index i = 0; i < 5; ++i) {
      const auto& c = dynamic_cast<const HardComponent&>(h.problem.component(i));
      const Vector x = r.normal_vector(9);
      const Vector g = c.hessian() * x + c.gradient(Vector::Zero(9));
      CHECK((c.gradient(x) - g).norm() <= 1e-12);
    }
  }
}

TEST_CASE("average similarity bound") {
  for (double zeta : {0.5, 1.0, std::sqrt(2.0)}) {
    HardInstance h = build_unscaled(5, 9, zeta, 1.0);
    CHECK(exact_avess_quadratic(hard_hessians(h.problem)) <= std::sqrt(44.0) + 1e-9);
    SeededRng r(4);
    CHECK(measure_avess(h.problem, 500, r) <= std::sqrt(44.0));
  }
}

TEST_CASE("scaled instance") {
  const long n = 5;
  const double delta = 20.0, mu = 0.5, Delta = 3.0;
  HardInstance h = build_scaled_m(n, delta, mu, Delta, 20);
  const auto& p = h.params;
  CHECK(p.q == doctest::Approx((p.rho - 1) / (p.rho + 1)));
  CHECK(p.xi() * p.c == doctest::Approx(mu));
  CHECK(p.xi() * std::sqrt(8.0 * n + 4.0) == doctest::Approx(delta));
  const Vector& xs = h.problem.optimum()->x;
  CHECK(xs[0] == doctest::Approx(p.beta * (p.rho + 1) / 2 * p.q));
  CHECK(full_value(h.problem, Vector::Zero(20)) - h.problem.optimum()->value == doctest::Approx(Delta).epsilon(1e-12));
  CHECK(full_gradient(h.problem, xs).norm() <= 1e-10 * p.lambda / p.beta);

  SUBCASE("declared moduli") {
    const auto hs = hard_hessians(h.problem);
    CHECK(exact_avess_quadratic(hs) <= delta * (1 + 1e-12));
    Matrix mean = Matrix::Zero(20, 20);
    for (const auto& hh : hs) mean += hh;
    mean /= double(n);
    CHECK(min_eigenvalue(mean) >= mu * (1 - 1e-9));
  }
  SUBCASE("dense solve oracle") {
    Matrix sys = p.xi() * build_A(20, p.zeta);
    sys.diagonal().array() += mu;
    Vector rhs = Vector::Zero(20);
    rhs[0] = p.xi() * p.beta;
    const Vector dense = sys.ldlt().solve(rhs);
    CHECK((dense - xs).norm() <= 1e-10 * dense.norm());
  }
  SUBCASE("subspace gaps") {
    const auto g0 = subspace_gap(p, 0);
    CHECK(g0.f_gap == doctest::Approx(Delta));
    CHECK(g0.dist_sq == doctest::Approx(xs.squaredNorm()));
    for (long k = 0; k < 20; ++k) {
      const auto g = subspace_gap(p, k);
      const auto fl = subspace_floor(p, k);
      const double q2k = std::pow(p.q, 2.0 * k);
      const double closed = Delta * (1 + p.q) * q2k / (1 + std::pow(p.q, 2.0 * k + 1));
      CHECK(g.f_gap == doctest::Approx(closed).epsilon(1e-8));
      CHECK(g.f_gap >= fl.f_gap * (1 - 1e-12));
      CHECK(g.dist_sq >= fl.dist_sq * (1 - 1e-12));
    }
    CHECK_THROWS(subspace_gap(p, 20));
  }
  SUBCASE("dimension and precondition") {
    const auto base = HardInstanceParams::scaled_from(n, delta, mu, Delta, 3);
    const double eps = Delta * std::pow(base.q, 3) / 9 / 100;
    const long m = HardInstanceParams::dimension_for(n, delta, mu, Delta, eps);
    CHECK(m == static_cast<long>(std::floor(std::log(Delta / (9 * eps)) / (2 * std::log(1 / base.q)) + 2)));
    CHECK_THROWS(HardInstanceParams::dimension_for(n, delta, mu, Delta, Delta * std::pow(base.q, 3) / 9 * 1.01));
    HardInstance built = build_scaled(n, delta, mu, Delta, eps);
    CHECK(built.problem.dim() == m);
  }
  SUBCASE("scaled prox stationarity") {
    SeededRng r(5);
    for (int t = 0; t < 50; ++t) {
      const Index i = static_cast<Index>(r.index(n));
      const auto& c = h.problem.component(i);
      const Vector x = r.normal_vector(20);
      const double g = std::exp(4 * r.uniform() - 2);
      const Vector u = c.prox(x, g);
      CHECK((c.gradient(u) + (u - x) / g).norm() <= 1e-8 * (1 + x.norm() / g));
    }
  }
}

TEST_CASE("subspace transitions of the oracles") {
  HardInstance h = build_scaled_m(5, 10.0, 1.0, 1.0, 31);
  SeededRng r(6);
  for (long k = 1; k < 30; ++k) {
    Vector x = Vector::Zero(31);
    x.head(k) = r.normal_vector(k);
    for (Index i = 0; i < 5; ++i) {
      const auto& c = h.problem.component(i);
      const long allowed = h.table.contains(i, k) ? k + 1 : k;
      CHECK(support_dim(c.gradient(x)) <= allowed);
      CHECK(support_dim(c.prox(x, 0.3)) <= allowed);
    }
  }
  // from the origin only the master component moves
  for (Index i = 0; i < 5; ++i) CHECK(support_dim(h.problem.component(i).gradient(Vector::Zero(31))) == (i == 0 ? 1 : 0));
}

namespace {

InfoDimTracker tracked_run(const HardInstance& h, bool acc, std::uint64_t seed, long K, const PartitionTable& rules) {
  NetProblem net(h.problem);
  InfoDimTracker tracker(h.problem, rules, h.problem.optimum()->value, h.params);
  net.set_observer(&tracker);
  const InnerSolveSpec inner = make_inner_spec(h.problem, InnerMode::ExactQuadratic);
  SeededRng rng(seed);
  const Vector x0 = Vector::Zero(h.problem.dim());
  if (acc) accsvrs(net, x0, default_acc_hyper(h.problem), inner, K, rng);
  else loopless_svrs(net, x0, default_svrs_hyper(h.problem), inner, K, rng);
  return tracker;
}

}  // namespace

TEST_CASE("information tracking") {
  HardInstance h = build_scaled_m(5, 10.0, 1.0, 1.0, 31);
  SUBCASE("first broadcast reaches dimension one") {
    NetProblem net(h.problem);
    InfoDimTracker tracker(h.problem, h.table);
    net.set_observer(&tracker);
    net.broadcast_full_gradient(Vector::Zero(31));
    CHECK(tracker.dim() == 1);
    // sampling a component not owning 1 leaves the dimension alone
    Vector x = Vector::Zero(31);
    x[0] = 1.0;
    net.fetch_component_gradient(2, x);
    CHECK(tracker.dim() == 1);
    net.fetch_component_gradient(h.table.owner(1), x);
    CHECK(tracker.dim() == 2);
    CHECK(tracker.violations().empty());
  }
  SUBCASE("runs obey the rules and the floors") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      auto a = tracked_run(h, false, s, 300, h.table);
      CHECK(a.violations().empty());
      CHECK(a.floor_violations() == 0);
      CHECK(a.floor_checks() > 0);
      auto b = tracked_run(h, true, s, 20, h.table);
      CHECK(b.violations().empty());
      CHECK(b.floor_violations() == 0);
      CHECK(stopping_times(a.rounds(), h.table).violations == 0);
      for (std::size_t t = 1; t < a.rounds().size(); ++t) CHECK(a.rounds()[t].dim_after >= a.rounds()[t - 1].dim_after);
    }
  }
  SUBCASE("a wrong partition is caught") {
    std::vector<std::vector<long>> sets(5);
    for (long l = 1; l <= 31; ++l) sets[1].push_back(l);
    PartitionTable wrong(5, 31, sets);
    HardInstanceParams p = h.params;
    Problem leaky = build_hard_problem(p, wrong);
    HardInstance bad{p, wrong, std::move(leaky)};
    auto t = tracked_run(bad, false, 1, 100, h.table);
    CHECK_FALSE(t.violations().empty());
  }
}

TEST_CASE("stopping times") {
  PartitionTable t = partition(3, 10);
  // owner of 1 is component index 1, owner of 4 is index 2 (4 = 0 mod 2)
  std::vector<RoundLog> rounds = {{false, 2, 1}, {false, 1, 2}, {false, 2, 3}, {true, 0, 4}};
  auto rep = stopping_times(rounds, t);
  CHECK(rep.hit_gaps == std::vector<long>{2, 1, 1});
  CHECK(rep.violations == 0);
  std::vector<RoundLog> bad = {{false, 2, 2}};
  CHECK(stopping_times(bad, t).violations == 1);
}
