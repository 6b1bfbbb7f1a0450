#pragma once

#include "svrs/oracle.hpp"

#include <memory>
#include <vector>

namespace testutil {

using svrs::Index;
using svrs::Matrix;
using svrs::Vector;

inline Matrix random_spd(svrs::SeededRng& rng, Index d, double shift) {
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = rng.normal();
  Matrix q = g * g.transpose() / static_cast<double>(d);
  q.diagonal().array() += shift;
  return q;
}

inline Vector random_vec(svrs::SeededRng& rng, Index d) { return rng.normal_vector(d); }

inline std::shared_ptr<svrs::QuadraticComponent> quad(Matrix q, Vector b, double c = 0.0) {
  return std::make_shared<svrs::QuadraticComponent>(svrs::QuadraticForm{std::move(q), std::move(b), c});
}

/// Quadratic problem with Hessians H + small perturbations; delta set to the exact AveHS.
inline svrs::Problem random_quadratic_problem(svrs::SeededRng& rng, Index d, Index n, double spread, double mu) {
  const Matrix base = random_spd(rng, d, 0.0);
  std::vector<svrs::ComponentPtr> comps;
  std::vector<Matrix> hs;
  for (Index i = 0; i < n; ++i) {
    Matrix e(d, d);
    for (Index a = 0; a < d; ++a)
      for (Index b = 0; b < d; ++b) e(a, b) = rng.normal();
    Matrix h = base + spread * (e + e.transpose()) / 2.0;
    hs.push_back(h);
  }
  // shift so the mean is mu-strongly convex and every component is convex
  double shift = 0.0;
  for (const auto& h : hs) shift = std::max(shift, -svrs::min_eigenvalue(h));
  Matrix mean = Matrix::Zero(d, d);
  for (auto& h : hs) {
    h.diagonal().array() += shift + mu;
    mean += h;
  }
  for (auto& h : hs) comps.push_back(quad(h, rng.normal_vector(d)));
  const double delta = std::max(svrs::exact_avess_quadratic(hs), mu);
  mean /= static_cast<double>(n);
  svrs::Problem p(std::move(comps), svrs::min_eigenvalue(mean), delta);
  p.set_optimum(svrs::quadratic_optimum(p));
  return p;
}

}  // namespace testutil
