#include "svrs/problems.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace svrs {

namespace {

QuadraticForm ridge_form(const Matrix& Z, const Vector& y, double mu) {
  if (Z.cols() != y.size()) throw std::invalid_argument("ridge component: Z has " + std::to_string(Z.cols()) +
                                                        " columns but y has " + std::to_string(y.size()) + " entries");
  if (!(mu >= 0.0)) throw std::invalid_argument("ridge component: mu must be >= 0");
  QuadraticForm q;
  q.Q = Z * Z.transpose();
  q.Q.diagonal().array() += mu;
  q.Q = 0.5 * (q.Q + q.Q.transpose()).eval();
  q.b = Z * y;
  q.c = 0.5 * y.squaredNorm();
  return q;
}

Matrix random_symmetric(SeededRng& rng, Index d, double norm) {
  Matrix G(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) G(i, j) = rng.normal();
  Matrix S = G + G.transpose();
  const double s = spectral_norm(S);
  if (s > 0.0) S *= norm / s;
  return S;
}

double paper_delta(const std::vector<Matrix>& Zs) {
  // offset by Z_0 so identical matrices give exactly zero
  Matrix center = Matrix::Zero(Zs.front().rows(), Zs.front().cols());
  for (const auto& Z : Zs) center += Z - Zs.front();
  center = Zs.front() + center / static_cast<double>(Zs.size());
  double acc = 0.0;
  for (const auto& Z : Zs) {
    const double s = spectral_norm(Z - center);
    acc += s * s;
  }
  return std::sqrt(acc / static_cast<double>(Zs.size()));
}

ProblemBundle assemble(const std::vector<Matrix>& Zs, const std::vector<Vector>& ys, double mu, DeltaSource source,
                       const std::string& kind, std::uint64_t seed, const std::string& label) {
  std::vector<ComponentPtr> comps;
  std::vector<Matrix> hessians;
  comps.reserve(Zs.size());
  hessians.reserve(Zs.size());
  for (std::size_t i = 0; i < Zs.size(); ++i) {
    auto c = std::make_shared<RidgeComponent>(Zs[i], ys[i], mu);
    hessians.push_back(c->quadratic()->Q);
    comps.push_back(std::move(c));
  }
  ProblemBundle out{Problem(comps, mu, 0.0), paper_delta(Zs), exact_avess_quadratic(hessians), {}};
  out.problem.set_delta(source == DeltaSource::Paper ? out.delta_paper : out.delta_exact);
  out.problem.set_optimum(quadratic_optimum(out.problem));
  out.problem.set_label(label);
  out.descriptor = {{"kind", kind},
                    {"d", out.problem.dim()},
                    {"n", out.problem.n()},
                    {"mu", mu},
                    {"delta_paper", out.delta_paper},
                    {"delta_exact", out.delta_exact},
                    {"delta_source", to_string(source)},
                    {"L", out.problem.smoothness().value_or(0.0)},
                    {"seed", seed}};
  return out;
}

double parse_double(std::string_view tok, long line_no, const char* what) {
  double v = 0.0;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || tok.empty())
    throw std::runtime_error("libsvm line " + std::to_string(line_no) + ": bad " + what + " '" + std::string(tok) + "'");
  return v;
}

}  // namespace

RidgeComponent::RidgeComponent(Matrix Z, Vector y, double mu)
    : QuadraticComponent(ridge_form(Z, y, mu)), Z_(std::move(Z)), y_(std::move(y)), mu_(mu) {}

Vector ridge_prox(const RidgeComponent& comp, const Vector& x0, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("ridge_prox: theta must be > 0");
  if (x0.size() != comp.Z().rows()) throw std::invalid_argument("ridge_prox: dimension mismatch");
  Matrix M = comp.Z() * comp.Z().transpose();
  M.diagonal().array() += comp.mu() + 1.0 / theta;
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) throw std::runtime_error("ridge_prox: factorization failed");
  return llt.solve(comp.Z() * comp.y() + x0 / theta);
}

std::string to_string(DeltaSource s) { return s == DeltaSource::Paper ? "paper" : "exact"; }

DeltaSource parse_delta_source(const std::string& s) {
  if (s == "paper") return DeltaSource::Paper;
  if (s == "exact") return DeltaSource::Exact;
  throw std::invalid_argument("unknown delta source '" + s + "' (expected paper|exact)");
}

SyntheticSpec SyntheticSpec::desk(double mu, std::uint64_t seed) {
  SyntheticSpec s;
  s.d = 30;
  s.n = 40;
  s.base_norm = 10.0;
  s.perturb_norm = 0.1;
  s.mu = mu;
  s.seed = seed;
  return s;
}

ProblemBundle gen_synthetic(const SyntheticSpec& spec) {
  if (spec.d < 1 || spec.n < 1) throw std::invalid_argument("gen_synthetic: d and n must be >= 1");
  if (!(spec.base_norm >= 0.0) || !(spec.perturb_norm >= 0.0))
    throw std::invalid_argument("gen_synthetic: norms must be >= 0");
  if (!(spec.mu > 0.0)) throw std::invalid_argument("gen_synthetic: mu must be > 0");

  SeededRng rng(spec.seed);
  const Matrix Z0 = random_symmetric(rng, spec.d, spec.base_norm);
  std::vector<Matrix> Zs;
  std::vector<Vector> ys;
  Zs.reserve(static_cast<std::size_t>(spec.n));
  for (Index i = 0; i < spec.n; ++i) {
    Matrix Z = Z0;
    if (spec.perturb_norm > 0.0) Z += random_symmetric(rng, spec.d, spec.perturb_norm);
    const double lmin = min_eigenvalue(Z);
    if (lmin < 0.0) Z.diagonal().array() -= lmin;
    Zs.push_back(std::move(Z));
  }
  for (Index i = 0; i < spec.n; ++i) ys.push_back(rng.normal_vector(spec.d));

  std::ostringstream label;
  label << "synthetic(d=" << spec.d << ",n=" << spec.n << ",mu=" << spec.mu << ",seed=" << spec.seed << ")";
  ProblemBundle b = assemble(Zs, ys, spec.mu, spec.delta_source, "synthetic", spec.seed, label.str());
  b.descriptor["base_norm"] = spec.base_norm;
  b.descriptor["perturb_norm"] = spec.perturb_norm;
  return b;
}

LibsvmRow parse_libsvm_line(const std::string& line, long line_no) {
  LibsvmRow row;
  std::string_view rest(line);
  auto next = [&rest]() -> std::string_view {
    std::size_t b = rest.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
      rest = {};
      return {};
    }
    rest.remove_prefix(b);
    std::size_t e = rest.find_first_of(" \t\r");
    std::string_view tok = rest.substr(0, e);
    rest.remove_prefix(e == std::string_view::npos ? rest.size() : e);
    return tok;
  };
  std::string_view tok = next();
  if (tok.empty()) throw std::runtime_error("libsvm line " + std::to_string(line_no) + ": empty line");
  row.label = parse_double(tok, line_no, "label");
  long prev = 0;
  while (!(tok = next()).empty()) {
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos)
      throw std::runtime_error("libsvm line " + std::to_string(line_no) + ": expected idx:val, got '" +
                               std::string(tok) + "'");
    long idx = 0;
    auto is = tok.substr(0, colon);
    auto [p, ec] = std::from_chars(is.data(), is.data() + is.size(), idx);
    if (ec != std::errc() || p != is.data() + is.size() || idx < 1)
      throw std::runtime_error("libsvm line " + std::to_string(line_no) + ": bad feature index '" + std::string(is) + "'");
    if (idx <= prev)
      throw std::runtime_error("libsvm line " + std::to_string(line_no) + ": feature indices must increase");
    prev = idx;
    row.features.emplace_back(static_cast<Index>(idx - 1), parse_double(tok.substr(colon + 1), line_no, "feature value"));
  }
  return row;
}

Vector densify(const LibsvmRow& row, Index d) {
  Vector v = Vector::Zero(d);
  for (const auto& [j, x] : row.features) {
    if (j >= d) throw std::out_of_range("densify: feature index " + std::to_string(j + 1) + " exceeds d=" + std::to_string(d));
    v(j) = x;
  }
  return v;
}

ProblemBundle load_libsvm(std::istream& in, long n_clients, long per_client, double mu, DeltaSource source,
                          const std::string& name) {
  if (n_clients < 1 || per_client < 1) throw std::invalid_argument("load_libsvm: n_clients and per_client must be >= 1");
  if (!(mu > 0.0)) throw std::invalid_argument("load_libsvm: mu must be > 0");
  const long need = n_clients * per_client;
  std::vector<LibsvmRow> rows;
  Index d = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    LibsvmRow r = parse_libsvm_line(line, line_no);
    if (!r.features.empty()) d = std::max(d, r.features.back().first + 1);
    if (static_cast<long>(rows.size()) < need) rows.push_back(std::move(r));
  }
  if (static_cast<long>(rows.size()) < need)
    throw std::runtime_error("load_libsvm: need " + std::to_string(need) + " rows, file has " + std::to_string(rows.size()));
  if (d == 0) throw std::runtime_error("load_libsvm: no features");

  const double scale = 1.0 / std::sqrt(static_cast<double>(per_client) / 2.0);
  std::vector<Matrix> Zs;
  std::vector<Vector> ys;
  for (long i = 0; i < n_clients; ++i) {
    Matrix Z(d, per_client);
    Vector y(per_client);
    for (long j = 0; j < per_client; ++j) {
      const auto& r = rows[static_cast<std::size_t>(i * per_client + j)];
      Z.col(j) = densify(r, d) * scale;
      y(j) = r.label * scale;
    }
    Zs.push_back(std::move(Z));
    ys.push_back(std::move(y));
  }
  std::ostringstream label;
  label << name << "(n=" << n_clients << ",m=" << per_client << ",mu=" << mu << ")";
  ProblemBundle b = assemble(Zs, ys, mu, source, "libsvm", 0, label.str());
  b.descriptor["per_client"] = per_client;
  b.descriptor["source"] = name;
  return b;
}

ProblemBundle load_libsvm(const std::string& path, long n_clients, long per_client, double mu, DeltaSource source) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_libsvm: cannot open '" + path + "'");
  return load_libsvm(f, n_clients, per_client, mu, source, path);
}

Vector sphere_point(SeededRng& rng, Index d) {
  Vector v = rng.normal_vector(d);
  return v / v.norm();
}

}  // namespace svrs
