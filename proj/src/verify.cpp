#include "svrs/verify.hpp"

#include "svrs/netsim.hpp"
#include "svrs/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace svrs {

namespace {

// Small ridge instance shared by the checks that only need "some" problem.
ProblemBundle small_synthetic(Index d, Index n, std::uint64_t seed, DeltaSource source = DeltaSource::Exact) {
  SyntheticSpec s;
  s.d = d;
  s.n = n;
  s.base_norm = 10.0;
  s.perturb_norm = 0.1;
  s.mu = 0.1;
  s.seed = seed;
  s.delta_source = source;
  return gen_synthetic(s);
}

// sup_k |F_emp(k) - F(k)| over the support of a geometric sample.
double geometric_ks(const std::vector<long>& sample, double p) {
  std::map<long, long> counts;
  for (long k : sample) ++counts[k];
  const double total = static_cast<double>(sample.size());
  double acc = 0.0, worst = 0.0;
  long prev = 0;
  for (const auto& [k, c] : counts) {
    // the empirical CDF is flat on [prev, k); the model CDF only grows there
    if (k - 1 > prev) worst = std::max(worst, std::abs(acc / total - geometric_cdf(p, k - 1)));
    acc += static_cast<double>(c);
    worst = std::max(worst, std::abs(acc / total - geometric_cdf(p, k)));
    prev = k;
  }
  return worst;
}

class AnchorGapObserver : public OracleObserver {
 public:
  void on_oracle(EventKind, Index, const Vector&, const Vector&) override {}
  void on_point(const Vector&) override {}
  void on_round_end(bool anchor, Index, const Vector&) override {
    ++since_;
    if (anchor) {
      gaps.push_back(since_);
      since_ = 0;
    }
  }
  std::vector<long> gaps;

 private:
  long since_ = 0;
};

}  // namespace

nlohmann::json check_geometric_sampler(double p, long draws, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<long> sample(static_cast<std::size_t>(draws));
  for (auto& k : sample) k = sample_geometric(rng, p);
  const double ks = geometric_ks(sample, p);
  return {{"p", p}, {"draws", draws}, {"ks_distance", ks}, {"tolerance", 0.005}, {"pass", ks <= 0.005}};
}

nlohmann::json check_anchor_gaps(double p, long iterations, std::uint64_t seed) {
  ProblemBundle b = small_synthetic(4, 20, seed);
  NetProblem net(b.problem);
  AnchorGapObserver obs;
  net.set_observer(&obs);
  SvrsHyper h = default_svrs_hyper(b.problem);
  h.p = p;
  SeededRng rng(seed);
  RunOptions opt;
  opt.record_every = iterations;
  loopless_svrs(net, Vector::Zero(4), h, make_inner_spec(b.problem, InnerMode::ExactQuadratic), iterations, rng, opt);
  const double ks = geometric_ks(obs.gaps, p);
  // asymptotic 1% critical value; conservative for a discrete law
  const double critical = 1.628 / std::sqrt(static_cast<double>(obs.gaps.size()));
  double mean = 0.0;
  for (long g : obs.gaps) mean += static_cast<double>(g);
  mean /= static_cast<double>(std::max<std::size_t>(1, obs.gaps.size()));
  return {{"p", p},          {"iterations", iterations}, {"gaps", obs.gaps.size()}, {"mean_gap", mean},
          {"ks_distance", ks}, {"critical_1pct", critical},
          {"pass", obs.gaps.size() >= 100 && ks <= critical}};
}

nlohmann::json check_bregman_sandwich(long pairs, std::uint64_t seed) {
  ProblemBundle b = small_synthetic(30, 40, seed);
  const Problem& pr = b.problem;
  const double theta = 1.0 / (4.0 * std::sqrt(static_cast<double>(pr.n())) * b.delta_exact);
  const auto& f1 = pr.component(pr.master());
  ScalarFn h = [&](const Vector& x) { return f1.value(x) + x.squaredNorm() / (2.0 * theta) - full_value(pr, x); };
  GradFn gh = [&](const Vector& x) -> Vector { return f1.gradient(x) + x / theta - full_gradient(pr, x); };
  SeededRng rng(seed);
  long violations = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (long t = 0; t < pairs; ++t) {
    const Vector x = rng.normal_vector(pr.dim()), y = rng.normal_vector(pr.dim());
    const double d2 = (x - y).squaredNorm();
    const double r = bregman(h, gh, x, y) * theta / d2;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    // relative slack for the cancellation in h(x) - h(y)
    if (r < 3.0 / 8.0 - 1e-9 || r > 5.0 / 8.0 + 1e-9) ++violations;
  }
  return {{"pairs", pairs},       {"theta", theta},  {"delta_exact", b.delta_exact},
          {"min_ratio", lo},      {"max_ratio", hi}, {"bounds", {0.375, 0.625}},
          {"violations", violations}, {"pass", violations == 0}};
}

nlohmann::json check_epoch_ledger(long n, long epochs, std::uint64_t seed) {
  ProblemBundle b = small_synthetic(4, n, seed);
  NetProblem net(b.problem, CountingMode::Paper);
  const SvrsHyper h = default_svrs_hyper(b.problem);
  const InnerSolveSpec inner = make_inner_spec(b.problem, InnerMode::ExactQuadratic);
  SeededRng rng(seed);
  Vector w = Vector::Zero(b.problem.dim());
  double total = 0.0;
  long mismatches = 0;
  for (long e = 0; e < epochs; ++e) {
    const auto before = net.ledger().vector_exchanges();
    EpochResult r = svrs_epoch(net, w, h, inner, rng);
    const auto delta = net.ledger().vector_exchanges() - before;
    if (delta != 2 * static_cast<std::uint64_t>(n - 1) + 2 * static_cast<std::uint64_t>(r.inner_steps)) ++mismatches;
    total += static_cast<double>(delta);
    w = r.x;
  }
  const double mean = total / static_cast<double>(epochs);
  const double expected = expected_epoch_cost(n, h.p);
  const double rel = std::abs(mean - expected) / expected;
  return {{"n", n},           {"epochs", epochs},       {"mean_delta", mean}, {"expected", expected},
          {"rel_error", rel}, {"exact_mismatches", mismatches}, {"pass", rel <= 0.05 && mismatches == 0}};
}

nlohmann::json check_prox_vs_inner(int inputs, std::uint64_t seed) {
  SeededRng rng(seed);
  auto numeric_prox = [](const Problem& pr, const Vector& x0, double theta) {
    NetProblem net(pr);
    InnerSolveSpec spec = make_inner_spec(pr, InnerMode::Agd);
    spec.similarity = 0.0;  // a plain prox: no linear term to offset
    spec.grad_tol = 1e-12;
    spec.max_iters = 1'000'000;
    const Vector g0 = pr.component(pr.master()).gradient(x0);
    return solve_inner(net, x0, Vector::Zero(x0.size()), g0, theta, spec).x;
  };

  double ridge_worst = 0.0;
  for (int t = 0; t < inputs; ++t) {
    Matrix Z(10, 15);
    for (Index j = 0; j < Z.cols(); ++j) Z.col(j) = rng.normal_vector(10);
    auto c = std::make_shared<RidgeComponent>(Z, rng.normal_vector(15), 0.1);
    Problem pr({c}, 0.1, 0.0);
    const Vector x0 = 3.0 * rng.normal_vector(10);
    const double theta = std::exp(6.0 * rng.uniform() - 3.0);
    const Vector u = ridge_prox(*c, x0, theta);
    ridge_worst = std::max(ridge_worst, (u - numeric_prox(pr, x0, theta)).norm() / std::max(1.0, u.norm()));
  }

  HardInstance h = build_scaled_m(5, 10.0, 1.0, 1.0, 31);
  double hard_worst = 0.0;
  for (int t = 0; t < inputs; ++t) {
    const Index i = static_cast<Index>(rng.index(5));
    Problem pr(h.problem.components(), h.problem.mu(), h.problem.delta(), i);
    const Vector x0 = 3.0 * rng.normal_vector(31);
    const double theta = std::exp(6.0 * rng.uniform() - 3.0);
    const Vector u = h.problem.component(i).prox(x0, theta);
    hard_worst = std::max(hard_worst, (u - numeric_prox(pr, x0, theta)).norm() / std::max(1.0, u.norm()));
  }
  return {{"inputs", inputs},
          {"ridge_max_rel_error", ridge_worst},
          {"hard_max_rel_error", hard_worst},
          {"tolerance", 1e-8},
          {"pass", ridge_worst <= 1e-8 && hard_worst <= 1e-8}};
}

nlohmann::json check_certificates(std::uint64_t seed) {
  CertificateLog total;
  nlohmann::json runs = nlohmann::json::array();
  auto account = [&](const char* name, const RunTrace& t) {
    total.merge(t.certificates);
    runs.push_back({{"run", name},
                    {"checked", t.certificates.checked},
                    {"violations", t.certificates.violations},
                    {"worst_ratio", t.certificates.worst_ratio}});
  };
  {
    ProblemBundle b = small_synthetic(30, 40, seed);
    const InnerSolveSpec inner = make_inner_spec(b.problem, InnerMode::Agd);
    SeededRng r0(seed);
    const Vector x0 = sphere_point(r0, 30);
    NetProblem n1(b.problem), n2(b.problem), n3(b.problem);
    SeededRng a(seed + 1), c(seed + 2), d(seed + 3);
    account("svrs/synthetic", svrs(n1, x0, default_svrs_hyper(b.problem), inner, 40, a));
    account("loopless/synthetic", loopless_svrs(n2, x0, default_svrs_hyper(b.problem), inner, 1500, c));
    account("accsvrs/synthetic", accsvrs(n3, x0, default_acc_hyper(b.problem), inner, 100, d));
  }
  {
    HardInstance h = build_scaled_m(5, 10.0, 1.0, 1.0, 31);
    const InnerSolveSpec inner = make_inner_spec(h.problem, InnerMode::Agd);
    const Vector x0 = Vector::Zero(31);
    NetProblem n1(h.problem), n2(h.problem);
    SeededRng a(seed + 4), c(seed + 5);
    account("loopless/hard", loopless_svrs(n1, x0, default_svrs_hyper(h.problem), inner, 300, a));
    account("accsvrs/hard", accsvrs(n2, x0, default_acc_hyper(h.problem), inner, 30, c));
  }
  return {{"runs", runs},
          {"checked", total.checked},
          {"violations", total.violations},
          {"worst_ratio", total.worst_ratio},
          {"pass", total.checked > 0 && total.violations == 0}};
}

nlohmann::json check_wrong_partition_detected() {
  HardInstance h = build_scaled_m(5, 10.0, 1.0, 1.0, 31);
  // the first component owns every odd coordinate
  std::vector<std::vector<long>> sets(5);
  for (long l = 1; l <= 31; l += 2) sets[0].push_back(l);
  for (long l = 2; l <= 31; l += 2) sets[1 + (l / 2) % 4].push_back(l);
  PartitionTable wrong(5, 31, sets);
  Problem leaky = build_hard_problem(h.params, wrong);
  NetProblem net(leaky);
  InfoDimTracker tracker(leaky, h.table);
  net.set_observer(&tracker);
  SeededRng rng(3);
  loopless_svrs(net, Vector::Zero(31), default_svrs_hyper(leaky), make_inner_spec(leaky, InnerMode::ExactQuadratic),
                100, rng);
  nlohmann::json out{{"violations", tracker.violations().size()}, {"pass", !tracker.violations().empty()}};
  if (!tracker.violations().empty()) {
    const auto& v = tracker.violations().front();
    out["first"] = {{"what", v.what}, {"round", v.round}, {"node", v.node + 1}, {"before", v.before}, {"after", v.after}};
  }
  return out;
}

nlohmann::json verify_suite(const VerifyOptions& o) {
  nlohmann::json r;
  r["hardlab"] = hardlab_verify(o.hardlab);
  r["geometric_sampler"] = nlohmann::json::array();
  for (double p : {0.5, 1.0 / 20.0, 1.0 / 400.0})
    r["geometric_sampler"].push_back(check_geometric_sampler(p, o.sampler_draws, o.seed));
  r["anchor_gaps"] = nlohmann::json::array();
  for (double p : {0.5, 1.0 / 20.0}) r["anchor_gaps"].push_back(check_anchor_gaps(p, 100'000, o.seed));
  r["bregman_sandwich"] = check_bregman_sandwich(o.sandwich_pairs, o.seed);
  r["epoch_ledger"] = check_epoch_ledger(20, o.ledger_epochs, o.seed);
  r["prox_vs_inner"] = check_prox_vs_inner(o.prox_inputs, o.seed);
  r["certificates"] = check_certificates(o.seed);
  r["wrong_partition"] = check_wrong_partition_detected();
  bool pass = true;
  for (const auto& [key, v] : r.items()) {
    if (v.is_array())
      for (const auto& e : v) pass = pass && e["pass"].get<bool>();
    else
      pass = pass && v["pass"].get<bool>();
  }
  r["pass"] = pass;
  return r;
}

}  // namespace svrs
