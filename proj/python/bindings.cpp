#include "svrs/bench.hpp"
#include "svrs/hardlab.hpp"
#include "svrs/problems.hpp"
#include "svrs/solvers.hpp"
#include "svrs/verify.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

namespace py = pybind11;
using namespace svrs;

namespace {

py::dict trace_to_dict(const RunTrace& t) {
  const auto rows = static_cast<Index>(t.records.size());
  Matrix table(rows, 6);
  for (Index r = 0; r < rows; ++r) {
    const auto& rec = t.records[static_cast<std::size_t>(r)];
    table.row(r) << static_cast<double>(rec.k), static_cast<double>(rec.comm), static_cast<double>(rec.grads),
        static_cast<double>(rec.proxes), rec.f_gap, rec.dist_sq;
  }
  py::dict d;
  d["columns"] = std::vector<std::string>{"k", "comm", "grads", "proxes", "f_gap", "dist_sq"};
  d["table"] = table;
  d["metadata"] = t.metadata.dump();
  d["final_point"] = t.final_point;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "variance-reduced sliding solvers";

  py::class_<Problem>(m, "Problem")
      .def_property_readonly("n", &Problem::n)
      .def_property_readonly("dim", &Problem::dim)
      .def_property_readonly("mu", &Problem::mu)
      .def_property_readonly("delta", &Problem::delta)
      .def_property_readonly("label", &Problem::label)
      .def("value", [](const Problem& p, const Vector& x) { return full_value(p, x); })
      .def("gradient", [](const Problem& p, const Vector& x) { return full_gradient(p, x); })
      .def("component_value", [](const Problem& p, Index i, const Vector& x) { return p.component(i).value(x); })
      .def("component_gradient", [](const Problem& p, Index i, const Vector& x) { return p.component(i).gradient(x); })
      .def("component_prox",
           [](const Problem& p, Index i, const Vector& x, double gamma) { return p.component(i).prox(x, gamma); })
      .def("optimum", [](const Problem& p) -> std::optional<std::pair<Vector, double>> {
        if (!p.optimum()) return std::nullopt;
        return std::make_pair(p.optimum()->x, p.optimum()->value);
      });

  m.def(
      "gen_synthetic",
      [](Index d, Index n, double base_norm, double perturb_norm, double mu, std::uint64_t seed,
         const std::string& delta) {
        SyntheticSpec s;
        s.d = d;
        s.n = n;
        s.base_norm = base_norm;
        s.perturb_norm = perturb_norm;
        s.mu = mu;
        s.seed = seed;
        s.delta_source = parse_delta_source(delta);
        ProblemBundle b = gen_synthetic(s);
        return std::make_pair(b.problem, b.descriptor.dump());
      },
      py::arg("d") = 30, py::arg("n") = 40, py::arg("base_norm") = 10.0, py::arg("perturb_norm") = 0.1,
      py::arg("mu") = 0.01, py::arg("seed") = 0, py::arg("delta") = "paper");

  m.def(
      "hard_instance",
      [](long n, double delta, double mu, double Delta, long m_dim) {
        HardInstance h = build_scaled_m(n, delta, mu, Delta, m_dim);
        return std::make_pair(h.problem, h.params.to_json().dump());
      },
      py::arg("n"), py::arg("delta"), py::arg("mu"), py::arg("Delta"), py::arg("m"));

  m.def(
      "ridge_prox",
      [](const Matrix& Z, const Vector& y, double mu, const Vector& x0, double theta) {
        return ridge_prox(RidgeComponent(Z, y, mu), x0, theta);
      },
      py::arg("Z"), py::arg("y"), py::arg("mu"), py::arg("x0"), py::arg("theta"));

  m.def(
      "run",
      [](const Problem& p, const std::string& solver, const Vector& x0, long iterations, std::uint64_t seed,
         const std::string& counting, double tau_scale, std::optional<double> eps, const std::string& inner) {
        BenchConfig cfg;
        cfg.counting = parse_counting_mode(counting);
        cfg.tau_scale = tau_scale;
        cfg.max_iters = iterations;
        cfg.inner = parse_inner_mode(inner);
        cfg.stop_at_eps = eps.has_value();
        if (eps) cfg.eps = *eps;
        cfg.record_every = 1;
        RunTrace t;
        {
          py::gil_scoped_release release;
          t = run_solver(cfg, parse_solver(solver), p, x0, seed);
        }
        return trace_to_dict(t);
      },
      py::arg("problem"), py::arg("solver"), py::arg("x0"), py::arg("iterations"), py::arg("seed") = 1,
      py::arg("counting") = "paper", py::arg("tau_scale") = 1.0, py::arg("eps") = py::none(),
      py::arg("inner") = "exact");

  m.def(
      "sample_geometric",
      [](double p, long count, std::uint64_t seed) {
        SeededRng rng(seed);
        std::vector<int> out(static_cast<std::size_t>(count));
        for (auto& k : out) k = sample_geometric(rng, p);
        return out;
      },
      py::arg("p"), py::arg("count"), py::arg("seed") = 0);

  m.def(
      "hardlab_verify",
      [](int runs, std::uint64_t seed) {
        HardlabVerifyOptions o;
        o.runs = runs;
        o.seed = seed;
        py::gil_scoped_release release;
        return hardlab_verify(o).dump();
      },
      py::arg("runs") = 1000, py::arg("seed") = 1);

  m.def(
      "verify_suite",
      [](bool quick) {
        VerifyOptions o;
        if (quick) o.hardlab.runs = 100;
        py::gil_scoped_release release;
        return verify_suite(o).dump();
      },
      py::arg("quick") = false);
}
