"""Variance-reduced sliding solvers (Python front end of the C++ core)."""

import json

from . import _core
from ._core import Problem, ridge_prox, sample_geometric

__all__ = [
    "Problem",
    "gen_synthetic",
    "hard_instance",
    "hardlab_verify",
    "ridge_prox",
    "run",
    "sample_geometric",
    "verify_suite",
]


def gen_synthetic(d=30, n=40, base_norm=10.0, perturb_norm=0.1, mu=0.01, seed=0, delta="paper"):
    """Returns (problem, descriptor dict)."""
    problem, desc = _core.gen_synthetic(d, n, base_norm, perturb_norm, mu, seed, delta)
    return problem, json.loads(desc)


def hard_instance(n, delta, mu, Delta, m):
    problem, params = _core.hard_instance(n, delta, mu, Delta, m)
    return problem, json.loads(params)


def run(problem, solver, x0, iterations, seed=1, counting="paper", tau_scale=1.0, eps=None, inner="exact"):
    """Runs one solver; returns a dict with `table` (rows of k, comm, grads, proxes, f_gap, dist_sq)."""
    out = _core.run(problem, solver, x0, iterations, seed, counting, tau_scale, eps, inner)
    out["metadata"] = json.loads(out["metadata"])
    return out


def hardlab_verify(runs=1000, seed=1):
    return json.loads(_core.hardlab_verify(runs, seed))


def verify_suite(quick=False):
    return json.loads(_core.verify_suite(quick))
