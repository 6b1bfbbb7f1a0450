import numpy as np
import pytest

import svrs


def test_synthetic_and_runs():
    prob, desc = svrs.gen_synthetic(mu=1.0, seed=3, delta="exact")
    assert desc["d"] == 30 and desc["n"] == 40
    assert prob.delta == pytest.approx(desc["delta_exact"])
    x_opt, f_opt = prob.optimum()
    assert np.linalg.norm(prob.gradient(x_opt)) < 1e-8
    x0 = np.ones(30) / np.sqrt(30)
    for solver in ("svrs", "accsvrs", "loopless", "svrp"):
        out = svrs.run(prob, solver, x0, iterations=3000, eps=1e-6)
        table = out["table"]
        assert table.shape[1] == 6
        assert table[-1, 4] <= 1e-6
        assert np.all(np.diff(table[:, 1]) >= 0)
        assert out["metadata"]["solver"] == solver


def test_determinism():
    prob, _ = svrs.gen_synthetic(seed=1)
    x0 = np.zeros(30)
    x0[0] = 1.0
    a = svrs.run(prob, "accsvrs", x0, iterations=50, seed=7)
    b = svrs.run(prob, "accsvrs", x0, iterations=50, seed=7)
    assert np.array_equal(a["table"], b["table"])


def test_ridge_prox_shrinkage():
    x0 = np.array([1.0, -2.0, 3.0])
    u = svrs.ridge_prox(np.zeros((3, 2)), np.zeros(2), 0.5, x0, 2.0)
    assert np.allclose(u, x0 / 2.0)
    with pytest.raises(ValueError):
        svrs.ridge_prox(np.zeros((3, 2)), np.zeros(2), 0.5, x0, 0.0)


def test_geometric_mean():
    draws = np.asarray(svrs.sample_geometric(0.05, 200000, seed=2))
    assert draws.min() >= 1
    assert abs(draws.mean() - 20.0) < 0.3


def test_hard_instance_and_verify():
    prob, params = svrs.hard_instance(5, 10.0, 1.0, 1.0, 31)
    x_opt, f_opt = prob.optimum()
    assert prob.value(np.zeros(31)) - f_opt == pytest.approx(1.0, rel=1e-9)
    assert params["q"] > 0
    report = svrs.hardlab_verify(runs=20)
    assert report["pass"]
    assert report["info_dim_violations"] == 0
