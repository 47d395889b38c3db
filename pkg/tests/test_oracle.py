import math
import random

import pytest

import _mpref as ref
from critdet import Interval, delta_endpoints
from critdet.errors import InvalidRegion, OracleError
from critdet.oracle import (
    FD_IDS,
    OracleConfig,
    _phi,
    delta_point,
    fd_derivative,
    min_parallelogram_area,
    sigma_p_point,
    tau_p_point,
    tau_point,
)


def test_config_validation():
    OracleConfig(fd_step=1e-8)
    OracleConfig(fd_step=1e-4)
    for bad in (1e-9, 1e-3):
        with pytest.raises(ValueError):
            OracleConfig(fd_step=bad)
    with pytest.raises(ValueError):
        OracleConfig(fp_tol=0.0)
    with pytest.raises(ValueError):
        OracleConfig(grid_n=2)


def test_tau_point_examples():
    assert abs(tau_point(2.0, 1.0) - (2 - math.sqrt(3.0))) < 1e-14
    for p in (1.3, 2.5, 6.0):
        assert tau_point(p, sigma_p_point(p)) < 1e-12
    t = tau_point(2.0, 1.3)
    assert abs(_phi(2.0, 1.3, t)) < 1e-10


def test_tau_point_agrees_with_high_precision():
    rng = random.Random(5)
    for _ in range(30):
        p = rng.uniform(1.05, 8.0)
        s = rng.uniform(1.0, sigma_p_point(p))
        assert abs(tau_point(p, s) - float(ref.tau(p, s))) < 1e-13
        assert abs(delta_point(p, s) - float(ref.delta(p, s))) < 1e-14


def test_tau_p_bracket_signs():
    for p in (1.01, 1.5, 2.0, 3.0, 10.0, 100.0):
        f = lambda t: 2 * (1 - t) ** p - 1 - t ** p
        assert f(0.0) > 0 > f(0.36)
        t = tau_p_point(p)
        assert 0.0 <= t <= 0.36
        assert abs(t - tau_point(p, 1.0)) < 1e-12


def test_domain_checks():
    with pytest.raises(InvalidRegion):
        tau_point(1.0, 1.0)
    with pytest.raises(InvalidRegion):
        delta_point(2.0, 1.9)
    with pytest.raises(ValueError):
        fd_derivative("d_q", 2.0, 1.2)


def test_delta_point_p2():
    assert abs(delta_point(2.0, 1.2) - math.sqrt(3.0) / 2) < 1e-15
    assert abs(fd_derivative("d_sigma", 2.0, 1.2)) < 1e-6


@pytest.mark.parametrize("which", FD_IDS)
def test_fd_near_edges_uses_one_sided_stencils(which):
    cfg = OracleConfig(fd_step=1e-4)
    for p in (1.5, 3.5):
        for s in (1.0, 1.00005, sigma_p_point(p)):
            v = fd_derivative(which, p, s, cfg)
            assert math.isfinite(v)


def test_fd_is_deterministic():
    cfg = OracleConfig(fd_step=1e-5)
    assert fd_derivative("d_sigma2", 3.0, 1.2, cfg) == fd_derivative("d_sigma2", 3.0, 1.2, cfg)


def test_parallelogram_trivial_values():
    assert abs(min_parallelogram_area(1.0) - 0.5) < 1e-3
    assert abs(min_parallelogram_area(2.0) - math.sqrt(3.0) / 2) < 1e-3
    assert min_parallelogram_area(50.0) >= 0.95


@pytest.mark.parametrize("p", [1.5, 3.0, 6.0])
def test_parallelogram_versus_endpoint_candidates(p):
    area = min_parallelogram_area(p, OracleConfig(grid_n=200))
    one, top = delta_endpoints(Interval(p))
    assert area >= min(one.mid, top.mid) - 1e-3
    # the Minkowski conjecture makes the smaller endpoint value the minimum
    assert abs(area - min(one.mid, top.mid)) < 1e-3


def test_parallelogram_rejects_small_p():
    with pytest.raises(InvalidRegion):
        min_parallelogram_area(0.5)


def test_parallelogram_failure_threshold(monkeypatch):
    from critdet import oracle

    def broken(phi, p, iters=80):
        raise ArithmeticError("no sign change")

    monkeypatch.setattr(oracle, "_area_at", broken)
    with pytest.raises(OracleError):
        oracle.min_parallelogram_area(2.0, OracleConfig(grid_n=20))


def test_oracle_is_independent_of_interval_code():
    import critdet.oracle as mod

    src = open(mod.__file__, encoding="utf-8").read()
    assert "from .interval" not in src and "from .cohn" not in src


@pytest.mark.parametrize("p", [2.2, 2.5, 2.95, 3.5, 4.0, 5.0])
def test_second_difference_at_top_edge(p):
    # a plain one-sided stencil is off by ~h^(p-2) here; the edge stencil is not
    from critdet.cohn import d_sigma2_at_sigmap

    exact = d_sigma2_at_sigmap(Interval(p)).mid
    fd = fd_derivative("d_sigma2", p, sigma_p_point(p), OracleConfig(fd_step=1e-4))
    assert abs(fd - exact) <= 1e-3 * abs(exact) + 1e-6
