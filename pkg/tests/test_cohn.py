import math
import random

import pytest

import _mpref as ref
from critdet import (
    Box,
    Interval,
    InvalidRegion,
    delta_endpoints,
    delta_enclose,
    derivatives_enclose,
    g_enclose,
    h_enclose,
    l0_enclose,
    l1_enclose,
    minkowski_constant,
    sigma_p,
    tau_enclose,
    tau_p_enclose,
)
from critdet.cohn import atoms, d_sigma2_at_sigma1, d_sigma2_at_sigmap, d_sigma_enclose
from critdet.interval import ipow
from critdet.oracle import OracleConfig, delta_point, fd_derivative, g_point, sigma_p_point

SQRT3_2 = math.sqrt(3.0) / 2.0
FD = OracleConfig(fd_step=1e-4)


def point(p: float, s: float) -> Box:
    return Box(Interval(p), Interval(s))


def sp_point(p: float) -> float:
    """Largest float sigma that is still inside the domain at p."""
    return sigma_p(Interval(p)).lo


# -- sigma_p, tau_p ---------------------------------------------------------


def test_sigma_p_examples():
    assert 1.0 in sigma_p(Interval(1.0))
    assert math.sqrt(3.0) in sigma_p(Interval(2.0))
    r = sigma_p(Interval(2, 3))
    assert Interval(1.73, 1.92).contains(r)
    assert r.contains(Interval(math.sqrt(3.0), 7 ** (1 / 3)))


def test_tau_p_examples():
    assert (2 - math.sqrt(3.0)) in tau_p_enclose(Interval(2.0)).tau
    near_one = tau_p_enclose(Interval(1 + 1e-9)).tau
    assert abs(near_one.mid - 1 / 3) < 1e-8
    for p in (1.01, 1.5, 2.5, 4.0, 10.0, 40.0):
        enc = tau_p_enclose(Interval(p)).tau
        assert Interval(0.0, 0.36).contains(enc)
        assert enc.width < 1e-13
        assert ref.inside(enc, ref.tau_p(p))


def test_tau_p_rejects_bad_input():
    with pytest.raises(InvalidRegion):
        tau_p_enclose(Interval(1.0))
    with pytest.raises(ValueError):
        tau_p_enclose(Interval(2.0), tol=0.0)


# -- tau --------------------------------------------------------------------


@pytest.mark.parametrize("p", [1.2, 1.7, 2.0, 3.0, 5.5])
def test_tau_edge_identities(p):
    at_top = tau_enclose(point(p, sp_point(p))).tau
    assert at_top.lo <= 1e-12
    at_one = tau_enclose(point(p, 1.0)).tau
    assert at_one.overlaps(tau_p_enclose(Interval(p)).tau)


def test_tau_at_p2_sigma1():
    assert (2 - math.sqrt(3.0)) in tau_enclose(point(2.0, 1.0)).tau


def test_tau_box_contains_pointwise_values():
    rng = random.Random(7)
    for _ in range(12):
        p0 = rng.uniform(1.1, 5.5)
        top = sp_point(p0)
        s0 = rng.uniform(1.0, top - 0.02 * (top - 1))
        box = Box(Interval(p0, p0 + 0.01), Interval(s0, s0 + 0.01 * (top - 1)))
        enc = tau_enclose(box).tau
        assert Interval(0.0, 0.36).contains(enc)
        for a in (0.0, 0.5, 1.0):
            for b in (0.0, 0.5, 1.0):
                p = box.p.lo + a * (box.p.hi - box.p.lo)
                s = box.sigma.lo + b * (box.sigma.hi - box.sigma.lo)
                assert ref.inside(enc, ref.tau(p, s))


# -- atoms ------------------------------------------------------------------


def test_atoms_examples():
    t = 2 - math.sqrt(3.0)
    at = atoms(point(2.0, 1.0), tau_enclose(point(2.0, 1.0)).tau)
    assert 2 ** -0.5 in at.a[0]
    assert (1 + t * t) ** -0.5 in at.b[0]
    top = sp_point(3.0)
    box = point(3.0, top)
    at = atoms(box, tau_enclose(box).tau)
    assert abs(at.a[0].mid - 0.5) < 1e-12


@pytest.mark.parametrize("p,s", [(1.3, 1.1), (2.0, 1.5), (2.7, 1.2), (4.0, 1.9)])
def test_constraint_contains_one(p, s):
    box = point(p, s)
    at = atoms(box, tau_enclose(box).tau)
    lhs = ipow(at.A, box.p) + ipow(at.B, box.p)
    assert 1.0 in lhs


# -- Delta ------------------------------------------------------------------


def test_p2_section():
    rng = random.Random(3)
    for _ in range(20):
        s = rng.uniform(1.0, sp_point(2.0))
        box = point(2.0, s)
        assert SQRT3_2 in delta_enclose(box)
        assert 0.0 in derivatives_enclose(box).d_sigma


def test_endpoint_identities():
    rng = random.Random(11)
    for _ in range(20):
        p = rng.uniform(1.01, 6.0)
        at_one, at_top = delta_endpoints(Interval(p))
        tp = tau_p_enclose(Interval(p)).tau
        closed_one = ipow(Interval(2.0), -2.0 / Interval(p)) * (1.0 + tp) / (1.0 - tp)
        assert at_one.overlaps(closed_one)
        assert at_top.overlaps(sigma_p(Interval(p)) * 0.5)
        assert delta_enclose(point(p, 1.0)).overlaps(at_one)
        assert delta_enclose(point(p, sp_point(p))).overlaps(at_top)


def test_delta_endpoints_at_2_and_near_1():
    one, top = delta_endpoints(Interval(2.0))
    assert SQRT3_2 in one and SQRT3_2 in top
    _, top = delta_endpoints(Interval(1 + 1e-9))
    assert abs(top.mid - 0.5) < 1e-8


def test_delta_contains_reference_on_random_points():
    rng = random.Random(19)
    for _ in range(40):
        p = rng.uniform(1.05, 6.0)
        s = rng.uniform(1.0, sp_point(p))
        assert ref.inside(delta_enclose(point(p, s)), ref.delta(p, s))


def test_width_decay():
    rng = random.Random(23)
    families = 0
    while families < 10:
        p0 = rng.uniform(1.2, 5.0)
        if abs(p0 - 2.0) < 0.2:
            continue
        top = sp_point(p0 + 0.05)
        s0 = rng.uniform(1.05, top - 0.1 * (top - 1))
        widths = []
        for k in range(4):
            w = 0.04 / 2 ** k
            box = Box(Interval(p0, p0 + w), Interval(s0, s0 + w * (top - 1)))
            widths.append(delta_enclose(box).width)
        for a, b in zip(widths, widths[1:]):
            assert a / b >= 1.5
        families += 1


# -- derivatives, g, h --------------------------------------------------------


def allowance(enc: Interval, h: float) -> float:
    return enc.width + 10 * h * h


def test_d_sigma_matches_fd():
    d = derivatives_enclose(point(1.5, 1.2)).d_sigma
    fd = fd_derivative("d_sigma", 1.5, 1.2, FD)
    assert d.lo - allowance(d, FD.fd_step) <= fd <= d.hi + allowance(d, FD.fd_step)


def test_d_sigma2_matches_fd():
    d = derivatives_enclose(point(2.5, 1.2)).d_sigma2
    fd = fd_derivative("d_sigma2", 2.5, 1.2, FD)
    assert d.lo - allowance(d, FD.fd_step) <= fd <= d.hi + allowance(d, FD.fd_step)


def _mp_partial(p, s, i, j, h=ref.mp.mpf("1e-12")):
    """Central differences of the 50-digit Delta: i-th in sigma, j-th in p."""
    def along_sigma(pp):
        if i == 0:
            return ref.delta(pp, s)
        if i == 1:
            return (ref.delta(pp, s + h) - ref.delta(pp, s - h)) / (2 * h)
        return (ref.delta(pp, s + h) - 2 * ref.delta(pp, s) + ref.delta(pp, s - h)) / h ** 2
    if j == 0:
        return along_sigma(ref.mp.mpf(p))
    return (along_sigma(p + h) - along_sigma(p - h)) / (2 * h)


@pytest.mark.parametrize("p,s", [(1.3, 1.1), (1.8, 1.4), (2.6, 1.3), (3.5, 1.05), (5.0, 1.6)])
def test_all_partials_contain_reference(p, s):
    ds = derivatives_enclose(point(p, s))
    orders = {"d_sigma": (1, 0), "d_sigma2": (2, 0), "d_p": (0, 1), "d_sigma_p": (1, 1), "d_sigma2_p": (2, 1)}
    for name, (i, j) in orders.items():
        enc = getattr(ds, name)
        exact = _mp_partial(ref.mp.mpf(p), ref.mp.mpf(s), i, j)
        slack = 1e-14 * max(1.0, abs(float(exact)))
        assert enc.lo - slack <= float(exact) <= enc.hi + slack, name


def test_g_sign_and_value():
    for p, s in ((1.5, 1.1), (3.0, 1.05), (2.3, 1.2)):
        enc = g_enclose(point(p, s))
        fd_sign = math.copysign(1.0, fd_derivative("d_sigma", p, s, FD))
        assert not enc.contains_zero()
        assert math.copysign(1.0, enc.mid) == fd_sign
        assert abs(g_point(p, s, FD) - enc.mid) < 1e-8
    assert 0.0 in g_enclose(point(2.0, 1.3))


def test_h_is_sigma_derivative_of_g():
    p, s, H = 1.5, 1.1, 1e-3
    fd = (g_point(p, s + H, FD) - g_point(p, s - H, FD)) / (2 * H)
    enc = h_enclose(point(p, s))
    assert abs(fd - enc.mid) < 1e-5
    assert 0.0 in h_enclose(point(2.0, 1.4))


def test_h_inclusion_on_sub_box():
    parent = Box(Interval(1.4, 1.5), Interval(1.1, 1.2))
    child = Box(Interval(1.42, 1.45), Interval(1.13, 1.16))
    assert h_enclose(parent).contains(h_enclose(child))
    assert g_enclose(parent).contains(g_enclose(child))


def test_d_sigma_zero_on_p2_box():
    box = Box(Interval(2.0), Interval(1.1, 1.2))
    assert 0.0 in d_sigma_enclose(box)


# -- l0, l1, c --------------------------------------------------------------


def test_l0_l1_examples():
    assert 0.0 in l0_enclose(point(1.7, 1.0))
    assert 0.0 in l1_enclose(point(1.7, sp_point(1.7)))
    for s in (1.0, 1.3, sp_point(2.0)):
        assert 0.0 in l0_enclose(point(2.0, s))
        assert 0.0 in l1_enclose(point(2.0, s))


def test_l0_matches_difference():
    p, s = 3.0, 1.4
    diff = delta_point(p, s) - delta_point(p, 1.0)
    assert abs(l0_enclose(point(p, s)).mid - diff) < 1e-12
    diff = delta_point(p, s) - 0.5 * sigma_p_point(p)
    assert abs(l1_enclose(point(p, s)).mid - diff) < 1e-12


def test_minkowski_constant():
    assert 2 / math.sqrt(3.0) in minkowski_constant(Interval(2.0))
    # as p -> 1 the smallest area tends to 1/2, so c = (1/2)^(-1/2) = sqrt(2)
    assert abs(minkowski_constant(Interval(1 + 1e-9)).mid - math.sqrt(2.0)) < 1e-6
    outer = minkowski_constant(Interval(2.5, 3.5))
    assert outer.contains(minkowski_constant(Interval(2.8, 3.1)))


# -- edge second derivatives ---------------------------------------------------


def test_edge_second_derivatives_match_fd():
    for p in (2.3, 2.8, 4.0):
        enc = d_sigma2_at_sigma1(Interval(p))
        fd = fd_derivative("d_sigma2", p, 1.0, FD)
        assert abs(enc.mid - fd) < 1e-5
    # Delta carries a (sigma_p - sigma)^p term, so a one-sided stencil at
    # the top edge is only accurate once p is comfortably above 3
    for p in (3.5, 4.0, 5.0):
        enc = d_sigma2_at_sigmap(Interval(p))
        fd = fd_derivative("d_sigma2", p, sigma_p_point(p), FD)
        assert abs(enc.mid - fd) < 1e-4


def test_box_validation():
    with pytest.raises(InvalidRegion):
        Box(Interval(1.0, 1.5), Interval(1.0))
    with pytest.raises(InvalidRegion):
        Box(Interval(1.5), Interval(0.9, 1.0))
    with pytest.raises(ValueError):
        tau_enclose(point(2.0, 1.0), tol=-1.0)
