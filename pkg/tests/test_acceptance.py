"""Acceptance checks.  Each test prints one PASS/FAIL line with its runtime."""

import math
import random
import time

import pytest

from critdet import (
    Box,
    Interval,
    SignClaim,
    VerifyConfig,
    delta_enclose,
    derivatives_enclose,
    min_parallelogram_area,
    prove_sign,
    replay,
    sigma_p,
    tau_enclose,
    verify_mas_part,
)
from critdet.certificate import dumps, to_dict
from critdet.cohn import clear_caches, d_sigma2_at_sigma1, d_sigma2_at_sigmap
from critdet.oracle import OracleConfig, delta_point, fd_derivative, g_point, sigma_p_point, tau_p_point, tau_point
from critdet.verifier import NoRootEvidence, RootEnclosure, combined_status, enclose_root, mas_sigma_range

SQRT3_2 = 0.8660254037844386
FD = OracleConfig(fd_step=1e-4)


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, elapsed: float, limit: float, detail: str = "") -> None:
        ok = ok and elapsed <= limit
        with capsys.disabled():
            tag = "PASS" if ok else "FAIL"
            print(f"\n[acceptance {n}] {tag} ({elapsed:.2f}s, limit {limit:g}s) {detail}".rstrip())
        assert elapsed <= limit, f"criterion {n} took {elapsed:.2f}s > {limit}s"

    return emit


def point(p: float, s: float) -> Box:
    return Box(Interval(p), Interval(s))


def gap(iv: Interval, x: float) -> float:
    """Distance from x to the interval (0 when inside)."""
    return max(iv.lo - x, x - iv.hi, 0.0)


# 1 --------------------------------------------------------------------------


def test_1_p2_constancy(report):
    t0 = time.perf_counter()
    bad = []
    for s in [1.0 + k * (math.sqrt(3.0) - 1.0) / 49 for k in range(50)]:
        s = min(s, sigma_p(Interval(2.0)).lo)
        d = delta_enclose(point(2.0, s))
        if not (d.lo <= SQRT3_2 <= d.hi and d.width <= 1e-9):
            bad.append((s, d))
    elapsed = time.perf_counter() - t0
    report(1, not bad, elapsed, 1.0, f"{50 - len(bad)}/50 enclosures contain sqrt(3)/2")
    assert not bad


# 2 --------------------------------------------------------------------------


def test_2_endpoint_closed_forms(report):
    t0 = time.perf_counter()
    worst = 0.0
    for p in (1.25, 1.5, 2.5, 3.0, 4.0, 6.0):
        t = tau_p_point(p)
        at_one = 2.0 ** (-2.0 / p) * (1.0 + t) / (1.0 - t)
        at_top = (2.0 ** p - 1.0) ** (1.0 / p) / 2.0
        worst = max(worst, gap(delta_enclose(point(p, 1.0)), at_one))
        worst = max(worst, gap(delta_enclose(point(p, sigma_p(Interval(p)).lo)), at_top))
    elapsed = time.perf_counter() - t0
    report(2, worst <= 1e-9, elapsed, 1.0, f"largest distance {worst:.1e}")
    assert worst <= 1e-9


# 3 --------------------------------------------------------------------------


def test_3_containment_fuzz(report):
    rng = random.Random(31)
    t0 = time.perf_counter()
    violations = []
    for _ in range(1000):
        p = rng.uniform(1.05, 6.0)
        s = rng.uniform(1.0, sigma_p(Interval(p)).lo)
        box = point(p, s)
        t, d = tau_enclose(box).tau, delta_enclose(box)
        if not (t.lo <= tau_point(p, s) <= t.hi and d.lo <= delta_point(p, s) <= d.hi):
            violations.append((p, s))
    elapsed = time.perf_counter() - t0
    report(3, not violations, elapsed, 30.0, f"{len(violations)} violations in 1000 points")
    assert not violations


# 4 --------------------------------------------------------------------------


def test_4_derivatives_match_finite_differences(report):
    rng = random.Random(47)
    h = FD.fd_step
    t0 = time.perf_counter()
    violations, n = [], 0
    while n < 100:
        p = rng.uniform(1.05, 6.0)
        if abs(p - 2.0) <= 0.1:
            continue
        top = sigma_p_point(p)
        margin = 0.02 * (top - 1.0)
        s = rng.uniform(1.0 + margin, top - margin)
        n += 1
        ds = derivatives_enclose(point(p, s))
        for iv, which in ((ds.d_sigma, "d_sigma"), (ds.d_sigma2, "d_sigma2")):
            fd = fd_derivative(which, p, s, FD)
            if gap(iv, fd) > iv.width + 10 * h * h:
                violations.append((which, p, s, iv, fd))
    elapsed = time.perf_counter() - t0
    report(4, not violations, elapsed, 60.0, f"{len(violations)} violations in {2 * n} comparisons")
    assert not violations


# 5 and 9 --------------------------------------------------------------------

PARTS = {1: (1.4, 1.6), 2: (2.02, 2.10)}
EXPECTED = {1: "positive", 2: "negative"}


def prescan(part: int, n: int = 50) -> str:
    """'positive', 'negative' or 'mixed' for oracle g on an n x n grid."""
    lo, hi = PARTS[part]
    srange = mas_sigma_range(lo, 0.05)
    signs = set()
    for i in range(n):
        p = lo + (hi - lo) * i / (n - 1)
        top = min(srange.hi, sigma_p_point(p))
        for j in range(n):
            s = srange.lo + (top - srange.lo) * j / (n - 1)
            v = g_point(p, s)
            signs.add("positive" if v > 0 else "negative" if v < 0 else "zero")
    return signs.pop() if len(signs) == 1 else "mixed"


@pytest.fixture(scope="module")
def part_runs():
    runs = {}
    for part, (lo, hi) in PARTS.items():
        t0 = time.perf_counter()
        scan = prescan(part)
        certs = verify_mas_part(part, Interval(lo, hi), config=VerifyConfig(max_depth=40, workers=1))
        runs[part] = (scan, certs, time.perf_counter() - t0)
    return runs


def test_5_sign_verification(report, part_runs):
    t0 = time.perf_counter()
    ok, notes = True, []
    for part, (scan, certs, _) in part_runs.items():
        status = combined_status(certs)
        if scan == EXPECTED[part]:
            ok &= status == "proven"
        else:
            ok &= status in ("proven", "undecided")
        boxes = 0
        for cert in certs:
            rep = replay(cert)
            ok &= rep.ok and rep.checked == len(cert.boxes)
            boxes += len(cert.boxes)
        notes.append(f"part {part}: scan {scan}, {status}, {boxes} boxes replayed")
    elapsed = time.perf_counter() - t0 + sum(r[2] for r in part_runs.values())
    report(5, ok, elapsed, 300.0, "; ".join(notes))
    assert ok


def test_9_determinism_across_workers(report, part_runs):
    t0 = time.perf_counter()
    same = True
    for part, (lo, hi) in PARTS.items():
        clear_caches()  # forked workers start cold instead of inheriting results
        four = verify_mas_part(part, Interval(lo, hi), config=VerifyConfig(max_depth=40, workers=4))
        one = part_runs[part][1]
        same &= [dumps(to_dict(c, "x")) for c in one] == [dumps(to_dict(c, "x")) for c in four]
    elapsed = time.perf_counter() - t0
    report(9, same, elapsed, math.inf, "workers 1 and 4 give identical certificate bytes")
    assert same


# 6 --------------------------------------------------------------------------


def test_6_degenerate_claims_are_undecided(report):
    t0 = time.perf_counter()
    regions = [
        Box(Interval(2.0), Interval(1.1, 1.2)),
        Box(Interval(1.9, 2.1), Interval(1.0, 1.5)),
        Box(Interval(1.5, 2.0), Interval(1.2, 1.3)),
        Box(Interval(2.0, 3.0), Interval(1.05, 1.1)),
    ]
    seen = []
    for region in regions:
        for fn in ("g", "h", "l0", "l1", "d_sigma", "d_sigma2"):
            for sign in ("positive", "negative"):
                seen.append(prove_sign(SignClaim(fn, sign, region), max_depth=40).status)
    elapsed = time.perf_counter() - t0
    ok = set(seen) == {"undecided"}
    report(6, ok, elapsed, 10.0, f"{seen.count('undecided')}/{len(seen)} claims undecided")
    assert ok


# 7 --------------------------------------------------------------------------


def _slice_sign(fn_id: str, p: float) -> float:
    s = 1.0 if fn_id == "d_sigma2_at_sigma1" else sigma_p_point(p)
    return fd_derivative("d_sigma2", p, s, FD)


@pytest.mark.parametrize("fn_id", ["d_sigma2_at_sigma1", "d_sigma2_at_sigmap"])
def test_7_root_brackets(report, fn_id):
    t0 = time.perf_counter()
    found = enclose_root(fn_id, Interval(2.01, 6.0), 1e-3)
    if isinstance(found, RootEnclosure):
        ok = found.p_bracket.width <= 1e-3
        for ev in (found.left, found.right):
            ok &= _slice_sign(fn_id, ev.p) * ev.sign > 0
        detail = f"{fn_id}: bracket [{found.p_bracket.lo:.6f}, {found.p_bracket.hi:.6f}], signs agree"
    else:
        assert isinstance(found, NoRootEvidence)
        scan = [_slice_sign(fn_id, 2.01 + k * (6.0 - 2.01) / 199) for k in range(200)]
        ok = all(v > 0 for v in scan) or all(v < 0 for v in scan)
        detail = f"{fn_id}: no root, oracle scan {'agrees' if ok else 'disagrees'}"
    elapsed = time.perf_counter() - t0
    report(7, ok, elapsed, 120.0, detail)
    assert ok


def test_7_brackets_are_enclosed_sign_changes():
    for fn, fn_id in ((d_sigma2_at_sigma1, "d_sigma2_at_sigma1"), (d_sigma2_at_sigmap, "d_sigma2_at_sigmap")):
        found = enclose_root(fn_id, Interval(2.01, 6.0), 1e-3)
        lo, hi = fn(Interval(found.p_bracket.lo)), fn(Interval(found.p_bracket.hi))
        assert (lo.lo > 0 and hi.hi < 0) or (lo.hi < 0 and hi.lo > 0)


# 8 --------------------------------------------------------------------------


def test_8_parallelogram_oracle(report):
    t0 = time.perf_counter()
    a1, a2, a50 = (min_parallelogram_area(p) for p in (1.0, 2.0, 50.0))
    elapsed = time.perf_counter() - t0
    ok = abs(a1 - 0.5) <= 1e-3 and abs(a2 - 0.8660) <= 1e-3 and a50 >= 0.95
    report(8, ok, elapsed, 60.0, f"areas {a1:.5f}, {a2:.5f}, {a50:.5f}")
    assert ok
