"""Plain floating-point reference computations.

Nothing here is rigorous.  The point is an implementation that shares no
code with the interval path, so that agreement between the two is evidence
rather than tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConvergenceError, InvalidRegion, OracleError

__all__ = [
    "OracleConfig",
    "FD_IDS",
    "sigma_p_point",
    "tau_p_point",
    "tau_point",
    "delta_point",
    "g_point",
    "fd_derivative",
    "min_parallelogram_area",
]

MAX_STEPS = 10_000


@dataclass(frozen=True)
class OracleConfig:
    fp_tol: float = 1e-14
    fd_step: float = 1e-6
    grid_n: int = 400

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if not 1e-8 <= self.fd_step <= 1e-4:
            raise ValueError("fd_step must lie in [1e-8, 1e-4]")
        if self.grid_n < 8:
            raise ValueError("grid_n must be at least 8")


DEFAULT = OracleConfig()


def _check(p: float, sigma: float) -> float:
    if not p > 1.0:
        raise InvalidRegion(f"p must exceed 1 (got {p!r})")
    top = sigma_p_point(p)
    if not 1.0 <= sigma <= top * (1 + 1e-12):
        raise InvalidRegion(f"sigma must lie in [1, {top!r}] (got {sigma!r})")
    return top


def sigma_p_point(p: float) -> float:
    return (2.0 ** p - 1.0) ** (1.0 / p)


def tau_p_point(p: float, tol: float = 1e-15) -> float:
    """Root of 2(1-t)^p = 1 + t^p in [0, 0.36], by bisection."""
    lo, hi = 0.0, 0.36
    f = lambda t: 2.0 * (1.0 - t) ** p - 1.0 - t ** p
    if not (f(lo) > 0.0 > f(hi)):
        raise ConvergenceError(f"[0, 0.36] does not bracket tau_p for p = {p!r}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _phi(p: float, sigma: float, t: float) -> float:
    a0 = (1.0 + sigma ** p) ** (-1.0 / p)
    b0 = (1.0 + t ** p) ** (-1.0 / p)
    return (b0 - a0) ** p + (t * b0 + sigma * a0) ** p - 1.0


def tau_point(p: float, sigma: float, cfg: OracleConfig = DEFAULT) -> float:
    """tau(p, sigma) from the fixed-point iteration, polished by Newton steps.

    The map is ``t -> (1 + t^p)^(1/p) ((1 - A^p)^(1/p) - sigma a0)``, i.e.
    the constraint solved for tau through ``B``.
    """
    _check(p, sigma)
    a0 = (1.0 + sigma ** p) ** (-1.0 / p)
    t = 0.18
    for _ in range(MAX_STEPS):
        one_t = 1.0 + t ** p
        A = max(one_t ** (-1.0 / p) - a0, 0.0)
        nxt = one_t ** (1.0 / p) * (max(1.0 - A ** p, 0.0) ** (1.0 / p) - sigma * a0)
        nxt = min(max(nxt, 0.0), 0.36)
        if abs(nxt - t) < cfg.fp_tol:
            t = nxt
            break
        t = nxt
    else:
        raise ConvergenceError(f"tau iteration did not settle at p={p!r}, sigma={sigma!r}")
    # Newton polish on Phi, derivative by a symmetric difference
    for _ in range(3):
        if t <= 0.0:
            break
        h = 1e-7 * max(t, 1e-3)
        d = (_phi(p, sigma, t + h) - _phi(p, sigma, max(t - h, 0.0))) / (t + h - max(t - h, 0.0))
        if d <= 0.0:
            break
        step = _phi(p, sigma, t) / d
        t = min(max(t - step, 0.0), 0.36)
        if abs(step) < 1e-17:
            break
    if abs(_phi(p, sigma, t)) >= 10 * cfg.fp_tol and t > 0.0:
        raise ConvergenceError(f"tau residual too large at p={p!r}, sigma={sigma!r}")
    return t


def delta_point(p: float, sigma: float, cfg: OracleConfig = DEFAULT) -> float:
    t = tau_point(p, sigma, cfg)
    return (t + sigma) * (1.0 + t ** p) ** (-1.0 / p) * (1.0 + sigma ** p) ** (-1.0 / p)


def g_point(p: float, sigma: float, cfg: OracleConfig = DEFAULT) -> float:
    """``Phi_tau / p`` times the finite-difference ``Delta_sigma``: same sign as Delta_sigma."""
    t = tau_point(p, sigma, cfg)
    b0 = (1.0 + t ** p) ** (-1.0 / p)
    a0 = (1.0 + sigma ** p) ** (-1.0 / p)
    A, B = b0 - a0, t * b0 + sigma * a0
    b1 = (1.0 + t ** p) ** (-1.0 - 1.0 / p)
    den = b1 * (B ** (p - 1.0) - (A * t) ** (p - 1.0))
    return den * fd_derivative("d_sigma", p, sigma, cfg)


FD_IDS = ("d_sigma", "d_sigma2", "d_p", "d_sigma_p", "d_sigma2_p")


def _edge_weights(p: float, d: float) -> np.ndarray:
    """Weights for f''(s) from f(s - k h), k = 0..4, next to the top edge.

    ``d = (sigma_p - s) / h``.  Delta contains a ``(sigma_p - sigma)^p`` term,
    so an ordinary one-sided stencil converges only like ``h^(p-2)``.  These
    weights are exact on ``1, u, u^2, u^3`` (``u = sigma - s``) and on that
    singular term.
    """
    k = np.arange(5.0)
    rows = np.vstack([k ** 0, -k, k ** 2, -(k ** 3), (d + k) ** p])
    rhs = np.array([0.0, 0.0, 2.0, 0.0, p * (p - 1.0) * d ** (p - 2.0)])
    return np.linalg.solve(rows, rhs)


def _fd_sigma(f, s: float, h: float, order: int, lo: float, hi: float, p: float = 0.0) -> float:
    """First or second sigma-difference, one-sided near the ends of [lo, hi]."""
    if s - 2 * h >= lo and s + 2 * h <= hi:
        # fourth-order central stencils
        fm2, fm1, fp1, fp2 = f(s - 2 * h), f(s - h), f(s + h), f(s + 2 * h)
        if order == 1:
            return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
        return (-fm2 + 16.0 * fm1 - 30.0 * f(s) + 16.0 * fp1 - fp2) / (12.0 * h * h)
    if s - h >= lo and s + h <= hi:
        if order == 1:
            return (f(s + h) - f(s - h)) / (2.0 * h)
        return (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h)
    sgn = 1.0 if s - h < lo else -1.0
    if order == 2 and sgn < 0 and p > 2.0 and abs(p - 3.0) > 0.1:
        # (near p = 3 the singular term is almost u^3 and the system degenerates;
        # the plain stencil is accurate there anyway)
        w = _edge_weights(p, max(hi - s, 0.0) / h)
        return math.fsum(wk * f(s - k * h) for k, wk in enumerate(w)) / (h * h)
    f0, f1, f2 = f(s), f(s + sgn * h), f(s + 2 * sgn * h)
    if order == 1:
        return sgn * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
    f3 = f(s + 3 * sgn * h)
    return (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h)


def fd_derivative(which: str, p: float, sigma: float, cfg: OracleConfig = DEFAULT) -> float:
    """Finite-difference partial of Delta at (p, sigma).

    Central differences, except that sigma-differences switch to one-sided
    stencils within one step of sigma = 1 or sigma = sigma_p (at the top
    edge, for the second difference, one that also cancels the
    ``(sigma_p - sigma)^p`` term of Delta), and the
    p-difference turns forward where sigma would leave the domain at p - h.
    Rounding noise scales like eps / h**k for a k-th difference, so second
    and mixed derivatives want a step near the top of the allowed range.
    """
    if which not in FD_IDS:
        raise ValueError(f"unknown derivative id {which!r}; expected one of {FD_IDS}")
    _check(p, sigma)
    h = cfg.fd_step

    def along_sigma(pp: float, order: int) -> float:
        top = min(sigma_p_point(pp), sigma_p_point(p))
        return _fd_sigma(lambda s: delta_point(pp, min(s, sigma_p_point(pp)), cfg), sigma, h, order, 1.0, top, pp)

    if which == "d_sigma":
        return along_sigma(p, 1)
    if which == "d_sigma2":
        return along_sigma(p, 2)
    if which == "d_p":
        f = lambda pp: delta_point(pp, sigma, cfg)
    else:
        order = 1 if which == "d_sigma_p" else 2
        f = lambda pp: along_sigma(pp, order)
    # sigma_p grows with p, so a point near the top edge may not exist at p - h
    if sigma <= sigma_p_point(p - h) and p - h > 1.0:
        return (f(p + h) - f(p - h)) / (2.0 * h)
    return (-3.0 * f(p) + 4.0 * f(p + h) - f(p + 2 * h)) / (2.0 * h)


# ---------------------------------------------------------------------------
# inscribed parallelograms


def _norm(x: float, y: float, p: float) -> float:
    m = max(abs(x), abs(y))
    if m == 0.0:
        return 0.0
    return m * ((abs(x) / m) ** p + (abs(y) / m) ** p) ** (1.0 / p)


def _on_curve(theta: float, p: float) -> tuple[float, float]:
    c, s = math.cos(theta), math.sin(theta)
    n = _norm(c, s, p)
    return c / n, s / n


def _area_at(phi: float, p: float, iters: int = 80) -> float:
    """Area of the parallelogram 0, P1, P2, P1 + P2 with all of P1, P2, P1 + P2 on the curve.

    P1 sits at angle ``phi``; P2 is found by bisection on its angle in
    (phi, phi + pi), where ``|P1 + P2|_p - 1`` runs from +1 to -1.
    """
    x1, y1 = _on_curve(phi, p)

    def f(theta: float) -> float:
        x2, y2 = _on_curve(theta, p)
        return _norm(x1 + x2, y1 + y2, p) - 1.0

    lo, hi = phi, phi + math.pi
    if not (f(lo) > 0.0 > f(hi)):
        raise ArithmeticError("no sign change")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    x2, y2 = _on_curve(0.5 * (lo + hi), p)
    return abs(x1 * y2 - x2 * y1)


def min_parallelogram_area(p: float, cfg: OracleConfig = DEFAULT) -> float:
    """Smallest parallelogram with one vertex at 0 and three on ``|x|^p + |y|^p = 1``.

    A grid of ``grid_n`` angles over a quarter turn (the curve's symmetry
    makes that enough) is followed by a bounded scalar minimisation around
    the best grid point.
    """
    if not p >= 1.0:
        raise InvalidRegion(f"p must be at least 1 (got {p!r})")
    n = cfg.grid_n
    step = 0.5 * math.pi / n
    best, best_phi, failures = math.inf, 0.0, 0
    for k in range(n):
        phi = k * step
        try:
            a = _area_at(phi, p)
        except (ArithmeticError, ValueError, OverflowError):
            failures += 1
            continue
        if a < best:
            best, best_phi = a, phi
    if failures > 0.1 * n:
        raise OracleError(f"{failures} of {n} grid angles failed for p = {p!r}")

    def safe(phi: float) -> float:
        try:
            return _area_at(phi, p)
        except (ArithmeticError, ValueError, OverflowError):
            return math.inf

    res = minimize_scalar(safe, bounds=(best_phi - step, best_phi + step), method="bounded",
                          options={"xatol": 1e-10})
    return min(best, float(res.fun))
