"""Rigorous enclosures of Cohn's critical-determinant function.

For the region ``|x|^p + |y|^p < 1`` the candidate critical parallelogram
areas are

    Delta(p, sigma) = (tau + sigma) * a0 * b0,
    a0 = (1 + sigma^p)^(-1/p),  b0 = (1 + tau^p)^(-1/p),

where ``tau = tau(p, sigma)`` in ``[0, tau_p]`` is the implicit solution of

    Phi = A^p + B^p - 1 = 0,   A = b0 - a0,   B = tau*b0 + sigma*a0,

on ``1 <= sigma <= sigma_p = (2^p - 1)^(1/p)``, and ``tau_p`` is the root of
``2(1 - t)^p = 1 + t^p`` in ``[0, 1]``.

Derivative formulas
-------------------
With the atoms ``s_i = sigma^(p-i)``, ``t_i = tau^(p-i)``,
``a_i = (1+sigma^p)^(-i-1/p)``, ``b_i = (1+tau^p)^(-i-1/p)``,
``alpha_i = A^(p-i)``, ``beta_i = B^(p-i)`` one has ``dA/dsigma = s1*a1``,
``dB/dsigma = a1``, ``dA/dtau = -t1*b1``, ``dB/dtau = b1`` and hence

    Phi_sigma = p * a1 * (alpha1*s1 + beta1)
    Phi_tau   = p * b1 * (beta1 - alpha1*t1)          (> 0, since B > tau*A)
    tau_sigma = -N / D,  N = a1*(alpha1*s1 + beta1),  D = b1*(beta1 - alpha1*t1)

    D * Delta_sigma = (D - N)*a0*b0 - (tau + sigma)*(s1*a1*b0*D - a0*t1*b1*N)

The right-hand side is ``g``: it has the sign of ``Delta_sigma`` because
``D > 0``.  ``h = dg/dsigma`` and all higher derivatives of ``Delta`` are
obtained by propagating interval Taylor jets (:mod:`critdet.jet`) through
these same expressions, with the Taylor coefficients of ``tau`` computed by
implicit differentiation of ``Phi`` order by order.

Endpoint values: ``Delta(p, sigma_p) = sigma_p / 2`` (there ``tau = 0``) and
``Delta(p, 1) = 2^(-2/p) (1 + tau_p) / (1 - tau_p)`` (there ``tau = tau_p``).
The differences ``l0 = Delta(p, sigma) - Delta(p, 1)`` and
``l1 = Delta(p, sigma) - Delta(p, sigma_p)`` are the quantities whose
positivity is the Minkowski analytic conjecture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

from .errors import DomainError, InconsistencyError, InvalidRegion, SingularityError
from .interval import Interval, MonotoneDescriptor, as_interval, intersect, ipow, monotone_eval
from .jet import Jet, _layout, embed_p, jpow, sigma_derivative, zero_power

__all__ = [
    "Box",
    "CohnAtoms",
    "TauEnclosure",
    "DerivativeSet",
    "TAU_BRACKET",
    "sigma_p",
    "tau_p_enclose",
    "tau_enclose",
    "atoms",
    "delta_enclose",
    "delta_endpoints",
    "derivatives_enclose",
    "d_sigma_enclose",
    "d_sigma2_enclose",
    "g_enclose",
    "h_enclose",
    "l0_enclose",
    "l1_enclose",
    "minkowski_constant",
    "d_sigma2_at_sigma1",
    "d_sigma2_at_sigmap",
]

TAU_BRACKET = Interval(0.0, 0.36)
N_MAX = 100
DEFAULT_TOL = 1e-15

Num = Union[Interval, Jet]


@dataclass(frozen=True)
class Box:
    """Rectangle ``p x sigma`` in the parameter plane."""

    p: Interval
    sigma: Interval

    def __post_init__(self):
        object.__setattr__(self, "p", as_interval(self.p))
        object.__setattr__(self, "sigma", as_interval(self.sigma))
        if not self.p.lo > 1.0:
            raise InvalidRegion(f"p must exceed 1 (got p.lo = {self.p.lo!r})")
        if self.sigma.lo < 1.0:
            raise InvalidRegion(f"sigma must be at least 1 (got sigma.lo = {self.sigma.lo!r})")

    @classmethod
    def from_bounds(cls, p_lo: float, p_hi: float, s_lo: float, s_hi: float) -> "Box":
        return cls(Interval(p_lo, p_hi), Interval(s_lo, s_hi))

    @property
    def area(self) -> float:
        return (self.p.hi - self.p.lo) * (self.sigma.hi - self.sigma.lo)

    @property
    def midpoint(self) -> "Box":
        return Box(Interval(self.p.mid), Interval(self.sigma.mid))

    @property
    def is_point(self) -> bool:
        return self.p.is_point and self.sigma.is_point

    def sigma_ceiling(self) -> float:
        """Largest sigma certainly inside the domain for every p in the box."""
        return sigma_p(Interval(self.p.lo)).lo

    def clipped(self) -> Optional["Box"]:
        """The part of the box below the conservative ``sigma_p`` ceiling.

        Returns ``None`` if nothing is left.
        """
        top = self.sigma_ceiling()
        if self.sigma.hi <= top:
            return self
        if self.sigma.lo > top:
            return None
        return Box(self.p, Interval(self.sigma.lo, top))

    def split(self, axis: str) -> tuple["Box", "Box"]:
        if axis == "p":
            m = self.p.mid
            return Box(Interval(self.p.lo, m), self.sigma), Box(Interval(m, self.p.hi), self.sigma)
        m = self.sigma.mid
        return Box(self.p, Interval(self.sigma.lo, m)), Box(self.p, Interval(m, self.sigma.hi))

    def sort_key(self) -> tuple[float, float, float, float]:
        return (self.p.lo, self.sigma.lo, self.p.hi, self.sigma.hi)

    def __repr__(self) -> str:
        return f"Box(p=[{self.p.lo!r}, {self.p.hi!r}], sigma=[{self.sigma.lo!r}, {self.sigma.hi!r}])"


@dataclass(frozen=True)
class TauEnclosure:
    tau: Interval
    iterations: int
    converged: bool


@dataclass(frozen=True)
class CohnAtoms:
    """Enclosures of the atoms for i = 0..3.

    ``t[i]`` and ``alpha[i]`` are ``None`` where the power has a negative
    exponent and a base enclosure touching zero.
    """

    s: tuple
    t: tuple
    a: tuple
    b: tuple
    A: Num
    B: Num
    alpha: tuple
    beta: tuple


@dataclass(frozen=True)
class DerivativeSet:
    delta: Interval
    d_sigma: Interval
    d_sigma2: Interval
    d_p: Interval
    d_sigma_p: Interval
    d_sigma2_p: Interval

    def as_dict(self) -> dict[str, Interval]:
        return {
            "delta": self.delta,
            "d_sigma": self.d_sigma,
            "d_sigma2": self.d_sigma2,
            "d_p": self.d_p,
            "d_sigma_p": self.d_sigma_p,
            "d_sigma2_p": self.d_sigma2_p,
        }


# ---------------------------------------------------------------------------
# helpers shared by the interval and jet code paths


def _nonneg(x: Num) -> Num:
    """Clamp an enclosure of a quantity known to be non-negative."""
    if isinstance(x, Interval):
        if x.hi < 0.0:
            raise DomainError(f"enclosure of a non-negative quantity is negative: {x!r}")
        return x if x.lo >= 0.0 else Interval(0.0, x.hi)
    return x


def _power(base: Num, exponent: Num, zero_base: bool = False) -> Num:
    if zero_base:
        shape = base.shape if isinstance(base, Jet) else (exponent.shape if isinstance(exponent, Jet) else None)
        return zero_power(exponent, shape)
    return jpow(base, exponent)


def _maybe(fn, *args):
    try:
        return fn(*args)
    except DomainError:
        return None


def _atoms_generic(p: Num, s: Num, tau: Num, tau_zero: bool = False, n: int = 4) -> CohnAtoms:
    inv_p = 1.0 / p
    one_s = 1.0 + _power(s, p)
    one_t = Interval(1.0) if tau_zero else 1.0 + _power(tau, p)
    s_i = tuple(_power(s, p - float(i)) for i in range(n))
    t_i = tuple(
        (_maybe(_power, tau, p - float(i), True) if tau_zero else _maybe(_power, tau, p - float(i)))
        for i in range(n)
    )
    a_i = tuple(_power(one_s, -(inv_p + float(i))) for i in range(n))
    if tau_zero:
        b_i = tuple(Interval(1.0) for _ in range(n))
        if isinstance(p, Jet):
            b_i = tuple(Jet.constant(1.0, p.shape) for _ in range(n))
    else:
        b_i = tuple(_power(one_t, -(inv_p + float(i))) for i in range(n))
    A = _nonneg(b_i[0] - a_i[0])
    B = _nonneg(tau * b_i[0] + s * a_i[0])
    alpha = tuple(_maybe(_power, A, p - float(i)) for i in range(n))
    beta = tuple(_power(B, p - float(i)) for i in range(n))
    return CohnAtoms(s_i, t_i, a_i, b_i, A, B, alpha, beta)


def _phi_generic(p: Num, s: Num, tau: Num, tau_zero: bool = False) -> Num:
    inv_p = 1.0 / p
    a0 = _power(1.0 + _power(s, p), -inv_p)
    b0 = 1.0 if tau_zero else _power(1.0 + _power(tau, p), -inv_p)
    A = _nonneg(b0 - a0)
    B = tau * b0 + s * a0
    return _power(A, p) + _power(B, p) - 1.0


def _phi_tau(p: Interval, at: CohnAtoms) -> Interval:
    if at.alpha[1] is None or at.t[1] is None:
        raise DomainError("Phi_tau atoms undefined on this box")
    return p * at.b[1] * (at.beta[1] - at.alpha[1] * at.t[1])


def _g_generic(at: CohnAtoms, s: Num, tau: Num) -> Num:
    if at.alpha[1] is None or at.t[1] is None:
        raise DomainError("g atoms undefined on this box")
    den = at.b[1] * (at.beta[1] - at.alpha[1] * at.t[1])
    num = at.a[1] * (at.alpha[1] * at.s[1] + at.beta[1])
    return (den - num) * at.a[0] * at.b[0] - (tau + s) * (
        at.s[1] * at.a[1] * at.b[0] * den - at.a[0] * at.t[1] * at.b[1] * num
    )


def _centered(f_mid: Interval, grad_s: Interval, grad_p: Interval, box: Box) -> Interval:
    mid = box.midpoint
    return f_mid + grad_s * (box.sigma - mid.sigma.lo) + grad_p * (box.p - mid.p.lo)


def _tighten(natural: Optional[Interval], other: Optional[Interval]) -> Interval:
    if natural is None and other is None:
        raise DomainError("no enclosure could be formed on this box")
    if natural is None:
        return other
    if other is None:
        return natural
    both = intersect(natural, other)
    if both is None:
        raise InconsistencyError(f"enclosures {natural!r} and {other!r} are disjoint")
    return both


_SOFT_ERRORS = (DomainError, SingularityError, InconsistencyError)


def _range(box: Box, value, jet_fn, depth: int = 0) -> Interval:
    """Range enclosure of a smooth function over ``box``.

    ``value(box)`` is the natural interval extension and ``jet_fn(box,
    shape)`` returns the function's Taylor jet over ``box``.  Three forms are
    intersected:

    * the natural extension;
    * the mean-value form ``f(m) + grad f(box) . d``, where the gradient
      enclosure itself is tightened by ``grad f(m) + Hess f(box) . d``;
    * the second-order Taylor form ``f(m) + grad f(m) . d + d' H(box) d / 2``.

    Where a partial derivative has a certified sign the function is monotone
    in that variable, so its minimum and maximum sit on opposite faces; those
    faces are enclosed instead.
    """
    natural = value(box)
    if box.is_point:
        return natural
    mid = box.midpoint
    ds = box.sigma - mid.sigma.lo
    dp = box.p - mid.p.lo
    try:
        f_mid = _tighten(value(mid), None)
        jm = jet_fn(mid, (1, 1))
        f_mid = _tighten(f_mid, jm.value)
    except _SOFT_ERRORS:
        return natural
    best = natural
    grad = None
    try:
        j2 = jet_fn(box, (2, 2))
        g_s = _tighten(j2[1, 0], jm[1, 0] + j2[2, 0] * 2.0 * ds + j2[1, 1] * dp)
        g_p = _tighten(j2[0, 1], jm[0, 1] + j2[1, 1] * ds + j2[0, 2] * 2.0 * dp)
        grad = (g_s, g_p)
        taylor = (f_mid + jm[1, 0] * ds + jm[0, 1] * dp
                  + j2[2, 0] * ds.sqr() + j2[1, 1] * (ds * dp) + j2[0, 2] * dp.sqr())
        best = _tighten(best, taylor)
    except _SOFT_ERRORS:
        try:
            j1 = jet_fn(box, (1, 1))
            grad = (j1[1, 0], j1[0, 1])
        except _SOFT_ERRORS:
            pass
    if grad is None:
        return best
    g_s, g_p = grad
    if box.p.is_point:
        g_p = Interval(0.0)
    if box.sigma.is_point:
        g_s = Interval(0.0)
    best = _tighten(best, f_mid + g_s * ds + g_p * dp)
    if depth > 1:
        return best
    for axis, d in (("p", g_p), ("sigma", g_s)):
        if d.contains_zero():
            continue
        lo_face, hi_face = _faces(box, axis)
        if d.lo < 0.0:
            lo_face, hi_face = hi_face, lo_face
        try:
            lo = _range(lo_face, value, jet_fn, depth + 1).lo
            hi = _range(hi_face, value, jet_fn, depth + 1).hi
        except _SOFT_ERRORS:
            continue
        if lo <= hi:
            best = _tighten(best, Interval(lo, hi))
        return best
    return best


def _faces(box: Box, axis: str) -> tuple[Box, Box]:
    if axis == "p":
        return Box(Interval(box.p.lo), box.sigma), Box(Interval(box.p.hi), box.sigma)
    return Box(box.p, Interval(box.sigma.lo)), Box(box.p, Interval(box.sigma.hi))


# ---------------------------------------------------------------------------
# sigma_p and tau_p


def _sigma_p_point(x: Interval, _y: Interval = None) -> Interval:
    return ipow(ipow(Interval(2.0), x) - 1.0, 1.0 / x)


_SIGMA_P = MonotoneDescriptor(_sigma_p_point, 1, 1)


@lru_cache(maxsize=8192)
def _sigma_p_cached(lo: float, hi: float) -> Interval:
    return monotone_eval(_SIGMA_P, Interval(lo, hi))


def sigma_p(p: Interval) -> Interval:
    """Enclosure of ``(2^p - 1)^(1/p)``, increasing in p."""
    if p.lo < 1.0:
        raise InvalidRegion(f"p must be at least 1 (got {p.lo!r})")
    return _sigma_p_cached(p.lo, p.hi)


def _tau_p_residual(t: Interval, p: Interval) -> Interval:
    return 2.0 * ipow(1.0 - t, p) - (1.0 + ipow(t, p))


def _check_tau_p_bracket(p: Interval) -> None:
    # residual is decreasing in t, positive at 0; negative at 0.36 brackets the root
    if not _tau_p_residual(Interval(TAU_BRACKET.hi), p).hi < 0.0:
        raise InconsistencyError(f"[0, 0.36] is not certified to bracket tau_p for p = {p!r}")


@lru_cache(maxsize=4096)
def _tau_p_cached(lo: float, hi: float, tol: float) -> TauEnclosure:
    p = Interval(lo, hi)
    _check_tau_p_bracket(p)
    inv_p = 1.0 / p
    c = ipow(Interval(2.0), -inv_p)
    x = TAU_BRACKET
    converged = False
    it = 0
    for it in range(1, N_MAX + 1):
        y = intersect(x, 1.0 - c * ipow(1.0 + ipow(x, p), inv_p))
        if y is None:
            raise InconsistencyError(f"tau_p iteration emptied for p = {p!r}")
        # interval Newton on F(t) = 2(1-t)^p - 1 - t^p, F' < 0 on [0, 1]
        m = Interval(y.mid)
        dF = -(p * (2.0 * ipow(1.0 - y, p - 1.0) + ipow(y, p - 1.0)))
        try:
            newton = m - _tau_p_residual(m, p) / dF
            y = intersect(y, newton)
        except DomainError:
            pass
        if y is None:
            raise InconsistencyError(f"tau_p Newton step emptied for p = {p!r}")
        gain = x.width - y.width
        x = y
        if gain < tol:
            converged = True
            break
    return TauEnclosure(x, it, converged)


def tau_p_enclose(p: Interval, tol: float = DEFAULT_TOL) -> TauEnclosure:
    """Enclosure of the root of ``2(1-t)^p = 1 + t^p`` in ``[0, 0.36]``.

    Runs the fixed-point map ``t -> 1 - 2^(-1/p) (1 + t^p)^(1/p)`` in
    interval form from ``[0, 0.36]``, intersecting with the previous iterate
    and with an interval Newton step.
    """
    if p.lo <= 1.0:
        raise InvalidRegion(f"p must exceed 1 (got {p.lo!r})")
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _tau_p_cached(p.lo, p.hi, tol)


# ---------------------------------------------------------------------------
# tau(p, sigma)


def _tau_fixed_point_step(x: Interval, p: Interval, a0: Interval, s_a0: Interval, inv_p: Interval) -> Interval:
    one_t = 1.0 + ipow(x, p)
    b0 = ipow(one_t, -inv_p)
    A = _nonneg(b0 - a0)
    root = ipow(_nonneg(1.0 - ipow(A, p)), inv_p)
    return ipow(one_t, inv_p) * (root - s_a0)


def _phi_tau_lean(p: Interval, s_a0: Interval, tau: Interval, a0: Interval, inv_p: Interval) -> Interval:
    """``Phi_tau`` from the four atoms it needs (the Newton step's hot path)."""
    one_t = 1.0 + ipow(tau, p)
    b0 = ipow(one_t, -inv_p)
    b1 = b0 / one_t
    A = _nonneg(b0 - a0)
    B = tau * b0 + s_a0
    pm1 = p - 1.0
    return p * b1 * (ipow(B, pm1) - ipow(A, pm1) * ipow(tau, pm1))


@lru_cache(maxsize=65536)
def _tau_cached(box: Box, tol: float) -> TauEnclosure:
    if not box.is_point:
        found = _tau_box_newton(box, tol)
        if found is not None:
            return TauEnclosure(found, 0, True)
    if not box.sigma.is_point:
        # Phi increases in sigma and in tau, so tau decreases in sigma: its
        # range over the box is spanned by the two sigma-edges.
        top = _tau_cached(Box(box.p, Interval(box.sigma.hi)), tol)
        bottom = _tau_cached(Box(box.p, Interval(box.sigma.lo)), tol)
        return TauEnclosure(
            Interval(top.tau.lo, bottom.tau.hi),
            top.iterations + bottom.iterations,
            top.converged and bottom.converged,
        )
    if box.p.is_point:
        return TauEnclosure(*_tau_iterate(box, tol))
    verified = _tau_segment(box, tol)
    if verified is not None:
        return TauEnclosure(verified, 0, True)
    x, it, converged = _tau_iterate(box, tol)
    if box.p.width > _MIN_P_SPLIT and x.width > tol:
        lo_half, hi_half = box.split("p")
        a = _tau_cached(lo_half, tol)
        b = _tau_cached(hi_half, tol)
        return TauEnclosure(
            Interval(min(a.tau.lo, b.tau.lo), max(a.tau.hi, b.tau.hi)),
            it + a.iterations + b.iterations,
            a.converged and b.converged,
        )
    return TauEnclosure(x, it, converged)


_MIN_P_SPLIT = 1e-9


def _phi_on_segment(box: Box, t: float) -> Interval:
    """Range of ``Phi(., sigma, t)`` over the p-segment of ``box`` (sigma, t fixed)."""
    tau = Interval(t)
    natural = _phi_generic(box.p, box.sigma, tau)
    pj = Jet.variable(box.p, 1, (0, 1))
    d_p = _phi_generic(pj, Jet.constant(box.sigma, (0, 1)), Jet.constant(tau, (0, 1)))[0, 1]
    if d_p.contains_zero():
        mid = Interval(box.p.mid)
        return _tighten(natural, _phi_generic(mid, box.sigma, tau) + d_p * (box.p - mid))
    ends = [_phi_generic(Interval(q), box.sigma, tau) for q in (box.p.lo, box.p.hi)]
    return _tighten(natural, Interval(min(e.lo for e in ends), max(e.hi for e in ends)))


def _tau_segment(box: Box, tol: float) -> Optional[Interval]:
    """Verified tau range along a p-segment at fixed sigma, by inflation.

    A candidate ``[lo, hi]`` is grown around the tau values at the segment's
    ends and midpoint.  Phi is strictly increasing in tau on the bracket
    (``Phi_tau = p*b1*(B^(p-1) - (tau*A)^(p-1))`` and ``B - tau*A =
    (tau + sigma)*a0 > 0``), so ``Phi(lo) < 0 < Phi(hi)`` on the whole
    segment proves that tau stays inside the candidate.
    """
    try:
        samples = [
            _tau_cached(Box(Interval(q), box.sigma), tol).tau
            for q in (box.p.lo, box.p.mid, box.p.hi)
        ]
    except _SOFT_ERRORS:
        return None
    lo = min(s.lo for s in samples)
    hi = max(s.hi for s in samples)
    spread = hi - lo + 1e-12
    for factor in (0.25, 1.0, 4.0):
        cand_lo = max(lo - factor * spread, TAU_BRACKET.lo)
        cand_hi = min(hi + factor * spread, TAU_BRACKET.hi)
        try:
            ok_lo = cand_lo == TAU_BRACKET.lo or _phi_on_segment(box, cand_lo).hi < 0.0
            ok_hi = cand_hi == TAU_BRACKET.hi or _phi_on_segment(box, cand_hi).lo > 0.0
        except _SOFT_ERRORS:
            continue
        if ok_lo and ok_hi:
            found = Interval(cand_lo, cand_hi)
            if found.lo > 0.0:
                return _tighten(found, _refine_tau_in_p(box, found, tol))
            return found
    return None


def _tau_box_newton(box: Box, tol: float) -> Optional[Interval]:
    """Tau range over a small box by one interval Newton step with inflation.

    With ``tm`` the tau value at the box centre and a candidate ``X``, the
    step ``N = tm - Phi(box, tm) / Phi_tau(box, X)`` contains every root
    lying in ``X``.  ``N`` inside ``X`` additionally proves that each point
    of the box has a root in ``X`` (Phi is strictly increasing in tau, see
    :func:`_tau_segment`), so the range of tau is inside ``N``.
    ``Phi(box, tm)`` is taken in mean-value form around the centre.
    """
    mid = box.midpoint
    try:
        tm = _tau_cached(mid, tol).tau
        if tm.lo <= 0.0:
            return None
        t = Interval(tm.mid)
        pj, sj = _seed(box, (1, 1))
        grad = _phi_generic(pj, sj, Jet.constant(t, (1, 1)))
        phi = _phi_generic(mid.p, mid.sigma, t) + grad[1, 0] * (box.sigma - mid.sigma.lo) + grad[0, 1] * (box.p - mid.p.lo)
        p, inv_p = box.p, 1.0 / box.p
        a0 = ipow(1.0 + ipow(box.sigma, p), -inv_p)
        s_a0 = box.sigma * a0
        r = max(abs(phi.lo), abs(phi.hi)) * 2.0 + 1e-15
        for _ in range(4):
            x = Interval(max(t.lo - r, 0.0), min(t.hi + r, TAU_BRACKET.hi))
            dphi = _phi_tau_lean(p, s_a0, x, a0, inv_p)
            if dphi.lo <= 0.0:
                return None
            n = t - phi / dphi
            if x.lo < n.lo and n.hi < x.hi:
                return n
            r *= 4.0
    except _SOFT_ERRORS:
        return None
    return None


def _tau_iterate(box: Box, tol: float) -> tuple[Interval, int, bool]:
    p, s = box.p, box.sigma
    _check_tau_p_bracket(p)
    inv_p = 1.0 / p
    a0 = ipow(1.0 + ipow(s, p), -inv_p)
    s_a0 = s * a0
    x = TAU_BRACKET
    converged = False
    it = 0
    for it in range(1, N_MAX + 1):
        y = x
        try:
            y = intersect(y, _tau_fixed_point_step(x, p, a0, s_a0, inv_p))
        except DomainError:
            pass
        if y is None:
            raise InconsistencyError(f"tau iteration emptied on {box!r}")
        try:
            m = Interval(y.mid)
            dphi = _phi_tau_lean(p, s_a0, y, a0, inv_p)
            if dphi.lo > 0.0:
                newton = m - _phi_generic(p, s, m) / dphi
                y = intersect(y, newton)
        except DomainError:
            pass
        if y is None:
            raise InconsistencyError(f"tau Newton step emptied on {box!r}")
        gain = x.width - y.width
        x = y
        if gain < tol:
            converged = True
            break
    return x, it, converged


def _refine_tau_in_p(box: Box, coarse: Interval, tol: float) -> Optional[Interval]:
    """Sharper tau range along a p-segment at fixed sigma.

    If the jet enclosure of tau_p has a strict sign the range is spanned by
    the two end values; otherwise the mean-value form is used.
    """
    try:
        _, _, tj = _tau_jet(box, coarse, (0, 1))
        d_p = tj[0, 1]
        if not d_p.contains_zero():
            ends = (_tau_cached(Box(Interval(box.p.lo), box.sigma), tol).tau,
                    _tau_cached(Box(Interval(box.p.hi), box.sigma), tol).tau)
            return Interval(min(e.lo for e in ends), max(e.hi for e in ends))
        mid = Box(Interval(box.p.mid), box.sigma)
        return _tau_cached(mid, tol).tau + d_p * (box.p - box.p.mid)
    except _SOFT_ERRORS:
        return None


def tau_enclose(box: Box, tol: float = DEFAULT_TOL) -> TauEnclosure:
    """Enclosure of ``tau(p, sigma)`` valid for every admissible point of ``box``.

    Starts from ``[0, 0.36]`` and repeatedly intersects with the interval
    fixed-point map

        t -> (1 + t^p)^(1/p) * ((1 - (b0(t) - a0)^p)^(1/p) - sigma*a0)

    and an interval Newton step on ``Phi``.  Stops when an iteration gains
    less than ``tol`` in width, or after 100 iterations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _tau_cached(box, tol)


def atoms(box: Box, tau: Interval) -> CohnAtoms:
    """Interval enclosures of the atoms on ``box`` given a tau enclosure."""
    return _atoms_generic(box.p, box.sigma, tau)


# ---------------------------------------------------------------------------
# Delta and its derivatives


def _delta_natural(box: Box, tau: Interval) -> Interval:
    inv_p = 1.0 / box.p
    a0 = ipow(1.0 + ipow(box.sigma, box.p), -inv_p)
    b0 = ipow(1.0 + ipow(tau, box.p), -inv_p)
    return (tau + box.sigma) * a0 * b0


def _seed(box: Box, shape: tuple[int, int]) -> tuple[Jet, Jet]:
    return Jet.variable(box.p, 1, shape), Jet.variable(box.sigma, 0, shape)


def _tau_jet(box: Box, tau: Interval, shape: tuple[int, int], tau_zero: bool = False) -> tuple[Jet, Jet, Jet]:
    """Jets of (p, sigma, tau) on ``box`` with tau's coefficients by implicit differentiation."""
    pj, sj = _seed(box, shape)
    dphi = _phi_tau(box.p, _atoms_generic(box.p, box.sigma, tau, tau_zero, n=2))
    if dphi.contains_zero():
        raise SingularityError(f"Phi_tau encloses zero on {box!r}")
    tj = Jet.constant(tau, shape)
    _, _, _, by_degree = _layout(shape)
    for d in range(1, shape[0] + shape[1] + 1):
        phi = _phi_generic(pj, sj, tj, tau_zero)
        for k in by_degree.get(d, ()):
            tj.c[k] = -(phi.c[k] / dphi)
    return pj, sj, tj


def _delta_jet(box: Box, tau: Interval, shape: tuple[int, int], tau_zero: bool = False) -> Jet:
    pj, sj, tj = _tau_jet(box, tau, shape, tau_zero)
    at = _atoms_generic(pj, sj, tj, tau_zero, n=1)
    return (tj + sj) * at.a[0] * at.b[0]


def _g_jet(box: Box, tau: Interval, shape: tuple[int, int]) -> Jet:
    pj, sj, tj = _tau_jet(box, tau, shape)
    at = _atoms_generic(pj, sj, tj, n=2)
    return _g_generic(at, sj, tj)


def _tau(box: Box) -> Interval:
    return tau_enclose(box).tau


@lru_cache(maxsize=8192)
def _delta_value(box: Box) -> Interval:
    return _delta_natural(box, _tau(box))


@lru_cache(maxsize=8192)
def _delta_jet_on(box: Box, shape: tuple[int, int]) -> Jet:
    return _delta_jet(box, _tau(box), shape)


def delta_enclose(box: Box) -> Interval:
    """Enclosure of ``Delta(p, sigma)`` over the box.

    The natural interval extension is tightened by mean-value and Taylor
    forms and, where a partial derivative has a certified sign, by
    monotonicity.
    """
    return _range(box, _delta_value, _delta_jet_on)


def derivatives_enclose(box: Box) -> DerivativeSet:
    """Enclosures of Delta and its partials d_sigma, d_sigma2, d_p, d_sigma_p, d_sigma2_p."""
    tau = _tau(box)
    jet = _delta_jet(box, tau, (2, 1))
    return DerivativeSet(
        delta=_tighten(_delta_natural(box, tau), jet.value),
        d_sigma=jet.derivative(1, 0),
        d_sigma2=jet.derivative(2, 0),
        d_p=jet.derivative(0, 1),
        d_sigma_p=jet.derivative(1, 1),
        d_sigma2_p=jet.derivative(2, 1),
    )


def _d_sigma_value(box: Box) -> Interval:
    return _delta_jet_on(box, (1, 0)).derivative(1, 0)


def _d_sigma_jet_on(box: Box, shape: tuple[int, int]) -> Jet:
    return sigma_derivative(_delta_jet_on(box, (shape[0] + 1, shape[1])))


def d_sigma_enclose(box: Box) -> Interval:
    """Range of ``Delta_sigma`` over the box."""
    return _range(box, _d_sigma_value, _d_sigma_jet_on)


def d_sigma2_enclose(box: Box) -> Interval:
    return derivatives_enclose(box).d_sigma2


@lru_cache(maxsize=8192)
def _g_value(box: Box) -> Interval:
    tau = _tau(box)
    return _g_generic(_atoms_generic(box.p, box.sigma, tau, n=2), box.sigma, tau)


@lru_cache(maxsize=8192)
def _g_jet_on(box: Box, shape: tuple[int, int]) -> Jet:
    return _g_jet(box, _tau(box), shape)


def g_enclose(box: Box) -> Interval:
    """Enclosure of ``g = D * Delta_sigma`` (same sign as ``Delta_sigma``)."""
    return _range(box, _g_value, _g_jet_on)


def _h_value(box: Box) -> Interval:
    return _g_jet_on(box, (1, 0))[1, 0]


def _h_jet_on(box: Box, shape: tuple[int, int]) -> Jet:
    return sigma_derivative(_g_jet_on(box, (shape[0] + 1, shape[1])))


def h_enclose(box: Box) -> Interval:
    """Enclosure of ``h = dg/dsigma``."""
    return _range(box, _h_value, _h_jet_on)


def _delta_at_sigma1(p: Interval) -> Interval:
    tp = tau_p_enclose(p).tau
    return ipow(Interval(2.0), -2.0 / p) * (1.0 + tp) / (1.0 - tp)


def delta_endpoints(p: Interval) -> tuple[Interval, Interval]:
    """``(Delta(p, 1), Delta(p, sigma_p))`` from their closed forms.

    ``Delta(p, 1)`` is also enclosed through the general route on the box
    ``p x [1, 1]``; the two must overlap and their intersection is returned.
    """
    if p.lo <= 1.0:
        raise InvalidRegion(f"p must exceed 1 (got {p.lo!r})")
    closed = _delta_at_sigma1(p)
    general = delta_enclose(Box(p, Interval(1.0)))
    both = intersect(closed, general)
    if both is None:
        raise InconsistencyError(f"Delta(p, 1) closed form {closed!r} disagrees with {general!r}")
    return both, sigma_p(p) * 0.5


def _l0_value(box: Box) -> Interval:
    return _delta_value(box) - delta_endpoints(box.p)[0]


def _l0_jet_on(box: Box, shape: tuple[int, int]) -> Jet:
    edge = Box(box.p, Interval(1.0))
    edge_jet = _delta_jet_on(edge, (0, shape[1]))
    return _delta_jet_on(box, shape) - embed_p(edge_jet, shape)


def l0_enclose(box: Box) -> Interval:
    """Enclosure of ``Delta(p, sigma) - Delta(p, 1)``."""
    return _range(box, _l0_value, _l0_jet_on)


def _sigma_p_jet(p: Interval, order: int = 1) -> Jet:
    pj = Jet.variable(p, 1, (0, order))
    return jpow(jpow(Interval(2.0), pj) - 1.0, 1.0 / pj)


def _l1_value(box: Box) -> Interval:
    return _delta_value(box) - sigma_p(box.p) * 0.5


def _l1_jet_on(box: Box, shape: tuple[int, int]) -> Jet:
    return _delta_jet_on(box, shape) - embed_p(_sigma_p_jet(box.p, shape[1]), shape) * 0.5


def l1_enclose(box: Box) -> Interval:
    """Enclosure of ``Delta(p, sigma) - sigma_p / 2``."""
    return _range(box, _l1_value, _l1_jet_on)


def minkowski_constant(p: Interval) -> Interval:
    """Enclosure of ``c(p) = Delta(D_p)^(-p/2)``.

    Conditional on the Minkowski conjecture: ``Delta(D_p)`` is taken to be
    ``min(Delta(p, 1), Delta(p, sigma_p))``.
    """
    d1, d2 = delta_endpoints(p)
    smallest = Interval(min(d1.lo, d2.lo), min(d1.hi, d2.hi))
    return ipow(smallest, -(p * 0.5))


def d_sigma2_at_sigma1(p: Interval) -> Interval:
    """``Delta_sigma_sigma`` along the edge sigma = 1."""
    box = Box(p, Interval(1.0))
    return _delta_jet(box, _tau(box), (2, 0)).derivative(2, 0)


def d_sigma2_at_sigmap(p: Interval) -> Interval:
    """One-sided ``Delta_sigma_sigma`` along the edge sigma = sigma_p, where tau = 0.

    Requires p > 2 so that the tau^(p-2) terms vanish on the edge.
    """
    box = Box(p, sigma_p(p))
    return _delta_jet(box, Interval(0.0), (2, 0), tau_zero=True).derivative(2, 0)


def clear_caches() -> None:
    """Drop memoized enclosures (they are pure, so this only affects speed)."""
    for fn in (_sigma_p_cached, _tau_p_cached, _tau_cached, _delta_value, _delta_jet_on, _g_value, _g_jet_on):
        fn.cache_clear()
