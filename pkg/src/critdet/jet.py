"""Truncated bivariate Taylor jets with interval coefficients.

A :class:`Jet` of shape ``(ns, np)`` stores the Taylor coefficients
``c[i, j] = d^(i+j) f / (d sigma^i d p^j) / (i! j!)`` for ``i <= ns`` and
``j <= np``.  Every coefficient is an :class:`~critdet.interval.Interval`
that encloses the corresponding coefficient at *every* point of the box the
jet was seeded on, so a jet is forward-mode automatic differentiation in
interval arithmetic.

Truncation is to the rectangle ``i <= ns, j <= np`` (the quotient by
``sigma^(ns+1)`` and ``p^(np+1)``), which is closed under multiplication.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Union

from .errors import DomainError
from .interval import Interval, exp as iexp, ipow, log as ilog

Scalar = Union[int, float, Interval]


@lru_cache(maxsize=None)
def _layout(shape: tuple[int, int]):
    ns, np_ = shape
    idx = [(i, j) for i in range(ns + 1) for j in range(np_ + 1)]
    flat = {m: k for k, m in enumerate(idx)}
    conv = []
    for (i, j) in idx:
        terms = []
        for (a, b) in idx:
            if a <= i and b <= j:
                terms.append((flat[(a, b)], flat[(i - a, j - b)]))
        conv.append(tuple(terms))
    by_degree: dict[int, list[int]] = {}
    for k, (i, j) in enumerate(idx):
        by_degree.setdefault(i + j, []).append(k)
    return tuple(idx), flat, tuple(conv), {d: tuple(v) for d, v in by_degree.items()}


_ZERO = Interval(0.0)


class Jet:
    __slots__ = ("c", "shape")

    def __init__(self, coeffs, shape: tuple[int, int]):
        self.c = list(coeffs)
        self.shape = shape

    # -- construction ----------------------------------------------------

    @classmethod
    def constant(cls, value: Scalar, shape: tuple[int, int]) -> "Jet":
        idx, _, _, _ = _layout(shape)
        c = [_ZERO] * len(idx)
        c[0] = value if isinstance(value, Interval) else Interval(value)
        return cls(c, shape)

    @classmethod
    def variable(cls, value: Interval, axis: int, shape: tuple[int, int]) -> "Jet":
        """Independent variable: axis 0 is sigma, axis 1 is p."""
        jet = cls.constant(value, shape)
        if shape[axis] >= 1:
            _, flat, _, _ = _layout(shape)
            jet.c[flat[(1, 0) if axis == 0 else (0, 1)]] = Interval(1.0)
        return jet

    # -- access ----------------------------------------------------------

    @property
    def value(self) -> Interval:
        return self.c[0]

    @property
    def order(self) -> int:
        return self.shape[0] + self.shape[1]

    def __getitem__(self, m: tuple[int, int]) -> Interval:
        _, flat, _, _ = _layout(self.shape)
        return self.c[flat[m]]

    def derivative(self, i: int, j: int) -> Interval:
        """Enclosure of the partial derivative d^(i+j)/(d sigma^i d p^j)."""
        return self[i, j] * float(math.factorial(i) * math.factorial(j))

    def __repr__(self) -> str:
        idx, _, _, _ = _layout(self.shape)
        body = ", ".join(f"{m}: [{v.lo:.6g}, {v.hi:.6g}]" for m, v in zip(idx, self.c))
        return f"Jet({{{body}}})"

    # -- arithmetic ------------------------------------------------------

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.shape != self.shape:
                raise ValueError("jet shapes differ")
            return other
        if isinstance(other, (int, float, Interval)):
            return Jet.constant(other, self.shape)
        return NotImplemented

    def __neg__(self) -> "Jet":
        return Jet([-x for x in self.c], self.shape)

    def __add__(self, other) -> "Jet":
        if isinstance(other, (int, float, Interval)):
            c = list(self.c)
            c[0] = c[0] + other
            return Jet(c, self.shape)
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Jet([x + y for x, y in zip(self.c, o.c)], self.shape)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, (int, float, Interval)):
            return Jet([x * other for x in self.c], self.shape)
        o = self._lift(other)
        if o is NotImplemented:
            return o
        _, _, conv, _ = _layout(self.shape)
        a, b = self.c, o.c
        nz_a = [x.lo != 0.0 or x.hi != 0.0 for x in a]
        nz_b = [x.lo != 0.0 or x.hi != 0.0 for x in b]
        out = []
        for terms in conv:
            acc = None
            for ka, kb in terms:
                if nz_a[ka] and nz_b[kb]:
                    t = a[ka] * b[kb]
                    acc = t if acc is None else acc + t
            out.append(_ZERO if acc is None else acc)
        return Jet(out, self.shape)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, (int, float, Interval)):
            return Jet([x / other for x in self.c], self.shape)
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self * o.reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self._lift(other) * self.reciprocal()

    def __pow__(self, other) -> "Jet":
        return jpow(self, other)

    def __rpow__(self, other) -> "Jet":
        return jpow(self._lift(other), self)

    # -- composition -----------------------------------------------------

    def _compose(self, derivs: list[Interval]) -> "Jet":
        """phi(self) given ``derivs[n] = phi^(n)(value) / n!`` for n <= order.

        ``self - value`` is nilpotent of index ``order + 1``, so the Taylor
        series of phi terminates exactly.
        """
        delta = Jet([_ZERO] + self.c[1:], self.shape)
        result = Jet.constant(derivs[-1], self.shape)
        for d in reversed(derivs[:-1]):
            result = result * delta + d
        return result

    def exp(self) -> "Jet":
        e = iexp(self.value)
        return self._compose([e / float(math.factorial(n)) for n in range(self.order + 1)])

    def log(self) -> "Jet":
        u = self.value
        if u.lo <= 0.0:
            raise DomainError(f"log of a jet whose value reaches zero: {u!r}")
        derivs = [ilog(u)]
        inv = 1.0 / u
        power = inv
        for n in range(1, self.order + 1):
            sign = 1.0 if n % 2 == 1 else -1.0
            derivs.append(power * (sign / n))
            power = power * inv
        return self._compose(derivs)

    def reciprocal(self) -> "Jet":
        u = self.value
        if u.contains_zero():
            raise DomainError(f"reciprocal of a jet whose value contains zero: {u!r}")
        inv = 1.0 / u
        derivs = []
        power = inv
        for n in range(self.order + 1):
            derivs.append(power if n % 2 == 0 else -power)
            power = power * inv
        return self._compose(derivs)


def jpow(base, exponent) -> Union[Jet, Interval]:
    """``base ** exponent`` for jets and/or intervals (positive base)."""
    if not isinstance(base, Jet) and not isinstance(exponent, Jet):
        return ipow(base, exponent)
    shape = base.shape if isinstance(base, Jet) else exponent.shape
    if not isinstance(base, Jet):
        base = Jet.constant(base, shape)
    if not isinstance(exponent, Jet):
        b = base.value
        if b.lo <= 0.0:
            raise DomainError(f"jet pow with base reaching zero: {b!r}")
        # constant exponent: use the power rule directly, it is tighter
        e = exponent if isinstance(exponent, Interval) else Interval(exponent)
        # n-th coefficient: binom(e, n) * b**(e - n)
        derivs = [ipow(b, e)]
        coef = Interval(1.0)
        for n in range(1, base.order + 1):
            coef = coef * (e - float(n - 1)) / float(n)
            derivs.append(coef * ipow(b, e - float(n)))
        return base._compose(derivs)
    return (exponent * base.log()).exp()


def zero_power(exponent, shape: tuple[int, int]) -> Union[Jet, Interval]:
    """Jet of ``t**e`` along a curve where ``t`` vanishes identically.

    Every Taylor coefficient of ``t**e`` up to total order ``k`` is a sum of
    terms ``t**(e - m) * log(t)**r`` with ``m <= k``; all of them tend to zero
    when ``e > k``.
    """
    e = exponent.value if isinstance(exponent, Jet) else exponent
    e = e if isinstance(e, Interval) else Interval(e)
    k = shape[0] + shape[1] if shape is not None else 0
    if e.lo <= k:
        raise DomainError(f"t**e with t = 0 is not {k} times differentiable for e = {e!r}")
    if shape is None:
        return Interval(0.0)
    return Jet.constant(0.0, shape)


def sigma_derivative(jet: Jet) -> Jet:
    """Jet of ``d/dsigma`` of ``jet``; the sigma order drops by one."""
    ns, np_ = jet.shape
    if ns < 1:
        raise ValueError("jet has no sigma order to differentiate")
    shape = (ns - 1, np_)
    idx, _, _, _ = _layout(shape)
    return Jet([jet[i + 1, j] * float(i + 1) for (i, j) in idx], shape)


def embed_p(jet: Jet, shape: tuple[int, int]) -> Jet:
    """Promote a jet in p alone (shape ``(0, n)``) to ``shape``; sigma terms are zero."""
    if jet.shape[0] != 0 or jet.shape[1] < shape[1]:
        raise ValueError(f"cannot embed a jet of shape {jet.shape} into {shape}")
    idx, _, _, _ = _layout(shape)
    return Jet([jet[0, j] if i == 0 else _ZERO for (i, j) in idx], shape)
