"""Closed real intervals with outward rounding.

Endpoints are ordinary IEEE doubles.  Python gives no access to the FPU
rounding mode, so every inexact result is pushed outward with
``math.nextafter``:

* ``+ - * /`` are correctly rounded, so one ULP per endpoint suffices.
  Sums carry their exact rounding error (Knuth's TwoSum), so an endpoint
  moves only when the rounding went the wrong way; products by an exact
  zero are not widened.
* ``exp``, ``log`` and ``pow`` rely on the platform libm being faithful to
  within one ULP; endpoints are moved two ULPs outward to leave one ULP of
  slack on top of that.

Containment is the contract; tightness is best effort.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .errors import DomainError

__all__ = [
    "Interval",
    "MonotoneDescriptor",
    "hull",
    "intersect",
    "width",
    "midpoint",
    "exp",
    "log",
    "ipow",
    "monotone_eval",
    "rational_eval",
]

_NEG_INF = -math.inf
_POS_INF = math.inf
_ELEM_ULPS = 2
_new = object.__new__
_nextafter = math.nextafter
_mpow = math.pow

Number = Union[int, float]


def _dn(x: float) -> float:
    return math.nextafter(x, _NEG_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _POS_INF)


def _dn_n(x: float, n: int) -> float:
    for _ in range(n):
        x = math.nextafter(x, _NEG_INF)
    return x


def _up_n(x: float, n: int) -> float:
    for _ in range(n):
        x = math.nextafter(x, _POS_INF)
    return x


def _two_sum_err(a: float, b: float, s: float) -> float:
    """Rounding error of ``s = fl(a + b)``: the exact sum is ``s + err``."""
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _sum_dn(a: float, b: float) -> float:
    s = a + b
    if a == 0.0 or b == 0.0 or _two_sum_err(a, b, s) >= 0.0:
        return s
    return _dn(s)


def _sum_up(a: float, b: float) -> float:
    s = a + b
    if a == 0.0 or b == 0.0 or _two_sum_err(a, b, s) <= 0.0:
        return s
    return _up(s)


def _prod_bounds(a: float, b: float) -> tuple[float, float]:
    p = a * b
    if a == 0.0 or b == 0.0:
        return p, p
    return _dn(p), _up(p)


class Interval:
    """Closed interval ``[lo, hi]`` of reals with finite float endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Number, hi: Optional[Number] = None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError(f"non-finite interval endpoint: [{lo}, {hi}]")
        if lo > hi:
            raise ValueError(f"empty interval: lo={lo!r} > hi={hi!r}")
        # normalise -0.0 so that serialisation is stable
        self.lo = lo + 0.0
        self.hi = hi + 0.0

    @classmethod
    def _raw(cls, lo: float, hi: float) -> "Interval":
        obj = _new(cls)
        if not (_NEG_INF < lo and hi < _POS_INF):
            raise DomainError(f"overflow in interval operation: [{lo}, {hi}]")
        obj.lo = lo + 0.0
        obj.hi = hi + 0.0
        return obj

    # -- basic queries ---------------------------------------------------

    @property
    def width(self) -> float:
        """Upper bound on ``hi - lo``."""
        return _sum_up(self.hi, -self.lo)

    @property
    def mid(self) -> float:
        m = 0.5 * self.lo + 0.5 * self.hi
        return min(max(m, self.lo), self.hi)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: Union[Number, "Interval"]) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    __contains__ = contains

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def to_tuple(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    # -- arithmetic ------------------------------------------------------

    def __neg__(self) -> "Interval":
        return Interval._raw(-self.hi, -self.lo)

    def __pos__(self) -> "Interval":
        return self

    def __add__(self, other) -> "Interval":
        o = other if type(other) is Interval else _coerce(other)
        if o is None:
            return NotImplemented
        return Interval._raw(_sum_dn(self.lo, o.lo), _sum_up(self.hi, o.hi))

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        o = other if type(other) is Interval else _coerce(other)
        if o is None:
            return NotImplemented
        return Interval._raw(_sum_dn(self.lo, -o.hi), _sum_up(self.hi, -o.lo))

    def __rsub__(self, other) -> "Interval":
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other) -> "Interval":
        o = other if type(other) is Interval else _coerce(other)
        if o is None:
            return NotImplemented
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        if (a == 0.0 and b == 0.0) or (c == 0.0 and d == 0.0):
            return Interval._raw(0.0, 0.0)
        if a >= 0.0 and c >= 0.0:
            # all products are non-negative; zero products are exact
            lo = a * c
            hi = b * d
            if lo != 0.0:
                lo = _nextafter(lo, _NEG_INF)
            if hi != 0.0 or (b != 0.0 and d != 0.0):
                hi = _nextafter(hi, _POS_INF)
            return Interval._raw(lo, hi)
        ac, ad, bc, bd = a * c, a * d, b * c, b * d
        lo = min(ac, ad, bc, bd)
        hi = max(ac, ad, bc, bd)
        # one ULP outward on the extreme rounded products encloses the extreme
        # exact ones; a zero bound is kept when the signs force it
        if lo != 0.0 or not (b <= 0.0 and d <= 0.0):
            lo = _nextafter(lo, _NEG_INF)
        if hi != 0.0 or not ((a >= 0.0 and d <= 0.0) or (b <= 0.0 and c >= 0.0)):
            hi = _nextafter(hi, _POS_INF)
        return Interval._raw(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        o = other if type(other) is Interval else _coerce(other)
        if o is None:
            return NotImplemented
        c, d = o.lo, o.hi
        if c <= 0.0 <= d:
            raise DomainError(f"division by an interval containing zero: {o!r}")
        a, b = self.lo, self.hi
        if a == b and c == d:
            q = a / c
            if a == 0.0:
                return Interval._raw(q, q)
            return Interval._raw(_nextafter(q, _NEG_INF), _nextafter(q, _POS_INF))
        qs = (a / c, a / d, b / c, b / d)
        lo = min(qs)
        hi = max(qs)
        if lo != 0.0 or not ((a >= 0.0 and c > 0.0) or (b <= 0.0 and d < 0.0)):
            lo = _nextafter(lo, _NEG_INF)
        if hi != 0.0 or not ((b <= 0.0 and c > 0.0) or (a >= 0.0 and d < 0.0)):
            hi = _nextafter(hi, _POS_INF)
        return Interval._raw(lo, hi)

    def __rtruediv__(self, other) -> "Interval":
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, other) -> "Interval":
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return ipow(self, o)

    def __rpow__(self, other) -> "Interval":
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return ipow(o, self)

    # -- elementary functions --------------------------------------------

    def exp(self) -> "Interval":
        return exp(self)

    def log(self) -> "Interval":
        return log(self)

    def sqr(self) -> "Interval":
        """Square with the dependency between factors taken into account."""
        if self.lo >= 0.0:
            return self * self
        if self.hi <= 0.0:
            return (-self) * (-self)
        m = max(-self.lo, self.hi)
        _, hi = _prod_bounds(m, m)
        return Interval._raw(0.0, hi)


def _coerce(x) -> Optional[Interval]:
    if type(x) is Interval:
        return x
    if isinstance(x, (int, float)):
        x = float(x)
        if _NEG_INF < x < _POS_INF:
            return Interval._raw(x, x)
        raise DomainError(f"non-finite interval endpoint: {x}")
    if isinstance(x, Interval):
        return x
    return None


def as_interval(x) -> Interval:
    """Promote a number or a ``(lo, hi)`` pair to an :class:`Interval`."""
    if isinstance(x, Interval):
        return x
    if isinstance(x, (tuple, list)):
        return Interval(*x)
    return Interval(x)


def hull(a: Interval, b: Interval) -> Interval:
    return Interval._raw(min(a.lo, b.lo), max(a.hi, b.hi))


def intersect(a: Interval, b: Interval) -> Optional[Interval]:
    """Set intersection; ``None`` stands for the empty set."""
    lo = max(a.lo, b.lo)
    hi = min(a.hi, b.hi)
    if lo > hi:
        return None
    return Interval._raw(lo, hi)


def width(a: Interval) -> float:
    return a.width


def midpoint(a: Interval) -> float:
    return a.mid


def exp(x: Interval) -> Interval:
    try:
        lo = math.exp(x.lo)
        hi = math.exp(x.hi)
    except OverflowError as exc:
        raise DomainError(f"exp overflow on {x!r}") from exc
    return Interval._raw(max(_dn_n(lo, _ELEM_ULPS), 0.0), _up_n(hi, _ELEM_ULPS))


def log(x: Interval) -> Interval:
    if x.lo <= 0.0:
        raise DomainError(f"log of an interval reaching zero or below: {x!r}")
    return Interval._raw(_dn_n(math.log(x.lo), _ELEM_ULPS), _up_n(math.log(x.hi), _ELEM_ULPS))


def ipow(x: Interval, y: Interval) -> Interval:
    """Enclosure of ``{u**v : u in x, v in y}`` for non-negative bases.

    ``u**v`` is monotone in each argument separately on any box with
    ``u > 0``, so its range is attained at the corners.  A base touching zero
    is allowed when every exponent is positive (``0**v = 0``).
    """
    x = x if type(x) is Interval else _coerce(x)
    y = y if type(y) is Interval else _coerce(y)
    xl, xh, yl, yh = x.lo, x.hi, y.lo, y.hi
    if xl < 0.0 or (xl == 0.0 and yl <= 0.0):
        raise DomainError(f"pow outside its domain: base {x!r}, exponent {y!r}")
    us = (xl,) if xl == xh else (xl, xh)
    vs = (yl,) if yl == yh else (yl, yh)
    lo = _POS_INF
    hi = _NEG_INF
    for u in us:
        for v in vs:
            if u == 0.0:
                lo = 0.0
                if hi < 0.0:
                    hi = 0.0
                continue
            try:
                r = _mpow(u, v)
            except OverflowError as exc:
                raise DomainError(f"pow overflow: {u!r}**{v!r}") from exc
            if r < lo:
                lo = r
            if r > hi:
                hi = r
    if lo != 0.0 or xl > 0.0:
        lo = _nextafter(_nextafter(lo, _NEG_INF), _NEG_INF)
        if lo < 0.0:
            lo = 0.0
    hi = _nextafter(_nextafter(hi, _POS_INF), _POS_INF)
    return Interval._raw(lo, hi)


@dataclass(frozen=True)
class MonotoneDescriptor:
    """A function of two variables monotone in each, with known directions.

    ``evaluator`` takes two degenerate intervals and returns an interval
    enclosing the function value at that point.
    """

    evaluator: Callable[[Interval, Interval], Interval]
    sign_x: int = 1
    sign_y: int = 1

    def __post_init__(self):
        if self.sign_x not in (1, -1) or self.sign_y not in (1, -1):
            raise ValueError("monotonicity signs must be +1 or -1")


def monotone_eval(f: MonotoneDescriptor, x: Interval, y: Optional[Interval] = None) -> Interval:
    """Optimal (up to rounding) range enclosure of a bi-monotone function.

    The minimum sits at the corner picked by the declared signs and the
    maximum at the opposite corner; only those two points are evaluated.
    """
    if y is None:
        y = Interval(0.0)
    x_min, x_max = (x.lo, x.hi) if f.sign_x > 0 else (x.hi, x.lo)
    y_min, y_max = (y.lo, y.hi) if f.sign_y > 0 else (y.hi, y.lo)
    at_min = as_interval(f.evaluator(Interval(x_min), Interval(y_min)))
    at_max = as_interval(f.evaluator(Interval(x_max), Interval(y_max)))
    if at_min.lo > at_max.hi:
        raise DomainError("declared monotonicity contradicted by corner values")
    return Interval._raw(at_min.lo, at_max.hi)


def rational_eval(r: Callable[[Interval, Interval], Interval], x: Interval, y: Interval) -> Interval:
    """Natural interval extension of an expression built from ``+ - * /``.

    ``r`` is written with ordinary operators and is called once on the
    interval arguments.  A divisor enclosure containing zero raises
    :class:`DomainError`.
    """
    return as_interval(r(x, y))
