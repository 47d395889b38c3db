"""Adaptive box covering for sign claims, MAS checks and root brackets.

A claim "f has sign s on region R" is checked breadth first: every box of
the current level is enclosed, boxes whose enclosure clears the claimed sign
are proven, a box whose enclosure lies strictly on the wrong side refutes the
claim, and the rest are bisected.  Levels are processed in canonical box
order, so the outcome does not depend on how many workers evaluate a level.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from . import cohn
from .cohn import Box, sigma_p
from .errors import DomainError, InconsistencyError, InvalidRegion, SingularityError
from .interval import Interval

__all__ = [
    "FUNCTIONS",
    "SIGNS",
    "ROOT_FUNCTIONS",
    "VANISH_AT_2",
    "SignClaim",
    "BoxRecord",
    "SignCertificate",
    "ReplayReport",
    "VerifyConfig",
    "SignEvidence",
    "RootEnclosure",
    "NoRootEvidence",
    "prove_sign",
    "replay",
    "decide",
    "mas_sigma_range",
    "verify_mas_part",
    "enclose_root",
    "combined_status",
]

FUNCTIONS: dict[str, Callable[[Box], Interval]] = {
    "g": cohn.g_enclose,
    "h": cohn.h_enclose,
    "l0": cohn.l0_enclose,
    "l1": cohn.l1_enclose,
    "d_sigma": cohn.d_sigma_enclose,
    "d_sigma2": cohn.d_sigma2_enclose,
    "delta": cohn.delta_enclose,
}

# Every function above except delta vanishes identically on p = 2.
VANISH_AT_2 = frozenset({"g", "h", "l0", "l1", "d_sigma", "d_sigma2"})

SIGNS = ("positive", "negative", "contains")

ROOT_FUNCTIONS: dict[str, tuple[str, Callable[[Interval], Interval]]] = {
    "d_sigma2_at_sigma1": ("sigma = 1", cohn.d_sigma2_at_sigma1),
    "d_sigma2_at_sigmap": ("sigma = sigma_p", cohn.d_sigma2_at_sigmap),
}

_SOFT = (DomainError, SingularityError, InconsistencyError)


@dataclass(frozen=True)
class SignClaim:
    """``function_id`` has ``sign`` on ``region``.

    For ``sign == "contains"`` the claim is that every enclosure contains
    ``value`` and is at most ``tolerance`` wide (a constancy check).
    """

    function_id: str
    sign: str
    region: Box
    margin: float = 0.0
    value: Optional[float] = None
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.function_id not in FUNCTIONS:
            raise ValueError(f"unknown function id {self.function_id!r}; expected one of {sorted(FUNCTIONS)}")
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be one of {SIGNS}, got {self.sign!r}")
        if not self.margin >= 0.0:
            raise ValueError("margin must be non-negative")
        if self.sign == "contains":
            if self.value is None:
                raise ValueError("a 'contains' claim needs a value")
            if not self.tolerance > 0.0:
                raise ValueError("tolerance must be positive")
        if not isinstance(self.region, Box):
            raise InvalidRegion("region must be a Box")

    @property
    def strict(self) -> bool:
        return self.sign != "contains"


@dataclass(frozen=True)
class BoxRecord:
    box: Box
    verdict: str  # proven | refuted | undecided | clipped | unexplored
    depth: int
    enclosure: Optional[Interval] = None
    note: str = ""

    def bound(self, claim: SignClaim) -> Optional[float]:
        """The enclosure endpoint the verdict rests on."""
        if self.enclosure is None:
            return None
        if claim.sign == "positive":
            return self.enclosure.lo
        if claim.sign == "negative":
            return self.enclosure.hi
        return self.enclosure.width


@dataclass
class SignCertificate:
    claim: SignClaim
    status: str
    boxes: list[BoxRecord]
    max_depth_used: int
    evaluations: int
    config: dict = field(default_factory=dict)

    @property
    def proven_boxes(self) -> list[tuple[Box, float]]:
        return [(r.box, r.bound(self.claim)) for r in self.boxes if r.verdict == "proven"]

    @property
    def refuting_box(self) -> Optional[tuple[Box, Interval]]:
        for r in self.boxes:
            if r.verdict == "refuted":
                return r.box, r.enclosure
        return None

    @property
    def undecided_boxes(self) -> list[Box]:
        return [r.box for r in self.boxes if r.verdict == "undecided"]

    def covered_area(self) -> float:
        return math.fsum(r.box.area for r in self.boxes)


@dataclass(frozen=True)
class VerifyConfig:
    max_depth: int = 40
    min_width: float = 1e-6
    margin: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if not self.min_width > 0.0:
            raise ValueError("min_width must be positive")
        if not self.margin >= 0.0:
            raise ValueError("margin must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def public(self) -> dict:
        """Settings that influence the certificate (worker count does not)."""
        return {"max_depth": self.max_depth, "min_width": self.min_width, "margin": self.margin}


# ---------------------------------------------------------------------------
# box covering


def decide(claim: SignClaim, enclosure: Optional[Interval]) -> Optional[str]:
    """Verdict for one enclosure: proven, refuted, or None (split further)."""
    if enclosure is None:
        return None
    if claim.sign == "positive":
        if enclosure.lo > 0.0 and enclosure.lo >= claim.margin:
            return "proven"
        if enclosure.hi < 0.0:
            return "refuted"
        return None
    if claim.sign == "negative":
        if enclosure.hi < 0.0 and -enclosure.hi >= claim.margin:
            return "proven"
        if enclosure.lo > 0.0:
            return "refuted"
        return None
    if claim.value not in enclosure:
        return "refuted"
    if enclosure.width <= claim.tolerance:
        return "proven"
    return None


def _evaluate(job: tuple[str, Box]) -> tuple[Optional[Interval], str]:
    function_id, box = job
    try:
        return FUNCTIONS[function_id](box), ""
    except _SOFT as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _clip(box: Box) -> tuple[Optional[Box], Optional[Box]]:
    """Split ``box`` into the part below the sigma_p ceiling and the part above it."""
    kept = box.clipped()
    if kept is box:
        return box, None
    if kept is None:
        return None, box
    return kept, Box(box.p, Interval(kept.sigma.hi, box.sigma.hi))


def _split_axis(box: Box, region: Box) -> str:
    rel_p = box.p.width / region.p.width if region.p.width > 0.0 else 0.0
    rel_s = box.sigma.width / region.sigma.width if region.sigma.width > 0.0 else 0.0
    return "sigma" if rel_s >= rel_p else "p"


def _status(records: list[BoxRecord]) -> str:
    verdicts = {r.verdict for r in records}
    if "refuted" in verdicts:
        return "refuted"
    if verdicts <= {"proven", "clipped"} and "proven" in verdicts:
        return "proven"
    return "undecided"


def _degenerate(claim: SignClaim) -> bool:
    return claim.strict and claim.function_id in VANISH_AT_2 and 2.0 in claim.region.p


def prove_sign(
    claim: SignClaim,
    max_depth: int = 40,
    min_width: float = 1e-6,
    workers: int = 1,
) -> SignCertificate:
    """Cover ``claim.region`` by boxes and certify the claimed sign on each.

    Boxes above the conservative ``sigma_p`` ceiling are recorded as clipped.
    A box is undecided when its depth reaches ``max_depth`` or its longest
    side drops below ``min_width``.  On refutation the search stops and the
    remaining boxes are recorded as unexplored.
    """
    cfg = VerifyConfig(max_depth=max_depth, min_width=min_width, margin=claim.margin, workers=workers)
    region = claim.region
    if region.clipped() is None:
        raise InvalidRegion(f"region {region!r} lies above sigma = sigma_p(p)")
    if _degenerate(claim):
        # the function vanishes on the whole line p = 2, so a strict sign is unprovable
        rec = BoxRecord(region, "undecided", 0, None, "region contains p = 2")
        return SignCertificate(claim, "undecided", [rec], 0, 0, cfg.public())

    records: list[BoxRecord] = []
    level: list[Box] = []
    kept, above = _clip(region)
    if above is not None:
        records.append(BoxRecord(above, "clipped", 0))
    if kept is not None:
        level.append(kept)
    depth = 0
    evaluations = 0
    max_used = 0
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while level:
            level.sort(key=Box.sort_key)
            jobs = [(claim.function_id, b) for b in level]
            if pool is not None:
                chunk = max(1, len(jobs) // (4 * workers))
                results = list(pool.map(_evaluate, jobs, chunksize=chunk))
            else:
                results = [_evaluate(j) for j in jobs]
            evaluations += len(jobs)
            max_used = depth
            next_level: list[Box] = []
            refuted_at = None
            for k, (box, (enc, note)) in enumerate(zip(level, results)):
                verdict = decide(claim, enc)
                if verdict is not None:
                    records.append(BoxRecord(box, verdict, depth, enc, note))
                    if verdict == "refuted":
                        refuted_at = k
                        break
                    continue
                if depth >= max_depth or max(box.p.width, box.sigma.width) < min_width:
                    records.append(BoxRecord(box, "undecided", depth, enc, note))
                    continue
                for child in box.split(_split_axis(box, region)):
                    c_kept, c_above = _clip(child)
                    if c_above is not None:
                        records.append(BoxRecord(c_above, "clipped", depth + 1))
                    if c_kept is not None:
                        next_level.append(c_kept)
            if refuted_at is not None:
                records.extend(BoxRecord(b, "unexplored", depth) for b in level[refuted_at + 1:])
                records.extend(BoxRecord(b, "unexplored", depth + 1) for b in next_level)
                break
            level = next_level
            depth += 1
    finally:
        if pool is not None:
            pool.shutdown()
    records.sort(key=lambda r: r.box.sort_key())
    return SignCertificate(claim, _status(records), records, max_used, evaluations, cfg.public())


@dataclass(frozen=True)
class ReplayReport:
    ok: bool
    checked: int
    mismatches: list[tuple[Box, str, str]]
    status: str


def replay(certificate: SignCertificate) -> ReplayReport:
    """Re-enclose every evaluated box and compare verdicts with the record.

    Proven and refuted boxes must reproduce their verdict; undecided boxes
    must still be undecided.  The recomputed status must match as well.
    """
    claim = certificate.claim
    mismatches = []
    checked = 0
    for rec in certificate.boxes:
        if rec.verdict in ("clipped", "unexplored"):
            continue
        if rec.verdict == "undecided" and rec.enclosure is None and rec.note == "region contains p = 2":
            if not _degenerate(claim):
                mismatches.append((rec.box, rec.verdict, "not degenerate"))
            checked += 1
            continue
        enc, _ = _evaluate((claim.function_id, rec.box))
        got = decide(claim, enc) or "undecided"
        checked += 1
        if got != rec.verdict:
            mismatches.append((rec.box, rec.verdict, got))
    status = _status(certificate.boxes)
    ok = not mismatches and status == certificate.status
    return ReplayReport(ok, checked, mismatches, status)


def combined_status(certs: list[SignCertificate]) -> str:
    statuses = {c.status for c in certs}
    if "refuted" in statuses:
        return "refuted"
    if statuses == {"proven"}:
        return "proven"
    return "undecided"


# ---------------------------------------------------------------------------
# root brackets


@dataclass(frozen=True)
class SignEvidence:
    p: float
    enclosure: Optional[Interval]
    sign: int  # +1, -1, or 0 when the enclosure straddles zero


@dataclass(frozen=True)
class RootEnclosure:
    function_id: str
    slice: str
    p_bracket: Interval
    left: SignEvidence
    right: SignEvidence
    steps: int


@dataclass(frozen=True)
class NoRootEvidence:
    function_id: str
    slice: str
    p_search: Interval
    left: SignEvidence
    right: SignEvidence
    reason: str


def _sign_at(fn: Callable[[Interval], Interval], p: float) -> SignEvidence:
    try:
        enc = fn(Interval(p))
    except _SOFT:
        return SignEvidence(p, None, 0)
    if enc.lo > 0.0:
        return SignEvidence(p, enc, 1)
    if enc.hi < 0.0:
        return SignEvidence(p, enc, -1)
    return SignEvidence(p, enc, 0)


def enclose_root(
    function_id: str, p_search: Interval, tol: float = 1e-3, max_steps: int = 200
) -> Union[RootEnclosure, NoRootEvidence]:
    """Bisection bracket for a sign change of Delta_sigma_sigma along an edge.

    Every sign used to steer the bisection is certified by an enclosure.  If
    a midpoint sign cannot be certified, nearby points are tried; failing
    that, the current bracket is returned as it stands.
    """
    if function_id not in ROOT_FUNCTIONS:
        raise ValueError(f"unknown root function {function_id!r}; expected one of {sorted(ROOT_FUNCTIONS)}")
    if not p_search.lo > 2.0:
        raise InvalidRegion(f"root search needs p > 2 (got p.lo = {p_search.lo!r})")
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    slice_name, fn = ROOT_FUNCTIONS[function_id]
    left = _sign_at(fn, p_search.lo)
    right = _sign_at(fn, p_search.hi)
    if left.sign == 0 or right.sign == 0:
        return NoRootEvidence(function_id, slice_name, p_search, left, right, "endpoint sign not certified")
    if left.sign == right.sign:
        return NoRootEvidence(function_id, slice_name, p_search, left, right, "same certified sign at both ends")
    steps = 0
    while right.p - left.p > tol and steps < max_steps:
        steps += 1
        span = right.p - left.p
        mid = None
        for offset in (0.0, 0.125, -0.125, 0.25, -0.25):
            q = left.p + span * (0.5 + offset)
            ev = _sign_at(fn, q)
            if ev.sign != 0:
                mid = ev
                break
        if mid is None:
            break
        if mid.sign == left.sign:
            left = mid
        else:
            right = mid
    return RootEnclosure(function_id, slice_name, Interval(left.p, right.p), left, right, steps)


# ---------------------------------------------------------------------------
# MAS parts


def mas_sigma_range(p_lo: float, sigma_margin: float) -> Interval:
    """``[1 + m (s - 1), s - m (s - 1)]`` with ``s`` the lower bound of sigma_p(p_lo)."""
    if not 0.0 <= sigma_margin < 0.5:
        raise ValueError("sigma_margin must lie in [0, 0.5)")
    top = sigma_p(Interval(p_lo)).lo
    span = top - 1.0
    return Interval(1.0 + sigma_margin * span, top - sigma_margin * span)


def _root_bracket(function_id: str) -> Optional[Interval]:
    found = enclose_root(function_id, Interval(2.01, 6.0), 1e-3)
    return found.p_bracket if isinstance(found, RootEnclosure) else None


def verify_mas_part(
    part: int,
    p_range: Interval,
    sigma_margin: float = 0.05,
    config: Optional[VerifyConfig] = None,
) -> list[SignCertificate]:
    """Check one part of the strengthened conjecture on ``p_range``.

    1. g > 0 (Delta increasing in sigma), for p < 2 or p beyond the
       sigma_p-edge root of Delta_sigma_sigma;
    2. g < 0 (Delta decreasing), for 2 < p below the sigma = 1 edge root;
    3. h < 0 on the region, g > 0 on its lower sigma edge and g < 0 on its
       upper sigma edge: a single interior maximum;
    4. Delta equals sqrt(3)/2 throughout, at p = 2.
    """
    cfg = config or VerifyConfig()
    if p_range.lo <= 1.0:
        raise InvalidRegion(f"p must exceed 1 (got {p_range.lo!r})")
    s_range = mas_sigma_range(p_range.lo, sigma_margin)
    region = Box(p_range, s_range)

    def run(claim: SignClaim) -> SignCertificate:
        return prove_sign(claim, cfg.max_depth, cfg.min_width, cfg.workers)

    if part == 1:
        if p_range.lo > 2.0:
            bracket = _root_bracket("d_sigma2_at_sigmap")
            if bracket is not None and p_range.lo < bracket.hi:
                raise InvalidRegion(f"part 1 above p = 2 needs p >= {bracket.hi!r}")
        elif p_range.hi > 2.0:
            raise InvalidRegion("part 1 p-range must lie in (1, 2) or above the sigma_p-edge root")
        return [run(SignClaim("g", "positive", region, cfg.margin))]
    if part == 2:
        if p_range.lo < 2.0:
            raise InvalidRegion("part 2 p-range must start at p >= 2")
        bracket = _root_bracket("d_sigma2_at_sigma1")
        if bracket is not None and p_range.hi > bracket.lo:
            raise InvalidRegion(f"part 2 needs p <= {bracket.lo!r}")
        return [run(SignClaim("g", "negative", region, cfg.margin))]
    if part == 3:
        bottom = Box(p_range, Interval(s_range.lo))
        top = Box(p_range, Interval(s_range.hi))
        return [
            run(SignClaim("h", "negative", region, cfg.margin)),
            run(SignClaim("g", "positive", bottom, cfg.margin)),
            run(SignClaim("g", "negative", top, cfg.margin)),
        ]
    if part == 4:
        if not (p_range.lo == p_range.hi == 2.0):
            raise InvalidRegion("part 4 is the single exponent p = 2")
        return [run(SignClaim("delta", "contains", region, value=math.sqrt(3.0) / 2.0))]
    raise ValueError(f"part must be 1, 2, 3 or 4 (got {part!r})")

