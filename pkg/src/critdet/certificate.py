"""JSON and CSV forms of sign certificates.

Floats are written as their shortest round-trip decimal strings (``repr``),
so a certificate read back from disk names exactly the same boxes and can be
replayed bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any, Iterable, Optional

from .cohn import Box
from .interval import Interval
from .verifier import BoxRecord, SignCertificate, SignClaim, combined_status

SCHEMA_VERSION = 1


def _f(x: Optional[float]) -> Optional[str]:
    return None if x is None else repr(float(x))


def _pair(iv: Optional[Interval]) -> Optional[list[str]]:
    return None if iv is None else [_f(iv.lo), _f(iv.hi)]


def _interval(pair: Optional[list[str]]) -> Optional[Interval]:
    return None if pair is None else Interval(float(pair[0]), float(pair[1]))


def claim_to_dict(claim: SignClaim) -> dict[str, Any]:
    out: dict[str, Any] = {
        "function": claim.function_id,
        "sign": claim.sign,
        "region": {"p": _pair(claim.region.p), "sigma": _pair(claim.region.sigma)},
        "margin": _f(claim.margin),
    }
    if claim.sign == "contains":
        out["value"] = _f(claim.value)
        out["tolerance"] = _f(claim.tolerance)
    return out


def claim_from_dict(d: dict[str, Any]) -> SignClaim:
    region = Box(_interval(d["region"]["p"]), _interval(d["region"]["sigma"]))
    kwargs = {}
    if d["sign"] == "contains":
        kwargs = {"value": float(d["value"]), "tolerance": float(d["tolerance"])}
    return SignClaim(d["function"], d["sign"], region, float(d["margin"]), **kwargs)


def to_dict(cert: SignCertificate, version: str) -> dict[str, Any]:
    boxes = []
    for r in cert.boxes:
        boxes.append({
            "p": _pair(r.box.p),
            "sigma": _pair(r.box.sigma),
            "verdict": r.verdict,
            "depth": r.depth,
            "bound": _f(r.bound(cert.claim)),
            "enclosure": _pair(r.enclosure),
            "note": r.note,
        })
    return {
        "claim": claim_to_dict(cert.claim),
        "status": cert.status,
        "boxes": boxes,
        "meta": {
            "schema": SCHEMA_VERSION,
            "depth": cert.max_depth_used,
            "evals": cert.evaluations,
            "version": version,
            "config": {k: (_f(v) if isinstance(v, float) else v) for k, v in cert.config.items()},
        },
    }


def from_dict(d: dict[str, Any]) -> SignCertificate:
    claim = claim_from_dict(d["claim"])
    records = [
        BoxRecord(
            Box(_interval(b["p"]), _interval(b["sigma"])),
            b["verdict"],
            int(b["depth"]),
            _interval(b.get("enclosure")),
            b.get("note", ""),
        )
        for b in d["boxes"]
    ]
    meta = d.get("meta", {})
    config = {k: (float(v) if isinstance(v, str) else v) for k, v in meta.get("config", {}).items()}
    return SignCertificate(claim, d["status"], records, int(meta.get("depth", 0)), int(meta.get("evals", 0)), config)


def bundle(certs: Iterable[SignCertificate], version: str, part: Optional[int] = None) -> dict[str, Any]:
    certs = list(certs)
    return {
        "part": part,
        "status": combined_status(certs),
        "certificates": [to_dict(c, version) for c in certs],
    }


def dumps(obj: dict[str, Any]) -> str:
    return json.dumps(obj, indent=1) + "\n"


def load_certificates(text: str) -> list[SignCertificate]:
    """Read either a single certificate or a bundle of them."""
    d = json.loads(text)
    if "certificates" in d:
        return [from_dict(c) for c in d["certificates"]]
    return [from_dict(d)]


CSV_FIELDS = ["certificate", "function", "sign", "status", "p_lo", "p_hi", "sigma_lo", "sigma_hi",
              "verdict", "depth", "bound", "enc_lo", "enc_hi"]


def to_csv(certs: Iterable[SignCertificate]) -> str:
    """One row per box; numbers use the same strings as the JSON form."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for k, cert in enumerate(certs):
        for r in cert.boxes:
            enc = _pair(r.enclosure) or ["", ""]
            bound = _f(r.bound(cert.claim))
            writer.writerow([
                k, cert.claim.function_id, cert.claim.sign, cert.status,
                _f(r.box.p.lo), _f(r.box.p.hi), _f(r.box.sigma.lo), _f(r.box.sigma.hi),
                r.verdict, r.depth, "" if bound is None else bound, enc[0], enc[1],
            ])
    return buf.getvalue()
