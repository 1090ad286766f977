"""Round-trip of codim-2 reports: rebuild normal forms, reductions and
predictors from serialized records so switching can be replayed without
recomputation."""

from __future__ import annotations

import numpy as np

from ..equilibria import Codim2Point
from ..normalform import GhNormalForm, HhNormalForm, ZhNormalForm
from ..switching import (
    GhReduction,
    HhReduction,
    ZhReduction,
    predict_gh_lpc,
    predict_hh_ns,
    predict_zh_ns,
)


def _decomplex(v):
    if isinstance(v, dict):
        return np.asarray(v["re"], dtype=float) + 1j * np.asarray(v["im"], dtype=float)
    return np.asarray(v, dtype=float)


def _scalar(v):
    out = _decomplex(v)
    return complex(out.ravel()[0]) if np.iscomplexobj(out) else float(out.ravel()[0])


def nf_from_record(rec: dict):
    kind = rec["kind"]
    nf = rec.get("normal_form")
    if nf is None:
        return None
    if kind == "GH":
        return GhNormalForm(
            omega=float(nf["omega"]),
            c1=_scalar(nf["c1"]), c2=_scalar(nf["c2"]),
            q=_decomplex(nf["q"]), p=_decomplex(nf["p"]),
            h2000=_decomplex(nf["h2000"]), h1100=_decomplex(nf["h1100"]),
            h2100=_decomplex(nf["h2100"]), expansion=None,
        )
    if kind == "ZH":
        return ZhNormalForm(
            omega=float(nf["omega"]),
            f200=float(nf["f200"]), f011=float(nf["f011"]),
            f300=float(nf["f300"]), f111=float(nf["f111"]),
            g110=_scalar(nf["g110"]), g210=_scalar(nf["g210"]), g021=_scalar(nf["g021"]),
            q1=_decomplex(nf["q1"]), p1=_decomplex(nf["p1"]),
            q2=_decomplex(nf["q2"]), p2=_decomplex(nf["p2"]),
            h20000=_decomplex(nf["h20000"]), h11000=_decomplex(nf["h11000"]),
            h02000=_decomplex(nf["h02000"]), h01100=_decomplex(nf["h01100"]),
            expansion=None,
        )
    if kind == "HH":
        return HhNormalForm(
            omega1=float(nf["omega1"]), omega2=float(nf["omega2"]),
            f2100=_scalar(nf["f2100"]), f1011=_scalar(nf["f1011"]),
            g1110=_scalar(nf["g1110"]), g0021=_scalar(nf["g0021"]),
            f1022=0.0, g2210=0.0,
            q1=_decomplex(nf["q1"]), p1=_decomplex(nf["p1"]),
            q2=_decomplex(nf["q2"]), p2=_decomplex(nf["p2"]),
            h2000=_decomplex(nf["h2000"]), h1100=_decomplex(nf["h1100"]),
            h0020=_decomplex(nf["h0020"]), h0011=_decomplex(nf["h0011"]),
            expansion=None,
        )
    return None


def point_from_record(rec: dict, model) -> Codim2Point:
    point = Codim2Point(
        kind=rec["kind"],
        x=np.asarray(rec["x"], dtype=float),
        alpha=np.asarray(rec["alpha"], dtype=float),
        params=np.asarray(rec["params"], dtype=float),
        eigenvalues=_decomplex(rec["eigenvalues"]),
        scaled=rec.get("scaled", {}),
        warnings=rec.get("warnings", []),
    )
    point.normal_form = nf_from_record(rec)
    return point


def reduction_from_record(rec: dict):
    kind = rec["kind"]
    red = rec.get("reduction")
    if red is None:
        return None
    if kind == "GH":
        return GhReduction(
            gamma1=_decomplex(red["gamma1"]), gamma2=_decomplex(red["gamma2"]),
            K=np.asarray(red["K"], dtype=float), K_cond=float(red.get("cond", 0.0)),
            b12=float(red["b12"]),
            h00=[_decomplex(h) for h in red["h00"]],
            h10=[], h01=[], h20=[], h11=[], h21=[],
        )
    if kind == "ZH":
        return ZhReduction(
            gamma=np.zeros(2), s1=np.zeros(2), s2=np.zeros(2),
            r1=np.zeros(0), r2=np.zeros(0),
            deltas=np.asarray(red["deltas"], dtype=float),
            v10=np.asarray(red["v10"], dtype=float),
            v01=np.asarray(red["v01"], dtype=float),
            h0010=_decomplex(red["h0010"]), h0001=_decomplex(red["h0001"]),
            h1010=np.zeros(0), h1001=np.zeros(0), h0110=np.zeros(0), h0101=np.zeros(0),
            omega_d=np.asarray(red["omega_d"], dtype=float),
            LL=np.zeros((2, 2), dtype=complex),
        )
    if kind == "HH":
        return HhReduction(
            gamma1=_decomplex(red["gamma1"]), gamma2=_decomplex(red["gamma2"]),
            K=np.asarray(red["K"], dtype=float), K_cond=0.0,
            h0000=[_decomplex(h) for h in red["h0000"]],
            h1000=[], h0010=[],
            domega_branch1=np.asarray(red["domega_branch1"], dtype=float),
            domega_branch2=np.asarray(red["domega_branch2"], dtype=float),
        )
    return None


def predictor_from_record(rec: dict, case: str, branch: int = 1):
    nf = nf_from_record(rec)
    red = reduction_from_record(rec)
    if nf is None or red is None:
        raise ValueError("record lacks normal-form or reduction data for switching")
    x0 = np.asarray(rec["x"], dtype=float)
    alpha0 = np.asarray(rec["alpha"], dtype=float)
    if case == "GH":
        return predict_gh_lpc(red, nf, x0, alpha0)
    if case == "ZH":
        return predict_zh_ns(red, nf, x0, alpha0)
    if case == "HH":
        return predict_hh_ns(red, nf, x0, alpha0, branch=branch)
    raise ValueError(f"no predictor for case {case!r}")
