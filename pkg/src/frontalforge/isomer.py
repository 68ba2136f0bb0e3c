"""Isomers of a cuspidal edge: dual, inverse, inverse-dual; class counting.

Isomers are handled at the (crease, cuspidal angle) level: the dual negates
theta along the same crease; the inverse reverses the crease orientation and
transports theta through cos(theta_*)(u) = kappa(u)/kappa(-u) cos(theta(u))
with the sign rule theta(-u) theta_*(u) > 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import exprlang as ex
from .curve import SpaceCurve, frenet
from .normalform import EdgeNormalForm, ScalarProfile
from .numkit import Interval

__all__ = [
    "SymmetryPredicates", "IsomerSet", "admissible", "dual", "inverse",
    "inverse_dual", "isomer_set", "right_equivalence_classes",
    "congruence_count", "IsomerError", "NotAdmissible",
]


class IsomerError(Exception):
    pass


class NotAdmissible(IsomerError):
    pass


@dataclass(frozen=True)
class SymmetryPredicates:
    """Declared symmetry inputs for the congruence decision table.

    curve_symmetry: none | positive | negative (orientation of the isometry
    exchanging the crease ends); metric_symmetry: none | symmetry |
    effective_symmetry.  These are declared (or heuristically suggested),
    never silently inferred.
    """

    planar: bool = False
    curve_symmetry: str = "none"
    metric_symmetry: str = "none"

    def __post_init__(self):
        if self.curve_symmetry not in ("none", "positive", "negative"):
            raise ValueError(f"bad curve_symmetry '{self.curve_symmetry}'")
        if self.metric_symmetry not in ("none", "symmetry", "effective_symmetry"):
            raise ValueError(f"bad metric_symmetry '{self.metric_symmetry}'")


def _station_data(nf: EdgeNormalForm, n: int = 129):
    us = nf.stations(n)
    kap = np.empty(n)
    tau = np.empty(n)
    th = np.empty(n)
    for i, u in enumerate(us):
        fr = nf.frame(u)
        kap[i] = fr.kappa
        tau[i] = fr.tau
        th[i] = nf.theta(u)
    return us, kap, tau, th


def admissible(nf: EdgeNormalForm, n: int = 129) -> tuple:
    """(admissible, strict): max|kappa_s| < min kappa; strict adds
    0 < min|kappa_s|."""
    _, kap, _, th = _station_data(nf, n)
    if np.min(kap) <= 0:
        raise IsomerError("crease curvature must be positive")
    ks = kap * np.cos(th)
    adm = bool(np.max(np.abs(ks)) < np.min(kap))
    strict = adm and bool(np.min(np.abs(ks)) > 0.0)
    return adm, strict


def dual(nf: EdgeNormalForm, n: int = 129, tol: float = 1e-12) -> EdgeNormalForm:
    """Same crease, theta -> -theta.  Needs kappa_nu = kappa sin(theta)
    without zeros."""
    _, kap, _, th = _station_data(nf, n)
    if np.min(np.abs(kap * np.sin(th))) <= tol:
        raise IsomerError("dual undefined: limiting normal curvature has a zero")
    return EdgeNormalForm(nf.crease, nf.theta.negated(), nf.a, nf.b,
                          nf.halfwidth, nf.interval)


class _ReversedMap:
    """u -> base(-u) for an opaque curve map."""

    def __init__(self, base_map):
        self.base = base_map

    def __call__(self, u):
        u = float(np.atleast_1d(u)[0])
        return self.base(-u)

    def eval_jet(self, point, order: int = 3):
        from .numkit import Jet, eval_jet
        u = float(np.atleast_1d(point)[0])
        j = eval_jet(self.base, (-u,), order)
        partials = {(k,): j.partial(k) * (-1.0) ** k for k in range(order + 1)}
        return Jet(1, order, partials)


def _reverse_crease(crease: SpaceCurve) -> SpaceCurve:
    dom = crease.domain
    if abs(dom.lo + dom.hi) > 1e-12:
        raise IsomerError("inverse needs a symmetric station interval")
    if crease.is_expression:
        m = crease.map
        vn = m.variables[0]
        comps = [ex.subs(c, vn, ex.neg(ex.var(vn))) for c in m.components]
        return SpaceCurve(ex.MapDef(m.name + "_rev", (vn,), comps, m.params),
                          dom, crease.name + "_rev")
    return SpaceCurve(_ReversedMap(crease.map), dom, crease.name + "_rev")


def inverse(nf: EdgeNormalForm, n: int = 129) -> EdgeNormalForm:
    adm, _ = admissible(nf, n)
    if not adm:
        raise NotAdmissible("inverse isomer requires an admissible edge")
    if abs(nf.interval.lo + nf.interval.hi) > 1e-12:
        raise IsomerError("inverse needs a symmetric station interval")
    crease_rev = _reverse_crease(nf.crease)
    base_theta = nf.theta
    base_crease = nf.crease

    def kappa(u):
        return frenet(base_crease, u).kappa

    def theta_star(u):
        g = kappa(u) / kappa(-u) * math.cos(base_theta(u))
        g = min(1.0, max(-1.0, g))
        sign = math.copysign(1.0, base_theta(-u)) if base_theta(-u) != 0 else 1.0
        return sign * math.acos(g)

    prof = ScalarProfile(theta_star)
    # a, b are not determined by the angle laws alone; left unset
    out = EdgeNormalForm(crease_rev, prof, None, None, nf.halfwidth, nf.interval)
    return out


def inverse_dual(nf: EdgeNormalForm, n: int = 129) -> EdgeNormalForm:
    return inverse(dual(nf, n), n)


@dataclass
class IsomerSet:
    base: EdgeNormalForm
    dual: EdgeNormalForm | None
    inverse: EdgeNormalForm | None
    inverse_dual: EdgeNormalForm | None
    admissible: bool
    strict: bool
    notes: list

    def members(self):
        out = [("base", self.base)]
        for name in ("dual", "inverse", "inverse_dual"):
            m = getattr(self, name)
            if m is not None:
                out.append((name, m))
        return out

    def report(self, n: int = 65) -> dict:
        profs = {}
        for name, m in self.members():
            us = m.stations(n)
            profs[name] = {
                "u": [float(x) for x in us],
                "theta": [float(m.theta(x)) for x in us],
            }
        return {"admissible": self.admissible, "strict": self.strict,
                "profiles": profs, "notes": list(self.notes)}


def isomer_set(nf: EdgeNormalForm, n: int = 129) -> IsomerSet:
    adm, strict = admissible(nf, n)
    notes = []
    d = i = di = None
    try:
        d = dual(nf, n)
    except IsomerError as exc:
        notes.append(f"dual unavailable: {exc}")
    if adm:
        i = inverse(nf, n)
        if d is not None:
            di = inverse(d, n)
    else:
        notes.append("inverse unavailable: edge is not admissible")
    return IsomerSet(nf, d, i, di, adm, strict, notes)


def right_equivalence_classes(iso: IsomerSet, tol: float = 1e-8,
                              n: int = 257) -> int:
    """Distinct members of {base, dual, inverse, inverse_dual}, identifying
    two normal forms when their (kappa, tau, theta) station profiles agree
    up to the reversal u -> -u (the station interval is symmetric, so the
    shift of u -> +-u + c is pinned to zero)."""
    members = iso.members()
    if len(members) < 4:
        raise IsomerError("all four isomers must be defined for class counting")
    data = []
    for _, m in members:
        data.append(_station_data(m, n)[1:])  # kappa, tau, theta

    def same(i, j):
        (k1, t1, h1), (k2, t2, h2) = data[i], data[j]
        for sl in (slice(None), slice(None, None, -1)):
            if (np.max(np.abs(k1 - k2[sl])) < tol
                    and np.max(np.abs(t1 - t2[sl])) < tol
                    and np.max(np.abs(h1 - h2[sl])) < tol):
                return True
        return False

    classes = []
    for i in range(len(members)):
        for cl in classes:
            if same(i, cl[0]):
                cl.append(i)
                break
        else:
            classes.append([i])
    return len(classes)


def congruence_count(pred: SymmetryPredicates) -> tuple:
    """Number of congruence classes among the four isomers, from declared
    symmetry predicates.  Returns (count, exact)."""
    has_curve = pred.curve_symmetry != "none"
    has_metric = pred.metric_symmetry != "none"
    if not has_curve and not has_metric and not pred.planar:
        return 4, True
    if ((pred.planar and has_curve)
            or (pred.planar and has_metric)
            or (pred.curve_symmetry == "positive" and has_metric)):
        return 1, True
    return 2, False
