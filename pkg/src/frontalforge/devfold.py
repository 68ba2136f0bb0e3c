"""Developable strips, the IST construction, strip isomers, curved foldings.

A developable strip is a ruled surface F(u, v) = c(u) + v xi(u) along an
arc-length crease c, with the ruling direction xi determined by two angular
functions: the first angle alpha prescribes the tangent-plane tilt and the
second angle beta in (0, pi) solves cot(beta) = (alpha' + tau)/(kappa
sin(alpha)).  The IST map turns an edge normal form into such a strip by
taking alpha := theta.  A curved folding glues a strip to its dual
(alpha -> -alpha) along a split rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve import SpaceCurve, frenet
from .isomer import NotAdmissible, admissible, dual, inverse, inverse_dual
from .normalform import EdgeNormalForm, ScalarProfile
from .numkit import Interval

__all__ = [
    "DevStrip", "CurvedFolding", "MeshGrid", "second_angle", "ruling",
    "ist", "evaluate_strip", "gaussian_curvature", "strip_isomers",
    "curved_folding", "strip_mesh", "folding_mesh", "write_obj",
    "write_profile_csv", "DevfoldError", "AngleRangeError",
]


class DevfoldError(Exception):
    pass


class AngleRangeError(DevfoldError):
    pass


def second_angle(alpha: float, alpha_prime: float,
                 kappa: float, tau: float) -> float:
    """Second angular function beta in (0, pi) with
    cot(beta) = (alpha' + tau) / (kappa * sin(alpha))."""
    if kappa <= 0:
        raise DevfoldError(f"second_angle needs kappa > 0, got {kappa}")
    s = math.sin(alpha)
    if s == 0.0:
        raise AngleRangeError("second_angle undefined at sin(alpha) = 0")
    cot = (alpha_prime + tau) / (kappa * s)
    # atan2(1, cot) is the inverse cotangent mapped onto (0, pi)
    return math.atan2(1.0, cot)


@dataclass
class DevStrip:
    """Ruled strip F(u, v) = c(u) + v * xi(u) in normal form.

    crease is arc-length parametrized; alpha is the first angular function
    with 0 < |alpha| < pi/2 at every station; beta is derived, not stored.
    """

    crease: SpaceCurve
    alpha: ScalarProfile
    halfwidth: float = 0.15
    interval: Interval | None = None
    source_nf: EdgeNormalForm | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.interval is None:
            self.interval = self.crease.domain

    def stations(self, n: int = 129) -> np.ndarray:
        return self.interval.grid(n)

    def frame(self, u: float):
        return frenet(self.crease, u)

    def beta(self, u: float) -> float:
        fr = self.frame(u)
        return second_angle(self.alpha(u), self.alpha.deriv(u),
                            fr.kappa, fr.tau)

    def ruling(self, u: float) -> np.ndarray:
        return ruling(self, u)

    def __call__(self, u: float, v: float) -> np.ndarray:
        return evaluate_strip(self, u, v)

    def profile_row(self, u: float) -> dict:
        fr = self.frame(u)
        return {"u": u, "alpha": self.alpha(u), "beta": self.beta(u),
                "kappa": fr.kappa, "tau": fr.tau}


def ruling(strip: DevStrip, u: float) -> np.ndarray:
    """Unit ruling direction xi(u); has positive principal-normal
    component under the strip invariants."""
    fr = strip.frame(u)
    a = strip.alpha(u)
    b = second_angle(a, strip.alpha.deriv(u), fr.kappa, fr.tau)
    return (math.cos(b) * fr.e
            + math.sin(b) * (math.cos(a) * fr.n + math.sin(a) * fr.b))


def evaluate_strip(strip: DevStrip, u: float, v: float) -> np.ndarray:
    if abs(v) > strip.halfwidth + 1e-12:
        raise DevfoldError(
            f"|v| = {abs(v)} exceeds the strip halfwidth {strip.halfwidth}")
    fr = strip.frame(u)
    return fr.point + v * ruling(strip, u)


def _check_alpha_range(nf: EdgeNormalForm, n: int = 129, tol: float = 1e-10):
    for u in nf.stations(n):
        th = nf.theta(u)
        if abs(th) <= tol or abs(th) >= math.pi / 2 - tol:
            raise AngleRangeError(
                f"cuspidal angle {th} at u={u} leaves (0, pi/2) in "
                "absolute value; the strip construction is undefined")


def ist(nf: EdgeNormalForm, halfwidth: float | None = None,
        n_check: int = 129) -> DevStrip:
    """Strip of the edge: alpha := theta along the same crease.

    Requires a strictly admissible edge with 0 < |theta| < pi/2 at every
    station (both kappa_s and kappa_nu nonvanishing).
    """
    adm, strict = admissible(nf, n_check)
    if not strict:
        raise NotAdmissible(
            "strip construction requires a strictly admissible edge")
    _check_alpha_range(nf, n_check)
    hw = nf.halfwidth if halfwidth is None else float(halfwidth)
    hw = _truncate_to_focal(nf, hw, n_check)
    return DevStrip(nf.crease, nf.theta, hw, nf.interval, source_nf=nf)


def _truncate_to_focal(nf: EdgeNormalForm, hw: float, n: int) -> float:
    import warnings
    rmin = min(1.0 / nf.kappa(u) for u in nf.stations(n))
    if hw > 0.5 * rmin:
        warnings.warn(
            f"halfwidth {hw} is close to the focal distance {rmin}; "
            f"truncating to {0.5 * rmin}", stacklevel=3)
        hw = 0.5 * rmin
    return hw


def gaussian_curvature(strip, u: float, v: float,
                       h: float | None = None) -> float:
    """Gaussian curvature from a numeric second fundamental form.

    Accepts a DevStrip or any callable (u, v) -> 3-point (used for the
    negative controls: cylinders are flat, spheres are not).
    """
    if isinstance(strip, DevStrip):
        # unchecked evaluation: the stencil may step slightly past the width
        f = lambda uu, vv: strip.frame(uu).point + vv * ruling(strip, uu)
    else:
        f = strip
    if h is None:
        h = 1e-4 * max(1.0, abs(u), abs(v))

    def p(du, dv):
        return np.asarray(f(u + du * h, v + dv * h), float)

    f00 = p(0, 0)
    fu = (p(1, 0) - p(-1, 0)) / (2 * h)
    fv = (p(0, 1) - p(0, -1)) / (2 * h)
    fuu = (p(1, 0) - 2 * f00 + p(-1, 0)) / (h * h)
    fvv = (p(0, 1) - 2 * f00 + p(0, -1)) / (h * h)
    fuv = (p(1, 1) - p(1, -1) - p(-1, 1) + p(-1, -1)) / (4 * h * h)
    nu = np.cross(fu, fv)
    nn = np.linalg.norm(nu)
    E = fu @ fu
    F = fu @ fv
    G = fv @ fv
    den = E * G - F * F
    if nn < 1e-10 or den < 1e-14:
        raise DevfoldError("degenerate first fundamental form; the point is "
                           "at or past the focal set of the strip")
    nu = nu / nn
    L = fuu @ nu
    M = fuv @ nu
    N = fvv @ nu
    return (L * N - M * M) / den


def strip_isomers(strip: DevStrip) -> dict:
    """Dual, inverse and inverse-dual strips, produced by commuting the
    strip construction through the edge level."""
    if strip.source_nf is None:
        raise DevfoldError("strip isomers need a strip produced by ist")
    nf = strip.source_nf
    out = {"base": strip}
    out["dual"] = ist(dual(nf), strip.halfwidth)
    try:
        out["inverse"] = ist(inverse(nf), strip.halfwidth)
        out["inverse_dual"] = ist(inverse_dual(nf), strip.halfwidth)
    except NotAdmissible as err:
        out["notes"] = str(err)
    return out


@dataclass
class CurvedFolding:
    """Piecewise surface gluing a strip to its dual along a split rule.

    split="u" uses F for u > 0 and the dual strip for u < 0; split="v"
    uses F for v >= 0 and the dual for v <= 0.  Both pieces contain the
    crease v = 0, so Psi(u, 0) = c(u) in either rule.
    """

    strip: DevStrip
    dual_strip: DevStrip
    split: str = "u"

    def __post_init__(self):
        if self.split not in ("u", "v"):
            raise DevfoldError(f"split must be 'u' or 'v', got {self.split!r}")

    def __call__(self, u: float, v: float) -> np.ndarray:
        coord = u if self.split == "u" else v
        piece = self.strip if coord >= 0 else self.dual_strip
        return evaluate_strip(piece, u, v)

    def pieces(self):
        return (self.strip, self.dual_strip)


def curved_folding(strip: DevStrip, split: str = "u") -> CurvedFolding:
    if strip.source_nf is None:
        raise DevfoldError("curved folding needs a strip produced by ist")
    dual_strip = ist(dual(strip.source_nf), strip.halfwidth)
    return CurvedFolding(strip, dual_strip, split)


# mesh plumbing ---------------------------------------------------------------

@dataclass
class MeshGrid:
    """Quad mesh on an (u, v) lattice, row-major station-then-width."""

    us: np.ndarray
    vs: np.ndarray
    vertices: np.ndarray     # shape (len(us) * len(vs), 3)
    faces: list              # quads as 4-tuples of 0-based vertex indices

    @property
    def shape(self):
        return (len(self.us), len(self.vs))


def _lattice_mesh(fn, us, vs) -> MeshGrid:
    us = np.asarray(us, float)
    vs = np.asarray(vs, float)
    nv = len(vs)
    verts = np.empty((len(us) * nv, 3))
    for i, u in enumerate(us):
        for j, v in enumerate(vs):
            verts[i * nv + j] = fn(u, v)
    faces = []
    for i in range(len(us) - 1):
        for j in range(nv - 1):
            a = i * nv + j
            faces.append((a, a + nv, a + nv + 1, a + 1))
    return MeshGrid(us, vs, verts, faces)


def strip_mesh(strip: DevStrip, nu: int = 33, nv: int = 9) -> MeshGrid:
    us = strip.stations(nu)
    vs = np.linspace(-strip.halfwidth, strip.halfwidth, nv)
    return _lattice_mesh(lambda u, v: evaluate_strip(strip, u, v), us, vs)


def folding_mesh(fold: CurvedFolding, nu: int = 33, nv: int = 9) -> MeshGrid:
    us = fold.strip.stations(nu)
    vs = np.linspace(-fold.strip.halfwidth, fold.strip.halfwidth, nv)
    return _lattice_mesh(fold, us, vs)


def write_obj(mesh: MeshGrid, path) -> None:
    with open(path, "w") as fh:
        for p in mesh.vertices:
            fh.write("v %.9g %.9g %.9g\n" % (p[0], p[1], p[2]))
        for quad in mesh.faces:
            fh.write("f %d %d %d %d\n" % tuple(i + 1 for i in quad))


def write_profile_csv(strip: DevStrip, path, n: int = 129) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["u", "alpha", "beta",
                                           "kappa", "tau"])
        w.writeheader()
        for u in strip.stations(n):
            row = strip.profile_row(u)
            w.writerow({k: "%.12g" % row[k] for k in w.fieldnames})
