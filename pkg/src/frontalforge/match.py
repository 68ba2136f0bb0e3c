"""Lifts, image-inclusion tests, connecting maps, and properness probes.

The central object is the lift L_f = (f, nu) pairing a frontal map with its
unit normal.  When the image of f1 sits inside the image of f2 and the lift
of f2 is injective, the connecting map psi with f1 = f2 o psi and
nu1 = e * nu2 o psi (e a global sign) is recovered numerically by nearest
neighbor seeding and Gauss-Newton polish on the lift distance.  The
properness probe counts preimage components of f(p) in shrinking
neighborhoods on refined grids; it is a heuristic falsifier, not a proof.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import exprlang as ex
from .germ import NormalField, SurfaceGerm
from .numkit import Interval, eval_jet

__all__ = [
    "LiftSample", "ConnectingMap", "PropernessReport", "PlaneMap",
    "legendrian_lift", "image_subset", "connecting_map",
    "match_normal_forms", "properness_probe", "MatchError",
    "InclusionError", "LiftInjectivityError", "ResidualError",
]


class MatchError(Exception):
    pass


class InclusionError(MatchError):
    pass


class LiftInjectivityError(MatchError):
    pass


class ResidualError(MatchError):
    pass


@dataclass(frozen=True)
class LiftSample:
    x: tuple
    fx: np.ndarray
    nu: np.ndarray


class PlaneMap:
    """One-variable map into the plane, with a continuous unit normal.

    The normal is the 90-degree rotation of the tangent, extended through
    cusps: the raw rotated derivative is divided by its vanishing order and
    re-aligned for sign continuity along a cached grid.
    """

    def __init__(self, map_, domain: Interval, name: str = "plane_map",
                 grid: int = 513):
        self.map = map_
        self.domain = domain if isinstance(domain, Interval) else Interval(*domain)
        self.name = name
        # exact (expression) derivatives stay directionally accurate down to
        # underflow; finite-difference ones drown in noise much earlier
        self._raw_tol = 1e-12 if isinstance(map_, ex.MapDef) else 1e-7
        self._ts = self.domain.grid(grid)
        self._nus = self._continuous_normals(self._ts)

    def __call__(self, t) -> np.ndarray:
        t = float(t) if np.isscalar(t) or np.ndim(t) == 0 else float(t[0])
        return np.asarray(self.map((t,)) if _wants_tuple(self.map) else self.map(t),
                          dtype=float)

    def _deriv(self, t: float, order: int = 1) -> np.ndarray:
        j = eval_jet(_as_tuple_map(self.map), (t,), max(order, 1) + 1)
        return np.asarray(j.partial(order), dtype=float)

    def _raw_normal(self, t: float):
        d = self._deriv(t, 1)
        raw = np.array([-d[1], d[0]])
        n = np.linalg.norm(raw)
        if n > self._raw_tol:
            return raw / n
        if isinstance(self.map, ex.MapDef):
            # at a cusp the tangent limit is the first nonvanishing
            # Taylor coefficient of the curve
            var = self.map.variables[0]
            dm = self.map
            for _ in range(9):
                dm = dm.diff(var)
                d = np.asarray(dm((t,)), float)
                if np.linalg.norm(d) > 1e-9:
                    raw = np.array([-d[1], d[0]])
                    return raw / np.linalg.norm(raw)
        return None

    def _continuous_normals(self, ts) -> np.ndarray:
        nus = np.full((len(ts), 2), np.nan)
        prev = None
        valid = []
        for i, t in enumerate(ts):
            nu = self._raw_normal(float(t))
            if nu is None:
                continue
            if prev is not None and nu @ prev < 0:
                nu = -nu
            nus[i] = nu
            prev = nu
            valid.append(i)
        if not valid:
            raise MatchError(f"no continuous normal for '{self.name}'")
        # fill degenerate nodes from the nearest valid neighbor (the normal
        # extends continuously through cusps)
        valid = np.array(valid)
        for i in range(len(ts)):
            if np.isnan(nus[i, 0]):
                nus[i] = nus[valid[np.argmin(np.abs(valid - i))]]
        # anchor the global sign at the right end: there the normal agrees
        # with the 90-degree rotation of the actual tangent
        j = valid[-1]
        anchor = self._raw_normal(float(ts[j]))
        if anchor is not None and nus[j] @ anchor < 0:
            nus = -nus
        return nus

    def normal(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self._ts - t)))
        nu = self._raw_normal(float(t))
        if nu is None:
            return self._nus[i].copy()
        if nu @ self._nus[i] < 0:
            nu = -nu
        return nu


def _wants_tuple(map_):
    return isinstance(map_, ex.MapDef)


def _as_tuple_map(map_):
    if isinstance(map_, ex.MapDef):
        return map_
    return lambda p: map_(p[0])


def legendrian_lift(obj):
    """Lift sampler x -> LiftSample(x, f(x), nu(x)).

    Accepts a SurfaceGerm (normal from its frontal normal field) or a
    PlaneMap (normal of the plane curve extended through cusps).
    """
    if isinstance(obj, SurfaceGerm):
        nf = NormalField(obj)

        def lift(point):
            p = tuple(float(c) for c in np.atleast_1d(point))
            return LiftSample(p, np.asarray(obj(p), float), nf(p))

        return lift
    if isinstance(obj, PlaneMap):
        def lift(t):
            t = float(np.atleast_1d(t)[0])
            return LiftSample((t,), obj(t), obj.normal(t))

        return lift
    raise MatchError(f"cannot lift object of type {type(obj).__name__}")


# ---------------------------------------------------------------- evaluation

def _domain_of(obj):
    if isinstance(obj, SurfaceGerm):
        return obj.domain
    if isinstance(obj, PlaneMap):
        return (obj.domain,)
    raise MatchError(f"no domain on {type(obj).__name__}")


def _eval(obj, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, float))
    if isinstance(obj, SurfaceGerm):
        return obj(tuple(x))
    return obj(x[0])


def _sample_grid(domain, n):
    if len(domain) == 1:
        ts = domain[0].grid(n)
        return [(float(t),) for t in ts]
    m = max(2, int(math.sqrt(n)))
    us, vs = domain[0].grid(m), domain[1].grid(m)
    return [(float(u), float(v)) for u in us for v in vs]


def _jacobian(obj, x, h=1e-6):
    x = np.asarray(x, float)
    cols = []
    for i in range(len(x)):
        dp = x.copy(); dm = x.copy()
        dp[i] += h; dm[i] -= h
        cols.append((_eval(obj, dp) - _eval(obj, dm)) / (2 * h))
    return np.stack(cols, axis=1)


def _clamp(x, domain):
    return np.array([min(max(x[i], domain[i].lo), domain[i].hi)
                     for i in range(len(x))])


def _gn_closest(obj, domain, target, x0, iters=30):
    """Gauss-Newton polish of min_x |f(x) - target|^2, clamped to domain."""
    x = np.asarray(x0, float)
    lam = 1e-8
    best = (np.linalg.norm(_eval(obj, x) - target), x)
    for _ in range(iters):
        r = _eval(obj, x) - target
        J = _jacobian(obj, x)
        A = J.T @ J + lam * np.eye(len(x))
        try:
            step = np.linalg.solve(A, -J.T @ r)
        except np.linalg.LinAlgError:
            break
        xn = _clamp(x + step, domain)
        rn = np.linalg.norm(_eval(obj, xn) - target)
        if rn < best[0]:
            best = (rn, xn)
            x = xn
            lam = max(lam * 0.3, 1e-12)
        else:
            lam *= 10.0
            if lam > 1e6:
                break
    return best


def closest_image_point(obj, domain, target, tree, xs, k: int = 4):
    """Distance from target to the image of obj: polish from the k nearest
    sampled seeds (multi-sheeted images can strand a single seed on the
    wrong sheet) and keep the best."""
    _, idxs = tree.query(target, k=k)
    best = (math.inf, None)
    for idx in np.atleast_1d(idxs):
        d, x = _gn_closest(obj, domain, target, np.asarray(xs[idx], float))
        if d < best[0]:
            best = (d, x)
        if best[0] < 1e-14:
            break
    return best


def image_subset(f1, V1, f2, U2, tol: float,
                 n1: int = 1024, n2: int = 16384):
    """True iff every sampled point of f1(V1) lies within tol of f2(U2).

    Distance is nearest-neighbor seeded and Gauss-Newton polished.
    Returns (included, max one-sided distance).
    """
    V1 = _norm_domain(V1)
    U2 = _norm_domain(U2)
    xs2 = _sample_grid(U2, n2)
    pts2 = np.array([_eval(f2, x) for x in xs2])
    tree = cKDTree(pts2)
    worst = 0.0
    xs2 = np.asarray(xs2, float)
    for q in _sample_grid(V1, n1):
        fq = _eval(f1, q)
        d, _ = closest_image_point(f2, U2, fq, tree, xs2)
        worst = max(worst, d)
    return worst < tol, worst


def _norm_domain(dom):
    if isinstance(dom, Interval):
        return (dom,)
    return tuple(d if isinstance(d, Interval) else Interval(*d) for d in dom)


# ------------------------------------------------------------ connecting map

@dataclass
class ConnectingMap:
    """Numeric psi with f1 = f2 o psi and nu1 = e * nu2 o psi."""

    samples_in: list
    samples_out: list
    sign: int
    residual_image: float
    residual_normal: float
    solver: object = field(repr=False, default=None)

    def __call__(self, x):
        return self.solver(x)

    def to_json(self) -> dict:
        return {
            "sign": self.sign,
            "residual_image": self.residual_image,
            "residual_normal": self.residual_normal,
            "samples": [
                {"x": list(map(float, a)), "psi": list(map(float, b))}
                for a, b in zip(self.samples_in, self.samples_out)
            ],
        }

    def write_csv(self, path) -> None:
        dim = len(self.samples_in[0])
        head = ([f"x{i+1}" for i in range(dim)]
                + [f"psi{i+1}" for i in range(len(self.samples_out[0]))]
                + ["residual"])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(head)
            for a, b in zip(self.samples_in, self.samples_out):
                w.writerow(["%.12g" % c for c in a]
                           + ["%.12g" % c for c in b]
                           + ["%.12g" % self.residual_image])


def _lift_vec(sample: LiftSample, sign: int) -> np.ndarray:
    return np.concatenate([sample.fx, sign * sample.nu])


def connecting_map(f1, f2, tol: float = 1e-6,
                   n1: int = 256, n2: int = 8192) -> ConnectingMap:
    """Recover psi = L2^{-1} o L1 by lift-distance minimization.

    Tries both normal signs e = +1, -1; the sign with the smaller sup
    residual wins.  Raises on inclusion failure, on a non-injective lift
    of f2, or when neither sign meets the tolerance.
    """
    D1 = _domain_of(f1)
    D2 = _domain_of(f2)
    L1 = legendrian_lift(f1)
    L2 = legendrian_lift(f2)

    xs2 = _sample_grid(D2, n2)
    lifts2 = [L2(x) for x in xs2]
    _check_lift_injective(xs2, lifts2, D2)

    incl, dist = image_subset(f1, D1, f2, D2, max(tol * 10, 1e-4),
                              n1=min(n1, 256), n2=min(n2, 8192))
    if not incl:
        raise InclusionError(
            f"image of f1 is not inside image of f2 (gap {dist:.3e})")

    qs = _sample_grid(D1, n1)
    lifted_q = [L1(q) for q in qs]
    best = None
    for e in (1, -1):
        pts = np.array([_lift_vec(s, e) for s in lifts2])
        tree = cKDTree(pts)
        outs, res_im, res_nu = [], 0.0, 0.0
        for s in lifted_q:
            target = _lift_vec(s, 1)
            _, idx = tree.query(target)
            x = _polish_lift(f2, L2, D2, s, e, np.asarray(xs2[idx], float))
            s2 = L2(x)
            res_im = max(res_im, float(np.linalg.norm(s.fx - s2.fx)))
            res_nu = max(res_nu, float(np.linalg.norm(s.nu - e * s2.nu)))
            outs.append(tuple(float(c) for c in x))
        score = max(res_im, res_nu)
        if best is None or score < best[0]:
            best = (score, e, outs, res_im, res_nu)
    score, e, outs, res_im, res_nu = best
    if score > tol:
        raise ResidualError(
            f"connecting map residual {score:.3e} exceeds tol {tol:.1e}")
    _check_psi_injective(qs, outs, D2)

    solver_tree = cKDTree(np.array([_lift_vec(t, e) for t in lifts2]))

    def solver(x):
        s = L1(x)
        _, idx = solver_tree.query(_lift_vec(s, 1))
        return _polish_lift(f2, L2, D2, s, e, np.asarray(xs2[idx], float))

    return ConnectingMap(qs, outs, e, res_im, res_nu, solver)


def _polish_lift(f2, L2, D2, s1: LiftSample, e: int, x0, iters=40):
    x = np.asarray(x0, float)
    target = np.concatenate([s1.fx, s1.nu])

    def lift_at(xx):
        s = L2(xx)
        return np.concatenate([s.fx, e * s.nu])

    lam = 1e-8
    best = (np.linalg.norm(lift_at(x) - target), x)
    h = 1e-6
    for _ in range(iters):
        r = lift_at(x) - target
        cols = []
        for i in range(len(x)):
            dp = x.copy(); dm = x.copy()
            dp[i] += h; dm[i] -= h
            cols.append((lift_at(dp) - lift_at(dm)) / (2 * h))
        J = np.stack(cols, axis=1)
        try:
            step = np.linalg.solve(J.T @ J + lam * np.eye(len(x)), -J.T @ r)
        except np.linalg.LinAlgError:
            break
        xn = _clamp(x + step, D2)
        rn = np.linalg.norm(lift_at(xn) - target)
        if rn < best[0]:
            best = (rn, xn)
            x = xn
            lam = max(lam * 0.3, 1e-12)
        else:
            lam *= 10.0
            if lam > 1e6:
                break
    return best[1]


def _check_lift_injective(xs, lifts, domain, lift_tol=1e-5):
    pts = np.array([_lift_vec(s, 1) for s in lifts])
    tree = cKDTree(pts)
    scale = max(d.length for d in domain)
    pairs = tree.query_pairs(lift_tol)
    for i, j in pairs:
        dx = np.linalg.norm(np.asarray(xs[i]) - np.asarray(xs[j]))
        if dx > 0.05 * scale:
            raise LiftInjectivityError(
                f"lift collision: x={xs[i]} and x={xs[j]} have nearly "
                "equal lifts but distant preimages")


def _check_psi_injective(qs, outs, domain):
    if len(qs) < 2:
        return
    res = max(d.length for d in domain) / max(math.sqrt(len(qs)), 2.0)
    tree = cKDTree(np.array(outs))
    for i, j in tree.query_pairs(1e-9):
        dq = np.linalg.norm(np.asarray(qs[i]) - np.asarray(qs[j]))
        if dq > res:
            raise LiftInjectivityError(
                "recovered psi identifies distant domain points "
                f"{qs[i]} and {qs[j]}")


# ------------------------------------------------------- normal form matching

def match_normal_forms(nf1, nf2, tol: float = 1e-6, n: int = 33):
    """Match two edge normal forms along the same crease image.

    Returns (u_flip, e) such that f1(u, v) = f2(s(u), e*v) with s(u) = u or
    the station reversal.  Raises on crease mismatch or when no sign fits.
    """
    us1 = nf1.interval.grid(n)
    us2 = nf2.interval.grid(n)
    c1 = np.array([nf1.crease(u) for u in us1])
    c2f = np.array([nf2.crease(u) for u in us2])
    c2r = c2f[::-1]
    gap_f = float(np.max(np.linalg.norm(c1 - c2f, axis=1)))
    gap_r = float(np.max(np.linalg.norm(c1 - c2r, axis=1)))
    if min(gap_f, gap_r) > tol * 100:
        raise MatchError(
            f"crease images differ (forward gap {gap_f:.3e}, "
            f"reversed gap {gap_r:.3e})")
    u_flip = gap_r < gap_f

    def station2(u):
        return (nf2.interval.lo + nf2.interval.hi) - u if u_flip else u

    vs = np.linspace(-min(nf1.halfwidth, nf2.halfwidth),
                     min(nf1.halfwidth, nf2.halfwidth), 9)
    best = None
    for e in (1, -1):
        worst = 0.0
        for u in us1:
            s = station2(u)
            for v in vs:
                d = np.linalg.norm(nf1.evaluate(u, v)
                                   - nf2.evaluate(s, e * v))
                worst = max(worst, float(d))
        if best is None or worst < best[0]:
            best = (worst, e)
    worst, e = best
    if worst > tol:
        raise ResidualError(
            f"no sign matches the normal forms (best residual {worst:.3e})")
    return u_flip, e


# ----------------------------------------------------------- properness probe

@dataclass
class PropernessReport:
    """Grid-connectivity preimage census near a point; heuristic only."""

    point: float
    value: float
    radii: list
    counts: list
    widths: list
    verdict: str
    method: str = "grid-connectivity heuristic"

    def to_json(self) -> dict:
        return {
            "point": self.point,
            "value": self.value,
            "radii": self.radii,
            "component_counts": self.counts,
            "component_max_widths": self.widths,
            "verdict": self.verdict,
            "method": self.method,
        }


def _probe_value(fn, p: float) -> float:
    v = fn(p)
    if np.isfinite(v):
        return float(v)
    d = 1e-9
    return 0.5 * (float(fn(p + d)) + float(fn(p - d)))


def properness_probe(fn, p: float, r0: float = 0.5, levels: int = 8,
                     grid: int = 4096) -> PropernessReport:
    """Count preimage components of f(p) on refined grids around p.

    At level k the window [p-r0, p+r0] is sampled with grid*2^k nodes and
    a node is marked when |f(x) - f(p)| <= r0 * 2^{-k} * 1e-3; cells whose
    endpoint values straddle f(p) are marked too.  Components are maximal
    runs of marked nodes/cells.  Verdict: finite when counts stabilize over
    the last 3 levels with shrinking component width, suspected_infinite
    when counts grow monotonically or a component keeps macroscopic width.
    """
    fp = _probe_value(fn, p)
    radii, counts, widths = [], [], []
    for k in range(levels):
        n = grid * (2 ** k)
        xs = np.linspace(p - r0, p + r0, n + 1)
        vals = np.array([fn(x) for x in xs], dtype=float) - fp
        eps = r0 * (2.0 ** -k) * 1e-3
        near = np.abs(vals) <= eps
        cross = vals[:-1] * vals[1:] < 0
        marked = near.copy()
        marked[:-1] |= cross
        marked[1:] |= cross
        comp, width = _count_runs(marked, xs)
        radii.append(r0 * (2.0 ** -k))
        counts.append(comp)
        widths.append(width)
    verdict = _verdict(counts, widths, r0)
    return PropernessReport(float(p), fp, radii, counts, widths, verdict)


def _count_runs(marked: np.ndarray, xs: np.ndarray):
    comp = 0
    width = 0.0
    i = 0
    n = len(marked)
    while i < n:
        if marked[i]:
            j = i
            while j + 1 < n and marked[j + 1]:
                j += 1
            comp += 1
            width = max(width, float(xs[j] - xs[i]))
            i = j + 1
        else:
            i += 1
    return comp, width


def _verdict(counts, widths, r0) -> str:
    tail = counts[-3:]
    stable = len(tail) == 3 and tail[0] == tail[1] == tail[2]
    growing = (all(counts[i + 1] >= counts[i] for i in range(len(counts) - 1))
               and counts[-1] > counts[0])
    wide = widths[-1] > 0.25 * r0
    if stable and wide:
        return "suspected_infinite"
    if growing:
        return "suspected_infinite"
    if stable and widths[-1] <= widths[max(len(widths) - 3, 0)]:
        return "finite"
    return "inconclusive"
