import math

import numpy as np
import pytest

from frontalforge.curve import circle
from frontalforge.exprlang import MapDef
from frontalforge.germ import catalog
from frontalforge.isomer import inverse
from frontalforge.match import (ConnectingMap, MatchError, PlaneMap,
                                connecting_map, image_subset,
                                legendrian_lift, match_normal_forms,
                                properness_probe)
from frontalforge.normalform import (EdgeNormalForm, ScalarProfile,
                                     SurfaceProfile)
from frontalforge.numkit import Interval


def plane(name, comps, domain=(-1.0, 1.0)):
    md = MapDef(name, ("t",), comps, {})
    return PlaneMap(md, Interval(*domain), name=name)


@pytest.fixture(scope="module")
def cusp():
    return plane("cusp", ("t^2", "t^3"))


def test_lift_normal_at_cusp(cusp):
    lift = legendrian_lift(cusp)
    s = lift(0.0)
    assert np.allclose(s.nu, (0.0, 1.0), atol=1e-12)
    # the normal is continuous through the cusp: compare both sides
    left, right = lift(-1e-3).nu, lift(1e-3).nu
    assert float(left @ right) > 0.99


def test_lift_degenerate_cusp():
    lift = legendrian_lift(plane("flat", ("t^6", "t^9")))
    assert np.allclose(lift(0.0).nu, (0.0, 1.0), atol=1e-12)


def test_lift_surface_germ():
    lift = legendrian_lift(catalog("cuspidal_edge"))
    s = lift((0.0, 0.0))
    assert np.allclose(np.abs(s.nu), (0.0, 1.0, 0.0), atol=1e-12)
    assert np.linalg.norm(lift((0.1, 0.2)).nu) == pytest.approx(1.0,
                                                                abs=1e-12)


def test_image_subset(cusp):
    ok, gap = image_subset(cusp, cusp.domain, cusp, cusp.domain, 1e-8)
    assert ok and gap < 1e-10
    half = Interval(-0.5, 0.5)
    ok, _ = image_subset(cusp, half, cusp, cusp.domain, 1e-8)
    assert ok
    other = plane("cusp2", ("t^2", "t^3 + 0.2*t^4"))
    ok, gap = image_subset(cusp, cusp.domain, other, other.domain, 1e-6)
    assert not ok and gap > 1e-4


def test_connecting_map_cubic(cusp):
    # same image traced as s = t^(1/3): psi(t) = t^3
    src = plane("slow", ("t^6", "t^9"))
    psi = connecting_map(src, cusp)
    assert isinstance(psi, ConnectingMap)
    assert psi.sign in (-1, 1)
    ts = np.linspace(-0.9, 0.9, 33)
    err = max(abs(np.asarray(psi(t)).item() - t ** 3) for t in ts)
    assert err < 1e-8
    assert psi.residual_image < 1e-8


def test_connecting_map_identity(cusp):
    psi = connecting_map(cusp, cusp)
    err = max(abs(np.asarray(psi(t)).item() - t) for t in np.linspace(-0.9, 0.9, 21))
    assert err < 1e-10
    assert psi.sign == 1


def test_connecting_map_flip():
    # even image: t -> (t^2, t^4) matches itself under t -> -t as well,
    # and (t^2, -t^3) matches the cusp with the opposite normal sign
    a = plane("cusp_up", ("t^2", "t^3"))
    b = plane("cusp_dn", ("t^2", "-t^3"))
    psi = connecting_map(a, b)
    err = max(abs(np.asarray(psi(t)).item() + t) for t in np.linspace(-0.9, 0.9, 21))
    assert err < 1e-8


def test_connecting_map_rejects_disjoint(cusp):
    far = plane("far", ("t^2 + 10", "t^3"))
    with pytest.raises(MatchError):
        connecting_map(cusp, far)


def edge(crease, theta_value):
    one = SurfaceProfile.constant(1.0)
    return EdgeNormalForm(crease, ScalarProfile.constant(theta_value),
                          one, one)


def test_match_normal_forms():
    nf = edge(circle(1.0, 1.5), 0.3)
    assert match_normal_forms(nf, nf) == (False, 1)

    flipped = EdgeNormalForm(nf.crease, nf.theta, nf.a,
                             SurfaceProfile.constant(-1.0))
    u_flip, e = match_normal_forms(nf, flipped)
    assert (u_flip, e) == (False, -1)

    one = SurfaceProfile.constant(1.0)
    rev = EdgeNormalForm(inverse(nf).crease, ScalarProfile.constant(-0.3),
                         one, one)
    assert match_normal_forms(nf, rev) == (True, -1)

    other = edge(circle(2.0, 1.5), 0.3)
    with pytest.raises(MatchError):
        match_normal_forms(nf, other)


def test_properness_finite():
    fn = lambda x: x * math.exp(-x * x)
    rep = properness_probe(fn, 0.5)
    assert rep.verdict == "finite"
    assert len(set(rep.counts)) == 1 and rep.counts[0] <= 2


def test_properness_accumulating():
    fn = lambda x: x * math.sin(1.0 / x) if x != 0.0 else 0.0
    rep = properness_probe(fn, 0.0)
    assert rep.verdict == "suspected_infinite"
    assert rep.counts[-1] >= 64
    assert all(b > a for a, b in zip(rep.counts, rep.counts[1:]))


def test_properness_plateau():
    def spliced(x):
        ax = abs(x)
        if ax <= 1.0:
            return 0.0
        if ax >= 2.0:
            return x
        return math.copysign(2.0 * (ax - 1.0), x)

    rep = properness_probe(spliced, 0.0)
    assert rep.verdict == "suspected_infinite"
    assert all(c == 1 for c in rep.counts)
    assert rep.widths[-1] > 0.25 * 0.5


def test_properness_report_json():
    rep = properness_probe(lambda x: x, 0.0, levels=4)
    d = rep.to_json()
    assert d["verdict"] == "finite"
    assert len(d["component_counts"]) == len(d["radii"]) == 4
