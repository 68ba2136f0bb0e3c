import numpy as np
import pytest

from frontalforge.geom import (GermFrame, Isometry, LABEL_TO_CASE, Line,
                               Plane, classify_isometry, make_reflection,
                               make_rotation180)


def frame():
    return GermFrame(origin=np.zeros(3), tangent=(0.0, 0.0, 1.0),
                     normal=(0.0, 1.0, 0.0), cusp_direction=None)


def test_reflection_is_involution():
    T = make_reflection(Plane((0.5, 0.0, 0.0), (1.0, 0.0, 0.0)))
    assert T.is_involution()
    p = np.array([2.0, 1.0, -1.0])
    assert np.allclose(T(p), [-1.0, 1.0, -1.0])
    assert T.det == pytest.approx(-1.0)


def test_rotation180_is_involution():
    T = make_rotation180(Line((0.0, 0.0, 0.0), (0.0, 0.0, 1.0)))
    assert T.is_involution()
    assert np.allclose(T((1.0, 2.0, 3.0)), [-1.0, -2.0, 3.0])
    assert T.det == pytest.approx(1.0)


def test_isometry_compose_inverse():
    T = make_reflection(Plane((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)))
    S = make_rotation180(Line((0.0, 0.0, 0.0), (0.0, 0.0, 1.0)))
    TS = T.compose(S)
    p = np.array([0.3, -0.7, 1.1])
    assert np.allclose(TS(p), T(S(p)))
    assert np.allclose(TS.compose(TS.inverse())(p), p)


def test_isometry_rejects_non_orthogonal():
    with pytest.raises(Exception):
        Isometry(np.array([[1.0, 1.0, 0.0],
                           [0.0, 1.0, 0.0],
                           [0.0, 0.0, 1.0]]), np.zeros(3))


def test_frame_candidates_are_involutions_fixing_origin():
    fr = frame()
    for label, T in fr.candidate_isometries().items():
        assert T.is_involution()
        assert T.fixes(fr.origin)
        assert label in LABEL_TO_CASE


def test_classify_isometry():
    fr = frame()
    cands = fr.candidate_isometries()
    for label, T in cands.items():
        assert classify_isometry(T, fr) == label
    ident = Isometry(np.eye(3), np.zeros(3))
    assert classify_isometry(ident, fr) == "identity"
    other = make_reflection(Plane((0.0, 0.0, 0.0),
                                  np.array([1.0, 1.0, 0.0]) / np.sqrt(2)))
    assert classify_isometry(other, fr) == "other"


def test_cuspidal_edge_frame_matrices():
    # standard edge at the origin: tangent z, normal y, conormal -x
    fr = frame()
    cands = fr.candidate_isometries()
    assert np.allclose(cands["refl_Pi0"].Q, np.diag([1.0, -1.0, 1.0]))
    assert np.allclose(cands["refl_Pi1"].Q, np.diag([1.0, 1.0, -1.0]))
    assert np.allclose(cands["refl_Pi2"].Q, np.diag([-1.0, 1.0, 1.0]))
    assert np.allclose(cands["rot180_l2"].Q, np.diag([1.0, -1.0, -1.0]))


def test_json_round_trip():
    T = make_reflection(Plane((0.1, 0.2, 0.3), (0.0, 1.0, 0.0)))
    T2 = Isometry.from_json(T.to_json())
    p = np.array([0.4, -0.5, 0.6])
    assert np.allclose(T(p), T2(p))
