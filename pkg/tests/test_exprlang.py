import math

import numpy as np
import pytest

from frontalforge import exprlang as ex


def test_parse_and_evaluate():
    e = ex.parse("3*u + v^2 - 1")
    assert ex.evaluate(e, {"u": 2.0, "v": 3.0}) == pytest.approx(14.0)


def test_power_right_associative():
    e = ex.parse("2^3^2")
    assert ex.evaluate(e, {}) == pytest.approx(512.0)


def test_unary_minus_binds_before_power():
    # the grammar parses -u^2 as (-u)^2
    e = ex.parse("-u^2")
    assert ex.evaluate(e, {"u": 3.0}) == pytest.approx(9.0)


def test_constants():
    assert ex.evaluate(ex.parse("pi"), {}) == pytest.approx(math.pi)
    assert ex.evaluate(ex.parse("e"), {}) == pytest.approx(math.e)


def test_functions():
    e = ex.parse("sin(u)^2 + cos(u)^2")
    assert ex.evaluate(e, {"u": 0.7}) == pytest.approx(1.0)
    e = ex.parse("atan(tan(u))")
    assert ex.evaluate(e, {"u": 0.4}) == pytest.approx(0.4)


def test_syntax_error_offset():
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse("u + * v")


def test_unknown_function():
    with pytest.raises(ex.UnknownFunctionError):
        ex.parse("sinh(u)")


def test_domain_error():
    with pytest.raises((ex.EvalDomainError, ValueError, ZeroDivisionError)):
        ex.evaluate(ex.parse("sqrt(u)"), {"u": -1.0})


def test_to_source_round_trip():
    src = "u^2*sin(v) - 3/(u + 1)"
    e = ex.parse(src)
    e2 = ex.parse(ex.to_source(e))
    for u in (0.2, 1.5):
        for v in (-0.3, 0.9):
            assert (ex.evaluate(e, {"u": u, "v": v})
                    == pytest.approx(ex.evaluate(e2, {"u": u, "v": v})))


def test_diff():
    e = ex.parse("u^3 + sin(u)*v")
    d = ex.diff(e, "u")
    got = ex.evaluate(d, {"u": 0.5, "v": 2.0})
    assert got == pytest.approx(3 * 0.25 + math.cos(0.5) * 2.0)


def test_subs_and_free_vars():
    e = ex.parse("u + v")
    assert ex.free_vars(e) == {"u", "v"}
    e2 = ex.subs(e, "v", ex.parse("u^2"))
    assert ex.free_vars(e2) == {"u"}
    assert ex.evaluate(e2, {"u": 3.0}) == pytest.approx(12.0)


def test_mapdef_call_and_grid():
    m = ex.MapDef("m", ("u", "v"), ("u + v", "u*v", "v^2"))
    assert np.allclose(m((2.0, 3.0)), [5.0, 6.0, 9.0])
    U, V = np.meshgrid([0.0, 1.0], [2.0, 3.0], indexing="ij")
    g = m.eval_grid({"u": U, "v": V})
    assert g.shape == (3, 2, 2)
    assert g[1, 1, 0] == pytest.approx(2.0)


def test_mapdef_jet():
    m = ex.MapDef("m", ("u", "v"), ("u^2*v", "v^3", "u"))
    j = m.eval_jet((1.0, 2.0), 2)
    assert j.partial(1, 0)[0] == pytest.approx(4.0)
    assert j.partial(1, 1)[0] == pytest.approx(2.0)
    assert j.partial(0, 2)[1] == pytest.approx(12.0)


def test_mapdef_diff():
    m = ex.MapDef("m", ("u", "v"), ("u*v", "u + v", "v^2"))
    du = m.diff("u")
    assert np.allclose(du((2.0, 5.0)), [5.0, 1.0, 0.0])


def test_mapdef_params():
    m = ex.MapDef("m", ("u",), ("a*u",), {"a": 3.0})
    assert m((2.0,))[0] == pytest.approx(6.0)
