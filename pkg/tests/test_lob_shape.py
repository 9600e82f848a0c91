import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tvlob.errors import InvalidConfig
from tvlob.lob_shape import (BlockShape, PowerLawShape, TabulatedShape, monotone_pattern,
                             shape_F, shape_F_inv, shape_from_dict, shape_G)

PEAK = TabulatedShape(np.linspace(-4, 4, 17), 1.0 / (1.0 + 0.3 * np.linspace(-4, 4, 17) ** 2))
VALLEY = TabulatedShape(np.linspace(-4, 4, 17), 1.0 + 0.5 * np.abs(np.linspace(-4, 4, 17)))
SHAPES = [BlockShape(), PowerLawShape(-0.3), PowerLawShape(0.5), PowerLawShape(1.0), PEAK, VALLEY]
IDS = ["block", "pl-0.3", "pl0.5", "pl1", "tab-peak", "tab-valley"]

volumes = st.floats(-50, 50, allow_nan=False)


@pytest.mark.parametrize("shape, x, expected", [
    (BlockShape(), 2.0, 2.0),
    (PowerLawShape(1.0), 2.0, 2.0),
    (PowerLawShape(-0.3), -1.0, -1 / 0.7),
])
def test_F_values(shape, x, expected):
    assert shape_F(shape, x) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("shape, v, expected", [
    (BlockShape(), -3.0, -3.0),
    (PowerLawShape(1.0), 2.0, 2.0),
    (PowerLawShape(0.5), 0.0, 0.0),
    (PEAK, 0.0, 0.0),
])
def test_F_inv_values(shape, v, expected):
    assert shape_F_inv(shape, v) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("shape, v, expected", [
    (BlockShape(), 3.0, 4.5),
    (BlockShape(), 0.0, 0.0),
    (PowerLawShape(0.0), 3.0, 4.5),
])
def test_G_values(shape, v, expected):
    assert shape_G(shape, v) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("shape", SHAPES, ids=IDS)
@given(v=volumes)
def test_F_inverts_F_inv(shape, v):
    assert float(shape.F(shape.F_inv(v))) == pytest.approx(v, rel=1e-10, abs=1e-10)
    # power-law inverses of volumes below ~1e-150 underflow to 0
    if v == 0 or abs(v) > 1e-150:
        assert np.sign(shape.F_inv(v)) == np.sign(v)


@pytest.mark.parametrize("shape", SHAPES, ids=IDS)
def test_vectorised_inverse_matches_scalar(shape):
    vs = np.linspace(-30, 30, 41)
    vec = shape.F_inv(vs)
    scal = np.array([float(shape.F_inv(v)) for v in vs])
    np.testing.assert_allclose(vec, scal, rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("shape", SHAPES, ids=IDS)
@given(v=st.floats(-20, 20).filter(lambda v: abs(v) > 1e-3))
def test_G_derivative_is_F_inv(shape, v):
    h = 1e-4 * abs(v)
    fd = (float(shape.G(v + h)) - float(shape.G(v - h))) / (2 * h)
    assert fd == pytest.approx(float(shape.F_inv(v)), rel=1e-6, abs=1e-7)


@pytest.mark.parametrize("shape", SHAPES, ids=IDS)
@given(v1=volumes, v2=volumes, w=st.floats(0, 1))
def test_G_convex_and_nonnegative(shape, v1, v2, w):
    G = lambda v: float(shape.G(v))
    lhs = G(w * v1 + (1 - w) * v2)
    rhs = w * G(v1) + (1 - w) * G(v2)
    assert lhs <= rhs + 1e-10 * (1 + abs(rhs))
    assert G(v1) >= 0 and float(shape.F_tilde(v1)) >= 0


@pytest.mark.parametrize("shape", SHAPES, ids=IDS)
@given(a=st.floats(0.01, 0.99), b=st.floats(0.01, 50), x=volumes)
def test_scaled_G_inequality(shape, a, b, x):
    if a * b > 1:
        b = 1 / a
    val = float(shape.G(x)) - float(shape.G(a * b * x)) / b
    assert val >= -1e-10 * (1 + float(shape.G(x)))


@pytest.mark.parametrize("shape", [BlockShape(), PowerLawShape(0.5), PowerLawShape(1.0), VALLEY])
def test_x_f_increasing_for_valley_shapes(shape):
    xs = np.linspace(-10, 10, 2001)
    assert np.all(np.diff(shape.xf(xs)) > 0)


def test_tabulated_matches_block_when_flat():
    xs = np.linspace(-3, 3, 7)
    tab = TabulatedShape(xs, np.ones_like(xs))
    vs = np.linspace(-10, 10, 21)
    np.testing.assert_allclose(tab.F(vs), vs, atol=1e-13)
    np.testing.assert_allclose(tab.G(vs), vs ** 2 / 2, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(tab.F_tilde(vs), vs ** 2 / 2, rtol=1e-12, atol=1e-12)


def test_tabulated_F_tilde_matches_quadrature():
    from scipy.integrate import quad
    for x in (-6.0, -1.3, 0.7, 3.9, 5.5):
        q = quad(lambda y: y * float(VALLEY.f(y)), 0, x, points=list(VALLEY.x[abs(VALLEY.x) < abs(x)]))[0]
        assert float(VALLEY.F_tilde(x)) == pytest.approx(q, rel=1e-10)


def test_monotone_patterns():
    assert monotone_pattern(BlockShape(), "peak")[0]
    assert monotone_pattern(BlockShape(), "valley")[0]
    ok, w = monotone_pattern(PowerLawShape(1.0), "peak")
    assert not ok and w is not None
    assert monotone_pattern(PowerLawShape(-0.5), "peak")[0]
    assert not monotone_pattern(PowerLawShape(-0.5), "valley")[0]


def test_power_law_f_at_zero_diverges_for_negative_gamma():
    assert np.isinf(PowerLawShape(-0.3).f(0.0))
    assert float(PowerLawShape(-0.3).xf(0.0)) == 0.0


def test_shape_descriptors():
    for s in (BlockShape(), PowerLawShape(0.5), PEAK):
        assert shape_from_dict(s.to_dict()) == s
    with pytest.raises(InvalidConfig):
        shape_from_dict({"kind": "power_law", "gamma": -1.0})
    with pytest.raises(InvalidConfig):
        shape_from_dict({"kind": "tabulated", "x": [0, 1, 2], "f": [1, 1, 1]})
    with pytest.raises(InvalidConfig):
        shape_from_dict({"kind": "triangle"})
