import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fhd.base_space import Base, BaseMap, BaseSpace
from fhd.henon import (
    CoefPoly,
    HenonFactor,
    IllConditionedInverse,
    SkewHenonSystem,
    factor_apply,
    factor_inverse,
    fiber_apply,
    inverse_of_forward,
    jacobian_constant,
    skew_backward,
    skew_forward,
)

from conftest import affine_lambda_system, point_system

SQUARE = HenonFactor.simple(2)
finite = st.floats(-3, 3, allow_nan=False)


def test_factor_apply_examples(disc_contraction):
    assert factor_apply(SQUARE, 0, (2, 2)) == (2, 2)
    assert factor_apply(SQUARE, 0, (0, 0)) == (0, 0)
    assert factor_apply(disc_contraction.factors[0], 0.25, (0, 1)) == (1, 1.25)


def test_factor_inverse_examples():
    assert factor_inverse(SQUARE, 0, (2, 2)) == (2, 2)
    assert factor_inverse(SQUARE, 0, (1, 0)) == (1, 1)


def test_roundtrip_on_random_points(disc_contraction):
    g = np.random.default_rng(0)
    f = disc_contraction.factors[0]
    for x, y, lr, li in g.uniform(-2, 2, (100, 4)):
        lam = 0.15 * complex(lr, li) / 2
        z = (complex(x, y), complex(y, -x))
        w = factor_inverse(f, lam, factor_apply(f, lam, z))
        assert np.allclose(w, z, rtol=1e-12, atol=1e-12)


def test_two_factor_composition_by_hand():
    sys = point_system(SQUARE, SQUARE)
    assert fiber_apply(sys, 0, (1, 2)) == (3, 7)


def test_single_factor_system_matches_factor(disc_contraction):
    z = (0.3 + 0.1j, -0.7j)
    assert fiber_apply(disc_contraction, 0.1, z) == factor_apply(disc_contraction.factors[0], 0.1, z)


def test_skew_forward_examples(classical):
    assert skew_forward(classical, 0, (1.5, -2j), 0)[0] == (1.5, -2j)
    assert skew_forward(classical, 0, (2, 2), 10)[0] == (2, 2)


def test_skew_forward_follows_the_base_orbit():
    from fhd.base_space import Base, BaseMap, BaseSpace
    from fhd.henon import SkewHenonSystem

    base = Base(BaseSpace("disc", radius=1.0), BaseMap("contraction", c=0.5))
    f = HenonFactor(2, (CoefPoly.from_triples([(1, 0, 1.0)]),), CoefPoly.const(1.0))
    sys = SkewHenonSystem(base, [f])
    # λ-orbit 1, 0.5: (0,1) -> (1, 2) -> (2, 3.5)
    z, trace = skew_forward(sys, 1.0, (0, 1), 2)
    assert z == (2, 3.5)
    assert trace == [(0, 1), (1, 2), (2, 3.5)]


def test_inverse_of_forward_roundtrip(disc_contraction):
    from fhd.green import julia_plus_samples

    # points near J+ keep their 5-step orbit inside V_R, where inversion is well conditioned
    X, Y = julia_plus_samples(disc_contraction, 0.2, 100, seed=0)
    for z in zip(X, Y):
        w, _ = skew_forward(disc_contraction, 0.2, z, 5)
        back = inverse_of_forward(disc_contraction, 0.2, w, 5)
        assert np.allclose(back, z, rtol=0, atol=1e-9)


def test_identity_base_inverse_is_plain_iterate(classical):
    z = (0.4 - 0.2j, 1.1)
    a = inverse_of_forward(classical, 0, z, 3)
    b = z
    for _ in range(3):
        b = fiber_apply(classical, 0, b, -1)
    assert a == b


def test_non_identity_base_inverse_differs_from_backward_orbit(disc_contraction):
    z = (0.3 + 0.2j, -0.4 + 0.9j)
    a = inverse_of_forward(disc_contraction, 0.2, z, 2)
    b, _ = skew_backward(disc_contraction, 0.2, z, 2)
    assert not np.allclose(a, b)


def test_jacobian_constants():
    assert jacobian_constant(point_system(SQUARE), 0) == 1
    sys = point_system(HenonFactor.simple(2, a=2.0), HenonFactor.simple(2, a=3.0))
    assert jacobian_constant(sys, 0) == 6


@given(st.tuples(finite, finite, finite, finite), st.floats(-0.25, 0.25))
def test_jacobian_matches_finite_differences(v, lam_re):
    sys = affine_lambda_system()
    lam = complex(lam_re, 0)
    z = np.array([complex(v[0], v[1]), complex(v[2], v[3])])
    h = 1e-6
    J = np.empty((2, 2), dtype=complex)
    for k in range(2):
        e = np.zeros(2, dtype=complex)
        e[k] = h
        J[:, k] = (np.array(fiber_apply(sys, lam, z + e)) - np.array(fiber_apply(sys, lam, z - e))) / (2 * h)
    det = np.linalg.det(J)
    assert abs(det - jacobian_constant(sys, lam)) <= 1e-5 * abs(det)


@given(st.tuples(finite, finite, finite, finite))
def test_fiber_roundtrip_property(v):
    sys = point_system(HenonFactor.simple(2, lower=(0.3, -0.2j), a=0.7), SQUARE)
    z = (complex(v[0], v[1]), complex(v[2], v[3]))
    w = fiber_apply(sys, 0, fiber_apply(sys, 0, z, 1), -1)
    assert np.allclose(w, z, rtol=1e-9, atol=1e-9)


def test_coefficient_polynomial_evaluation():
    p = CoefPoly.from_triples([(1, 0, 2.0), (0, 1, 1j), (0, 0, -1.0)])
    lam = 0.3 + 0.4j
    assert p(lam) == pytest.approx(2 * lam + 1j * lam.conjugate() - 1)
    assert p.bound(0.5) == pytest.approx(2 * 0.5 + 0.5 + 1)
    with pytest.raises(ValueError):
        CoefPoly.from_triples([(-1, 0, 1.0)])


def test_vanishing_jacobian_coefficient_rejected():
    with pytest.raises(ValueError):
        point_system(HenonFactor.simple(2, a=0.0))


def test_degenerate_inverse_is_reported():
    # a(λ) = λ - 0.1234 vanishes off the sampled base grid, so only the inverse can notice
    base = Base(BaseSpace("disc", radius=0.25), BaseMap("identity"))
    a = CoefPoly.from_triples([(1, 0, 1.0), (0, 0, -0.1234)])
    sys = SkewHenonSystem(base, [HenonFactor(2, (), a)])
    assert fiber_apply(sys, 0.2, fiber_apply(sys, 0.2, (1, 1)), -1) == pytest.approx((1, 1))
    with pytest.raises(IllConditionedInverse):
        fiber_apply(sys, 0.1234, (1, 1), -1)


def test_factor_validation():
    with pytest.raises(ValueError):
        HenonFactor.simple(1)
    with pytest.raises(ValueError):
        HenonFactor.simple(2, lower=(1, 2, 3))
