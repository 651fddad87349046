import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fhd import catalogue
from fhd.catalogue import POINT
from fhd.pk import (
    BAND,
    INSIDE,
    OUTSIDE,
    DegenerateMap,
    PkSkewSystem,
    ball_inclusions,
    basin_bitmap,
    basin_membership,
    check_green_pk,
    estimate_growth,
    fatou_detect,
    green_pk,
    green_pk_field,
    green_pk_series,
    sphere_samples,
)

# hypothesis reruns the body many times; share one system so growth is estimated once
SQUARES = catalogue.get("pk-squares")
PERTURBED = catalogue.get("pk-perturbed")


def test_growth_constants_squares(pk_squares):
    g = pk_squares.growth()
    # on the unit sphere |x0|^4 + |x1|^4 ranges over [1/2, 1]
    assert g.l == pytest.approx(1 / math.sqrt(2), rel=0.05)
    assert g.L == pytest.approx(1.0, rel=0.05)
    assert g.r == pytest.approx(0.5, rel=0.05)
    assert g.R == pytest.approx(1 / math.sqrt(2), rel=0.05)
    assert g.l <= g.sphere_min and g.L >= g.sphere_max
    assert g.r <= g.R and g.C >= 1


def test_growth_bounds_hold_on_samples(pk_perturbed):
    g = pk_perturbed.growth()
    rng = np.random.default_rng(4)
    X = sphere_samples(rng, 2000, 2) * rng.uniform(0.1, 5.0, (2000, 1))
    nx = np.linalg.norm(X, axis=1)
    for lam in (0, 0.2, 0.15j, -0.1 + 0.1j):
        nF = np.linalg.norm(pk_perturbed.apply(lam, X), axis=1)
        assert np.all(nF >= g.l * nx**2 * (1 - 1e-12))
        assert np.all(nF <= g.L * nx**2 * (1 + 1e-12))


def test_homogeneous_scaling(pk_perturbed):
    X = sphere_samples(np.random.default_rng(1), 100, 2)
    F1 = pk_perturbed.apply(0.1, X)
    F2 = pk_perturbed.apply(0.1, 2 * X)
    assert np.allclose(F2, 4 * F1, rtol=1e-13)


def test_closed_form_green_squares(pk_squares):
    assert green_pk(pk_squares, 0, (2, 1), 1e-10).value == pytest.approx(math.log(2), abs=1e-10)
    assert green_pk(pk_squares, 0, (1, 1), 1e-10).value == pytest.approx(0.0, abs=1e-10)
    assert green_pk(pk_squares, 0, (0, 0), 1e-10).value == -math.inf
    with pytest.raises(ValueError):
        green_pk(pk_squares, 0, (1, 1), 0.0)


@given(
    st.complex_numbers(min_magnitude=0.05, max_magnitude=20, allow_nan=False, allow_infinity=False),
    st.complex_numbers(min_magnitude=0.05, max_magnitude=20, allow_nan=False, allow_infinity=False),
)
def test_squares_green_is_max_log(x0, x1):
    v = green_pk(SQUARES, 0, (x0, x1), 1e-10)
    assert v.value == pytest.approx(max(math.log(abs(x0)), math.log(abs(x1))), abs=1e-9)
    assert v.error_bound <= 1e-10


@given(
    st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False),
    st.integers(0, 2**31 - 1),
)
def test_green_homogeneity(c, seed):
    X = sphere_samples(np.random.default_rng(seed), 8, 2) * 1.3
    G = green_pk_field(PERTURBED, 0.1j, X, 1e-10)[0]
    Gc = green_pk_field(PERTURBED, 0.1j, c * X, 1e-10)[0]
    assert np.allclose(Gc - G, math.log(abs(c)), atol=1e-9)


def test_green_invariance_and_tail_bound(pk_perturbed):
    r = check_green_pk(pk_perturbed, samples=500, tol=1e-10)
    assert r["homogeneity"] < 1e-9
    assert r["invariance"] < 2e-10
    assert r["bound_violations"] == 0


def test_series_converges_to_green(pk_perturbed):
    X = sphere_samples(np.random.default_rng(2), 50, 2) * 0.9
    S = green_pk_series(pk_perturbed, 0.05, X, 40)
    G = green_pk_field(pk_perturbed, 0.05, X, 1e-12)[0]
    assert np.allclose(S[:, -1], G, atol=1e-10)


@pytest.mark.parametrize(
    "x, verdict, orbit",
    [((0.5, 0.5), INSIDE, "to-zero"), ((2, 1), OUTSIDE, "to-infinity"), ((1, 1), BAND, "undecided")],
)
def test_basin_examples(pk_squares, x, verdict, orbit):
    m = basin_membership(pk_squares, 0, x)
    assert m["verdict"] == verdict
    assert m["orbit"] == orbit


def test_basin_bitmap_matches_orbits(pk_perturbed):
    b = basin_bitmap(pk_perturbed, 0.1, x0=0.8, half_width=1.5, res=48)
    assert b["orbit_agreement"] == 1.0
    assert (b["bitmap"] == -1).any() and (b["bitmap"] == 1).any()


@pytest.mark.parametrize("lam", [0, 0.2, -0.2j])
def test_ball_inclusions(pk_perturbed, lam):
    b = ball_inclusions(pk_perturbed, lam)
    assert b["inner_halving"] and b["max_ratio_at_r"] <= 0.5
    assert b["outer_doubling"] and b["min_ratio_at_doubling_radius"] >= 2.0


def test_inner_ball_lies_in_basin(pk_perturbed):
    g = pk_perturbed.growth()
    X = sphere_samples(np.random.default_rng(3), 500, 2) * g.r * 0.999
    assert np.all(green_pk_field(pk_perturbed, 0.1, X)[0] < 0)


def test_fatou_squares_matches_unit_circle(pk_squares):
    f = fatou_detect(pk_squares, 0, half_width=2.0, res=64)
    ax = np.linspace(-2, 2, 64)
    r = np.abs(ax[None, :] + 1j * ax[:, None])
    off = (r < 0.9) | (r > 1.1)
    assert f["harmonic"][off].all() and f["normal"][off].all()
    near = np.abs(r - 1) < f["h"] / 2
    assert not f["harmonic"][near].any()
    assert f["agreement"] >= 0.95


def test_fatou_perturbed_agreement(pk_perturbed):
    f = fatou_detect(pk_perturbed, 0.1, half_width=2.0, res=64)
    assert f["agreement"] >= 0.95
    with pytest.raises(ValueError):
        fatou_detect(pk_perturbed, 0.1, res=16, probes=3)


@pytest.mark.parametrize("c", [0.0, -1.0, -0.3 + 0.2j, 1e3])
def test_degenerate_map_rejected(c):
    # (x0 (x0 + c x1), x1 (x0 + c x1)) vanishes on the line x0 = -c x1
    comps = [
        [((2, 0), [(0, 0, 1.0)]), ((1, 1), [(0, 0, c)])],
        [((1, 1), [(0, 0, 1.0)]), ((0, 2), [(0, 0, c)])],
    ]
    with pytest.raises(DegenerateMap):
        estimate_growth(PkSkewSystem.from_spec(POINT, 1, 2, comps))


def test_nondegenerate_three_variable_map_accepted():
    comps = [
        [((2, 0, 0), [(0, 0, 1.0)])],
        [((0, 2, 0), [(0, 0, 1.0)]), ((0, 1, 1), [(0, 0, 0.7j)])],
        [((0, 0, 2), [(0, 0, 1.0)]), ((0, 1, 1), [(0, 0, 1.0)])],
    ]
    g = estimate_growth(PkSkewSystem.from_spec(POINT, 2, 2, comps))
    assert 0 < g.l <= g.L and g.r <= g.R


@pytest.mark.parametrize(
    "k, degree, comps",
    [
        (1, 2, [[((2, 0), [(0, 0, 1.0)])]]),
        (1, 2, [[((2, 0), [(0, 0, 1.0)])], [((1, 0), [(0, 0, 1.0)])]]),
        (1, 1, [[((1, 0), [(0, 0, 1.0)])], [((0, 1), [(0, 0, 1.0)])]]),
    ],
)
def test_malformed_maps_rejected(k, degree, comps):
    with pytest.raises(ValueError):
        PkSkewSystem.from_spec(POINT, k, degree, comps)
