import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fhd.filtration import get_filtration
from fhd.slices import (
    Window,
    Window4,
    default_window,
    horizontal,
    julia_lower_semicontinuity,
    julia_support,
    laplacian_masses,
    measure_from_potential,
    mu_slice,
    pluricomplex_green,
    pullback_identity_check,
    support_vs_escape_boundary,
    vertical,
    wedge_measure,
)

ESCAPE_WINDOW = Window(20j, 4.0, 128)  # |y| in [16, 24] on x = 0: inside V_R^+


@pytest.fixture(scope="module")
def classical_plus(classical):
    return mu_slice(classical, 0, "+", vertical(0), default_window(classical, res=512))


def test_plus_slice_is_a_probability(classical_plus):
    assert classical_plus.total == pytest.approx(1, abs=0.02)
    assert classical_plus.signed_total == pytest.approx(1, abs=0.02)
    assert classical_plus.negative_mass < 0.01


def test_minus_slice_is_a_probability(classical):
    m = mu_slice(classical, 0, "-", horizontal(0), default_window(classical, res=256))
    assert m.total == pytest.approx(1, abs=0.02)


def test_escape_region_slice_is_massless(classical):
    m = mu_slice(classical, 0, "+", vertical(0), ESCAPE_WINDOW)
    assert abs(m.total) < 1e-3
    assert not julia_support(m, 0.99).any()


def test_support_nesting(classical_plus):
    small, big = julia_support(classical_plus, 0.5), julia_support(classical_plus, 0.99)
    assert small.any() and np.all(big[small])


def test_support_hugs_the_escape_boundary(classical_plus):
    assert support_vs_escape_boundary(classical_plus, 0.99) <= 2


def test_pullback_mass_ratio_classical(classical):
    rep = pullback_identity_check(classical, 0, "+", 1, res=256)
    assert rep["ratio"] == pytest.approx(2, rel=0.05)


@pytest.mark.parametrize("side, direction, expected", [("+", 1, 2.0), ("-", -1, 2.0), ("+", -1, 0.5), ("-", 1, 0.5)])
def test_all_four_pullback_identities(disc_contraction, side, direction, expected):
    rep = pullback_identity_check(disc_contraction, 0.1, side, direction, res=128)
    assert rep["expected"] == expected
    assert rep["relative_error"] < 0.05


def test_pluricomplex_green(classical):
    assert pluricomplex_green(classical, 0, (2, 2)) == 0
    assert pluricomplex_green(classical, 0, (0, 1e6)) == pytest.approx(math.log(1e6), abs=1e-6)
    assert pluricomplex_green(classical, 0, (1e6, 0)) == pytest.approx(math.log(1e6), abs=1e-6)


def test_wedge_probability_and_mode_agreement(classical):
    w = wedge_measure(classical, 0, res=24)
    assert w.mass_mix == pytest.approx(1, abs=0.1)
    assert abs(w.mass_mix - w.mass_ma) <= 0.1 * w.mass_mix
    assert w.mass_in_bidisc == pytest.approx(1)


def test_wedge_in_escape_region_is_massless(classical):
    w = wedge_measure(classical, 0, Window4(lo=(4, 4, 4, 4), hi=(5, 5, 5, 5)), res=24)
    assert abs(w.mass_mix) < 1e-3 and abs(w.mass_ma) < 1e-3


def test_wedge_rejects_bad_windows(classical):
    with pytest.raises(ValueError):
        wedge_measure(classical, 0, Window4(lo=(0, 0, 0, 0), hi=(1, 1, 1, 2)), res=24)
    with pytest.raises(ValueError):
        wedge_measure(classical, 0, res=8)


def test_lower_semicontinuity(disc_contraction):
    rep = julia_lower_semicontinuity(disc_contraction, 0.1, [0.0, 1e-2, 5e-3, 2.5e-3], res=512)
    eps = {r["delta"]: r["eps_cells"] for r in rep["rows"]}
    assert eps[0.0] == 0
    assert eps[1e-2] <= 3
    assert rep["monotone_within_one_cell"]


@given(st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5), st.floats(-3, 3))
def test_harmonic_polynomials_carry_no_mass(a, b, c):
    t = Window(0j, 1.0, 33).grid()
    u = (a * t**2 + b * t**3).real + c
    assert np.abs(laplacian_masses(u, 9)).max() < 1e-9 * (1 + abs(a) + abs(b))


@given(st.integers(8, 64), st.sampled_from([5, 9]))
def test_masses_of_a_paraboloid_telescope(res, stencil):
    # Δ|t|^2 = 4, so each interior cell carries 4 h^2 / 2π
    w = Window(0j, 1.0, res)
    m = measure_from_potential(np.abs(w.grid()) ** 2, w, stencil=stencil)
    assert m.signed_total == pytest.approx(4 * w.h**2 * (res - 2) ** 2 / (2 * np.pi), rel=1e-10)


def test_radial_log_has_unit_mass():
    # (1/2π) Δ max(log|t|, 0) is arc length on the unit circle / 2π
    w = Window(0j, 2.0, 401)
    with np.errstate(divide="ignore"):
        u = np.maximum(np.log(np.abs(w.grid())), 0.0)
    m = measure_from_potential(u, w)
    assert m.total == pytest.approx(1, abs=0.01)


def test_low_resolution_is_rejected(classical):
    with pytest.raises(ValueError):
        mu_slice(classical, 0, window=Window(0j, 7.0, 4))
