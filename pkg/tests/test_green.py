import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fhd import kernels
from fhd.green import (
    box_samples,
    check_invariance,
    green,
    green_field,
    green_n,
    holder_estimate,
    julia_plus_samples,
    lambda_continuity,
    lambda_continuity_table,
    successive_differences,
    u_bounds,
    u_correction,
    epsilon_at,
)
from fhd.filtration import get_filtration
from fhd.henon import HenonFactor
from fhd.oracle import plain_henon_green

from conftest import point_system


def test_green_n_examples(classical):
    assert green_n(classical, 0, (0.5, 0.5j), 0) == 0.0
    # H(0, 10) = (10, 100): G_1 = (1/2) log sqrt(10100)
    assert green_n(classical, 0, (0, 10), 1) == pytest.approx(0.5 * math.log(math.sqrt(10100)), rel=1e-14)
    for n in (0, 1, 5):
        assert green_n(classical, 0, (2, 2), n) == pytest.approx(math.log(math.sqrt(8)) / 2**n, rel=1e-14)


def test_green_on_fixed_point_and_origin(classical):
    g = green(classical, 0, (2, 2))
    assert g.value == 0 and g.cap_limited
    assert green(classical, 0, (0, 0)).value == 0


def test_green_asymptotics(classical):
    g = green(classical, 0, (0, 1e6), tol=1e-6)
    assert abs(g.value - math.log(1e6)) < 1e-3
    assert g.error_bound <= 1e-6


@pytest.mark.parametrize("side", ["+", "-"])
def test_identity_base_matches_plain_oracle(side):
    sys = point_system(HenonFactor.simple(2, lower=(-0.3 + 0.1j,), a=0.8))
    X, Y = box_samples(np.random.default_rng(3), 3.0, 300)
    got = green_field(sys, 0, X, Y, side, tol=1e-12).value
    want = [plain_henon_green([-0.3 + 0.1j, 0, 1], 0.8, z, forward=(side == "+")) for z in zip(X, Y)]
    assert np.allclose(got, want, rtol=0, atol=1e-8)


def test_certified_error_bound(disc_contraction):
    X, Y = box_samples(np.random.default_rng(1), 4.0, 2000)
    f = green_field(disc_contraction, 0.2, X, Y, "+", tol=1e-9)
    esc = f.status == kernels.CONVERGED
    assert esc.any()
    assert np.all(f.error_bound[esc] <= 1e-9)
    # tighter tolerance moves the value by less than the looser bound
    tight = green_field(disc_contraction, 0.2, X, Y, "+", tol=1e-13).value
    assert np.all(np.abs(tight - f.value)[esc] <= 1e-9 + 1e-13)


@given(st.integers(0, 2**16), st.sampled_from(["+", "-"]))
def test_green_is_nonnegative_and_finite(seed, side):
    sys = point_system(HenonFactor.simple(3, lower=(0.5, -1j), a=1.5))
    X, Y = box_samples(np.random.default_rng(seed), 5.0, 200)
    v = green_field(sys, 0, X, Y, side).value
    assert np.all(np.isfinite(v)) and np.all(v >= 0)


def test_invariance_residual(disc_contraction):
    res = check_invariance(disc_contraction, 0.1 + 0.1j, samples=1000, tol=1e-8, seed=0)
    assert res["max"] < 1e-6


def test_invariance_on_bounded_point_is_zero_identity(classical):
    # (2, 2) is fixed: both sides of each identity are 0
    assert green(classical, 0, (2, 2), "+").value == 0 == green(classical, 0, (2, 2), "-").value


def test_successive_difference_ratio_near_julia(disc_contraction):
    X, Y = julia_plus_samples(disc_contraction, 0.1, 1000, seed=0)
    sd = successive_differences(disc_contraction, 0.1, X, Y, 5, 40)
    assert sd["ratio"] == pytest.approx(0.5, rel=0.1)


def test_u_correction_far_out(classical):
    assert abs(u_correction(classical, 0, (0, 1e8))) < 1e-6


def test_u_correction_within_bounds(classical):
    R = get_filtration(classical).R
    eps = epsilon_at(classical, R)
    lo, hi = u_bounds(classical, R)
    u = u_correction(classical, 0, (0, 10))
    assert lo <= u <= hi
    assert abs(u) < math.log(1 + eps) / (classical.d - 1) + 1e-12 or u < 0


def test_u_correction_forgets_x(classical):
    gaps = []
    for y in (10.0, 100.0, 1000.0):
        gaps.append(abs(u_correction(classical, 0, (0.9 * y, y)) - u_correction(classical, 0, (-0.5j * y, y))))
    assert gaps[0] > gaps[1] > gaps[2]


def test_lambda_continuity(disc_contraction):
    assert lambda_continuity(disc_contraction, 0.1, 0.1) == 0.0
    assert lambda_continuity(disc_contraction, 0.1, 0.101) < 0.05
    rows = lambda_continuity_table(disc_contraction, 0.1, delta0=1e-2, levels=5)
    for a, b in zip(rows, rows[1:]):
        assert b["sup_diff"] <= 0.5 * a["sup_diff"] * 1.2


def test_holder_theory_and_measurement(classical):
    h = holder_estimate(classical, pairs=4000)
    assert 0 < h.theoretical_exponent <= 1
    assert h.empirical_exponent >= h.theoretical_exponent - 0.05


def test_local_exponent_at_the_saddle_exceeds_the_bound(classical):
    # (2, 2) is a saddle with unstable eigenvalue 2 + sqrt(3): local exponent log 2 / log(2 + sqrt 3)
    rng = np.random.default_rng(0)
    scales = np.logspace(-1, -6, 6)
    sups = []
    for s in scales:
        v = rng.normal(size=(2000, 4))
        v /= np.linalg.norm(v, axis=1)[:, None]
        sups.append(green_field(classical, 0, 2 + s * (v[:, 0] + 1j * v[:, 1]), 2 + s * (v[:, 2] + 1j * v[:, 3])).value.max())
    slope = np.polyfit(np.log(scales), np.log(sups), 1)[0]
    assert slope == pytest.approx(math.log(2) / math.log(2 + math.sqrt(3)), abs=0.03)
    assert slope >= holder_estimate(classical, pairs=800).theoretical_exponent
