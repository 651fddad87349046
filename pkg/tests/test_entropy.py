import math
import warnings

import numpy as np
import pytest

from fhd import kernels
from fhd._backend import HAS_NUMBA, use_backend
from fhd.entropy import (
    ProductMeasureSpec,
    entropy_estimate,
    product_measure,
    push_forward,
    saddle_point,
    sample_julia_cloud,
    separated_counts,
    trajectories,
    unstable_direction,
)
from fhd.filtration import get_filtration
from fhd.green import UnsupportedConfiguration, green_field

BACKENDS = ["numpy", "numba"] if HAS_NUMBA else ["numpy"]


@pytest.fixture(scope="module")
def small_cloud(classical):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return sample_julia_cloud(classical, 0, 2000, res=256, seed=3)


def _dn(traj, p, q, n):
    return float(np.sqrt(((traj[p, :n] - traj[q, :n]) ** 2).sum(axis=1)).max())


@pytest.mark.parametrize("backend", BACKENDS)
def test_greedy_set_is_separated_and_maximal(classical, backend):
    rng = np.random.default_rng(0)
    cloud = 0.4 * (rng.uniform(-1, 1, (300, 2)) + 1j * rng.uniform(-1, 1, (300, 2)))
    traj = trajectories(classical, 0, cloud, 3)
    eps = 0.1
    with use_backend(backend):
        chosen = kernels.greedy_separated(rng.permutation(300), traj, 3, eps, np.zeros(300, dtype=bool))
    idx = np.flatnonzero(chosen)
    assert len(idx) > 1
    for i, p in enumerate(idx):
        for q in idx[i + 1:]:
            assert _dn(traj, p, q, 3) > eps
    for p in np.flatnonzero(~chosen):
        assert min(_dn(traj, p, q, 3) for q in idx) <= eps


@pytest.mark.parametrize("backend", BACKENDS)
def test_counts_nondecreasing_in_n(classical, small_cloud, backend):
    with use_backend(backend):
        c = separated_counts(classical, 0, small_cloud, 6, 0.05, shuffles=2)
    assert np.all(np.diff(c) >= 0)
    assert c[0] >= 1


def test_saddle_fixed_point(classical):
    p = saddle_point(classical, 0)
    f = push_forward(classical, 0, p[None, :], 1)[0]
    assert np.abs(f - p).max() < 1e-9
    # (x, y) -> (y, y^2 - x) fixes (2, 2); eigenvalues 2 +- sqrt(3)
    assert np.allclose(p, [2, 2], atol=1e-9)
    v = unstable_direction(classical, 0, p)
    Jv = (push_forward(classical, 0, (p + 1e-7 * v)[None, :], 1)[0] - f) / 1e-7
    assert np.allclose(Jv, (2 + math.sqrt(3)) * v, atol=1e-5)


def test_cloud_in_filtration_box_and_on_julia(classical, small_cloud):
    R = get_filtration(classical).R
    assert len(small_cloud) >= 1000
    assert np.abs(small_cloud).max() <= R
    gp = green_field(classical, 0, small_cloud[:, 0], small_cloud[:, 1], "+").value
    gm = green_field(classical, 0, small_cloud[:, 0], small_cloud[:, 1], "-").value
    assert np.maximum(gp, gm).max() < 1e-3


def test_cloud_threshold_nesting(classical):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fine = sample_julia_cloud(classical, 0, 500, eta=1e-3, res=128, seed=5)
    gp = green_field(classical, 0, fine[:, 0], fine[:, 1], "+").value
    gm = green_field(classical, 0, fine[:, 0], fine[:, 1], "-").value
    assert np.all(np.maximum(gp, gm) < 1e-2)


def test_cloud_count_floor(classical):
    with pytest.raises(ValueError):
        sample_julia_cloud(classical, 0, 99)


def test_cloud_needs_identity_base(disc_contraction):
    with pytest.raises(UnsupportedConfiguration):
        sample_julia_cloud(disc_contraction, 0.1, 200)


def test_small_entropy_run_is_positive(classical, small_cloud):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        run = entropy_estimate(classical, 0, small_cloud, n_max=8, eps=0.05, shuffles=2, saturation=0.25)
    assert run.counts == sorted(run.counts)
    assert 0.2 < run.slope < 1.2
    assert run.to_dict()["cloud_size"] == len(small_cloud)


def test_product_measure_spec_validation():
    with pytest.raises(ValueError):
        ProductMeasureSpec((0.1,), (0.5,))
    with pytest.raises(ValueError):
        ProductMeasureSpec((0.1, 0.2), (1.0,))
    with pytest.raises(ValueError):
        ProductMeasureSpec((0.1, 0.2), (1.2, -0.2))


def test_product_measure_single_atom(disc_contraction):
    out = product_measure(ProductMeasureSpec((0.1,), (1.0,)), disc_contraction, res=24)
    assert out["total_mass"] == pytest.approx(1.0, abs=0.1)
    assert out["invariance"]["ratio"] == pytest.approx(out["invariance"]["expected"], rel=0.05)


def test_product_measure_two_atoms(disc_contraction):
    spec = ProductMeasureSpec((0.1, -0.1j), (0.5, 0.5))
    out = product_measure(spec, disc_contraction, res=24, invariance_check=False)
    assert out["total_mass"] == pytest.approx(1.0, abs=0.1)
    assert out["total_mass"] == pytest.approx(sum(a["weight"] * a["mass"] for a in out["atoms"]))
    # share of the positive mass over the atoms that lies inside the bidisc V_R
    assert out["mass_in_bidisc"] == pytest.approx(1.0)


@pytest.mark.slow
def test_slope_stable_under_resampling(classical):
    slopes = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for seed in (1, 2):
            cloud = sample_julia_cloud(classical, 0, 20_000, seed=seed)
            slopes.append(entropy_estimate(classical, 0, cloud, seed=seed).slope)
    assert abs(slopes[0] - slopes[1]) <= 0.05
