"""Separated-set entropy estimates on J and the fibered product measure."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .green import DEFAULT_TOL, UnsupportedConfiguration, green_field
from .filtration import get_filtration
from .slices import Window4, laplacian_masses, pullback_identity_check, wedge_measure


class SparseCloud(UserWarning):
    pass


class TruncatedFit(UserWarning):
    pass


def _require_identity(sys):
    if sys.base.map.kind != "identity":
        raise UnsupportedConfiguration("entropy estimates are defined here for identity base maps only")


def push_forward(sys, lam, P, steps):
    """Apply the fiber map ``steps`` times to rows of P (shape (N, 2)); inf once an orbit overflows."""
    table = sys.step_table(sys.base.space.check(lam), max(steps, 1), "forward")
    X, Y = P[:, 0].copy(), P[:, 1].copy()
    with np.errstate(all="ignore"):
        for k in range(steps * sys.m):
            acc = np.full_like(Y, table.coef[k, table.deg[k]])
            for i in range(table.deg[k] - 1, -1, -1):
                acc = acc * Y + table.coef[k, i]
            X, Y = Y, acc - table.b[k] * X
    out = np.stack([X, Y], axis=1)
    out[~np.isfinite(out).all(axis=1)] = np.inf
    return out


def orbits(sys, lam, P, n):
    """Array (n, N, 2) of H^i(p) for i = 0..n-1."""
    out = np.empty((n,) + P.shape, dtype=complex)
    out[0] = P
    for i in range(1, n):
        out[i] = push_forward(sys, lam, out[i - 1], 1)
    return out


def _fiber_jacobian(sys, lam, z, h=1e-7):
    """Forward difference Jacobian of one fiber step (complex-analytic, so one direction per column)."""
    base = push_forward(sys, lam, z[None, :], 1)[0]
    J = np.empty((2, 2), dtype=complex)
    for k in range(2):
        e = np.zeros(2, dtype=complex)
        e[k] = h
        J[:, k] = (push_forward(sys, lam, (z + e)[None, :], 1)[0] - base) / h
    return base, J


def saddle_point(sys, lam, starts=12, seed=0):
    """A fixed point of the fiber step with one expanding and one contracting eigenvalue.

    Newton from a grid of real starts plus random complex ones; ties broken by
    the largest expanding eigenvalue.  Raises if none is found.
    """
    _require_identity(sys)
    R = get_filtration(sys).R
    rng = np.random.default_rng(seed)
    grid = np.linspace(-R, R, starts)
    cands = [np.array([x, y], dtype=complex) for x in grid for y in grid]
    cands += list(R * (rng.uniform(-1, 1, (64, 2)) + 1j * rng.uniform(-1, 1, (64, 2))))
    best, best_rate = None, 0.0
    for z in cands:
        for _ in range(60):
            f, J = _fiber_jacobian(sys, lam, z)
            if not np.all(np.isfinite(f)) or np.abs(z).max() > 10 * R:
                break
            try:
                dz = np.linalg.solve(J - np.eye(2), -(f - z))
            except np.linalg.LinAlgError:
                break
            z = z + dz
            if np.abs(dz).max() < 1e-14 * max(1.0, np.abs(z).max()):
                break
        f, J = _fiber_jacobian(sys, lam, z)
        if not np.all(np.isfinite(f)) or np.abs(f - z).max() > 1e-9:
            continue
        ev = np.abs(np.linalg.eigvals(J))
        if ev.min() < 0.99 and ev.max() > 1.01 and ev.max() > best_rate:
            best, best_rate = z, float(ev.max())
    if best is None:
        raise ValueError("no saddle fixed point found")
    return best


def unstable_direction(sys, lam, p):
    """Unit eigenvector of the expanding eigenvalue of the fiber step at the fixed point p."""
    _, J = _fiber_jacobian(sys, lam, p)
    w, V = np.linalg.eig(J)
    v = V[:, np.argmax(np.abs(w))]
    return v / np.linalg.norm(v)


def _line_green(sys, lam, p0, v, T):
    T = np.asarray(T)
    g = green_field(sys, lam, (p0[0] + T * v[0]).ravel(), (p0[1] + T * v[1]).ravel(), "+", tol=1e-12)
    return g.value.reshape(T.shape)


def _pick(masses, rng):
    """One flat index per row of `masses` (rows need not be normalised; all-zero rows pick uniformly)."""
    m = np.maximum(masses, 0.0)
    tot = m.sum(axis=1, keepdims=True)
    m = np.where(tot > 0, m / np.where(tot > 0, tot, 1.0), 1.0 / m.shape[1])
    u = rng.uniform(size=(m.shape[0], 1))
    return np.minimum((np.cumsum(m, axis=1) < u).sum(axis=1), m.shape[1] - 1)


def sample_line_measure(sys, lam, p0, v, half_width, count, rng, res=1024, sub=8, levels=2, descent=24):
    """Parameters t with p0 + t v distributed by the slice measure of G+ on the line, |t| within the window.

    Cells are drawn by Laplacian mass on a res x res grid, then refined `levels`
    times on sub x sub subgrids of the chosen cell; a damped descent on G+
    moves each point onto the zero set (down to floating-point resolution).
    """
    h = 2 * half_width / (res - 1)
    ax = np.linspace(-half_width, half_width, res)
    G = _line_green(sys, lam, p0, v, ax[None, :] + 1j * ax[:, None])
    m = np.maximum(laplacian_masses(G).ravel(), 0.0)
    cell = rng.choice(m.size, size=count, p=m / m.sum())
    # interior node (r, c) of the grid sits at ax[c + 1] + i ax[r + 1]
    r, c = np.divmod(cell, res - 2)
    T = ax[c + 1] + 1j * ax[r + 1]
    offs = (np.arange(sub + 2) - (sub + 1) / 2) / sub
    for _ in range(levels):
        sg = T[:, None, None] + h * (offs[None, None, :] + 1j * offs[None, :, None])
        Gs = _line_green(sys, lam, p0, v, sg)
        ms = np.stack([laplacian_masses(g) for g in Gs]).reshape(count, -1)
        r, c = np.divmod(_pick(ms, rng), sub)
        T = T + h * (offs[c + 1] + 1j * offs[r + 1])
        h /= sub
    T = T + h * (rng.uniform(-0.5, 0.5, count) + 1j * rng.uniform(-0.5, 0.5, count))
    g = _line_green(sys, lam, p0, v, T)
    for _ in range(descent):
        dt = np.maximum(1e-3 * h, 1e-14 * half_width)
        gx = (_line_green(sys, lam, p0, v, T + dt) - g) / dt
        gy = (_line_green(sys, lam, p0, v, T + 1j * dt) - g) / dt
        n2 = gx * gx + gy * gy
        step = np.where(n2 > 0, 0.5 * g / np.where(n2 > 0, n2, 1.0), 0.0) * (gx + 1j * gy)
        Tn = T - step
        gn = _line_green(sys, lam, p0, v, Tn)
        better = gn < g
        T = np.where(better, Tn, T)
        g = np.where(better, gn, g)
        h = max(float(np.abs(step).max()), 1e-14 * half_width)
    return T


def sample_julia_cloud(sys, lam, count, eta=1e-3, seed=0, half_width=1e-3, push=None, spread=0.1, res=1024, levels=2):
    """Points with max(G+, G-) < eta on a local piece of J = J+ ∩ J-.

    Points are drawn from the G+ slice measure on the unstable line through a
    saddle fixed point, then pushed forward: the image follows the unstable
    manifold (where G- vanishes) and G- of the line's deviation drops by d per
    step.  push defaults to the least step count whose image reaches diameter
    `spread`.  Survivors of the eta test are returned, rows (x, y).
    """
    _require_identity(sys)
    if count < 100:
        raise ValueError("count must be >= 100")
    lam = sys.base.space.check(lam)
    rng = np.random.default_rng(seed)
    p0 = saddle_point(sys, lam)
    v = unstable_direction(sys, lam, p0)
    T = sample_line_measure(sys, lam, p0, v, half_width, count, rng, res, levels=levels)
    P = p0[None, :] + T[:, None] * v[None, :]
    if push is None:
        push, C = 0, P
        while push < 64 and _diameter(C) < spread:
            C = push_forward(sys, lam, C, 1)
            push += 1
    C = push_forward(sys, lam, P, push)
    C = C[np.isfinite(C).all(axis=1)]
    gp = green_field(sys, lam, C[:, 0], C[:, 1], "+").value
    gm = green_field(sys, lam, C[:, 0], C[:, 1], "-").value
    C = C[np.maximum(gp, gm) < eta]
    if len(C) < count / 2:
        warnings.warn(f"only {len(C)} of {count} cloud points found", SparseCloud, stacklevel=2)
    return C


def _diameter(C):
    C = C[np.isfinite(C).all(axis=1)]
    return float(max(np.ptp(C.real, axis=0).max(), np.ptp(C.imag, axis=0).max())) if len(C) else 0.0


def trajectories(sys, lam, cloud, n):
    """Real coordinates of H^i(p), shape (N, n, 4)."""
    orb = orbits(sys, lam, cloud, n)
    T = np.stack([orb[..., 0].real, orb[..., 0].imag, orb[..., 1].real, orb[..., 1].imag], axis=2)
    return np.ascontiguousarray(T.transpose(1, 0, 2))


def separated_counts(sys, lam, cloud, n_max, eps, shuffles=5, seed=0):
    """N(n, eps) for n = 1..n_max: best over shuffles of greedy maximal sets, nested in n."""
    _require_identity(sys)
    traj = trajectories(sys, lam, cloud, n_max)
    rng = np.random.default_rng(seed)
    best = np.zeros(n_max, dtype=np.int64)
    for _ in range(shuffles):
        order = rng.permutation(len(cloud))
        chosen = np.zeros(len(cloud), dtype=bool)
        counts = []
        for n in range(1, n_max + 1):
            chosen = kernels.greedy_separated(order, traj, n, eps, chosen)
            counts.append(int(chosen.sum()))
        best = np.maximum(best, counts)
    return best


@dataclass
class EntropyRun:
    n: list
    counts: list
    eps: float
    slope: float
    fit_range: tuple
    cloud_size: int

    def to_dict(self):
        return {
            "n": self.n,
            "counts": self.counts,
            "eps": self.eps,
            "slope": self.slope,
            "fit_range": list(self.fit_range),
            "cloud_size": self.cloud_size,
        }


def entropy_estimate(sys, lam, cloud, n_max=12, eps=0.05, n_min_fit=3, saturation=0.1, shuffles=5, seed=0):
    """Growth rate of N(n, eps), fitted for n >= n_min_fit while N < saturation * |cloud|."""
    counts = separated_counts(sys, lam, cloud, n_max, eps, shuffles, seed)
    ns = np.arange(1, n_max + 1)
    cap = saturation * len(cloud)
    stable = (ns >= n_min_fit) & (counts < cap)
    hi = int(ns[stable].max()) if stable.any() else n_min_fit
    if hi < n_max:
        warnings.warn(f"fit truncated at n = {hi} by cloud saturation", TruncatedFit, stacklevel=2)
    sel = (ns >= n_min_fit) & (ns <= hi)
    if sel.sum() < 2:
        raise ValueError("cloud too sparse: fewer than two unsaturated n values")
    slope = float(np.polyfit(ns[sel], np.log(counts[sel]), 1)[0])
    return EntropyRun(ns.tolist(), counts.tolist(), eps, slope, (n_min_fit, hi), len(cloud))


@dataclass
class ProductMeasureSpec:
    atoms: tuple
    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.atoms) != len(w) or len(w) == 0:
            raise ValueError("need one positive weight per atom")
        if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")


def product_measure(spec, sys, res=32, window4=None, tol=DEFAULT_TOL, invariance_check=True):
    """Total mass of ∫ μ_λ dμ'(λ) for an atomic μ', with per-atom wedge masses."""
    window4 = window4 or Window4()
    rows = []
    total = 0.0
    inside = 0.0
    for lam, w in zip(spec.atoms, spec.weights):
        wm = wedge_measure(sys, sys.base.space.check(lam), window4, res, tol=tol)
        rows.append({"lambda": [complex(lam).real, complex(lam).imag], "weight": w, "mass": wm.mass_mix,
                     "mass_in_bidisc": wm.mass_in_bidisc})
        total += w * wm.mass_mix
        inside += w * wm.mass_in_bidisc
    out = {"atoms": rows, "total_mass": total, "mass_in_bidisc": inside}
    if invariance_check:
        chk = pullback_identity_check(sys, spec.atoms[0], "+", 1, res=128)
        out["invariance"] = {"ratio": chk["ratio"], "expected": chk["expected"]}
    return out
