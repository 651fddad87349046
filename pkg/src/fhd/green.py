"""Fibered Green functions with certified tails, and the checks built on them.

Past cone entry the orbit is tracked as ``ℓ = log y`` and ``u = x / y``; the
per-step correction ``log|y'| - d log|y|`` is bounded on ``|y| >= Y`` by
``η(Y)``, which gives the tail bound ``η(|y_n|) d^-n / (d - 1)``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .base_space import DomainError
from .filtration import DEFAULT_N, V_PLUS, classify_region, get_filtration
from .henon import fiber_apply

TAIL_STEPS = 64
DEFAULT_TOL = 1e-8
SIDES = ("+", "-")


class UnsupportedConfiguration(ValueError):
    pass


@dataclass
class GreenValue:
    value: float
    n_used: int
    error_bound: float
    side: str
    cap_limited: bool
    escape_step: int


@dataclass
class GreenField:
    """Per-point arrays from one kernel sweep."""

    value: np.ndarray
    error_bound: np.ndarray
    n_used: np.ndarray
    escape_step: np.ndarray
    status: np.ndarray

    @property
    def bounded(self):
        return self.status == kernels.BOUNDED

    @property
    def escaped(self):
        return (self.status == kernels.CONVERGED) | (self.status == kernels.TAIL_CAP)


def _space_radius(space):
    if space.kind in ("disc", "circle"):
        return space.radius
    if space.kind == "interval":
        return max(abs(space.lo), abs(space.hi))
    return max(abs(p) for p in space.points)


def tail_bounds(sys, kind):
    """Sup-over-M constants for the tail bound, in the table's factor order."""
    cache = sys.__dict__.setdefault("_tail_bounds", {})
    if kind in cache:
        return cache[kind]
    r = _space_radius(sys.base.space)
    grid = sys.base.space.grid(16)
    order = list(range(sys.m)) if kind == "forward" else list(range(sys.m - 1, -1, -1))
    ecoef = np.zeros((sys.m, sys.dmax + 1))
    eb = np.zeros(sys.m)
    eloglead = np.zeros(sys.m)
    degs = np.array([sys.degrees[j] for j in order], dtype=np.int64)
    for i, j in enumerate(order):
        f = sys.factors[j]
        for k, c in enumerate(f.coefs):
            ecoef[i, k] = c.bound(r)
        a_hi = f.a.bound(r)
        a_lo = min(abs(f.a(lam)) for lam in grid)
        if kind == "forward":
            eb[i] = a_hi
        else:
            eb[i] = 1.0
            eloglead[i] = max(abs(np.log(a_lo)), abs(np.log(a_hi)))
    wdeg = np.array([float(np.prod(degs[i + 1 :])) for i in range(sys.m)])
    out = (ecoef, eb, eloglead, wdeg, degs)
    cache[kind] = out
    return out


def _working(X, Y, side):
    X = np.atleast_1d(np.asarray(X, dtype=complex))
    Y = np.atleast_1d(np.asarray(Y, dtype=complex))
    return (X, Y) if side == "+" else (Y, X)


def _check_side(side):
    if side not in SIDES:
        raise ValueError(f"side must be '+' or '-', got {side!r}")


def green_field(sys, lam, X, Y, side="+", tol=DEFAULT_TOL, n_max=DEFAULT_N):
    """G^±_λ at the points (X[i], Y[i])."""
    _check_side(side)
    if not tol > 0:
        raise ValueError("tol must be > 0")
    filt = get_filtration(sys)
    kind = "forward" if side == "+" else "backward"
    table = sys.step_table(sys.base.space.check(lam), n_max + TAIL_STEPS, kind)
    Xw, Yw = _working(X, Y, side)
    shape = np.broadcast(Xw, Yw).shape
    Xw, Yw = np.broadcast_to(Xw, shape).ravel(), np.broadcast_to(Yw, shape).ravel()
    res = kernels.green_orbit(Xw, Yw, table, filt.R, n_max, tol, tail_bounds(sys, kind))
    return GreenField(
        res[:, 0].reshape(shape),
        res[:, 1].reshape(shape),
        res[:, 2].astype(np.int64).reshape(shape),
        res[:, 3].astype(np.int64).reshape(shape),
        res[:, 4].astype(np.int64).reshape(shape),
    )


def green(sys, lam, z, side="+", tol=DEFAULT_TOL, n_max=DEFAULT_N):
    """Certified G^±_λ(z); 0 with cap_limited=True if bounded through n_max."""
    f = green_field(sys, lam, [z[0]], [z[1]], side, tol, n_max)
    status = int(f.status[0])
    return GreenValue(
        value=float(f.value[0]),
        n_used=int(f.n_used[0]),
        error_bound=float(f.error_bound[0]),
        side=side,
        cap_limited=status == kernels.BOUNDED,
        escape_step=int(f.escape_step[0]),
    )


def lognorm_table(sys, lam, X, Y, n, kind="forward"):
    """log||z_k|| for k = 0..n along the chosen composition (log space past escape)."""
    filt = get_filtration(sys)
    table = sys.step_table(sys.base.space.check(lam), n, kind)
    side = "+" if kind == "forward" else "-"
    Xw, Yw = _working(X, Y, side)
    lognorm, _ = kernels.orbit_logs(Xw, Yw, table, filt.R)
    return lognorm


def green_n(sys, lam, z, n, side="+"):
    """``d^-n log+ ||H^{±n}_λ(z)||`` with the Euclidean norm."""
    _check_side(side)
    if n < 0:
        raise ValueError("n must be >= 0")
    kind = "forward" if side == "+" else "backward"
    ln = lognorm_table(sys, lam, [z[0]], [z[1]], n, kind)[0, n]
    return float(max(ln, 0.0) / float(sys.d) ** n)


def green_n_series(sys, lam, X, Y, n, side="+"):
    """Rows of G_k for k = 0..n at each point."""
    kind = "forward" if side == "+" else "backward"
    ln = lognorm_table(sys, lam, X, Y, n, kind)
    return np.maximum(ln, 0.0) / float(sys.d) ** np.arange(n + 1)


def successive_differences(sys, lam, X, Y, n_lo=5, n_hi=25, side="+"):
    """sup over the samples of |G_{n+1} - G_n| for n_lo <= n < n_hi, and the fitted ratio."""
    G = green_n_series(sys, lam, X, Y, n_hi, side)
    diffs = np.abs(np.diff(G, axis=1)).max(axis=0)[n_lo:n_hi]
    ns = np.arange(n_lo, n_hi)
    ok = diffs > 0
    slope = np.polyfit(ns[ok], np.log(diffs[ok]), 1)[0]
    return {"n": ns.tolist(), "sup_diff": diffs.tolist(), "ratio": float(np.exp(slope))}


def box_samples(rng, half_width, count):
    """Uniform samples of the real cube [-w, w]^4 viewed as a box in C^2."""
    v = rng.uniform(-half_width, half_width, (count, 4))
    return v[:, 0] + 1j * v[:, 1], v[:, 2] + 1j * v[:, 3]


def _apply_many(sys, lam, X, Y, direction):
    out = np.empty((len(X), 2), dtype=complex)
    for i, (x, y) in enumerate(zip(X, Y)):
        out[i] = fiber_apply(sys, lam, (x, y), direction)
    return out[:, 0], out[:, 1]


def check_invariance(sys, lam, samples=1000, tol=DEFAULT_TOL, seed=0, half_width=None):
    """Max residuals of the four functional equations on a box around V_R.

    ``G+_{σλ}∘H = d G+_λ``, ``G-_{σλ}∘H^-1 = d G-_λ``, and their rearranged
    siblings ``G+_λ∘H^-1 = G+_{σλ}/d``, ``G-_λ∘H = G-_{σλ}/d``.
    """
    lam = sys.base.space.check(lam)
    slam = sys.sigma(lam)
    d = sys.d
    R = get_filtration(sys).R
    rng = np.random.default_rng(seed)
    X, Y = box_samples(rng, half_width or 1.5 * R, samples)
    FX, FY = _apply_many(sys, lam, X, Y, 1)
    BX, BY = _apply_many(sys, lam, X, Y, -1)

    def G(mu, x, y, side):
        return green_field(sys, mu, x, y, side, tol).value

    res = {
        "plus_forward": np.abs(G(slam, FX, FY, "+") - d * G(lam, X, Y, "+")),
        "minus_backward": np.abs(G(slam, BX, BY, "-") - d * G(lam, X, Y, "-")),
        "plus_backward": np.abs(G(lam, BX, BY, "+") - G(slam, X, Y, "+") / d),
        "minus_forward": np.abs(G(lam, FX, FY, "-") - G(slam, X, Y, "-") / d),
    }
    out = {k: float(v.max()) for k, v in res.items()}
    out["max"] = max(out.values())
    return out


def u_correction(sys, lam, z, tol=DEFAULT_TOL):
    """``G+_λ(z) - log|y|`` for z in V_R^+."""
    R = get_filtration(sys).R
    if classify_region(z, R) != V_PLUS:
        raise DomainError(f"{z!r} is not in V_R^+ (R = {R:.4g})")
    return green(sys, lam, z, "+", tol).value - float(np.log(abs(z[1])))


def epsilon_at(sys, radius):
    """Largest relative correction ``sup |p(y)/y^d - 1| + a|y|^(1-d)`` on ``|y| >= radius``."""
    ecoef, eb, _, _, degs = tail_bounds(sys, "forward")
    eps = 0.0
    for i, dg in enumerate(degs):
        e = eb[i] * radius ** (1.0 - dg) + sum(ecoef[i, k] * radius ** float(k - dg) for k in range(dg))
        eps = max(eps, e)
    return eps


def u_bounds(sys, radius):
    """(K1, K2) with ``K1 <= u <= K2`` on V^+ past ``radius``, from the limit n -> oo."""
    eps = epsilon_at(sys, radius)
    if eps >= 1:
        raise ValueError("radius too small: correction not below 1")
    _, _, eloglead, wdeg, _ = tail_bounds(sys, "forward")
    scale = 1.0 / (sys.d - 1)
    return scale * np.log(1 - eps) * wdeg.sum(), scale * np.log(1 + eps) * wdeg.sum()


def _cube_grid(half_width, res):
    t = np.linspace(-half_width, half_width, res)
    g = np.stack(np.meshgrid(t, t, t, t, indexing="ij"), axis=-1).reshape(-1, 4)
    return g[:, 0] + 1j * g[:, 1], g[:, 2] + 1j * g[:, 3]


def lambda_continuity(sys, lam, lam2, half_width=3.0, res=8, tol=DEFAULT_TOL):
    """sup over a grid of the real cube [-w, w]^4 of |G+_λ - G+_λ'|."""
    if lam == lam2:
        return 0.0
    X, Y = _cube_grid(half_width, res)
    a = green_field(sys, lam, X, Y, "+", tol).value
    b = green_field(sys, lam2, X, Y, "+", tol).value
    return float(np.max(np.abs(a - b)))


def lambda_continuity_table(sys, lam, delta0=1e-2, levels=5, direction=1.0, half_width=3.0, res=8):
    """Dyadic refinement table of sup |G+_λ - G+_{λ+δ}|."""
    rows = []
    X, Y = _cube_grid(half_width, res)
    base = green_field(sys, lam, X, Y, "+").value
    for i in range(levels):
        delta = delta0 / 2**i
        other = sys.base.space.check(lam + delta * direction)
        diff = float(np.max(np.abs(green_field(sys, other, X, Y, "+").value - base)))
        rows.append({"delta": delta, "sup_diff": diff})
    return rows


def escape_verdict(sys, lam, X, Y, side="+", n_max=DEFAULT_N):
    """True where the orbit enters the escape cone within n_max steps."""
    return green_field(sys, lam, X, Y, side, tol=1e300, n_max=n_max).escaped


def bisect_boundary(sys, lam, P, Q, side="+", steps=40, n_max=DEFAULT_N):
    """Bisect segments from bounded points P to escaping points Q (arrays, shape (N, 2)).

    Returns the bounded and escaping end of the final bracket.
    """
    P = np.array(P, dtype=complex)
    Q = np.array(Q, dtype=complex)
    for _ in range(steps):
        M = 0.5 * (P + Q)
        esc = escape_verdict(sys, lam, M[:, 0], M[:, 1], side, n_max)
        Q[esc] = M[esc]
        P[~esc] = M[~esc]
    return P, Q


def derivative_bound(sys, samples=2000, seed=0, h=1e-6):
    """A: max operator norm of DH_λ and DH_λ^-1 sampled on the bidisc of radius R."""
    R = get_filtration(sys).R
    rng = np.random.default_rng(seed)
    lams = sys.base.space.grid(8)
    r = R * np.sqrt(rng.uniform(size=(samples, 2)))
    Z = r * np.exp(2j * np.pi * rng.uniform(size=(samples, 2)))
    A = 0.0
    for i in range(samples):
        lam = lams[i % len(lams)]
        z = Z[i]
        for direction in (1, -1):
            J = np.empty((2, 2), dtype=complex)
            for k in range(2):
                e = np.zeros(2, dtype=complex)
                e[k] = h
                fp = np.array(fiber_apply(sys, lam, z + e, direction))
                fm = np.array(fiber_apply(sys, lam, z - e, direction))
                J[:, k] = (fp - fm) / (2 * h)
            A = max(A, float(np.linalg.norm(J, 2)))
    return A


@dataclass
class HolderEstimate:
    theoretical_exponent: float
    empirical_exponent: float
    A: float
    scales: list
    sup_diffs: list

    @property
    def ok(self):
        return self.empirical_exponent >= self.theoretical_exponent - 0.05

    def to_dict(self):
        return {
            "theoretical_exponent": self.theoretical_exponent,
            "empirical_exponent": self.empirical_exponent,
            "A": self.A,
            "scales": self.scales,
            "sup_diffs": self.sup_diffs,
            "ok": self.ok,
        }


def holder_estimate(sys, lam=None, half_width=None, pairs=10_000, n_scales=8, seed=0, horizon=20):
    """Hölder exponent of G+ near J+: theory log d / log 2A versus a pair-sampling fit.

    Base points are bisected onto the boundary of {escape within `horizon`
    steps}, where G is about d^-horizon; partners sit at distances
    10^-1 .. 10^-3.5 in random directions.  The fit uses the per-scale sup of
    |G(p) - G(q)|.  Long horizons pull the base points into slow-escape
    regions where G is abnormally flat and the fit overshoots 1.
    """
    if not sys.base.is_surjective():
        raise UnsupportedConfiguration("Hölder estimate needs a surjective base map")
    lam = sys.base.space.grid(1)[0] if lam is None else sys.base.space.check(lam)
    R = get_filtration(sys).R
    A = derivative_bound(sys, seed=seed)
    theory = float(np.log(sys.d) / np.log(2 * A))
    rng = np.random.default_rng(seed)
    per = pairs // n_scales
    P, Q = _boundary_pairs_seeds(sys, lam, rng, per, half_width or R, n_max=horizon)
    P, Q = bisect_boundary(sys, lam, P, Q, steps=44, n_max=horizon)
    base = P
    scales = np.logspace(-1, -3.5, n_scales)
    sups = []
    g0 = green_field(sys, lam, base[:, 0], base[:, 1]).value
    for s in scales:
        v = rng.normal(size=(per, 4))
        v /= np.linalg.norm(v, axis=1)[:, None]
        q = base + s * np.stack([v[:, 0] + 1j * v[:, 1], v[:, 2] + 1j * v[:, 3]], axis=1)
        g = green_field(sys, lam, q[:, 0], q[:, 1]).value
        sups.append(float(np.max(np.abs(g - g0))))
    slope = np.polyfit(np.log(scales), np.log(sups), 1)[0]
    return HolderEstimate(theory, float(slope), A, scales.tolist(), sups)


def _boundary_pairs_seeds(sys, lam, rng, count, half_width, side="+", max_rounds=400, n_max=DEFAULT_N):
    """Bounded and escaping seed pairs for boundary bisection.

    Bounded seeds are drawn from boxes of half-width w/4, w/2, w in turn.
    """
    bounded, escaping = [], []
    widths = (half_width / 4, half_width / 2, half_width)
    for r in range(max_rounds):
        X, Y = box_samples(rng, widths[r % 3], 4 * count)
        esc = escape_verdict(sys, lam, X, Y, side, n_max)
        pts = np.stack([X, Y], axis=1)
        bounded.extend(pts[~esc][: count - len(bounded)])
        escaping.extend(pts[esc][: count - len(escaping)])
        if len(bounded) >= count and len(escaping) >= count:
            return np.array(bounded), np.array(escaping)
    raise ValueError(f"found only {len(bounded)} bounded seeds in {max_rounds} rounds")


def julia_plus_samples(sys, lam, count, seed=0, steps=40):
    """Escaping ends of bisected bounded/escaping pairs: points within 2^-steps of J+."""
    rng = np.random.default_rng(seed)
    P, Q = _boundary_pairs_seeds(sys, lam, rng, count, get_filtration(sys).R)
    _, Q = bisect_boundary(sys, lam, P, Q, steps=steps)
    return Q[:, 0], Q[:, 1]
