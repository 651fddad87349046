"""Fibered endomorphisms of P^k through non-degenerate homogeneous lifts F_λ on C^{k+1}.

Green functions use sphere renormalization: x is kept on the unit sphere and the
log of each step's norm is accumulated with weight d^-n, which is exact by
homogeneity.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import kernels
from .base_space import sigma_orbit
from .henon import CoefPoly

MAX_PK_STEPS = 200
DEGENERACY_FLOOR = 1e-9


class DegenerateMap(ValueError):
    pass


@dataclass(frozen=True)
class Monomial:
    exps: tuple
    coef: CoefPoly


class PkSkewSystem:
    """(k+1) homogeneous degree-d polynomials whose coefficients depend on λ."""

    def __init__(self, base, k, degree, components, name="pk"):
        if k < 1:
            raise ValueError("k must be >= 1")
        if degree < 2:
            raise ValueError("degree must be >= 2")
        if len(components) != k + 1:
            raise ValueError(f"need {k + 1} coordinate polynomials, got {len(components)}")
        for i, comp in enumerate(components):
            if not comp:
                raise ValueError(f"coordinate {i} has no monomials")
            for mono in comp:
                if len(mono.exps) != k + 1 or min(mono.exps) < 0:
                    raise ValueError(f"coordinate {i}: exponent {mono.exps} is not a {k + 1}-tuple of naturals")
                if sum(mono.exps) != degree:
                    raise ValueError(f"coordinate {i}: monomial {mono.exps} is not of degree {degree}")
        self.base = base
        self.k = k
        self.d = degree
        self.components = [tuple(c) for c in components]
        self.name = name
        q = max(len(c) for c in components)
        self.mexp = np.zeros((k + 1, q, k + 1), dtype=np.int64)
        self.mcount = np.array([len(c) for c in components], dtype=np.int64)
        for i, comp in enumerate(components):
            for j, mono in enumerate(comp):
                self.mexp[i, j] = mono.exps
        self._growth = None

    @classmethod
    def from_spec(cls, base, k, degree, components, name="pk"):
        """components[i] lists (exponent tuple, [(p, q, c), ...]) for coordinate i."""
        comps = [
            [Monomial(tuple(int(e) for e in exps), CoefPoly.from_triples(triples)) for exps, triples in comp]
            for comp in components
        ]
        return cls(base, k, degree, comps, name)

    def coefficients(self, lam):
        out = np.zeros(self.mexp.shape[:2], dtype=complex)
        for i, comp in enumerate(self.components):
            for j, mono in enumerate(comp):
                out[i, j] = mono.coef(lam)
        return out

    def step_coefficients(self, lam, n):
        """Coefficient arrays for F_λ, F_σλ, ..., shape (n, k+1, q)."""
        lams = sigma_orbit(self.base, lam, n)
        return np.stack([self.coefficients(l) for l in lams]) if n else np.zeros((0,) + self.mexp.shape[:2], complex)

    def apply(self, lam, X):
        """F_λ on rows of X (shape (N, k+1) or (k+1,))."""
        X = np.asarray(X, dtype=complex)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        coef = self.coefficients(self.base.space.check(lam))
        out = np.zeros_like(X)
        for i in range(self.k + 1):
            for q in range(self.mcount[i]):
                out[:, i] += coef[i, q] * np.prod(X ** self.mexp[i, q][None, :], axis=1)
        return out[0] if single else out

    def compose(self, lam, X, n):
        """F_{σ^{n-1}λ} ∘ ... ∘ F_λ on rows of X, without renormalization."""
        lams = sigma_orbit(self.base, lam, n)
        X = np.asarray(X, dtype=complex)
        with np.errstate(all="ignore"):
            for l in lams:
                X = self.apply(l, X)
        return X

    def growth(self):
        if self._growth is None:
            self._growth = estimate_growth(self)
        return self._growth


def sphere_samples(rng, count, dim):
    """Uniform points on the unit sphere of C^dim."""
    Z = rng.normal(size=(count, dim)) + 1j * rng.normal(size=(count, dim))
    return Z / np.linalg.norm(Z, axis=1)[:, None]


@dataclass
class GrowthConstants:
    l: float
    L: float
    C: float
    r: float
    R: float
    doubling_radius: float
    sphere_min: float
    sphere_max: float

    def to_dict(self):
        return dict(self.__dict__)


def _axis_points(dim):
    """Coordinate axes and their pairwise diagonals: where degenerate lifts usually vanish."""
    eye = np.eye(dim, dtype=complex)
    pts = list(eye)
    for i in range(dim):
        for j in range(i + 1, dim):
            for w in (1, -1, 1j, -1j):
                pts.append((eye[i] + w * eye[j]) / math.sqrt(2))
    return np.array(pts)


def _sphere_min(sys, lam, starts, steps=30, h=1e-7):
    """Least ‖F_λ‖ on the sphere seen along Gauss-Newton paths towards F = 0 from the rows of `starts`.

    Every visited point is renormalized, so the result never undercuts the true minimum.
    """
    dim = sys.k + 1
    eye = np.eye(dim)
    best = np.inf
    for x in starts:
        x = x / np.linalg.norm(x)
        for _ in range(steps):
            F = sys.apply(lam, x)
            best = min(best, float(np.linalg.norm(F)))
            if best < DEGENERACY_FLOOR:
                return best
            # F is holomorphic, so one complex difference per column gives the Jacobian
            J = np.stack([(sys.apply(lam, x + h * eye[j]) - F) / h for j in range(dim)], axis=1)
            # radial steps are undone by renormalization (J x = d F), so step within x-perp
            T = np.linalg.qr(np.column_stack([x, eye]))[0][:, 1:]
            x = x + T @ np.linalg.lstsq(J @ T, -F, rcond=None)[0]
            x = x / np.linalg.norm(x)
    return best


def estimate_growth(sys, samples=10_000, n_lambda=8, margin=0.01, seed=0, n_ratio=12, refine=4):
    """l, L from sphere extremes of ‖F_λ‖ widened by `margin`; C, r, R from them.

    log C bounds every step's log(‖F(x)‖/‖x‖^d), so it is max(-log l, log L)
    unless the sampled successive ratios along orbits are larger.
    doubling_radius = (2/l)^{1/(d-1)} is where ‖F(x)‖ >= 2‖x‖ is guaranteed.
    """
    rng = np.random.default_rng(seed)
    S = np.concatenate([_axis_points(sys.k + 1), sphere_samples(rng, samples, sys.k + 1)])
    lo, hi = np.inf, 0.0
    worst = 0.0
    lows = []
    for lam in sys.base.space.grid(n_lambda):
        nF = np.linalg.norm(sys.apply(lam, S), axis=1)
        lo, hi = min(lo, float(nF.min())), max(hi, float(nF.max()))
        lows.append((float(nF.min()), lam, S[np.argsort(nF)[:4]]))
        if lo < DEGENERACY_FLOOR:
            raise DegenerateMap(f"sphere minimum {lo:.3g} below {DEGENERACY_FLOOR}: F^-1(0) may contain nonzero points")
        # successive log-ratios along orbits, renormalized
        X = S[:1000]
        for l in sigma_orbit(sys.base, lam, n_ratio):
            Y = sys.apply(l, X)
            nY = np.linalg.norm(Y, axis=1)
            worst = max(worst, float(np.abs(np.log(nY)).max()))
            X = Y / nY[:, None]
    # zero sets off the sampled points only show up under local descent
    for _, lam, starts in sorted(lows, key=lambda t: t[0])[:refine]:
        lo = min(lo, _sphere_min(sys, lam, starts))
    if lo < DEGENERACY_FLOOR:
        raise DegenerateMap(f"sphere minimum {lo:.3g} below {DEGENERACY_FLOOR}: F^-1(0) may contain nonzero points")
    l = lo * (1 - margin)
    L = hi * (1 + margin)
    logC = max(-math.log(l), math.log(L), worst, 1e-12)
    e = 1.0 / (sys.d - 1)
    return GrowthConstants(
        l=l,
        L=L,
        C=math.exp(logC),
        r=(2 * L) ** -e,
        R=(2 * l) ** -e,
        doubling_radius=(2 / l) ** e,
        sphere_min=lo,
        sphere_max=hi,
    )


def _steps_for(sys, tol):
    logC = math.log(sys.growth().C)
    if logC <= 0:
        return 0
    n = math.ceil(math.log(logC / ((sys.d - 1) * tol)) / math.log(sys.d)) + 1
    return min(max(n, 0), MAX_PK_STEPS)


@dataclass
class PkGreenValue:
    value: float
    n_used: int
    error_bound: float


def green_pk_field(sys, lam, X, tol=1e-10):
    """Arrays (value, error_bound, n_used) of G_λ on rows of X; -inf at x = 0."""
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    n = _steps_for(sys, tol)
    coef = sys.step_coefficients(lam, n)
    res = kernels.pk_green(X, sys.mexp, coef, sys.mcount, sys.d, math.log(sys.growth().C), tol)
    return res[:, 0], res[:, 1], res[:, 2].astype(int)


def green_pk(sys, lam, x, tol=1e-10):
    if tol <= 0:
        raise ValueError("tol must be positive")
    v, e, n = green_pk_field(sys, lam, [x], tol)
    return PkGreenValue(float(v[0]), int(n[0]), float(e[0]))


def green_pk_series(sys, lam, X, n):
    """G_{j,λ} for j = 0..n on rows of X, shape (N, n+1)."""
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    nx = np.linalg.norm(X, axis=1)
    out = np.empty((len(X), n + 1))
    out[:, 0] = np.log(nx)
    X = X / nx[:, None]
    acc = out[:, 0].copy()
    for j, l in enumerate(sigma_orbit(sys.base, lam, n), start=1):
        Y = sys.apply(l, X)
        nY = np.linalg.norm(Y, axis=1)
        acc = acc + np.log(nY) / float(sys.d) ** j
        out[:, j] = acc
        X = Y / nY[:, None]
    return out


def check_green_pk(sys, lams=None, samples=1000, tol=1e-10, seed=0):
    """Residuals of homogeneity, invariance and the successive-difference bound."""
    rng = np.random.default_rng(seed)
    lams = sys.base.space.grid(4) if lams is None else lams
    g = sys.growth()
    hom = inv = 0.0
    bound_violations = 0
    for lam in lams:
        X = sphere_samples(rng, samples, sys.k + 1) * rng.uniform(0.2, 3.0, (samples, 1))
        c = rng.uniform(0.1, 10.0, samples) * np.exp(2j * np.pi * rng.uniform(size=samples))
        G = green_pk_field(sys, lam, X, tol)[0]
        Gc = green_pk_field(sys, lam, c[:, None] * X, tol)[0]
        hom = max(hom, float(np.abs(Gc - G - np.log(np.abs(c))).max()))
        FX = sys.apply(lam, X)
        GF = green_pk_field(sys, sys.base.sigma(lam), FX, tol)[0]
        inv = max(inv, float(np.abs(sys.d * G - GF).max()))
        S = green_pk_series(sys, lam, X, 20)
        diffs = np.abs(np.diff(S, axis=1))
        allowed = math.log(g.C) / float(sys.d) ** np.arange(1, 21)
        bound_violations += int((diffs > allowed[None, :] * (1 + 1e-9) + 1e-15).sum())
    return {"homogeneity": hom, "invariance": inv, "bound_violations": bound_violations, "tol": tol}


def orbit_verdict(sys, lam, X, n_max=MAX_PK_STEPS, small=1e-100, big=1e100):
    """+1 if the composed orbit norm passes `big`, -1 if it drops below `small`, 0 if undecided."""
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    out = np.zeros(len(X), dtype=np.int8)
    live = np.ones(len(X), dtype=bool)
    lams = sigma_orbit(sys.base, lam, n_max)
    with np.errstate(all="ignore"):
        for l in lams:
            if not live.any():
                break
            X[live] = sys.apply(l, X[live])
            nx = np.linalg.norm(X, axis=1)
            up = live & ~(nx <= big)
            down = live & (nx < small)
            out[up] = 1
            out[down] = -1
            live &= ~(up | down)
    return out


INSIDE, BAND, OUTSIDE = "inside", "boundary-band", "outside"


def basin_membership(sys, lam, x, tol=1e-4):
    """Verdict from G (inside if G < -tol, outside if G > tol) with the orbit verdict beside it."""
    G = green_pk(sys, lam, x, 1e-12).value
    verdict = INSIDE if G < -tol else OUTSIDE if G > tol else BAND
    orbit = int(orbit_verdict(sys, lam, [x])[0])
    return {"verdict": verdict, "G": G, "orbit": {1: "to-infinity", -1: "to-zero", 0: "undecided"}[orbit]}


def slice_points(sys, x0, center, half_width, res):
    """Points (x0, z, 0, ...) for z on a res x res grid; returns (points, z grid)."""
    ax = np.linspace(-half_width, half_width, res)
    Z = complex(center) + ax[None, :] + 1j * ax[:, None]
    P = np.zeros((res * res, sys.k + 1), dtype=complex)
    P[:, 0] = x0
    P[:, 1] = Z.ravel()
    return P, Z


def basin_bitmap(sys, lam, x0=1.0, center=0j, half_width=2.0, res=256, tol=1e-4):
    """Basin verdicts on the slice {(x0, z)}: -1 inside, 0 band, +1 outside, and orbit agreement off the band."""
    P, Z = slice_points(sys, x0, center, half_width, res)
    G = green_pk_field(sys, lam, P, 1e-12)[0]
    verdict = np.where(G < -tol, -1, np.where(G > tol, 1, 0)).astype(np.int8)
    orbit = orbit_verdict(sys, lam, P.copy())
    off = verdict != 0
    agree = float(np.mean(orbit[off] == verdict[off])) if off.any() else 1.0
    return {
        "bitmap": verdict.reshape(Z.shape),
        "G": G.reshape(Z.shape),
        "orbit_agreement": agree,
        "band_cells": int((~off).sum()),
    }


def ball_inclusions(sys, lam, samples=2000, seed=0):
    """Largest ‖F(x)‖/‖x‖ on ‖x‖ = r and smallest on ‖x‖ = R and on the doubling radius."""
    g = sys.growth()
    rng = np.random.default_rng(seed)
    S = sphere_samples(rng, samples, sys.k + 1)

    def ratio(rad):
        return np.linalg.norm(sys.apply(lam, rad * S), axis=1) / rad

    inner = float(ratio(g.r).max())
    at_R = float(ratio(g.R).min())
    at_doubling = float(ratio(g.doubling_radius).min())
    return {
        "max_ratio_at_r": inner,
        "min_ratio_at_R": at_R,
        "min_ratio_at_doubling_radius": at_doubling,
        "inner_halving": inner <= 0.5,
        "outer_doubling": at_doubling >= 2.0,
    }


def calibration_residual(center, half_width, res, step):
    """Largest 5-point Laplacian of log|z - c0| over the grid, c0 one unit outside the window corner."""
    ax = np.linspace(-half_width, half_width, res)
    Z = complex(center) + ax[None, :] + 1j * ax[:, None]
    c0 = complex(center) + (half_width + 1) * (1 + 1j)

    def u(z):
        return np.log(np.abs(z - c0))

    lap = (u(Z + step) + u(Z - step) + u(Z + 1j * step) + u(Z - 1j * step) - 4 * u(Z)) / step**2
    return float(np.abs(lap).max())


def _collar(labels, width):
    edge = np.zeros(labels.shape, dtype=bool)
    edge[:, 1:] |= labels[:, 1:] != labels[:, :-1]
    edge[:, :-1] |= labels[:, 1:] != labels[:, :-1]
    edge[1:, :] |= labels[1:, :] != labels[:-1, :]
    edge[:-1, :] |= labels[1:, :] != labels[:-1, :]
    if not edge.any():
        return edge
    return ndimage.binary_dilation(edge, structure=np.ones((3, 3), bool), iterations=width)


def fatou_detect(sys, lam, center=0j, half_width=2.0, res=256, probes=4, n_probe=40, stretch=1.0, scale_ratio=2.0,
                 collar=2, seed=0, tol=1e-12):
    """Fatou bitmaps in the chart x0 = 1 from two tests, and their agreement.

    (a) the 5-point Laplacian of z -> G(1, z) along `probes` randomly rotated
        stencils of step h stays below 10x the calibration residual, or falls
        by more than `scale_ratio` when the step is halved (truncation error);
    (b) equicontinuity at cell scale: the Fubini-Study derivative of the
        composed maps never stretches a cell of side h to unit size within
        n_probe steps, i.e. max_n log|Df^n| < log(1/h) + log(stretch).
    Agreement is measured off a `collar`-cell band around label changes of (a).
    For k > 1 the chart slice is z e_1 with the other affine coordinates 0.
    """
    if probes < 4:
        raise ValueError("need at least 4 probe lines per cell")
    rng = np.random.default_rng(seed)
    P, Z = slice_points(sys, 1.0, center, half_width, res)
    h = 2 * half_width / (res - 1)
    theta = 10 * calibration_residual(center, half_width, res, h)
    z = Z.ravel()
    base = green_pk_field(sys, lam, P, tol)[0]
    worst = np.zeros(z.size)
    worst_half = np.zeros(z.size)
    for _ in range(probes):
        v = np.exp(2j * np.pi * rng.uniform(size=z.size))
        for step, acc in ((h, worst), (h / 2, worst_half)):
            lap = -4 * base
            for w in (1, -1, 1j, -1j):
                Q = P.copy()
                Q[:, 1] = z + step * w * v
                lap = lap + green_pk_field(sys, lam, Q, tol)[0]
            np.maximum(acc, np.abs(lap) / step**2, out=acc)
    # truncation error of a harmonic function falls ~4x when the step halves;
    # mass in the cell makes the residual grow instead
    with np.errstate(divide="ignore", invalid="ignore"):
        decay = worst / worst_half
    harmonic = ((worst < theta) | (decay > scale_ratio)).reshape(Z.shape)

    coef = sys.step_coefficients(lam, n_probe)
    V = np.zeros_like(P)
    V[:, 1] = 1.0
    growth = kernels.pk_fs_growth(P, V, sys.mexp, coef, sys.mcount, 1e-7)
    indeterminate = np.isnan(growth).any(axis=1).reshape(Z.shape)
    with np.errstate(invalid="ignore"):
        peak = np.nanmax(np.where(np.isneginf(growth), np.nan, growth), axis=1, initial=-np.inf)
    normal = (peak < math.log(stretch / h)).reshape(Z.shape) & ~indeterminate

    band = _collar(harmonic.astype(np.int8), collar)
    keep = ~band & ~indeterminate
    agreement = float(np.mean(harmonic[keep] == normal[keep])) if keep.any() else float("nan")
    return {
        "harmonic": harmonic,
        "normal": normal,
        "indeterminate": indeterminate,
        "agreement": agreement,
        "raw_agreement": float(np.mean(harmonic == normal)),
        "theta_harm": theta,
        "residual": worst.reshape(Z.shape),
        "peak_log_derivative": peak.reshape(Z.shape),
        "h": h,
    }
