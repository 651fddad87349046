"""Uniform escape radius, the three-region filtration, and escape verdicts."""

from dataclasses import dataclass, field

import numpy as np

from .henon import OrbitEscape, fiber_apply

R_GRID_FACTOR = 1.05
R_CAP = 1e6
DEFAULT_N = 200

V_PLUS = "V+"
V_MINUS = "V-"
V_CENTER = "V"


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class FiltrationData:
    R: float
    rho: float
    a_sup: float
    R_min: float  # smallest grid radius passing every check, before doubling


@dataclass
class EscapeRecord:
    status: str  # "escaped-plus", "escaped-minus" or "bounded"
    step: int
    point: tuple

    @property
    def escaped(self):
        return self.status != "bounded"


@dataclass
class InvarianceReport:
    samples: int
    violations: int
    growth_violations: int
    inverse_violations: int
    inverse_growth_violations: int
    R: float
    rho: float
    witnesses: list = field(default_factory=list)

    @property
    def ok(self):
        return self.violations + self.growth_violations + self.inverse_violations + self.inverse_growth_violations == 0

    def to_dict(self):
        return {
            "samples": self.samples,
            "violations": self.violations,
            "growth_violations": self.growth_violations,
            "inverse_violations": self.inverse_violations,
            "inverse_growth_violations": self.inverse_growth_violations,
            "R": self.R,
            "rho": self.rho,
            "witnesses": self.witnesses,
            "ok": self.ok,
        }


def _lambda_sample(sys, n=16):
    return sys.base.space.grid(n)


def _poly_vals(coefs, y):
    acc = np.zeros_like(y)
    for c in coefs[::-1]:
        acc = acc * y + c
    return acc


def _root_reach(polys, degrees, a_sup):
    """Radius past which the leading term provably dominates both inequalities.

    With B = max |c_k|^(1/(d-k)), |y| >= 4B gives |p(y) - y^d| <= |y|^d / 3.
    """
    reach = 0.0
    for coefs, dj in zip(polys, degrees):
        mags = np.abs(coefs[:dj])
        B = max((m ** (1.0 / (dj - k)) for k, m in enumerate(mags) if m > 0), default=0.0)
        reach = max(reach, 4 * B, (6.0 * (2.0 + a_sup)) ** (1.0 / (dj - 1)))
    return reach


def _test_radii(R, reach=0.0):
    circles = [R * (1 + 2.0**-i) for i in range(7)]
    top = max(20, int(np.ceil(np.log2(max(reach, R) / R))) * 4)
    # quarter-octave steps so no root annulus between R and the reach is skipped
    radial = [R * 2.0 ** (k / 4) for k in range(1, top + 1)]
    return np.array(circles + radial)


def _passes(R, polys, degrees, a_sup, angles, reach=0.0):
    for dj in degrees:
        if R ** (dj - 1) <= 2.0:
            return False
    radii = _test_radii(R, reach)
    y = (radii[:, None] * angles[None, :]).ravel()
    ay = np.abs(y)
    with np.errstate(over="ignore"):
        for coefs, dj in zip(polys, degrees):
            p = np.abs(_poly_vals(coefs, y))
            if np.any(p < (2.0 + a_sup) * ay) or np.any(p < 0.5 * ay**dj):
                return False
    return True


def find_radius(sys, n_lambda=16, n_angles=64):
    """Smallest grid radius (factor 1.05 from 1) with the dominance checks, doubled.

    Checks, for every sampled λ and factor: ``|p(y)| >= (2 + a_sup)|y|`` and
    ``|p(y)| >= |y|^d_j / 2`` on the circles ``R(1 + 2^-i)`` and radially
    outward, plus ``R^d_j > 2R``.
    """
    lams = _lambda_sample(sys, n_lambda)
    polys, degrees = [], []
    a_sup = 0.0
    for lam in lams:
        coef, a = sys.coefficients(lam)
        a_sup = max(a_sup, float(np.max(np.abs(a))))
        for j, dj in enumerate(sys.degrees):
            polys.append(coef[j, : dj + 1])
            degrees.append(dj)
    angles = np.exp(2j * np.pi * (np.arange(n_angles) + 0.5) / n_angles)
    reach = _root_reach(polys, degrees, a_sup)
    R = 1.0
    while R <= R_CAP:
        if _passes(R, polys, degrees, a_sup, angles, reach):
            break
        R *= R_GRID_FACTOR
    else:
        raise ConfigurationError(f"no filtration radius below {R_CAP:g}; coefficients too large")
    R_out = 2.0 * R
    rho = _estimate_rho(sys, R_out, lams)
    return FiltrationData(R=R_out, rho=rho, a_sup=a_sup, R_min=R)


def _estimate_rho(sys, R, lams, n=4096, seed=0):
    """Min over sampled cones of the per-factor growth of the escaping coordinate."""
    rng = np.random.default_rng(seed)
    r = R * np.exp(rng.uniform(0.0, np.log(8.0), n))
    r[: n // 8] = R * (1 + 1e-9)
    y = r * np.exp(2j * np.pi * rng.uniform(size=n))
    x = y * np.sqrt(rng.uniform(size=n)) * np.exp(2j * np.pi * rng.uniform(size=n))
    x[: n // 8] = y[: n // 8] * np.exp(2j * np.pi * rng.uniform(size=n // 8))
    worst = np.inf
    with np.errstate(over="ignore"):
        for lam in lams:
            coef, a = sys.coefficients(lam)
            for j, dj in enumerate(sys.degrees):
                p = _poly_vals(coef[j, : dj + 1], y)
                fwd = np.abs(p - a[j] * x) / np.abs(y)
                inv = np.abs(p - x) / (abs(a[j]) * np.abs(y))
                worst = min(worst, float(fwd.min()), float(inv.min()))
    if not worst > 1.0:
        raise ConfigurationError(f"sampled expansion factor {worst:.4g} is not > 1")
    return 1.0 + 0.95 * (worst - 1.0)


def classify_region(z, R):
    """V+ if |y| > max(|x|, R), V- if |x| > max(|y|, R), else V (ties to V)."""
    ax, ay = abs(z[0]), abs(z[1])
    if ay > ax and ay > R:
        return V_PLUS
    if ax > ay and ax > R:
        return V_MINUS
    return V_CENTER


def classify_array(X, Y, R):
    """0 for V, +1 for V+, -1 for V-."""
    ax, ay = np.abs(X), np.abs(Y)
    out = np.zeros(np.shape(X), dtype=np.int8)
    out[(ay > ax) & (ay > R)] = 1
    out[(ax > ay) & (ax > R)] = -1
    return out


def escape_classify(sys, lam, z, N=DEFAULT_N, filt=None, direction=1):
    """First step the forward (backward) orbit lies in V_R^+ (V_R^-), or bounded through N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    filt = filt or get_filtration(sys)
    target = V_PLUS if direction == 1 else V_MINUS
    status = "escaped-plus" if direction == 1 else "escaped-minus"
    z = (complex(z[0]), complex(z[1]))
    lam = sys.base.space.check(lam)
    for step in range(N + 1):
        if classify_region(z, filt.R) == target:
            return EscapeRecord(status, step, z)
        if step == N:
            break
        try:
            z = fiber_apply(sys, lam, z, direction)
        except OrbitEscape:
            return EscapeRecord(status, step + 1, z)
        lam = sys.sigma(lam)
    return EscapeRecord("bounded", N, z)


def _cone_samples(rng, R, n, spread=10.0):
    r = R * np.exp(rng.uniform(0.0, np.log(spread), n)) * (1 + 1e-9)
    lead = r * np.exp(2j * np.pi * rng.uniform(size=n))
    other = lead * np.sqrt(rng.uniform(size=n)) * 0.999999 * np.exp(2j * np.pi * rng.uniform(size=n))
    return other, lead


def verify_invariance(sys, filt=None, samples=10_000, seed=0, max_witnesses=5):
    """Forward invariance of V_R^+ with growth rho^m, and the dual under inverses."""
    filt = filt or get_filtration(sys)
    rng = np.random.default_rng(seed)
    lams = sys.base.space.sample(samples, rng)
    x, y = _cone_samples(rng, filt.R, samples)
    growth = filt.rho**sys.m
    rep = InvarianceReport(samples, 0, 0, 0, 0, filt.R, filt.rho)
    for i in range(samples):
        lam = lams[i]
        zp = (x[i], y[i])  # in V+
        zm = (y[i], x[i])  # in V-
        try:
            img = fiber_apply(sys, lam, zp, 1)
            if classify_region(img, filt.R) != V_PLUS:
                rep.violations += 1
                _witness(rep, max_witnesses, "forward", lam, zp, img)
            elif not abs(img[1]) > growth * abs(zp[1]):
                rep.growth_violations += 1
                _witness(rep, max_witnesses, "forward-growth", lam, zp, img)
        except OrbitEscape:
            pass
        try:
            img = fiber_apply(sys, lam, zm, -1)
            if classify_region(img, filt.R) != V_MINUS:
                rep.inverse_violations += 1
                _witness(rep, max_witnesses, "inverse", lam, zm, img)
            elif not abs(img[0]) > growth * abs(zm[0]):
                rep.inverse_growth_violations += 1
                _witness(rep, max_witnesses, "inverse-growth", lam, zm, img)
        except OrbitEscape:
            pass
    return rep


def _witness(rep, cap, kind, lam, z, img):
    if len(rep.witnesses) < cap:
        rep.witnesses.append(
            {"kind": kind, "lambda": [lam.real, lam.imag], "z": _pt(z), "image": _pt(img)}
        )


def _pt(z):
    return [z[0].real, z[0].imag, z[1].real, z[1].imag]


def get_filtration(sys):
    """find_radius result, computed once per system."""
    filt = getattr(sys, "_filtration", None)
    if filt is None:
        filt = find_radius(sys)
        sys._filtration = filt
    return filt
