"""Generalized Hénon factors, fiber maps and skew iterates over a base.

A factor is ``(x, y) ↦ (y, p(y) - a x)`` with ``p`` monic of degree >= 2.  Its
coefficients (and ``a``) are polynomials in λ and conj(λ), given as
``(power of λ, power of conj(λ), coefficient)`` triples.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .base_space import Base, sigma_orbit

ESCAPE_CUTOFF = 1e100
INVERSE_THRESHOLD = 1e-12
MAX_FACTORS = 8
MAX_FACTOR_DEGREE = 8


class OrbitEscape(ArithmeticError):
    """The orbit left the representable range (norm above ESCAPE_CUTOFF)."""

    def __init__(self, step, trace=None):
        super().__init__(f"orbit escaped at step {step}")
        self.step = step
        self.trace = trace or []


class IllConditionedInverse(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class CoefPoly:
    """``Σ c λ^p conj(λ)^q`` over the stored ``(p, q, c)`` terms."""

    terms: tuple = ()

    @classmethod
    def const(cls, c):
        return cls(((0, 0, complex(c)),))

    @classmethod
    def from_triples(cls, triples):
        out = []
        for p, q, c in triples:
            if int(p) < 0 or int(q) < 0:
                raise ValueError("powers of λ must be nonnegative")
            out.append((int(p), int(q), complex(c)))
        return cls(tuple(out))

    def __call__(self, lam):
        lam = complex(lam)
        lc = lam.conjugate()
        return sum((c * lam**p * lc**q for p, q, c in self.terms), 0j)

    def bound(self, radius):
        """Upper bound of the modulus on ``|λ| <= radius``."""
        return sum(abs(c) * radius ** (p + q) for p, q, c in self.terms)


@dataclass(frozen=True)
class HenonFactor:
    """``(x, y) ↦ (y, p_λ(y) - a(λ) x)``; ``coefs[i]`` multiplies ``y^i``."""

    degree: int
    coefs: tuple
    a: CoefPoly

    def __post_init__(self):
        if not 2 <= self.degree <= MAX_FACTOR_DEGREE:
            raise ValueError(f"factor degree must be in [2, {MAX_FACTOR_DEGREE}]")
        coefs = tuple(self.coefs) + (CoefPoly(),) * (self.degree - len(self.coefs))
        if len(coefs) != self.degree:
            raise ValueError("at most `degree` lower coefficients (the leading one is 1)")
        object.__setattr__(self, "coefs", coefs)

    @classmethod
    def simple(cls, degree, lower=(), a=1.0):
        """Factor with constant coefficients; ``lower[i]`` multiplies ``y^i``."""
        return cls(degree, tuple(CoefPoly.const(c) for c in lower), CoefPoly.const(a))

    def poly_at(self, lam):
        """Coefficients of p_λ, lowest first, including the leading 1."""
        return np.array([c(lam) for c in self.coefs] + [1.0 + 0j])

    def a_at(self, lam):
        return self.a(lam)


def horner(coefs, y):
    acc = 0j
    for c in coefs[::-1]:
        acc = acc * y + c
    return acc


class SkewHenonSystem:
    """Skew product ``(λ, z) ↦ (σ(λ), H_λ(z))`` with ``H_λ = H^(m) ∘ ... ∘ H^(1)``."""

    def __init__(self, base: Base, factors, name=None):
        factors = tuple(factors)
        if not 1 <= len(factors) <= MAX_FACTORS:
            raise ValueError(f"need between 1 and {MAX_FACTORS} factors")
        for j, f in enumerate(factors):
            # sampled only; an unsampled zero still surfaces as IllConditionedInverse
            worst = min(abs(f.a_at(lam)) for lam in base.space.grid(8))
            if worst < INVERSE_THRESHOLD:
                raise ValueError(f"factor {j}: |a(λ)| = {worst:.3g} on the base; a must not vanish")
        self.base = base
        self.factors = factors
        self.name = name
        self.degrees = tuple(f.degree for f in factors)
        self.d = int(np.prod(self.degrees))
        self.m = len(factors)
        self.dmax = max(self.degrees)
        self._coef_cache = lru_cache(maxsize=4096)(self._coefficients_uncached)
        self._table_cache = lru_cache(maxsize=64)(self._step_table_uncached)

    def __repr__(self):
        return f"SkewHenonSystem(name={self.name!r}, degrees={self.degrees}, base={self.base})"

    def sigma(self, lam):
        return self.base.sigma(lam)

    def _coefficients_uncached(self, lam):
        coef = np.zeros((self.m, self.dmax + 1), dtype=complex)
        a = np.empty(self.m, dtype=complex)
        for j, f in enumerate(self.factors):
            coef[j, : f.degree + 1] = f.poly_at(lam)
            a[j] = f.a_at(lam)
        coef.setflags(write=False)
        a.setflags(write=False)
        return coef, a

    def coefficients(self, lam):
        """``(coef[m, dmax+1], a[m])`` at λ, cached per λ."""
        return self._coef_cache(complex(lam))

    def step_table(self, lam, n, kind="forward"):
        """Cached ``_step_table_uncached``; the arrays are read-only."""
        if kind not in ("forward", "backward", "inverse_of_forward"):
            raise ValueError(f"unknown step table kind {kind!r}")
        return self._table_cache(complex(lam), int(n), kind)

    def _step_table_uncached(self, lam, n, kind):
        """Flattened factor sequence for the kernels.

        Each factor acts in working coordinates as
        ``(X, Y) ↦ (Y, lead * (Y^d + Σ c_k Y^k) - b X)``.  Forward factors use
        ``lead = 1, b = a``; inverse factors act on swapped coordinates with
        ``lead = b = 1/a``.

        kind: ``forward`` (H^{+n}), ``backward`` (H^{-n}) or
        ``inverse_of_forward`` ((H^{+n})^{-1}).
        """
        lams = sigma_orbit(self.base, lam, n)
        if kind == "inverse_of_forward":
            lams = lams[::-1]
        K = n * self.m
        coef = np.zeros((K, self.dmax + 1), dtype=complex)
        deg = np.empty(K, dtype=np.int64)
        lead = np.empty(K, dtype=complex)
        b = np.empty(K, dtype=complex)
        order = range(self.m) if kind == "forward" else range(self.m - 1, -1, -1)
        k = 0
        for mu in lams:
            c, a = self.coefficients(mu)
            for j in order:
                coef[k] = c[j]
                deg[k] = self.degrees[j]
                if kind == "forward":
                    lead[k] = 1.0
                    b[k] = a[j]
                else:
                    if abs(a[j]) < INVERSE_THRESHOLD:
                        raise IllConditionedInverse(f"|a_{j}({mu})| below {INVERSE_THRESHOLD}")
                    lead[k] = 1.0 / a[j]
                    b[k] = 1.0 / a[j]
                k += 1
        for arr in (coef, deg, lead, b):
            arr.setflags(write=False)
        return StepTable(coef, deg, lead, b, self.m, self.d, swap=(kind != "forward"))


@dataclass
class StepTable:
    coef: np.ndarray
    deg: np.ndarray
    lead: np.ndarray
    b: np.ndarray
    m: int
    d: int
    swap: bool

    @property
    def nsteps(self):
        return len(self.deg) // self.m


def _check(z):
    x, y = z
    if not (np.isfinite(x) and np.isfinite(y)) or max(abs(x), abs(y)) > ESCAPE_CUTOFF:
        raise OrbitEscape(0)
    return z


def factor_apply(f, lam, z):
    """``(y, p_λ(y) - a(λ) x)``."""
    x, y = complex(z[0]), complex(z[1])
    with np.errstate(over="ignore", invalid="ignore"):
        out = (y, horner(f.poly_at(lam), y) - f.a_at(lam) * x)
    return _check(out)


def factor_inverse(f, lam, z):
    """``((p_λ(x) - y) / a(λ), x)``."""
    a = f.a_at(lam)
    if abs(a) < INVERSE_THRESHOLD:
        raise IllConditionedInverse(f"|a(λ)| = {abs(a):.3g} below {INVERSE_THRESHOLD}")
    x, y = complex(z[0]), complex(z[1])
    with np.errstate(over="ignore", invalid="ignore"):
        out = ((horner(f.poly_at(lam), x) - y) / a, x)
    return _check(out)


def fiber_apply(sys, lam, z, direction=1):
    """``H_λ(z)`` for direction +1, ``H_λ^{-1}(z)`` for -1."""
    if direction == 1:
        for f in sys.factors:
            z = factor_apply(f, lam, z)
    elif direction == -1:
        for f in reversed(sys.factors):
            z = factor_inverse(f, lam, z)
    else:
        raise ValueError("direction must be +1 or -1")
    return z


def _skew(sys, lams, z, direction):
    trace = [tuple(z)]
    for step, mu in enumerate(lams):
        try:
            z = fiber_apply(sys, mu, z, direction)
        except OrbitEscape as exc:
            raise OrbitEscape(step + 1, trace) from exc
        trace.append(z)
    return z, trace


def skew_forward(sys, lam, z, n):
    """``H_λ^{+n}(z)`` and the orbit trace ``[z, H_λ z, ...]``."""
    z = (complex(z[0]), complex(z[1]))
    return _skew(sys, sigma_orbit(sys.base, lam, n), z, 1)


def skew_backward(sys, lam, z, n):
    """``H_λ^{-n}(z) = H^{-1}_{σ^{n-1}λ} ∘ ... ∘ H^{-1}_λ (z)``."""
    z = (complex(z[0]), complex(z[1]))
    return _skew(sys, sigma_orbit(sys.base, lam, n), z, -1)


def inverse_of_forward(sys, lam, z, n):
    """``(H_λ^{+n})^{-1}(z) = H_λ^{-1} ∘ ... ∘ H^{-1}_{σ^{n-1}λ} (z)``."""
    z = (complex(z[0]), complex(z[1]))
    out, _ = _skew(sys, sigma_orbit(sys.base, lam, n)[::-1], z, -1)
    return out


def jacobian_constant(sys, lam):
    """Constant Jacobian determinant ``a_1(λ) ... a_m(λ)`` of H_λ."""
    _, a = sys.coefficients(sys.base.space.check(lam))
    return complex(np.prod(a))
