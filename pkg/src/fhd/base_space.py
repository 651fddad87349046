"""Compact parameter spaces and the base dynamics driving the fibers."""

from dataclasses import dataclass, field

import numpy as np

_MEMBER_TOL = 1e-12


class DomainError(ValueError):
    """A base point does not belong to its space."""


@dataclass(frozen=True)
class BaseSpace:
    """One of a small catalogue of compact subsets of C.

    kind is ``disc`` (closed disc of ``radius`` about 0), ``circle``
    (``|λ| = radius``), ``interval`` (real segment ``[lo, hi]``) or ``finite``
    (the listed ``points``, with the discrete metric).
    """

    kind: str
    radius: float = 1.0
    lo: float = 0.0
    hi: float = 1.0
    points: tuple = ()

    def __post_init__(self):
        if self.kind not in ("disc", "circle", "interval", "finite"):
            raise ValueError(f"unknown base space kind {self.kind!r}")
        if self.kind in ("disc", "circle") and not self.radius >= 0:
            raise ValueError("radius must be nonnegative")
        if self.kind == "interval" and not self.lo <= self.hi:
            raise ValueError("interval needs lo <= hi")
        if self.kind == "finite":
            if len(self.points) == 0:
                raise ValueError("finite space needs at least one point")
            object.__setattr__(self, "points", tuple(complex(p) for p in self.points))

    def contains(self, lam):
        lam = complex(lam)
        if self.kind == "disc":
            return abs(lam) <= self.radius * (1 + _MEMBER_TOL) + _MEMBER_TOL
        if self.kind == "circle":
            return abs(abs(lam) - self.radius) <= _MEMBER_TOL * max(1.0, self.radius)
        if self.kind == "interval":
            return abs(lam.imag) <= _MEMBER_TOL and self.lo - _MEMBER_TOL <= lam.real <= self.hi + _MEMBER_TOL
        return self.index_of(lam) is not None

    def index_of(self, lam):
        for i, p in enumerate(self.points):
            if abs(p - lam) <= _MEMBER_TOL:
                return i
        return None

    def check(self, lam):
        if not self.contains(lam):
            raise DomainError(f"{lam!r} is not in the {self.kind} base space")
        return complex(lam)

    def distance(self, a, b):
        if self.kind == "finite":
            return 0.0 if abs(complex(a) - complex(b)) <= _MEMBER_TOL else 1.0
        return abs(complex(a) - complex(b))

    def grid(self, n=16):
        """Deterministic dense sample, boundary included; used for sups over M."""
        if self.kind == "finite":
            return np.array(self.points, dtype=complex)
        if self.kind == "interval":
            return np.linspace(self.lo, self.hi, max(n, 2)).astype(complex)
        angles = np.exp(2j * np.pi * np.arange(4 * n) / (4 * n))
        if self.kind == "circle" or self.radius == 0:
            return self.radius * angles
        radii = np.linspace(0.0, self.radius, n + 1)[1:]
        return np.concatenate([[0j], (radii[:, None] * angles[None, :]).ravel()])

    def sample(self, count, rng):
        """``count`` random points of the space."""
        if self.kind == "finite":
            return np.asarray(self.points, dtype=complex)[rng.integers(len(self.points), size=count)]
        if self.kind == "interval":
            return rng.uniform(self.lo, self.hi, count).astype(complex)
        theta = rng.uniform(0, 2 * np.pi, count)
        if self.kind == "circle":
            return self.radius * np.exp(1j * theta)
        r = self.radius * np.sqrt(rng.uniform(0, 1, count))
        return r * np.exp(1j * theta)


@dataclass(frozen=True)
class BaseMap:
    """Self map σ of a BaseSpace.

    kind is ``identity``, ``contraction`` (λ ↦ cλ, ``|c| <= 1``),
    ``rotation`` (λ ↦ e^{iθ}λ) or ``permutation`` (index table on a finite
    space).
    """

    kind: str
    c: complex = 1.0
    theta: float = 0.0
    table: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ("identity", "contraction", "rotation", "permutation"):
            raise ValueError(f"unknown base map kind {self.kind!r}")
        if self.kind == "contraction" and abs(complex(self.c)) > 1 + 1e-15:
            raise ValueError("contraction factor must satisfy |c| <= 1")
        if self.kind == "permutation":
            t = tuple(int(i) for i in self.table)
            if sorted(t) != list(range(len(t))):
                raise ValueError("permutation table must be a permutation of 0..n-1")
            object.__setattr__(self, "table", t)

    def is_surjective(self):
        if self.kind == "contraction":
            return abs(complex(self.c)) >= 1 - 1e-15
        return True

    def is_contraction(self):
        return self.kind == "contraction" and abs(complex(self.c)) < 1

    def apply(self, space, lam):
        if self.kind == "identity":
            return lam
        if self.kind == "contraction":
            return complex(self.c) * lam
        if self.kind == "rotation":
            return np.exp(1j * self.theta) * lam
        i = space.index_of(lam)
        if i is None or len(self.table) != len(space.points):
            raise DomainError("permutation map needs a finite space of matching size")
        return space.points[self.table[i]]


@dataclass(frozen=True)
class Base:
    """A base space together with its self map."""

    space: BaseSpace
    map: BaseMap

    def __post_init__(self):
        if self.map.kind == "permutation" and self.space.kind != "finite":
            raise ValueError("permutation maps need a finite base space")
        if self.map.kind == "rotation" and self.space.kind not in ("disc", "circle"):
            raise ValueError("rotation maps need a disc or circle")
        if self.map.kind == "contraction" and self.space.kind == "interval":
            c = complex(self.map.c)
            if abs(c.imag) > 0 or self.space.lo != -self.space.hi:
                raise ValueError("contraction on an interval needs real c and a symmetric interval")

    def sigma(self, lam):
        return complex(self.map.apply(self.space, complex(lam)))

    def is_surjective(self):
        return self.map.is_surjective()

    def maps_into_itself(self, n=16):
        """Sampled check that σ(M) ⊂ M."""
        return all(self.space.contains(self.sigma(lam)) for lam in self.space.grid(n))


def sigma_orbit(base, lam, n):
    """Return ``[λ, σ(λ), ..., σ^{n-1}(λ)]``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    lam = base.space.check(lam)
    out = []
    for _ in range(n):
        out.append(lam)
        lam = base.sigma(lam)
    return out


def is_surjective(base_map):
    return base_map.is_surjective()


def contraction_steps(base, lam, tol=1e-12, cap=10_000):
    """Steps until ``|σ^n(λ)| < tol`` for a contraction toward 0; None if never."""
    lam = base.space.check(lam)
    for n in range(cap):
        if abs(lam) < tol:
            return n
        lam = base.sigma(lam)
    return None
