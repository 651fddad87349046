"""Built-in example systems."""

from .base_space import Base, BaseMap, BaseSpace
from .henon import CoefPoly, HenonFactor, SkewHenonSystem

POINT = Base(BaseSpace("finite", points=(0j,)), BaseMap("identity"))


def classical():
    """p(y) = y^2, a = 1, over a one-point base."""
    return SkewHenonSystem(POINT, [HenonFactor.simple(2)], name="classical")


def disc_contraction(c=0.5, radius=0.25):
    """p(y) = y^2 + λ, a = 1, σ(λ) = cλ on |λ| <= radius."""
    base = Base(BaseSpace("disc", radius=radius), BaseMap("contraction", c=c))
    lam = CoefPoly.from_triples([(1, 0, 1.0)])
    factor = HenonFactor(2, (lam,), CoefPoly.const(1.0))
    return SkewHenonSystem(base, [factor], name="disc-contraction")


def degree4():
    """Two quadratic factors y^2, a = 1, over a one-point base."""
    return SkewHenonSystem(POINT, [HenonFactor.simple(2), HenonFactor.simple(2)], name="degree4")


def pk_squares():
    from .pk import PkSkewSystem

    return PkSkewSystem.from_spec(
        POINT,
        k=1,
        degree=2,
        components=[[((2, 0), [(0, 0, 1.0)])], [((0, 2), [(0, 0, 1.0)])]],
        name="pk-squares",
    )


def pk_perturbed(radius=0.2, theta=1.0):
    """(x0^2 + λ x1^2, x1^2 + λ x0^2) over |λ| <= radius, σ a rotation by theta."""
    from .pk import PkSkewSystem

    base = Base(BaseSpace("disc", radius=radius), BaseMap("rotation", theta=theta))
    return PkSkewSystem.from_spec(
        base,
        k=1,
        degree=2,
        components=[
            [((2, 0), [(0, 0, 1.0)]), ((0, 2), [(1, 0, 1.0)])],
            [((0, 2), [(0, 0, 1.0)]), ((2, 0), [(1, 0, 1.0)])],
        ],
        name="pk-perturbed",
    )


HENON = {"classical": classical, "disc-contraction": disc_contraction, "degree4": degree4}
PK = {"pk-squares": pk_squares, "pk-perturbed": pk_perturbed}


def get(name):
    if name in HENON:
        return HENON[name]()
    if name in PK:
        return PK[name]()
    raise KeyError(f"unknown built-in system {name!r}; known: {sorted(HENON) + sorted(PK)}")
