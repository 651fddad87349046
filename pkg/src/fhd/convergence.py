"""Pullbacks of line currents and the reversed-composition inverse potentials.

The pulled-back current ``d^-n (H^{+n}_λ)^*[x = x0]`` has potential
``d^-n log|π1 H^{+n}_λ - x0|``.  The first coordinate after a full fiber step
is the second coordinate before the last factor, so the potentials converge
to ``G+_λ / d_m`` (d_m the degree of the last factor), not to ``G+_λ``.
"""

import numpy as np
from scipy import ndimage

from . import kernels
from .filtration import get_filtration
from .green import DEFAULT_TOL, UnsupportedConfiguration, box_samples, green_field
from .slices import Window, default_window, laplacian_masses, mu_slice, vertical

SENTINEL_COLLAR = 3


def line_constant(sys):
    """Factor c with d^-n log|π1 H^{+n} - x0| -> c G+ (1 / degree of the last factor)."""
    return 1.0 / sys.degrees[-1]


def pullback_field(sys, lam, X, Y, n_max, x0):
    """Rows of ``d^-k log|π1 H^{+k}_λ(z) - x0|`` for k = 0..n_max (-inf at exact hits)."""
    filt = get_filtration(sys)
    table = sys.step_table(sys.base.space.check(lam), n_max, "forward")
    X = np.atleast_1d(np.asarray(X, dtype=complex))
    Y = np.atleast_1d(np.asarray(Y, dtype=complex))
    _, logpi1 = kernels.orbit_logs(X, Y, table, filt.R, x0)
    return logpi1 / float(sys.d) ** np.arange(n_max + 1)


def pullback_potential(sys, lam, n, x0, z):
    """``d^-n log|π1(H^{+n}_λ(z)) - x0|``; -inf when the orbit hits the line."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(pullback_field(sys, lam, [z[0]], [z[1]], n, x0)[0, n])


def _valid_mask(P):
    """Finite cells away from a collar around -inf sentinels."""
    bad = ~np.isfinite(P)
    if not bad.any():
        return np.ones(P.shape, dtype=bool)
    collar = ndimage.binary_dilation(bad, structure=np.ones((3, 3), bool), iterations=SENTINEL_COLLAR)
    return ~collar


def pullback_convergence(sys, lam, x0=10.0, n_list=range(1, 9), slice_=None, window=None, res=256, tol=DEFAULT_TOL):
    """L1 distance on a slice grid between the pullback potential and c G+ + κ_n.

    c = line_constant(sys); κ_n is the grid-mean difference.
    """
    n_list = list(n_list)
    slice_ = slice_ or vertical(0)
    window = window or default_window(sys, res=res)
    X, Y = slice_.embed(window.grid())
    c = line_constant(sys)
    G = green_field(sys, lam, X, Y, "+", tol).value
    P = pullback_field(sys, lam, X.ravel(), Y.ravel(), max(n_list), x0)
    h2 = window.h**2
    rows = []
    for n in n_list:
        Pn = P[:, n].reshape(X.shape)
        ok = _valid_mask(Pn)
        diff = Pn[ok] - c * G[ok]
        kappa = float(diff.mean())
        dist = float(np.abs(diff - kappa).sum() * h2)
        # least-squares multiple of G+, as a check on c
        Gc = G[ok] - G[ok].mean()
        fit = float(np.dot(Pn[ok] - Pn[ok].mean(), Gc) / np.dot(Gc, Gc)) if np.dot(Gc, Gc) > 0 else np.nan
        rows.append({"n": n, "l1": dist, "kappa": kappa, "fitted_multiple": fit, "excluded_cells": int((~ok).sum())})
    d = [r["l1"] for r in rows]
    tail = [r["l1"] for r in rows if r["n"] >= 3]
    return {
        "x0": complex(x0).real if complex(x0).imag == 0 else [complex(x0).real, complex(x0).imag],
        "multiple": c,
        "rows": rows,
        "final_over_initial": d[-1] / d[0] if d[0] > 0 else 0.0,
        "tail_monotone": all(b < a for a, b in zip(tail, tail[1:])),
        "first_drop": d[0] / d[1] if len(d) > 1 and d[1] > 0 else np.inf,
    }


def uniqueness_proxy(sys, lam, x0, x0b, n=8, slice_=None, res=256):
    """L1 gap between mean-matched pullback potentials of two lines, and the noise level.

    Noise is the larger of the two L1 distances to c G+ + κ.
    """
    slice_ = slice_ or vertical(0)
    window = default_window(sys, res=res)
    X, Y = slice_.embed(window.grid())
    c = line_constant(sys)
    G = green_field(sys, lam, X, Y, "+").value.ravel()
    A = pullback_field(sys, lam, X.ravel(), Y.ravel(), n, x0)[:, n]
    B = pullback_field(sys, lam, X.ravel(), Y.ravel(), n, x0b)[:, n]
    ok = _valid_mask(A.reshape(X.shape)).ravel() & _valid_mask(B.reshape(X.shape)).ravel()
    h2 = window.h**2
    gap = A[ok] - B[ok]
    gap = float(np.abs(gap - gap.mean()).sum() * h2)
    noise = []
    for P in (A, B):
        r = P[ok] - c * G[ok]
        noise.append(float(np.abs(r - r.mean()).sum() * h2))
    return {"gap": gap, "noise": max(noise), "ok": gap < 2 * max(noise) + 1e-12}


def bump(center, radius):
    """Radial C^2 bump ``(1 - s^2)^3`` for s = |t - center| / radius < 1."""
    center = complex(center)

    def psi(t):
        s2 = np.abs(np.asarray(t) - center) ** 2 / radius**2
        return np.where(s2 < 1, (1 - s2) ** 3, 0.0)

    return psi


def line_current_constant(sys, lam, psi=None, x0=0j, window=None, res=512, tol=DEFAULT_TOL):
    """ψ-weighted μ-_λ slice mass along {x = x0}; ψ = None means ψ ≡ 1 on the window.

    Along a vertical line G- grows like log|y| / d_m, so the full constant is 1/d_m.
    """
    if sys.base.map.kind != "identity":
        raise UnsupportedConfiguration("the line-current constant is defined for identity base maps")
    window = window or default_window(sys, res=res)
    m = mu_slice(sys, lam, "-", vertical(x0), window, tol=tol)
    t = window.grid()[1:-1, 1:-1]
    w = np.ones(t.shape) if psi is None else psi(t)
    c = float((w * m.masses).sum())
    return {"constant": c, "expected_full": line_constant(sys), "zero_warning": c < 1e-3}


def gtilde_minus(sys, lam, z, n):
    """``d^-n log+ ||(H^{+n}_λ)^-1(z)||``."""
    return float(gtilde_minus_field(sys, lam, [z[0]], [z[1]], n)[0])


def gtilde_minus_field(sys, lam, X, Y, n):
    filt = get_filtration(sys)
    table = sys.step_table(sys.base.space.check(lam), n, "inverse_of_forward")
    X = np.atleast_1d(np.asarray(X, dtype=complex))
    Y = np.atleast_1d(np.asarray(Y, dtype=complex))
    lognorm, _ = kernels.orbit_logs(Y, X, table, filt.R)
    return np.maximum(lognorm[:, n], 0.0) / float(sys.d) ** n


def contraction_cauchy_check(sys, lams=None, half_width=5.0, n_list=range(2, 11), samples=4000, seed=0):
    """sup over a box of |G̃-_{n+1} - G̃-_n| and the fitted geometric ratio."""
    if not sys.base.map.is_contraction():
        raise UnsupportedConfiguration("the reversed-composition check needs a contracting base map")
    n_list = list(n_list)
    if lams is None:
        lams = sys.base.space.grid(2)
    rng = np.random.default_rng(seed)
    X, Y = box_samples(rng, half_width, samples)
    sups = np.zeros(len(n_list) - 1)
    for lam in lams:
        prev = None
        for i, n in enumerate(n_list):
            g = gtilde_minus_field(sys, lam, X, Y, n)
            if prev is not None:
                sups[i - 1] = max(sups[i - 1], float(np.abs(g - prev).max()))
            prev = g
    ns = np.array(n_list[:-1])
    ok = sups > 0
    ratio = float(np.exp(np.polyfit(ns[ok], np.log(sups[ok]), 1)[0]))
    return {"n": ns.tolist(), "sup_diff": sups.tolist(), "ratio": ratio, "bound": 1.0 / sys.d + 0.1}


def slice_laplacian_of_limit(sys, lam, x0=10.0, n=8, res=256):
    """Grid Laplacian mass of the n-th pullback potential on the vertical slice x = 0."""
    window = Window(0j, get_filtration(sys).R + 1.0, res)
    X, Y = vertical(0).embed(window.grid())
    P = pullback_field(sys, lam, X.ravel(), Y.ravel(), n, x0)[:, n].reshape(X.shape)
    return float(laplacian_masses(np.where(np.isfinite(P), P, 0.0)).sum())

