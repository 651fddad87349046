"""Hot loops, dispatched to numba or numpy per ``fhd._backend``.

Kernels take flat arrays only; the modules above build the step tables and
bound arrays and interpret the outputs.

``green_orbit`` returns one row per point: value, error bound, fiber steps
used, cone-entry step (-1 if never), status (CONVERGED, BOUNDED, TAIL_CAP,
NONFINITE).
"""

import numpy as np

from .._backend import get_backend
from . import numpy_impl
from .numpy_impl import BOUNDED, CONVERGED, NONFINITE, TAIL_CAP

__all__ = [
    "BOUNDED",
    "CONVERGED",
    "NONFINITE",
    "TAIL_CAP",
    "green_orbit",
    "greedy_separated",
    "orbit_logs",
    "pk_fs_growth",
    "pk_green",
]


def _impl():
    if get_backend() == "numba":
        from . import numba_impl

        return numba_impl
    return numpy_impl


def _c(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def _f(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def green_orbit(X0, Y0, table, R, nmax, tol, bounds):
    """bounds: (ecoef, eb, eloglead, wdeg, degs) in the table's factor order."""
    ecoef, eb, eloglead, wdeg, degs = bounds
    return _impl().green_orbit(
        _c(X0), _c(Y0), _c(table.coef), _i(table.deg), _c(table.lead), _c(table.b),
        int(table.m), int(table.d), float(R), int(nmax), float(tol),
        _f(ecoef), _f(eb), _f(eloglead), _f(wdeg), _i(degs),
    )


def orbit_logs(X0, Y0, table, R, x0=0j):
    return _impl().orbit_logs(
        _c(X0), _c(Y0), _c(table.coef), _i(table.deg), _c(table.lead), _c(table.b),
        int(table.m), float(R), complex(x0),
    )


def pk_green(Xs, mexp, mcoef, mcount, d, logC, tol):
    return _impl().pk_green(_c(Xs), _i(mexp), _c(mcoef), _i(mcount), int(d), float(logC), float(tol))


def pk_fs_growth(Xs, Vs, mexp, mcoef, mcount, fd_step):
    return _impl().pk_fs_growth(_c(Xs), _c(Vs), _i(mexp), _c(mcoef), _i(mcount), float(fd_step))


def greedy_separated(order, traj, n, eps, seed_mask):
    """Grow `seed_mask` to a maximal eps-separated set under the d_n metric on rows of traj (N, T, 4)."""
    traj = np.ascontiguousarray(traj, dtype=np.float64)
    pos = traj[:, n - 1, :]
    finite = np.isfinite(pos).all(axis=1)
    # clipping only merges far-away cells; closeness is still checked exactly
    cells = np.floor(np.clip(np.where(finite[:, None], pos, 0.0), -1e12, 1e12) / eps).astype(np.int64)
    return _impl().greedy_separated(
        _i(order), traj, cells, finite, int(n), float(eps) ** 2, np.ascontiguousarray(seed_mask, dtype=np.bool_)
    )
