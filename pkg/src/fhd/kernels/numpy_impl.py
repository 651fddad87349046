"""Vectorised numpy versions of the kernels in numba_impl (same signatures)."""

import numpy as np

CONVERGED = 0
BOUNDED = 1
TAIL_CAP = 2
NONFINITE = 3


def _wrap(l):
    return l.real + 1j * ((l.imag + np.pi) % (2 * np.pi) - np.pi)


def _plain_factor(X, Y, c, dg, lead, b):
    acc = np.full_like(Y, c[dg])
    for k in range(dg - 1, -1, -1):
        acc = acc * Y + c[k]
    return Y, lead * acc - b * X


def _log_factor(l, u, c, dg, lead, b):
    w = np.exp(-l)
    s = np.zeros_like(l)
    for k in range(dg):
        s = s * w + c[k]
    corr = s * w - (b / lead) * u * w ** (dg - 1)
    ln = _wrap(dg * l + np.log(lead) + np.log(1.0 + corr))
    return ln, np.exp(l - ln)


def _tail_eta(Y, ecoef, eb, eloglead, wdeg, degs):
    eta = np.zeros_like(Y)
    bad = np.zeros(Y.shape, dtype=bool)
    for i, dg in enumerate(degs):
        e = eb[i] * Y ** (1.0 - dg)
        for k in range(dg):
            e = e + ecoef[i, k] * Y ** float(k - dg)
        bad |= e >= 1.0
        eta += wdeg[i] * (-np.log1p(-np.minimum(e, 0.5)) + eloglead[i])
    eta[bad] = np.inf
    return eta


def green_orbit(X0, Y0, coef, deg, lead, b, m, d, R, nmax, tol, ecoef, eb, eloglead, wdeg, degs):
    N = X0.shape[0]
    res = np.zeros((N, 5))
    res[:, 3] = -1
    res[:, 4] = BOUNDED
    nsteps = deg.shape[0] // m
    idx = np.arange(N)
    X = X0.astype(complex)
    Y = Y0.astype(complex)
    logmode = np.zeros(N, dtype=bool)
    l = np.zeros(N, dtype=complex)
    u = np.zeros(N, dtype=complex)
    esc = np.full(N, -1)
    with np.errstate(all="ignore"):
        for n in range(nsteps + 1):
            plain = ~logmode
            aX, aY = np.abs(X), np.abs(Y)
            nonfin = plain & ~(np.isfinite(aX) & np.isfinite(aY))
            enter = plain & ~nonfin & (aY > aX) & (aY > R)
            l[enter] = np.log(Y[enter])
            u[enter] = X[enter] / Y[enter]
            logmode |= enter
            esc[enter] = n
            stop_bounded = plain & ~nonfin & ~enter & (n >= nmax)
            done = nonfin | stop_bounded
            res[idx[nonfin]] = [np.nan, np.inf, n, -1, NONFINITE]
            res[idx[stop_bounded], 2] = n
            if logmode.any():
                scale = float(d) ** (-n)
                err = _tail_eta(np.exp(l[logmode].real), ecoef, eb, eloglead, wdeg, degs) * scale / (d - 1)
                fin = (err < tol) | (n == nsteps)
                sel = np.flatnonzero(logmode)[fin]
                out = idx[sel]
                res[out, 0] = l[sel].real * scale
                res[out, 1] = err[fin]
                res[out, 2] = n
                res[out, 3] = esc[sel]
                res[out, 4] = np.where(err[fin] < tol, CONVERGED, TAIL_CAP)
                done[sel] = True
            if n == nsteps:
                res[idx[~done], 2] = nsteps
                break
            keep = ~done
            idx, X, Y, l, u, logmode, esc = idx[keep], X[keep], Y[keep], l[keep], u[keep], logmode[keep], esc[keep]
            if idx.size == 0:
                break
            for i in range(m):
                k = n * m + i
                pm = ~logmode
                X[pm], Y[pm] = _plain_factor(X[pm], Y[pm], coef[k], deg[k], lead[k], b[k])
                l[logmode], u[logmode] = _log_factor(l[logmode], u[logmode], coef[k], deg[k], lead[k], b[k])
    return res


def _log_abs_diff(lp, x0):
    out = np.empty(lp.shape)
    neg = lp.real == -np.inf
    big = ~neg & (lp.real > 30.0)
    mid = ~neg & ~big
    out[neg] = np.log(abs(x0)) if x0 != 0 else -np.inf
    out[big] = lp[big].real + np.log(np.abs(1.0 - x0 * np.exp(-lp[big])))
    out[mid] = np.log(np.abs(np.exp(lp[mid]) - x0))
    return out


def orbit_logs(X0, Y0, coef, deg, lead, b, m, R, x0):
    N = X0.shape[0]
    nsteps = deg.shape[0] // m
    lognorm = np.empty((N, nsteps + 1))
    logpi1 = np.empty((N, nsteps + 1))
    X = X0.astype(complex)
    Y = Y0.astype(complex)
    logmode = np.zeros(N, dtype=bool)
    l = np.zeros(N, dtype=complex)
    lp = np.zeros(N, dtype=complex)
    u = np.zeros(N, dtype=complex)
    with np.errstate(all="ignore"):
        for n in range(nsteps + 1):
            pm = ~logmode
            enter = pm & (np.abs(Y) > np.abs(X)) & (np.abs(Y) > R)
            l[enter] = np.log(Y[enter])
            u[enter] = X[enter] / Y[enter]
            Xe = X[enter]
            lp[enter] = np.where(Xe != 0, np.log(np.where(Xe != 0, Xe, 1.0)), complex(-np.inf, 0.0))
            logmode |= enter
            pm = ~logmode
            lognorm[logmode, n] = l[logmode].real + 0.5 * np.log1p(np.abs(u[logmode]) ** 2)
            logpi1[logmode, n] = _log_abs_diff(lp[logmode], x0)
            lognorm[pm, n] = np.log(np.hypot(np.abs(X[pm]), np.abs(Y[pm])))
            logpi1[pm, n] = np.log(np.abs(X[pm] - x0))
            if n == nsteps:
                break
            for i in range(m):
                k = n * m + i
                X[pm], Y[pm] = _plain_factor(X[pm], Y[pm], coef[k], deg[k], lead[k], b[k])
                lp[logmode] = l[logmode]
                l[logmode], u[logmode] = _log_factor(l[logmode], u[logmode], coef[k], deg[k], lead[k], b[k])
    return lognorm, logpi1


def _pk_eval(x, mexp, mcoef_s, mcount):
    out = np.zeros_like(x)
    for i in range(x.shape[1]):
        for q in range(mcount[i]):
            t = np.full(x.shape[0], mcoef_s[i, q], dtype=complex)
            for j in range(x.shape[1]):
                if mexp[i, q, j]:
                    t = t * x[:, j] ** mexp[i, q, j]
            out[:, i] += t
    return out


def pk_green(Xs, mexp, mcoef, mcount, d, logC, tol):
    N = Xs.shape[0]
    res = np.zeros((N, 3))
    nx = np.linalg.norm(Xs, axis=1)
    zero = nx == 0.0
    x = Xs[~zero] / nx[~zero, None]
    G = np.log(nx[~zero])
    n = 0
    err = logC / (d - 1)
    while n < mcoef.shape[0] and err >= tol:
        y = _pk_eval(x, mexp, mcoef[n], mcount)
        ny = np.linalg.norm(y, axis=1)
        n += 1
        G += np.log(ny) / float(d) ** n
        x = y / ny[:, None]
        err = logC / (d - 1) / float(d) ** n
    res[~zero, 0] = G
    res[~zero, 1] = err
    res[~zero, 2] = n
    res[zero, 0] = -np.inf
    return res


def pk_fs_growth(Xs, Vs, mexp, mcoef, mcount, fd_step):
    N = Xs.shape[0]
    nsteps = mcoef.shape[0]
    out = np.empty((N, nsteps))
    nx = np.linalg.norm(Xs, axis=1)
    x = Xs / nx[:, None]
    v = Vs / nx[:, None]
    v = v - np.sum(v * x.conj(), axis=1)[:, None] * x
    nv = np.linalg.norm(v, axis=1)
    with np.errstate(all="ignore"):
        acc = np.log(nv)
        v = v / nv[:, None]
        alive = np.ones(N, dtype=bool)
        for n in range(nsteps):
            fp = _pk_eval(x + fd_step * v, mexp, mcoef[n], mcount)
            fm = _pk_eval(x - fd_step * v, mexp, mcoef[n], mcount)
            y = _pk_eval(x, mexp, mcoef[n], mcount)
            ny = np.linalg.norm(y, axis=1)
            y = y / ny[:, None]
            v = (fp - fm) / (2.0 * fd_step)
            v = v - np.sum(v * y.conj(), axis=1)[:, None] * y
            nv = np.linalg.norm(v, axis=1)
            bad = alive & ~((nv > 0.0) & np.isfinite(nv))
            out[bad, n:] = np.where(np.isfinite(nv[bad]), -np.inf, np.nan)[:, None]
            alive &= ~bad
            acc = np.where(alive, acc + np.log(nv / ny), acc)
            out[alive, n] = acc[alive]
            v = v / np.where(alive, nv, 1.0)[:, None]
            x = y
    return out


def greedy_separated(order, traj, cells, finite, n, eps2, seed_mask):
    chosen = seed_mask.copy()
    buckets = {}
    for p in np.flatnonzero(chosen & finite):
        buckets.setdefault(tuple(cells[p]), []).append(p)
    offsets = np.array(np.meshgrid(*[[-1, 0, 1]] * 4, indexing="ij")).reshape(4, -1).T
    for p in order:
        if chosen[p]:
            continue
        if finite[p]:
            near = [q for off in offsets for q in buckets.get(tuple(cells[p] + off), ())]
            if near:
                diff = traj[near, :n] - traj[p, :n]
                with np.errstate(invalid="ignore"):
                    close = np.all(np.sum(diff * diff, axis=2) <= eps2, axis=1)
                if close.any():
                    continue
            buckets.setdefault(tuple(cells[p]), []).append(p)
        chosen[p] = True
    return chosen
