"""numba kernels.  Mirrors numpy_impl one-for-one; see kernels/__init__.py."""

import math

import numpy as np
from numba import njit, prange

TWO_PI = 2.0 * math.pi

# status codes shared with numpy_impl
CONVERGED = 0
BOUNDED = 1
TAIL_CAP = 2
NONFINITE = 3


@njit(cache=True, inline="always")
def _wrap(l):
    im = (l.imag + math.pi) % TWO_PI - math.pi
    return complex(l.real, im)


@njit(cache=True, inline="always")
def _plain_factor(X, Y, c, dg, lead, b):
    acc = c[dg]
    for k in range(dg - 1, -1, -1):
        acc = acc * Y + c[k]
    return Y, lead * acc - b * X


@njit(cache=True, inline="always")
def _log_factor(l, u, c, dg, lead, b):
    w = np.exp(-l)
    s = 0j
    for k in range(dg):
        s = s * w + c[k]
    corr = s * w - (b / lead) * u * w ** (dg - 1)
    ln = _wrap(dg * l + np.log(lead) + np.log(1.0 + corr))
    return ln, np.exp(l - ln)


@njit(cache=True)
def _tail_eta(Y, ecoef, eb, eloglead, wdeg, degs):
    m = degs.shape[0]
    eta = 0.0
    for i in range(m):
        dg = degs[i]
        e = eb[i] * Y ** (1 - dg)
        for k in range(dg):
            e += ecoef[i, k] * Y ** (k - dg)
        if e >= 1.0:
            return np.inf
        eta += wdeg[i] * (-math.log1p(-e) + eloglead[i])
    return eta


@njit(cache=True)
def _green_point(X, Y, coef, deg, lead, b, m, d, R, nmax, tol, ecoef, eb, eloglead, wdeg, degs, out):
    nsteps = deg.shape[0] // m
    logmode = False
    l = 0j
    u = 0j
    esc = -1
    for n in range(nsteps + 1):
        if not logmode:
            aX = abs(X)
            aY = abs(Y)
            if not (math.isfinite(aX) and math.isfinite(aY)):
                out[0] = np.nan
                out[1] = np.inf
                out[2] = n
                out[3] = esc
                out[4] = NONFINITE
                return
            if aY > aX and aY > R:
                logmode = True
                esc = n
                l = np.log(Y)
                u = X / Y
            elif n >= nmax:
                out[0] = 0.0
                out[1] = 0.0
                out[2] = n
                out[3] = -1
                out[4] = BOUNDED
                return
        if logmode:
            scale = float(d) ** (-n)
            err = _tail_eta(math.exp(l.real), ecoef, eb, eloglead, wdeg, degs) * scale / (d - 1)
            if err < tol or n == nsteps:
                out[0] = l.real * scale
                out[1] = err
                out[2] = n
                out[3] = esc
                out[4] = CONVERGED if err < tol else TAIL_CAP
                return
        if n == nsteps:
            break
        base = n * m
        for i in range(m):
            k = base + i
            if logmode:
                l, u = _log_factor(l, u, coef[k], deg[k], lead[k], b[k])
            else:
                X, Y = _plain_factor(X, Y, coef[k], deg[k], lead[k], b[k])
    out[0] = 0.0
    out[1] = 0.0
    out[2] = nsteps
    out[3] = -1
    out[4] = BOUNDED


@njit(cache=True, parallel=True)
def green_orbit(X0, Y0, coef, deg, lead, b, m, d, R, nmax, tol, ecoef, eb, eloglead, wdeg, degs):
    N = X0.shape[0]
    res = np.empty((N, 5))
    for p in prange(N):
        _green_point(X0[p], Y0[p], coef, deg, lead, b, m, d, R, nmax, tol, ecoef, eb, eloglead, wdeg, degs, res[p])
    return res


@njit(cache=True)
def _log_abs_diff(lp, x0):
    # log|e^{lp} - x0| without forming e^{lp} when it is huge
    if lp.real == -np.inf:
        return math.log(abs(x0)) if x0 != 0 else -np.inf
    if lp.real > 30.0:
        return lp.real + math.log(abs(1.0 - x0 * np.exp(-lp)))
    v = abs(np.exp(lp) - x0)
    if v == 0.0:
        return -np.inf
    return math.log(v)


@njit(cache=True, parallel=True)
def orbit_logs(X0, Y0, coef, deg, lead, b, m, R, x0):
    """Per fiber step k: log||z_k|| and log|X_k - x0| (working coordinates)."""
    N = X0.shape[0]
    nsteps = deg.shape[0] // m
    lognorm = np.empty((N, nsteps + 1))
    logpi1 = np.empty((N, nsteps + 1))
    for p in prange(N):
        X = X0[p]
        Y = Y0[p]
        logmode = False
        l = 0j
        lp = 0j
        u = 0j
        for n in range(nsteps + 1):
            if not logmode:
                aX = abs(X)
                aY = abs(Y)
                if aY > aX and aY > R:
                    logmode = True
                    l = np.log(Y)
                    u = X / Y
                    lp = np.log(X) if X != 0 else complex(-np.inf, 0.0)
            if logmode:
                lognorm[p, n] = l.real + 0.5 * math.log1p(abs(u) ** 2)
                logpi1[p, n] = _log_abs_diff(lp, x0)
            else:
                nr = math.hypot(abs(X), abs(Y))
                lognorm[p, n] = math.log(nr) if nr > 0 else -np.inf
                v = abs(X - x0)
                logpi1[p, n] = math.log(v) if v > 0 else -np.inf
            if n == nsteps:
                break
            base = n * m
            for i in range(m):
                k = base + i
                if logmode:
                    lp = l
                    l, u = _log_factor(l, u, coef[k], deg[k], lead[k], b[k])
                else:
                    X, Y = _plain_factor(X, Y, coef[k], deg[k], lead[k], b[k])
    return lognorm, logpi1


@njit(cache=True, inline="always")
def _pk_eval(x, mexp, mcoef_s, mcount, out):
    kp1 = x.shape[0]
    for i in range(kp1):
        acc = 0j
        for q in range(mcount[i]):
            t = mcoef_s[i, q]
            for j in range(kp1):
                e = mexp[i, q, j]
                if e:
                    t = t * x[j] ** e
            acc += t
        out[i] = acc


@njit(cache=True, parallel=True)
def pk_green(Xs, mexp, mcoef, mcount, d, logC, tol):
    """Renormalized Green iteration.  mcoef[step, i, q] per base step."""
    N, kp1 = Xs.shape
    nsteps = mcoef.shape[0]
    res = np.empty((N, 3))
    for p in prange(N):
        x = Xs[p].copy()
        y = np.empty(kp1, dtype=np.complex128)
        nx = 0.0
        for j in range(kp1):
            nx += abs(x[j]) ** 2
        nx = math.sqrt(nx)
        if nx == 0.0:
            res[p, 0] = -np.inf
            res[p, 1] = 0.0
            res[p, 2] = 0
            continue
        G = math.log(nx)
        for j in range(kp1):
            x[j] /= nx
        n = 0
        err = logC / (d - 1)
        while n < nsteps and err >= tol:
            _pk_eval(x, mexp, mcoef[n], mcount, y)
            ny = 0.0
            for j in range(kp1):
                ny += abs(y[j]) ** 2
            ny = math.sqrt(ny)
            n += 1
            G += math.log(ny) / float(d) ** n
            for j in range(kp1):
                x[j] = y[j] / ny
            err = logC / (d - 1) / float(d) ** n
        res[p, 0] = G
        res[p, 1] = err
        res[p, 2] = n
    return res


@njit(cache=True, parallel=True)
def pk_fs_growth(Xs, Vs, mexp, mcoef, mcount, fd_step):
    """log of the Fubini-Study derivative of the composed maps along V, per step."""
    N, kp1 = Xs.shape
    nsteps = mcoef.shape[0]
    out = np.empty((N, nsteps))
    for p in prange(N):
        x = Xs[p].copy()
        v = Vs[p].copy()
        fp = np.empty(kp1, dtype=np.complex128)
        fm = np.empty(kp1, dtype=np.complex128)
        y = np.empty(kp1, dtype=np.complex128)
        xp = np.empty(kp1, dtype=np.complex128)
        xm = np.empty(kp1, dtype=np.complex128)
        nx = 0.0
        for j in range(kp1):
            nx += abs(x[j]) ** 2
        nx = math.sqrt(nx)
        for j in range(kp1):
            x[j] /= nx
            v[j] /= nx
        # project v orthogonal to x and normalise
        ip = 0j
        for j in range(kp1):
            ip += v[j] * np.conj(x[j])
        nv = 0.0
        for j in range(kp1):
            v[j] -= ip * x[j]
            nv += abs(v[j]) ** 2
        nv = math.sqrt(nv)
        acc = math.log(nv) if nv > 0 else -np.inf
        for j in range(kp1):
            v[j] /= nv
        for n in range(nsteps):
            for j in range(kp1):
                xp[j] = x[j] + fd_step * v[j]
                xm[j] = x[j] - fd_step * v[j]
            _pk_eval(xp, mexp, mcoef[n], mcount, fp)
            _pk_eval(xm, mexp, mcoef[n], mcount, fm)
            _pk_eval(x, mexp, mcoef[n], mcount, y)
            ny = 0.0
            for j in range(kp1):
                ny += abs(y[j]) ** 2
            ny = math.sqrt(ny)
            for j in range(kp1):
                y[j] /= ny
            ip = 0j
            for j in range(kp1):
                v[j] = (fp[j] - fm[j]) / (2.0 * fd_step)
                ip += v[j] * np.conj(y[j])
            nv = 0.0
            for j in range(kp1):
                v[j] -= ip * y[j]
                nv += abs(v[j]) ** 2
            nv = math.sqrt(nv)
            if not (nv > 0.0) or not math.isfinite(nv):
                for r in range(n, nsteps):
                    out[p, r] = np.nan if not math.isfinite(nv) else -np.inf
                break
            acc += math.log(nv / ny)
            out[p, n] = acc
            for j in range(kp1):
                v[j] /= nv
                x[j] = y[j]
    return out


@njit(cache=True, inline="always")
def _cell_hash(c, mask):
    h = (c[0] * 73856093) ^ (c[1] * 19349663) ^ (c[2] * 83492791) ^ (c[3] * 2654435761)
    return h & mask


@njit(cache=True)
def _cell_slot(keys, used, c, mask):
    s = _cell_hash(c, mask)
    while used[s]:
        if keys[s, 0] == c[0] and keys[s, 1] == c[1] and keys[s, 2] == c[2] and keys[s, 3] == c[3]:
            return s
        s = (s + 1) & mask
    return -1 - s


@njit(cache=True)
def greedy_separated(order, traj, cells, finite, n, eps2, seed_mask):
    """Greedy maximal d_n-separated set in `order`, starting from `seed_mask`.

    traj has shape (N, >= n, 4).  d_n-close points are eps-close at time n-1,
    so candidates are only compared with chosen points in the 3^4 cells
    around their own (cells: integer cell of each point at time n-1).
    Points with a non-finite position at time n-1 conflict with nothing.
    """
    N = order.shape[0]
    chosen = seed_mask.copy()
    size = 1
    while size < 4 * N:
        size *= 2
    mask = size - 1
    keys = np.empty((size, 4), dtype=np.int64)
    used = np.zeros(size, dtype=np.bool_)
    head = np.full(size, -1, dtype=np.int64)
    nxt = np.full(N, -1, dtype=np.int64)
    c = np.empty(4, dtype=np.int64)

    for t in range(N + N):
        p = t if t < N else order[t - N]
        if t < N and not chosen[p]:
            continue
        if t >= N:
            if chosen[p]:
                continue
            if finite[p]:
                ok = True
                for off in range(81):
                    o = off
                    for k in range(4):
                        c[k] = cells[p, k] + (o % 3) - 1
                        o //= 3
                    s = _cell_slot(keys, used, c, mask)
                    if s < 0:
                        continue
                    q = head[s]
                    while q >= 0:
                        close = True
                        for i in range(n - 1, -1, -1):
                            d = 0.0
                            for k in range(4):
                                e = traj[p, i, k] - traj[q, i, k]
                                d += e * e
                            if not d <= eps2:
                                close = False
                                break
                        if close:
                            ok = False
                            break
                        q = nxt[q]
                    if not ok:
                        break
                if not ok:
                    continue
            chosen[p] = True
        if finite[p]:
            for k in range(4):
                c[k] = cells[p, k]
            s = _cell_slot(keys, used, c, mask)
            if s < 0:
                s = -1 - s
                used[s] = True
                for k in range(4):
                    keys[s, k] = c[k]
            nxt[p] = head[s]
            head[s] = p
    return chosen
