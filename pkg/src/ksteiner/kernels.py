"""Hot numeric kernels, each in a numba loop form and a numpy form.

Norms are passed to kernels in a flat encoding:

* ``kind == 0``: ellipse, ``Q`` is the 2x2 form, ``H`` is ignored.
* ``kind == 1``: centrally symmetric polygon, ``H`` holds one facet normal per
  antipodal facet pair so that ``|v| = max_j |H[j] . v|``; ``Q`` is ignored.

The public functions at the bottom dispatch on ``_accel.USE_NUMBA``.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit

ELLIPSE = 0
POLYGON = 1

AGG_POWER = 0
AGG_LSE = 1

STATUS_OK = 0
STATUS_NOT_CONVERGED = 1
STATUS_BUDGET = 2


# --------------------------------------------------------------------------
# norms
# --------------------------------------------------------------------------

@njit
def _norm_nb(dx, dy, kind, Q, H):
    if kind == ELLIPSE:
        q = Q[0, 0] * dx * dx + 2.0 * Q[0, 1] * dx * dy + Q[1, 1] * dy * dy
        if q <= 0.0:
            return 0.0
        return math.sqrt(q)
    best = 0.0
    for j in range(H.shape[0]):
        v = abs(H[j, 0] * dx + H[j, 1] * dy)
        if v > best:
            best = v
    return best


def norm_rows(d, kind, Q, H):
    """Row-wise norm of an ``(m, 2)`` array (numpy, no BLAS, no fused ops)."""
    d = np.asarray(d, dtype=float)
    dx = d[..., 0]
    dy = d[..., 1]
    if kind == ELLIPSE:
        q = Q[0, 0] * dx * dx + 2.0 * Q[0, 1] * dx * dy + Q[1, 1] * dy * dy
        return np.sqrt(np.maximum(q, 0.0))
    out = np.zeros(dx.shape)
    for j in range(H.shape[0]):
        np.maximum(out, np.abs(H[j, 0] * dx + H[j, 1] * dy), out=out)
    return out


@njit
def _pairwise_nb(P, kind, Q, H):
    n = P.shape[0]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = _norm_nb(P[j, 0] - P[i, 0], P[j, 1] - P[i, 1], kind, Q, H)
            D[i, j] = d
            D[j, i] = d
    return D


def _pairwise_np(P, kind, Q, H):
    diff = P[None, :, :] - P[:, None, :]
    D = norm_rows(diff, kind, Q, H)
    return np.maximum(D, D.T)


# --------------------------------------------------------------------------
# nearest terminal per cone
# --------------------------------------------------------------------------

@njit
def _cone_nearest_nb(X, Y, dirs, kind, Q, H):
    m = Y.shape[0]
    n = X.shape[0]
    idx = np.full((m, 6), -1, dtype=np.int64)
    dist = np.full((m, 6), np.inf)
    for q in range(m):
        yx = Y[q, 0]
        yy = Y[q, 1]
        for t in range(n):
            vx = X[t, 0] - yx
            vy = X[t, 1] - yy
            d = _norm_nb(vx, vy, kind, Q, H)
            vn = math.hypot(vx, vy)
            for i in range(6):
                if d >= dist[q, i]:
                    continue
                if vn > 0.0:
                    ax = dirs[i, 0]
                    ay = dirs[i, 1]
                    bx = dirs[(i + 1) % 6, 0]
                    by = dirs[(i + 1) % 6, 1]
                    tol_a = 1e-12 * vn * math.hypot(ax, ay)
                    tol_b = 1e-12 * vn * math.hypot(bx, by)
                    if ax * vy - ay * vx < -tol_a:
                        continue
                    if vx * by - vy * bx < -tol_b:
                        continue
                idx[q, i] = t
                dist[q, i] = d
    return idx, dist


def _cone_nearest_np(X, Y, dirs, kind, Q, H, chunk=2048):
    m = Y.shape[0]
    idx = np.full((m, 6), -1, dtype=np.int64)
    dist = np.full((m, 6), np.inf)
    if X.shape[0] == 0:
        return idx, dist
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        V = X[None, :, :] - Y[lo:hi, None, :]
        vx = V[..., 0]
        vy = V[..., 1]
        d = norm_rows(V, kind, Q, H)
        vn = np.hypot(vx, vy)
        for i in range(6):
            a = dirs[i]
            b = dirs[(i + 1) % 6]
            ok_a = a[0] * vy - a[1] * vx >= -1e-12 * vn * math.hypot(*a)
            ok_b = vx * b[1] - vy * b[0] >= -1e-12 * vn * math.hypot(*b)
            inside = (ok_a & ok_b) | (vn == 0.0)
            di = np.where(inside, d, np.inf)
            j = np.argmin(di, axis=1)
            best = di[np.arange(hi - lo), j]
            found = np.isfinite(best)
            idx[lo:hi, i] = np.where(found, j, -1)
            dist[lo:hi, i] = best
    return idx, dist


# --------------------------------------------------------------------------
# Prim MST with (length, min index, max index) tie-breaking
# --------------------------------------------------------------------------

@njit
def _key_less(d1, a1, b1, d2, a2, b2):
    if d1 != d2:
        return d1 < d2
    lo1 = min(a1, b1)
    lo2 = min(a2, b2)
    if lo1 != lo2:
        return lo1 < lo2
    return max(a1, b1) < max(a2, b2)


@njit
def _prim_nb(D):
    n = D.shape[0]
    edges = np.empty((max(n - 1, 0), 2), dtype=np.int64)
    if n <= 1:
        return edges
    in_tree = np.zeros(n, dtype=np.bool_)
    best_d = np.full(n, np.inf)
    best_a = np.full(n, -1, dtype=np.int64)
    in_tree[0] = True
    for v in range(1, n):
        best_d[v] = D[0, v]
        best_a[v] = 0
    for step in range(n - 1):
        pick = -1
        for v in range(n):
            if in_tree[v]:
                continue
            if pick < 0 or _key_less(best_d[v], v, best_a[v],
                                     best_d[pick], pick, best_a[pick]):
                pick = v
        a = best_a[pick]
        edges[step, 0] = min(a, pick)
        edges[step, 1] = max(a, pick)
        in_tree[pick] = True
        for v in range(n):
            if in_tree[v]:
                continue
            if _key_less(D[pick, v], pick, v, best_d[v], best_a[v], v):
                best_d[v] = D[pick, v]
                best_a[v] = pick
    return edges


def _prim_np(D):
    n = D.shape[0]
    edges = np.empty((max(n - 1, 0), 2), dtype=np.int64)
    if n <= 1:
        return edges
    idx = np.arange(n)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best_d = D[0].astype(float).copy()
    best_a = np.zeros(n, dtype=np.int64)
    for step in range(n - 1):
        cand = np.flatnonzero(~in_tree)
        lo = np.minimum(cand, best_a[cand])
        hi = np.maximum(cand, best_a[cand])
        order = np.lexsort((hi, lo, best_d[cand]))
        pick = cand[order[0]]
        a = best_a[pick]
        edges[step] = (min(a, pick), max(a, pick))
        in_tree[pick] = True
        rest = ~in_tree
        nd = D[pick]
        cur_lo = np.minimum(idx, best_a)
        cur_hi = np.maximum(idx, best_a)
        new_lo = np.minimum(idx, pick)
        new_hi = np.maximum(idx, pick)
        better = (nd < best_d) | (
            (nd == best_d) & ((new_lo < cur_lo) | ((new_lo == cur_lo) & (new_hi < cur_hi))))
        upd = rest & better
        best_d[upd] = nd[upd]
        best_a[upd] = pick
    return edges


# --------------------------------------------------------------------------
# PP1: longest (highest-rank) edge on every tree path
# --------------------------------------------------------------------------

@njit
def _pp1_nb(n, indptr, nbr, eid, rank):
    table = np.full((n, n), -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    parent = np.empty(n, dtype=np.int64)
    for r in range(n):
        top = 0
        stack[0] = r
        parent[r] = -1
        while top >= 0:
            u = stack[top]
            top -= 1
            for p in range(indptr[u], indptr[u + 1]):
                v = nbr[p]
                if v == parent[u]:
                    continue
                parent[v] = u
                e = eid[p]
                cur = table[r, u]
                if cur < 0 or rank[e] > rank[cur]:
                    table[r, v] = e
                else:
                    table[r, v] = cur
                top += 1
                stack[top] = v
    return table


def _pp1_np(n, indptr, nbr, eid, rank):
    table = np.full((n, n), -1, dtype=np.int64)
    for r in range(n):
        row = table[r]
        stack = [(r, -1)]
        while stack:
            u, par = stack.pop()
            cur = row[u]
            for p in range(indptr[u], indptr[u + 1]):
                v = nbr[p]
                if v == par:
                    continue
                e = eid[p]
                row[v] = e if cur < 0 or rank[e] > rank[cur] else cur
                stack.append((v, u))
    return table


# --------------------------------------------------------------------------
# smoothed Newton homotopy for fixed-topology placement
# --------------------------------------------------------------------------

@njit
def _objective_nb(x, fixed, eu, ev, kind, Q, H, agg, p, eps, tau, want_derivs):
    c = fixed.shape[0]
    k = x.shape[0]
    E = eu.shape[0]
    nv = 2 * k
    lens = np.empty(E)
    gl = np.empty((E, 2))
    hl = np.empty((E, 2, 2))
    for e in range(E):
        u = eu[e]
        v = ev[e]
        if u < c:
            ux = fixed[u, 0]
            uy = fixed[u, 1]
        else:
            ux = x[u - c, 0]
            uy = x[u - c, 1]
        if v < c:
            vx = fixed[v, 0]
            vy = fixed[v, 1]
        else:
            vx = x[v - c, 0]
            vy = x[v - c, 1]
        dx = ux - vx
        dy = uy - vy
        if kind == ELLIPSE:
            qx = Q[0, 0] * dx + Q[0, 1] * dy
            qy = Q[1, 0] * dx + Q[1, 1] * dy
            l = math.sqrt(dx * qx + dy * qy + eps * eps)
            lens[e] = l
            gl[e, 0] = qx / l
            gl[e, 1] = qy / l
            hl[e, 0, 0] = (Q[0, 0] - qx * qx / (l * l)) / l
            hl[e, 0, 1] = (Q[0, 1] - qx * qy / (l * l)) / l
            hl[e, 1, 0] = hl[e, 0, 1]
            hl[e, 1, 1] = (Q[1, 1] - qy * qy / (l * l)) / l
        else:
            mz = 0.0
            for j in range(H.shape[0]):
                z = abs(H[j, 0] * dx + H[j, 1] * dy) / eps
                if z > mz:
                    mz = z
            s = 0.0
            sx = 0.0
            sy = 0.0
            sxx = 0.0
            sxy = 0.0
            syy = 0.0
            for j in range(H.shape[0]):
                for sg in (1.0, -1.0):
                    ax = sg * H[j, 0]
                    ay = sg * H[j, 1]
                    w = math.exp((ax * dx + ay * dy) / eps - mz)
                    s += w
                    sx += w * ax
                    sy += w * ay
                    sxx += w * ax * ax
                    sxy += w * ax * ay
                    syy += w * ay * ay
            lens[e] = eps * (mz + math.log(s))
            gx = sx / s
            gy = sy / s
            gl[e, 0] = gx
            gl[e, 1] = gy
            hl[e, 0, 0] = (sxx / s - gx * gx) / eps
            hl[e, 0, 1] = (sxy / s - gx * gy) / eps
            hl[e, 1, 0] = hl[e, 0, 1]
            hl[e, 1, 1] = (syy / s - gy * gy) / eps

    grad = np.zeros(nv)
    hess = np.zeros((nv, nv))
    if agg == AGG_POWER:
        f = 0.0
        for e in range(E):
            f += lens[e] ** p
        if not want_derivs:
            return f, grad, hess
        c1 = np.empty(E)
        c2 = np.empty(E)
        for e in range(E):
            c1[e] = p * lens[e] ** (p - 1.0)
            c2[e] = p * (p - 1.0) * lens[e] ** (p - 2.0)
    else:
        mx = lens[0]
        for e in range(1, E):
            if lens[e] > mx:
                mx = lens[e]
        s = 0.0
        w = np.empty(E)
        for e in range(E):
            w[e] = math.exp((lens[e] - mx) / tau)
            s += w[e]
        f = mx + tau * math.log(s)
        if not want_derivs:
            return f, grad, hess
        c1 = np.empty(E)
        c2 = np.empty(E)
        for e in range(E):
            c1[e] = w[e] / s
            c2[e] = c1[e] / tau

    for e in range(E):
        u = eu[e]
        v = ev[e]
        gx = gl[e, 0]
        gy = gl[e, 1]
        m00 = c1[e] * hl[e, 0, 0] + c2[e] * gx * gx
        m01 = c1[e] * hl[e, 0, 1] + c2[e] * gx * gy
        m11 = c1[e] * hl[e, 1, 1] + c2[e] * gy * gy
        iu = 2 * (u - c)
        iv = 2 * (v - c)
        if u >= c:
            grad[iu] += c1[e] * gx
            grad[iu + 1] += c1[e] * gy
            hess[iu, iu] += m00
            hess[iu, iu + 1] += m01
            hess[iu + 1, iu] += m01
            hess[iu + 1, iu + 1] += m11
        if v >= c:
            grad[iv] -= c1[e] * gx
            grad[iv + 1] -= c1[e] * gy
            hess[iv, iv] += m00
            hess[iv, iv + 1] += m01
            hess[iv + 1, iv] += m01
            hess[iv + 1, iv + 1] += m11
        if u >= c and v >= c:
            hess[iu, iv] -= m00
            hess[iu, iv + 1] -= m01
            hess[iu + 1, iv] -= m01
            hess[iu + 1, iv + 1] -= m11
            hess[iv, iu] -= m00
            hess[iv, iu + 1] -= m01
            hess[iv + 1, iu] -= m01
            hess[iv + 1, iu + 1] -= m11
    if agg == AGG_LSE:
        for a in range(nv):
            for b in range(nv):
                hess[a, b] -= grad[a] * grad[b] / tau
    return f, grad, hess


@njit
def _newton_nb(x0, fixed, eu, ev, kind, Q, H, agg, p, eps_s, tau_s, dec_s,
               max_iter, max_evals):
    x = x0.copy()
    k = x.shape[0]
    nv = 2 * k
    evals = 0
    status = STATUS_OK
    nstage = eps_s.shape[0]
    for st in range(nstage):
        eps = eps_s[st]
        tau = tau_s[st]
        dec_tol = dec_s[st]
        done = False
        for it in range(max_iter):
            f, g, Hm = _objective_nb(x, fixed, eu, ev, kind, Q, H, agg, p,
                                     eps, tau, True)
            evals += 1
            ridge = 0.0
            for a in range(nv):
                ridge = max(ridge, abs(Hm[a, a]))
            ridge = 1e-13 * max(ridge, 1.0)
            for a in range(nv):
                Hm[a, a] += ridge
            step = np.linalg.solve(Hm, -g)
            slope = 0.0
            for a in range(nv):
                slope += g[a] * step[a]
            if not (slope < 0.0) or not np.all(np.isfinite(step)):
                step = -g
                slope = 0.0
                for a in range(nv):
                    slope -= g[a] * g[a]
            if -slope <= dec_tol:
                done = True
                break
            t = 1.0
            accepted = False
            while t > 1e-14:
                xt = x + t * step.reshape(k, 2)
                ft, _, _ = _objective_nb(xt, fixed, eu, ev, kind, Q, H, agg,
                                         p, eps, tau, False)
                evals += 1
                if ft <= f + 1e-4 * t * slope:
                    x = xt
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                done = True
                break
            if evals > max_evals:
                return x, STATUS_BUDGET, evals
        if not done and st == nstage - 1:
            status = STATUS_NOT_CONVERGED
    return x, status, evals


def _objective_np(x, fixed, eu, ev, kind, Q, H, agg, p, eps, tau, want_derivs):
    c = fixed.shape[0]
    k = x.shape[0]
    nv = 2 * k
    P = np.vstack([fixed, x])
    d = P[eu] - P[ev]
    dx = d[:, 0]
    dy = d[:, 1]
    if kind == ELLIPSE:
        qx = Q[0, 0] * dx + Q[0, 1] * dy
        qy = Q[1, 0] * dx + Q[1, 1] * dy
        lens = np.sqrt(dx * qx + dy * qy + eps * eps)
        gl = np.stack([qx / lens, qy / lens], axis=1)
        if want_derivs:
            l2 = lens * lens
            h00 = (Q[0, 0] - qx * qx / l2) / lens
            h01 = (Q[0, 1] - qx * qy / l2) / lens
            h11 = (Q[1, 1] - qy * qy / l2) / lens
    else:
        A = np.vstack([H, -H])
        z = (np.outer(dx, A[:, 0]) + np.outer(dy, A[:, 1])) / eps
        mz = z.max(axis=1, keepdims=True)
        w = np.exp(z - mz)
        s = w.sum(axis=1)
        lens = eps * (mz[:, 0] + np.log(s))
        gx = (w * A[:, 0]).sum(axis=1) / s
        gy = (w * A[:, 1]).sum(axis=1) / s
        gl = np.stack([gx, gy], axis=1)
        if want_derivs:
            h00 = ((w * A[:, 0] ** 2).sum(axis=1) / s - gx * gx) / eps
            h01 = ((w * A[:, 0] * A[:, 1]).sum(axis=1) / s - gx * gy) / eps
            h11 = ((w * A[:, 1] ** 2).sum(axis=1) / s - gy * gy) / eps
    if agg == AGG_POWER:
        f = float(np.sum(lens ** p))
        if not want_derivs:
            return f, None, None
        c1 = p * lens ** (p - 1.0)
        c2 = p * (p - 1.0) * lens ** (p - 2.0)
    else:
        mx = lens.max()
        w = np.exp((lens - mx) / tau)
        s = w.sum()
        f = float(mx + tau * math.log(s))
        if not want_derivs:
            return f, None, None
        c1 = w / s
        c2 = c1 / tau
    gx = gl[:, 0]
    gy = gl[:, 1]
    m00 = c1 * h00 + c2 * gx * gx
    m01 = c1 * h01 + c2 * gx * gy
    m11 = c1 * h11 + c2 * gy * gy
    M = np.stack([np.stack([m00, m01], -1), np.stack([m01, m11], -1)], -2)
    G = c1[:, None] * gl
    grad = np.zeros(nv)
    hess = np.zeros((nv, nv))
    fu = eu >= c
    fv = ev >= c
    iu = 2 * (eu - c)
    iv = 2 * (ev - c)
    for e in np.flatnonzero(fu):
        a = iu[e]
        grad[a:a + 2] += G[e]
        hess[a:a + 2, a:a + 2] += M[e]
    for e in np.flatnonzero(fv):
        b = iv[e]
        grad[b:b + 2] -= G[e]
        hess[b:b + 2, b:b + 2] += M[e]
    for e in np.flatnonzero(fu & fv):
        a = iu[e]
        b = iv[e]
        hess[a:a + 2, b:b + 2] -= M[e]
        hess[b:b + 2, a:a + 2] -= M[e]
    if agg == AGG_LSE:
        hess -= np.outer(grad, grad) / tau
    return f, grad, hess


def _newton_np(x0, fixed, eu, ev, kind, Q, H, agg, p, eps_s, tau_s, dec_s,
               max_iter, max_evals):
    x = x0.copy()
    k = x.shape[0]
    evals = 0
    status = STATUS_OK
    nstage = len(eps_s)
    for st in range(nstage):
        eps, tau, dec_tol = eps_s[st], tau_s[st], dec_s[st]
        done = False
        for _ in range(max_iter):
            f, g, Hm = _objective_np(x, fixed, eu, ev, kind, Q, H, agg, p,
                                     eps, tau, True)
            evals += 1
            Hm = Hm + 1e-13 * max(np.abs(np.diag(Hm)).max(), 1.0) * np.eye(2 * k)
            try:
                step = np.linalg.solve(Hm, -g)
            except np.linalg.LinAlgError:
                step = -g
            slope = float(g @ step)
            if not slope < 0.0 or not np.all(np.isfinite(step)):
                step = -g
                slope = -float(g @ g)
            if -slope <= dec_tol:
                done = True
                break
            t = 1.0
            accepted = False
            while t > 1e-14:
                xt = x + t * step.reshape(k, 2)
                ft, _, _ = _objective_np(xt, fixed, eu, ev, kind, Q, H, agg,
                                         p, eps, tau, False)
                evals += 1
                if ft <= f + 1e-4 * t * slope:
                    x = xt
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                done = True
                break
            if evals > max_evals:
                return x, STATUS_BUDGET, evals
        if not done and st == nstage - 1:
            status = STATUS_NOT_CONVERGED
    return x, status, evals



# --------------------------------------------------------------------------
# exact objective and pattern-search polish
# --------------------------------------------------------------------------

@njit
def _exact_nb(x, fixed, eu, ev, kind, Q, H, agg, p):
    c = fixed.shape[0]
    f = 0.0
    for e in range(eu.shape[0]):
        u = eu[e]
        v = ev[e]
        if u < c:
            ux = fixed[u, 0]
            uy = fixed[u, 1]
        else:
            ux = x[u - c, 0]
            uy = x[u - c, 1]
        if v < c:
            vx = fixed[v, 0]
            vy = fixed[v, 1]
        else:
            vx = x[v - c, 0]
            vy = x[v - c, 1]
        l = _norm_nb(ux - vx, uy - vy, kind, Q, H)
        if agg == AGG_POWER:
            f += l if p == 1.0 else l ** p
        elif l > f:
            f = l
    return f


def _exact_np(x, fixed, eu, ev, kind, Q, H, agg, p):
    P = np.vstack([fixed, x])
    lens = norm_rows(P[eu] - P[ev], kind, Q, H)
    if agg == AGG_POWER:
        return float(lens.sum() if p == 1.0 else (lens ** p).sum())
    return float(lens.max(initial=0.0))


_DIRS = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0],
                  [0.7071067811865476, 0.7071067811865476],
                  [-0.7071067811865476, -0.7071067811865476],
                  [0.7071067811865476, -0.7071067811865476],
                  [-0.7071067811865476, 0.7071067811865476]])


@njit
def _polish_nb(x0, fixed, eu, ev, kind, Q, H, agg, p, h0, hmin, max_evals, dirs):
    x = x0.copy()
    k = x.shape[0]
    f = _exact_nb(x, fixed, eu, ev, kind, Q, H, agg, p)
    evals = 1
    h = h0
    while h > hmin and evals < max_evals:
        improved = False
        # single-point moves, then the same move applied to every point
        for j in range(k + 1):
            if k == 1 and j == 1:
                break
            for d in range(dirs.shape[0]):
                xt = x.copy()
                if j < k:
                    xt[j, 0] += h * dirs[d, 0]
                    xt[j, 1] += h * dirs[d, 1]
                else:
                    for a in range(k):
                        xt[a, 0] += h * dirs[d, 0]
                        xt[a, 1] += h * dirs[d, 1]
                ft = _exact_nb(xt, fixed, eu, ev, kind, Q, H, agg, p)
                evals += 1
                if ft < f:
                    x = xt
                    f = ft
                    improved = True
        if not improved:
            h *= 0.5
    return x, f, evals


def _polish_np(x0, fixed, eu, ev, kind, Q, H, agg, p, h0, hmin, max_evals, dirs):
    x = x0.copy()
    k = len(x)
    f = _exact_np(x, fixed, eu, ev, kind, Q, H, agg, p)
    evals = 1
    h = h0
    while h > hmin and evals < max_evals:
        improved = False
        for j in range(k + 1 if k > 1 else k):
            for d in dirs:
                xt = x.copy()
                if j < k:
                    xt[j] += h * d
                else:
                    xt += h * d
                ft = _exact_np(xt, fixed, eu, ev, kind, Q, H, agg, p)
                evals += 1
                if ft < f:
                    x, f, improved = xt, ft, True
        if not improved:
            h *= 0.5
    return x, f, evals

# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def _pick(nb, np_):
    return nb if _accel.USE_NUMBA else np_


def pairwise_norm(P, kind, Q, H):
    P = np.ascontiguousarray(P, dtype=float)
    return _pick(_pairwise_nb, _pairwise_np)(P, kind, Q, H)


def cone_nearest(X, Y, dirs, kind, Q, H):
    """Nearest terminal of ``X`` inside each of the six cones at every ``Y``.

    Returns ``(idx, dist)``, both ``(len(Y), 6)``; ``idx == -1`` marks an
    empty cone.  Ties go to the smallest terminal index.
    """
    X = np.ascontiguousarray(X, dtype=float).reshape(-1, 2)
    Y = np.ascontiguousarray(Y, dtype=float).reshape(-1, 2)
    dirs = np.ascontiguousarray(dirs, dtype=float)
    return _pick(_cone_nearest_nb, _cone_nearest_np)(X, Y, dirs, kind, Q, H)


def prim_edges(D):
    D = np.ascontiguousarray(D, dtype=float)
    return _pick(_prim_nb, _prim_np)(D)


def pp1_table(n, indptr, nbr, eid, rank):
    return _pick(_pp1_nb, _pp1_np)(n, indptr, nbr, eid, rank)


def newton_homotopy(x0, fixed, eu, ev, kind, Q, H, agg, p, eps_s, tau_s,
                    dec_s, max_iter=200, max_evals=10**6):
    args = (np.ascontiguousarray(x0, dtype=float),
            np.ascontiguousarray(fixed, dtype=float).reshape(-1, 2),
            np.ascontiguousarray(eu, dtype=np.int64),
            np.ascontiguousarray(ev, dtype=np.int64),
            kind, Q, H, agg, float(p),
            np.ascontiguousarray(eps_s, dtype=float),
            np.ascontiguousarray(tau_s, dtype=float),
            np.ascontiguousarray(dec_s, dtype=float),
            int(max_iter), int(max_evals))
    x, status, evals = _pick(_newton_nb, _newton_np)(*args)
    return x, int(status), int(evals)


def _topo_args(x, fixed, eu, ev):
    return (np.ascontiguousarray(x, dtype=float).reshape(-1, 2),
            np.ascontiguousarray(fixed, dtype=float).reshape(-1, 2),
            np.ascontiguousarray(eu, dtype=np.int64),
            np.ascontiguousarray(ev, dtype=np.int64))


def exact_objective(x, fixed, eu, ev, kind, Q, H, agg, p):
    """Unsmoothed cost: sum of powers (``AGG_POWER``) or the maximum (``AGG_LSE``)."""
    return float(_pick(_exact_nb, _exact_np)(*_topo_args(x, fixed, eu, ev),
                                            kind, Q, H, agg, float(p)))


def pattern_polish(x0, fixed, eu, ev, kind, Q, H, agg, p, h0, hmin, max_evals=20000):
    """Compass search on the exact cost; never returns a worse point."""
    x, f, evals = _pick(_polish_nb, _polish_np)(*_topo_args(x0, fixed, eu, ev),
                                               kind, Q, H, agg, float(p), float(h0),
                                               float(hmin), int(max_evals), _DIRS)
    return x, float(f), int(evals)
