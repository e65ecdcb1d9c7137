"""Pure numpy/scipy versions of the kernels in ``_kernels_nb``.

Same signatures and in-place conventions. Step loops stay in Python, inner
work is vectorized; these are the reference path when numba is disabled.
"""
import numpy as np
from scipy import linalg as sla


def tridiag_eigvalsh(d, e):
    d = np.asarray(d, dtype=float)
    if d.shape[0] == 1:
        return d.copy()
    return sla.eigvalsh_tridiagonal(d, np.asarray(e, dtype=float)[: d.shape[0] - 1])


def sturm_count(d, e2, x, pivmin):
    cnt = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    cnt += q < 0.0
    for i in range(1, d.shape[0]):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        cnt += q < 0.0
    return int(cnt)


def tridiag_select(d, e, idx):
    d = np.asarray(d, dtype=float)
    idx = np.asarray(idx, dtype=np.int64)
    if d.shape[0] == 1:
        return d[idx].copy()
    lo, hi = int(idx.min()), int(idx.max())
    vals = sla.eigvalsh_tridiagonal(d, np.asarray(e, dtype=float)[: d.shape[0] - 1],
                                    select="i", select_range=(lo, hi))
    return vals[idx - lo]


def householder_tridiag(a):
    h = sla.hessenberg(np.asarray(a, dtype=float))
    return np.diag(h).copy(), np.diag(h, -1).copy()


def dense_eigvalsh(a):
    return np.linalg.eigvalsh(a)


def _horner(c, x):
    s = np.zeros_like(np.asarray(x, dtype=float))
    for k in range(len(c) - 1, -1, -1):
        s = s * x + c[k]
    return s


def _theta(u, order):
    m = u < -1.0
    if order == 0:
        return np.where(m, (u + 1.0) ** 2, 0.0)
    if order == 1:
        return np.where(m, 2.0 * (u + 1.0), 0.0)
    return np.where(m, 2.0, 0.0)


GAP_SHRINK = 0.25


def _gaps_kept(new, old, wall):
    ok = np.all(np.diff(new, axis=-1) > GAP_SHRINK * np.diff(old, axis=-1), axis=-1)
    if np.isfinite(wall):
        ok = ok & (wall - new[..., -1] > GAP_SHRINK * (wall - old[..., -1]))
    return ok


def _ordered(x):
    return np.all(np.diff(x, axis=-1) > 0, axis=-1)


def loggas_logp_grad(x, beta, nscale, vc, dvc, grad):
    half = 0.5 * beta * nscale
    diff = x[None, :] - x[:, None]
    iu = np.triu_indices(x.shape[0], 1)
    logp = -half * _horner(vc, x).sum() + beta * np.log(diff[iu]).sum()
    np.fill_diagonal(diff, np.inf)
    grad[:] = -half * _horner(dvc, x) + beta * (1.0 / -diff).sum(axis=1)
    return float(logp)


def _mala_loop(x, g, u, logp, log_eps, normals, uniforms, adapt, target, t0,
               thin, out, L, logp_grad):
    n = x.shape[0]
    gy = np.empty(n)
    n_acc = 0
    sum_alpha = 0.0
    n_out = 0
    for t in range(normals.shape[0]):
        eps = np.exp(log_eps)
        h = 0.5 * eps * eps
        step = h * u + eps * normals[t]
        y = x + L @ step
        alpha = 0.0
        logpy = logp_grad(y, gy)
        if logpy > -np.inf:
            uy = L.T @ gy
            fwd = np.sum((eps * normals[t]) ** 2)
            bwd = np.sum((step + h * uy) ** 2)
            log_ratio = logpy - logp + (fwd - bwd) / (2.0 * eps * eps)
            alpha = 1.0 if log_ratio >= 0.0 else float(np.exp(log_ratio))
            if uniforms[t] < alpha:
                x[:] = y
                g[:] = gy
                u[:] = uy
                logp = logpy
                n_acc += 1
        sum_alpha += alpha
        if adapt:
            log_eps += (alpha - target) / (t0 + t + 1.0) ** 0.6
        if thin > 0 and (t + 1) % thin == 0 and n_out < out.shape[0]:
            out[n_out] = x
            n_out += 1
    return logp, log_eps, n_acc, sum_alpha, n_out


def mala_loggas_run(x, g, u, logp, beta, nscale, vc, dvc, L, log_eps, normals,
                    uniforms, adapt, target, t0, thin, out):
    def lg(y, gy):
        if not _ordered(y):
            return -np.inf
        return loggas_logp_grad(y, beta, nscale, vc, dvc, gy)

    return _mala_loop(x, g, u, logp, log_eps, normals, uniforms, adapt, target,
                      t0, thin, out, L, lg)


def _ext_terms(x, nscale, micro, A, vc, dvc, y):
    """Vectorized over any leading shape of x."""
    u = A + x * micro
    d = x[..., None] - y
    phi = 0.5 * nscale * _horner(vc, u) - np.log(np.abs(d)).sum(axis=-1)
    dphi = 0.5 * nscale * micro * _horner(dvc, u) - (1.0 / d).sum(axis=-1)
    return phi, dphi


def _ext_d2(x, nscale, micro, A, d2vc, y):
    u = A + x * micro
    d = x[..., None] - y
    return 0.5 * nscale * micro * micro * _horner(d2vc, u) + (1.0 / d**2).sum(axis=-1)


def _local_batch(X, beta, nscale, micro, conf_scale, conf_w, r,
                 A1, vc1, dvc1, y1, A2, vc2, dvc2, y2):
    """logp and gradient for a (P, K) batch, ignoring the domain check."""
    u = conf_scale * X
    phi = conf_w * _theta(u, 0)
    dphi = conf_w * conf_scale * _theta(u, 1)
    if r < 1.0:
        f, df = _ext_terms(X, nscale, micro, A1, vc1, dvc1, y1)
        phi = phi + (1.0 - r) * f
        dphi = dphi + (1.0 - r) * df
    if r > 0.0:
        f, df = _ext_terms(X, nscale, micro, A2, vc2, dvc2, y2)
        phi = phi + r * f
        dphi = dphi + r * df
    K = X.shape[-1]
    diff = X[..., None, :] - X[..., :, None]  # [i, j] = x_j - x_i
    iu = np.triu_indices(K, 1)
    logsum = np.log(diff[..., iu[0], iu[1]]).sum(axis=-1)
    eye = np.eye(K, dtype=bool)
    inv = np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, diff))
    grad = -beta * dphi - beta * inv.sum(axis=-1)
    return -beta * (phi.sum(axis=-1) - logsum), grad


def local_logp_grad(x, beta, nscale, micro, conf_scale, conf_w, r,
                    A1, vc1, dvc1, y1, A2, vc2, dvc2, y2, wall, grad):
    if not (_ordered(x) and x[-1] < wall):
        return -np.inf
    lp, gr = _local_batch(x, beta, nscale, micro, conf_scale, conf_w, r,
                          A1, vc1, dvc1, y1, A2, vc2, dvc2, y2)
    grad[:] = gr
    return float(lp)


def _coupling_batch(X, beta, nscale, micro, conf_scale, conf_w, r,
                    A1, d2vc1, y1, A2, d2vc2, y2):
    K = X.shape[-1]
    diff = X[..., None, :] - X[..., :, None]
    eye = np.eye(K, dtype=bool)
    B = np.where(eye, 0.0, 0.5 * beta / np.where(eye, 1.0, diff) ** 2)
    w = conf_w * conf_scale**2 * _theta(conf_scale * X, 2)
    if r < 1.0:
        w = w + (1.0 - r) * _ext_d2(X, nscale, micro, A1, d2vc1, y1)
    if r > 0.0:
        w = w + r * _ext_d2(X, nscale, micro, A2, d2vc2, y2)
    return B, 0.5 * beta * w


def local_coupling(x, beta, nscale, micro, conf_scale, conf_w, r,
                   A1, d2vc1, y1, A2, d2vc2, y2, B, W):
    b, w = _coupling_batch(x, beta, nscale, micro, conf_scale, conf_w, r,
                           A1, d2vc1, y1, A2, d2vc2, y2)
    B[:] = b
    W[:] = w


def mala_local_run(x, g, u, logp, beta, nscale, micro, conf_scale, conf_w, r,
                   A1, vc1, dvc1, y1, A2, vc2, dvc2, y2, wall, L,
                   log_eps, normals, uniforms, adapt, target, t0, thin, out):
    def lg(y, gy):
        return local_logp_grad(y, beta, nscale, micro, conf_scale, conf_w, r,
                               A1, vc1, dvc1, y1, A2, vc2, dvc2, y2, wall, gy)

    return _mala_loop(x, g, u, logp, log_eps, normals, uniforms, adapt, target,
                      t0, thin, out, L, lg)


def _apply_A(B, W, M):
    # (L + diag W) M with L the graph Laplacian of B; batched over leading axis
    rs = B.sum(axis=-1) + W
    return rs[..., None] * M - B @ M


def _rk4_batch(B, W, M, dt):
    amax = (W + B.sum(axis=-1)).max(axis=-1)
    cap = np.where(amax > 0.0, 0.5 / np.where(amax > 0.0, amax, 1.0), dt)
    nsub = np.maximum(np.ceil(dt / cap - 1e-12).astype(np.int64), 1)
    h = (dt / nsub)[..., None, None]
    for s in range(int(nsub.max())):
        act = nsub > s
        if not act.all():
            Bs, Ws, Ms, hs = B[act], W[act], M[act], h[act]
        else:
            Bs, Ws, Ms, hs = B, W, M, h
        k1 = _apply_A(Bs, Ws, Ms)
        k2 = _apply_A(Bs, Ws, Ms - 0.5 * hs * k1)
        k3 = _apply_A(Bs, Ws, Ms - 0.5 * hs * k2)
        k4 = _apply_A(Bs, Ws, Ms - hs * k3)
        Ms = Ms - hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if act.all():
            M[...] = Ms
        else:
            M[act] = Ms
    return nsub


def rk4_fundamental(B, W, M, dt):
    Mb = M[None].copy()
    n = _rk4_batch(B[None], W[None], Mb, dt)
    M[:] = Mb[0]
    return int(n[0])


def local_em_batch(X, V, dt, noise, beta, nscale, micro, conf_scale, conf_w, r,
                   A1, vc1, dvc1, d2vc1, y1, A2, vc2, dvc2, d2vc2, y2, wall,
                   track_v, failed):
    _, grad = _local_batch(X, beta, nscale, micro, conf_scale, conf_w, r,
                           A1, vc1, dvc1, y1, A2, vc2, dvc2, y2)
    Xn = X + 0.5 * grad * dt + noise
    ok = _gaps_kept(Xn, X, wall)
    failed[:] = ~ok
    if track_v and ok.any():
        B, W = _coupling_batch(X[ok], beta, nscale, micro, conf_scale, conf_w, r,
                               A1, d2vc1, y1, A2, d2vc2, y2)
        Vk = V[ok]
        _rk4_batch(B, W, Vk, dt)
        V[ok] = Vk
    X[ok] = Xn[ok]


def dbm_drift(lam, beta, nscale, dvc, out):
    diff = lam[:, None] - lam[None, :]
    np.fill_diagonal(diff, np.inf)
    out[:] = -0.25 * beta * _horner(dvc, lam) + (0.5 * beta / nscale) * (1.0 / diff).sum(axis=1)


def dbm_run(lam, beta, nscale, dvc, dt, noise, start):
    drift = np.empty(lam.shape[0])
    for t in range(start, noise.shape[0]):
        dbm_drift(lam, beta, nscale, dvc, drift)
        new = lam + drift * dt + noise[t]
        if not _gaps_kept(new, lam, np.inf):
            return t
        lam[:] = new
    return noise.shape[0]


def dbm_run_bridged(lam, beta, nscale, dvc, dt, noise, start, stop, pool, pos, sigma,
                    max_halvings, depths, n_depths):
    drift = np.empty(lam.shape[0])
    for t in range(start, stop):
        x0 = lam.copy()
        pos0, nd0 = pos, n_depths
        stack = [(dt, noise[t].copy(), 0)]
        fails = 0
        while stack:
            h, dw, depth = stack.pop()
            dbm_drift(lam, beta, nscale, dvc, drift)
            new = lam + drift * h + dw
            if _gaps_kept(new, lam, np.inf):
                if n_depths >= depths.shape[0]:
                    lam[:] = x0
                    return t, pos0, nd0, 3
                lam[:] = new
                depths[n_depths] = depth
                n_depths += 1
                fails = 0
                continue
            fails += 1
            if fails > max_halvings or depth >= 3 * max_halvings:
                lam[:] = x0
                return t, pos0, nd0, 2
            if pos >= pool.shape[0]:
                lam[:] = x0
                return t, pos0, nd0, 1
            w1 = 0.5 * dw + sigma * np.sqrt(0.25 * h) * pool[pos]
            pos += 1
            stack.append((0.5 * h, dw - w1, depth + 1))
            stack.append((0.5 * h, w1, depth + 1))
    return stop, pos, n_depths, 0
