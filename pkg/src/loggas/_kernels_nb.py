"""numba-compiled hot kernels.

Every function here has a numpy/scipy counterpart with the same signature in
``_kernels_np``; ``loggas.kernels`` picks one set at import time. Random
numbers are always drawn by the caller and passed in, so both backends consume
identical streams.
"""
import math

import numpy as np
from numba import njit

_EPS = 2.220446049250313e-16
_SAFMIN = 2.2250738585072014e-308


# ----------------------------------------------------------------- linalg


@njit(cache=True, nogil=True)
def tridiag_eigvalsh(d, e):
    """All eigenvalues (ascending) of the symmetric tridiagonal (d, e).

    Implicit QL with Wilkinson-type shifts; ``e[i]`` couples ``d[i]`` and
    ``d[i+1]``. Inputs are not modified.
    """
    n = d.shape[0]
    dd = d.copy()
    ee = np.zeros(n)
    for i in range(n - 1):
        ee[i] = e[i]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                s = abs(dd[m]) + abs(dd[m + 1])
                if abs(ee[m]) <= _EPS * s:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 200:
                raise RuntimeError("implicit QL failed to converge")
            g = (dd[l + 1] - dd[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            g = dd[m] - dd[l] + ee[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    dd[i + 1] -= p
                    ee[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = dd[i + 1] - p
                r = (dd[i] - g) * s + 2.0 * c * b
                p = s * r
                dd[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            dd[l] -= p
            ee[l] = g
            ee[m] = 0.0
    dd.sort()
    return dd


@njit(cache=True, nogil=True)
def _gershgorin(d, e):
    n = d.shape[0]
    lo = np.inf
    hi = -np.inf
    for i in range(n):
        r = 0.0
        if i > 0:
            r += abs(e[i - 1])
        if i < n - 1:
            r += abs(e[i])
        lo = min(lo, d[i] - r)
        hi = max(hi, d[i] + r)
    return lo, hi


@njit(cache=True, nogil=True)
def sturm_count(d, e2, x, pivmin):
    """Number of eigenvalues strictly below ``x``."""
    n = d.shape[0]
    cnt = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        cnt += 1
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            cnt += 1
    return cnt


@njit(cache=True, nogil=True)
def tridiag_select(d, e, idx):
    """Eigenvalues with ascending 0-based indices ``idx``, by Sturm bisection."""
    n = d.shape[0]
    e2 = np.empty(max(n - 1, 1))
    emax = 1.0
    for i in range(n - 1):
        e2[i] = e[i] * e[i]
        emax = max(emax, e2[i])
    pivmin = _SAFMIN * emax
    lo0, hi0 = _gershgorin(d, e)
    span = max(abs(lo0), abs(hi0))
    lo0 -= 2.0 * _EPS * span + pivmin
    hi0 += 2.0 * _EPS * span + pivmin
    out = np.empty(idx.shape[0])
    for t in range(idx.shape[0]):
        k = idx[t]
        lo = lo0
        hi = hi0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo <= 2.0 * _EPS * max(abs(lo), abs(hi)) + 4.0 * pivmin:
                break
            if mid <= lo or mid >= hi:
                break
            if sturm_count(d, e2, mid, pivmin) > k:
                hi = mid
            else:
                lo = mid
        out[t] = 0.5 * (lo + hi)
    return out


@njit(cache=True, nogil=True)
def householder_tridiag(a):
    """Reduce a real symmetric matrix to tridiagonal form; returns (d, e)."""
    n = a.shape[0]
    A = a.copy()
    v = np.empty(n)
    p = np.empty(n)
    for k in range(n - 2):
        alpha = 0.0
        for i in range(k + 1, n):
            alpha += A[i, k] * A[i, k]
        alpha = math.sqrt(alpha)
        if alpha == 0.0:
            continue
        x0 = A[k + 1, k]
        if x0 > 0:
            alpha = -alpha
        # v = x - alpha e1, normalized so that H = I - 2 v v^T / (v^T v)
        vnorm2 = 0.0
        for i in range(k + 1, n):
            v[i] = A[i, k]
        v[k + 1] = x0 - alpha
        for i in range(k + 1, n):
            vnorm2 += v[i] * v[i]
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        # p = beta A v on the trailing block
        for i in range(k + 1, n):
            s = 0.0
            for j in range(k + 1, n):
                s += A[i, j] * v[j]
            p[i] = beta * s
        pv = 0.0
        for i in range(k + 1, n):
            pv += p[i] * v[i]
        kk = 0.5 * beta * pv
        for i in range(k + 1, n):
            p[i] -= kk * v[i]
        for i in range(k + 1, n):
            for j in range(k + 1, i + 1):
                val = A[i, j] - v[i] * p[j] - p[i] * v[j]
                A[i, j] = val
                A[j, i] = val
        A[k + 1, k] = alpha
        A[k, k + 1] = alpha
        for i in range(k + 2, n):
            A[i, k] = 0.0
            A[k, i] = 0.0
    d = np.empty(n)
    e = np.empty(max(n - 1, 0))
    for i in range(n):
        d[i] = A[i, i]
    for i in range(n - 1):
        e[i] = A[i + 1, i]
    return d, e


@njit(cache=True, nogil=True)
def dense_eigvalsh(a):
    # numba binds LAPACK syevd here, which beats Householder + QL in pure loops
    return np.linalg.eigvalsh(a)


# ----------------------------------------------------------------- helpers


@njit(cache=True, nogil=True)
def _horner(c, x):
    s = 0.0
    for k in range(c.shape[0] - 1, -1, -1):
        s = s * x + c[k]
    return s


@njit(cache=True, nogil=True)
def _theta(u, order):
    if u >= -1.0:
        return 0.0
    if order == 0:
        return (u + 1.0) * (u + 1.0)
    if order == 1:
        return 2.0 * (u + 1.0)
    return 2.0


GAP_SHRINK = 0.25


@njit(cache=True, nogil=True)
def _gaps_kept(new, old, wall):
    """Ordered, below ``wall``, and no gap (nor the distance to the wall)
    shrank below GAP_SHRINK of its previous value."""
    n = new.shape[0]
    for i in range(n - 1):
        if not new[i + 1] - new[i] > GAP_SHRINK * (old[i + 1] - old[i]):
            return False
    if wall < np.inf:
        if not wall - new[n - 1] > GAP_SHRINK * (wall - old[n - 1]):
            return False
    return True


@njit(cache=True, nogil=True)
def _is_ordered(x):
    for i in range(x.shape[0] - 1):
        if not x[i] < x[i + 1]:
            return False
    return True


# ----------------------------------------------------------------- global log-gas


@njit(cache=True, nogil=True)
def loggas_logp_grad(x, beta, nscale, vc, dvc, grad):
    """log density -beta*N*H(x) (up to a constant) and its gradient.

    H(x) = sum V(x_i)/2 - (1/N) sum_{i<j} log(x_j - x_i), V polynomial with
    coefficients ``vc`` (derivative coefficients ``dvc``).
    """
    n = x.shape[0]
    half = 0.5 * beta * nscale
    logp = 0.0
    for i in range(n):
        logp -= half * _horner(vc, x[i])
        grad[i] = -half * _horner(dvc, x[i])
    logsum = 0.0
    for i in range(n):
        prod = 1.0
        xi = x[i]
        gi = 0.0
        for j in range(i + 1, n):
            diff = x[j] - xi
            inv = 1.0 / diff
            gi -= inv
            grad[j] += beta * inv
            prod *= diff
            if prod < 1e-150 or prod > 1e150:
                logsum += math.log(prod)
                prod = 1.0
        logsum += math.log(prod)
        grad[i] += beta * gi
    return logp + beta * logsum


@njit(cache=True, nogil=True)
def _lower_matvec(L, v, out):
    n = v.shape[0]
    for i in range(n):
        s = 0.0
        for j in range(i + 1):
            s += L[i, j] * v[j]
        out[i] = s


@njit(cache=True, nogil=True)
def _lower_t_matvec(L, v, out):
    n = v.shape[0]
    for j in range(n):
        out[j] = 0.0
    for i in range(n):
        vi = v[i]
        for j in range(i + 1):
            out[j] += L[i, j] * vi


@njit(cache=True, nogil=True)
def mala_loggas_run(x, g, u, logp, beta, nscale, vc, dvc, L, log_eps, normals,
                    uniforms, adapt, target, t0, thin, out):
    """Run ``normals.shape[0]`` preconditioned MALA steps on the ordered cone.

    The chain moves in whitened coordinates x = L w with L a fixed lower
    triangular factor (L L^T approximates the inverse Hessian); ``u`` holds
    L^T grad log p(x) and is kept in sync. When ``adapt`` is set, log_eps
    follows a Robbins-Monro update toward acceptance ``target``. Every
    ``thin``-th state is written to ``out`` (if thin > 0).
    Returns (logp, log_eps, n_accepted, sum_alpha, n_written).
    """
    n = x.shape[0]
    n_steps = normals.shape[0]
    y = np.empty(n)
    gy = np.empty(n)
    uy = np.empty(n)
    step = np.empty(n)
    dx = np.empty(n)
    n_acc = 0
    sum_alpha = 0.0
    n_out = 0
    for t in range(n_steps):
        eps = math.exp(log_eps)
        h = 0.5 * eps * eps
        for i in range(n):
            step[i] = h * u[i] + eps * normals[t, i]
        _lower_matvec(L, step, dx)
        for i in range(n):
            y[i] = x[i] + dx[i]
        alpha = 0.0
        if _is_ordered(y):
            logpy = loggas_logp_grad(y, beta, nscale, vc, dvc, gy)
            _lower_t_matvec(L, gy, uy)
            fwd = 0.0
            bwd = 0.0
            for i in range(n):
                a = eps * normals[t, i]
                b = step[i] + h * uy[i]
                fwd += a * a
                bwd += b * b
            log_ratio = logpy - logp + (fwd - bwd) / (2.0 * eps * eps)
            if log_ratio >= 0.0:
                alpha = 1.0
            else:
                alpha = math.exp(log_ratio)
            if uniforms[t] < alpha:
                for i in range(n):
                    x[i] = y[i]
                    g[i] = gy[i]
                    u[i] = uy[i]
                logp = logpy
                n_acc += 1
        sum_alpha += alpha
        if adapt:
            log_eps += (alpha - target) / (t0 + t + 1.0) ** 0.6
        if thin > 0 and (t + 1) % thin == 0 and n_out < out.shape[0]:
            for i in range(n):
                out[n_out, i] = x[i]
            n_out += 1
    return logp, log_eps, n_acc, sum_alpha, n_out


# ----------------------------------------------------------------- local measures


@njit(cache=True, nogil=True)
def _ext_terms(xi, nscale, micro, A, vc, dvc, y):
    """phi(x) = (N/2) V(A + x*micro) - sum_k log|x - y_k| and phi'(x)."""
    u = A + xi * micro
    phi = 0.5 * nscale * _horner(vc, u)
    dphi = 0.5 * nscale * micro * _horner(dvc, u)
    prod = 1.0
    logsum = 0.0
    for k in range(y.shape[0]):
        diff = xi - y[k]
        dphi -= 1.0 / diff
        prod *= abs(diff)
        if prod < 1e-150 or prod > 1e150:
            logsum += math.log(prod)
            prod = 1.0
    logsum += math.log(prod)
    return phi - logsum, dphi


@njit(cache=True, nogil=True)
def _ext_d2(xi, nscale, micro, A, d2vc, y):
    u = A + xi * micro
    s = 0.5 * nscale * micro * micro * _horner(d2vc, u)
    for k in range(y.shape[0]):
        diff = xi - y[k]
        s += 1.0 / (diff * diff)
    return s


@njit(cache=True, nogil=True)
def local_logp_grad(x, beta, nscale, micro, conf_scale, conf_w, r,
                    A1, vc1, dvc1, y1, A2, vc2, dvc2, y2, wall, grad):
    """log density of the local (interpolated, confined) measure, micro coords.

    Phi(x) = conf_w * sum Theta(conf_scale x_i) + sum phi_r(x_i)
             - sum_{i<j} log(x_j - x_i),   logp = -beta Phi.
    Returns -inf outside the ordered configuration interval x_K < wall.
    """
    k = x.shape[0]
    if not _is_ordered(x) or not x[k - 1] < wall:
        return -np.inf
    phi = 0.0
    for i in range(k):
        xi = x[i]
        th = conf_w * _theta(conf_scale * xi, 0)
        dth = conf_w * conf_scale * _theta(conf_scale * xi, 1)
        f = 0.0
        df = 0.0
        if r < 1.0:
            f1, df1 = _ext_terms(xi, nscale, micro, A1, vc1, dvc1, y1)
            f += (1.0 - r) * f1
            df += (1.0 - r) * df1
        if r > 0.0:
            f2, df2 = _ext_terms(xi, nscale, micro, A2, vc2, dvc2, y2)
            f += r * f2
            df += r * df2
        phi += th + f
        grad[i] = -beta * (dth + df)
    logsum = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            diff = x[j] - x[i]
            logsum += math.log(diff)
            inv = beta / diff
            grad[i] -= inv
            grad[j] += inv
    return -beta * (phi - logsum)


@njit(cache=True, nogil=True)
def local_coupling(x, beta, nscale, micro, conf_scale, conf_w, r,
                   A1, d2vc1, y1, A2, d2vc2, y2, B, W):
    """Fill the jump rates B (K x K) and diagonal W of the coupling matrix.

    Both are (beta/2) times the Hessian pieces of Phi, so that the matrix is
    the Jacobian of minus the SDE drift.
    """
    k = x.shape[0]
    hb = 0.5 * beta
    for i in range(k):
        B[i, i] = 0.0
        for j in range(i + 1, k):
            diff = x[j] - x[i]
            val = hb / (diff * diff)
            B[i, j] = val
            B[j, i] = val
        xi = x[i]
        w = conf_w * conf_scale * conf_scale * _theta(conf_scale * xi, 2)
        if r < 1.0:
            w += (1.0 - r) * _ext_d2(xi, nscale, micro, A1, d2vc1, y1)
        if r > 0.0:
            w += r * _ext_d2(xi, nscale, micro, A2, d2vc2, y2)
        W[i] = hb * w


@njit(cache=True, nogil=True)
def mala_local_run(x, g, u, logp, beta, nscale, micro, conf_scale, conf_w, r,
                   A1, vc1, dvc1, y1, A2, vc2, dvc2, y2, wall, L,
                   log_eps, normals, uniforms, adapt, target, t0, thin, out):
    """Preconditioned MALA for the local measure; same contract as
    :func:`mala_loggas_run`."""
    n = x.shape[0]
    n_steps = normals.shape[0]
    y = np.empty(n)
    gy = np.empty(n)
    uy = np.empty(n)
    step = np.empty(n)
    dx = np.empty(n)
    n_acc = 0
    sum_alpha = 0.0
    n_out = 0
    for t in range(n_steps):
        eps = math.exp(log_eps)
        h = 0.5 * eps * eps
        for i in range(n):
            step[i] = h * u[i] + eps * normals[t, i]
        _lower_matvec(L, step, dx)
        for i in range(n):
            y[i] = x[i] + dx[i]
        logpy = local_logp_grad(y, beta, nscale, micro, conf_scale, conf_w, r,
                                A1, vc1, dvc1, y1, A2, vc2, dvc2, y2, wall, gy)
        alpha = 0.0
        if logpy > -np.inf:
            _lower_t_matvec(L, gy, uy)
            fwd = 0.0
            bwd = 0.0
            for i in range(n):
                a = eps * normals[t, i]
                b = step[i] + h * uy[i]
                fwd += a * a
                bwd += b * b
            log_ratio = logpy - logp + (fwd - bwd) / (2.0 * eps * eps)
            alpha = 1.0 if log_ratio >= 0.0 else math.exp(log_ratio)
            if uniforms[t] < alpha:
                for i in range(n):
                    x[i] = y[i]
                    g[i] = gy[i]
                    u[i] = uy[i]
                logp = logpy
                n_acc += 1
        sum_alpha += alpha
        if adapt:
            log_eps += (alpha - target) / (t0 + t + 1.0) ** 0.6
        if thin > 0 and (t + 1) % thin == 0 and n_out < out.shape[0]:
            for i in range(n):
                out[n_out, i] = x[i]
            n_out += 1
    return logp, log_eps, n_acc, sum_alpha, n_out


@njit(cache=True, nogil=True)
def local_em_batch(X, V, dt, noise, beta, nscale, micro, conf_scale, conf_w, r,
                   A1, vc1, dvc1, d2vc1, y1, A2, vc2, dvc2, d2vc2, y2, wall,
                   track_v, failed):
    """One Euler-Maruyama step for every path (rows of X), plus the
    fundamental-solution update V <- exp(-dt A(x)) V by capped RK4 substeps.

    ``noise`` holds the Brownian increments for this step. Paths whose step
    would leave the ordered configuration interval, or shrink a gap below
    GAP_SHRINK of its value, are left untouched and flagged in ``failed`` for
    the caller's bridge refinement.
    """
    P, K = X.shape
    grad = np.empty(K)
    xn = np.empty(K)
    B = np.empty((K, K))
    W = np.empty(K)
    k1 = np.empty((K, K))
    k2 = np.empty((K, K))
    k3 = np.empty((K, K))
    k4 = np.empty((K, K))
    tmp = np.empty((K, K))
    for p in range(P):
        x = X[p]
        local_logp_grad(x, beta, nscale, micro, conf_scale, conf_w, r,
                        A1, vc1, dvc1, y1, A2, vc2, dvc2, y2, wall, grad)
        for i in range(K):
            xn[i] = x[i] + 0.5 * grad[i] * dt + noise[p, i]
        if not _gaps_kept(xn, x, wall):
            failed[p] = True
            continue
        failed[p] = False
        if track_v:
            local_coupling(x, beta, nscale, micro, conf_scale, conf_w, r,
                           A1, d2vc1, y1, A2, d2vc2, y2, B, W)
            _rk4_fundamental(B, W, V[p], dt, k1, k2, k3, k4, tmp)
        for i in range(K):
            x[i] = xn[i]


@njit(cache=True, nogil=True)
def _apply_A(B, W, M, out):
    K = W.shape[0]
    for i in range(K):
        rs = 0.0
        for j in range(K):
            rs += B[i, j]
        for c in range(M.shape[1]):
            s = (W[i] + rs) * M[i, c]
            for j in range(K):
                s -= B[i, j] * M[j, c]
            out[i, c] = s


@njit(cache=True, nogil=True)
def _rk4_fundamental(B, W, M, dt, k1, k2, k3, k4, tmp):
    K = W.shape[0]
    amax = 0.0
    for i in range(K):
        rs = W[i]
        for j in range(K):
            rs += B[i, j]
        amax = max(amax, rs)
    cap = 0.5 / amax if amax > 0.0 else dt
    nsub = int(math.ceil(dt / cap - 1e-12))
    if nsub < 1:
        nsub = 1
    h = dt / nsub
    C = M.shape[1]
    for _ in range(nsub):
        _apply_A(B, W, M, k1)
        for i in range(K):
            for c in range(C):
                tmp[i, c] = M[i, c] - 0.5 * h * k1[i, c]
        _apply_A(B, W, tmp, k2)
        for i in range(K):
            for c in range(C):
                tmp[i, c] = M[i, c] - 0.5 * h * k2[i, c]
        _apply_A(B, W, tmp, k3)
        for i in range(K):
            for c in range(C):
                tmp[i, c] = M[i, c] - h * k3[i, c]
        _apply_A(B, W, tmp, k4)
        for i in range(K):
            for c in range(C):
                M[i, c] -= h / 6.0 * (k1[i, c] + 2.0 * k2[i, c] + 2.0 * k3[i, c] + k4[i, c])
    return nsub


@njit(cache=True, nogil=True)
def rk4_fundamental(B, W, M, dt):
    """In-place M <- approx exp(-dt (B-Laplacian + diag W)) M with RK4
    substeps capped at 0.5 / max_i (W_i + sum_j B_ij). Returns substep count."""
    K = W.shape[0]
    C = M.shape[1]
    k1 = np.empty((K, C))
    k2 = np.empty((K, C))
    k3 = np.empty((K, C))
    k4 = np.empty((K, C))
    tmp = np.empty((K, C))
    return _rk4_fundamental(B, W, M, dt, k1, k2, k3, k4, tmp)


# ----------------------------------------------------------------- global DBM


@njit(cache=True, nogil=True)
def dbm_drift(lam, beta, nscale, dvc, out):
    """-(beta/4) V'(l_i) + (beta/(2N)) sum_{j != i} 1/(l_i - l_j)."""
    n = lam.shape[0]
    for i in range(n):
        out[i] = -0.25 * beta * _horner(dvc, lam[i])
    c = 0.5 * beta / nscale
    for i in range(n):
        for j in range(i + 1, n):
            inv = c / (lam[i] - lam[j])
            out[i] += inv
            out[j] -= inv


@njit(cache=True, nogil=True)
def dbm_run(lam, beta, nscale, dvc, dt, noise, start):
    """Euler-Maruyama steps start, start+1, ... with increments ``noise[t]``
    until the end of the block or the first step that breaks the ordering
    (or shrinks a gap below GAP_SHRINK of its value).
    Returns the index of the first step not taken (== len(noise) if all ran)."""
    n = lam.shape[0]
    drift = np.empty(n)
    new = np.empty(n)
    for t in range(start, noise.shape[0]):
        dbm_drift(lam, beta, nscale, dvc, drift)
        for i in range(n):
            new[i] = lam[i] + drift[i] * dt + noise[t, i]
        if not _gaps_kept(new, lam, np.inf):
            return t
        for i in range(n):
            lam[i] = new[i]
    return noise.shape[0]


@njit(cache=True, nogil=True)
def dbm_run_bridged(lam, beta, nscale, dvc, dt, noise, start, stop, pool, pos, sigma,
                    max_halvings, depths, n_depths):
    """Steps start..stop-1 like :func:`dbm_run`, but a rejected step is split
    into two halves drawn from the Brownian bridge (extra normals come from
    ``pool[pos:]``) until every piece is accepted.

    The depth of each accepted piece is appended to ``depths``. Returns
    (next step, pool position, pieces written, status): status 0 done, 1 pool
    exhausted, 3 depth buffer full (both roll the step back), 2 halvings exhausted.
    The halving budget counts consecutive rejections since the last accepted
    piece; the total depth is capped at three times that.
    """
    n = lam.shape[0]
    cap = 3 * max_halvings
    drift = np.empty(n)
    new = np.empty(n)
    x0 = np.empty(n)
    st_dw = np.empty((cap + 2, n))
    st_h = np.empty(cap + 2)
    st_d = np.empty(cap + 2, np.int64)
    for t in range(start, stop):
        for i in range(n):
            x0[i] = lam[i]
            st_dw[0, i] = noise[t, i]
        pos0, nd0 = pos, n_depths
        st_h[0] = dt
        st_d[0] = 0
        sp = 1
        fails = 0
        while sp > 0:
            sp -= 1
            h = st_h[sp]
            depth = st_d[sp]
            dbm_drift(lam, beta, nscale, dvc, drift)
            for i in range(n):
                new[i] = lam[i] + drift[i] * h + st_dw[sp, i]
            if _gaps_kept(new, lam, np.inf):
                if n_depths >= depths.shape[0]:
                    for i in range(n):
                        lam[i] = x0[i]
                    return t, pos0, nd0, 3
                for i in range(n):
                    lam[i] = new[i]
                depths[n_depths] = depth
                n_depths += 1
                fails = 0
                continue
            fails += 1
            if fails > max_halvings or depth >= cap:
                for i in range(n):
                    lam[i] = x0[i]
                return t, pos0, nd0, 2
            if pos >= pool.shape[0]:
                for i in range(n):
                    lam[i] = x0[i]
                return t, pos0, nd0, 1
            s = sigma * math.sqrt(0.25 * h)
            # right half goes below the left half on the stack
            for i in range(n):
                w1 = 0.5 * st_dw[sp, i] + s * pool[pos, i]
                st_dw[sp + 1, i] = w1
                st_dw[sp, i] = st_dw[sp, i] - w1
            pos += 1
            st_h[sp] = 0.5 * h
            st_d[sp] = depth + 1
            st_h[sp + 1] = 0.5 * h
            st_d[sp + 1] = depth + 1
            sp += 2
    return stop, pos, n_depths, 0
