"""Best constants of two discrete Sobolev-type inequalities.

First form, for sequences supported on 1..K (zero beyond K):

    E(u) = sum_{i != j >= 1} (u_i - u_j)^2 / |i^{2/3} - j^{2/3}|^{2-eta} >= c ||u||_p^2,

p = 3/(1+eta). Pairs with one index beyond K contribute 2 sum_i t_i u_i^2.

Second form: R(M) = max_u |u_M|^2 / (M^{-2/3} [D(u) + |u|^2]) with the
unweighted pair form D, which equals M^{2/3} (G^{-1})_{MM} for G = 2 Lap + I.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import binom

from .errors import DomainError, OptimFailed
from .rng import as_generator


@dataclass(frozen=True)
class RayleighProblem:
    K: int
    eta: float = 0.1
    kind: str = "first"

    def __post_init__(self):
        if not 0 < self.eta < 0.5:
            raise DomainError("eta must lie in (0, 0.5)")
        if self.K < 2 or self.K > 4096:
            raise DomainError("K must lie in 2..4096")
        if self.kind not in ("first", "second"):
            raise DomainError("kind is 'first' or 'second'")

    @property
    def p(self):
        return 3.0 / (1.0 + self.eta) if self.kind == "first" else 2.0

    @property
    def exponent(self):
        return 2.0 - self.eta if self.kind == "first" else 2.0


def pair_weights(K, s):
    """C_ij = 1/|i^{2/3} - j^{2/3}|^s for i != j (zero diagonal)."""
    a = np.arange(1, K + 1) ** (2.0 / 3.0)
    d = np.abs(a[:, None] - a[None, :])
    np.fill_diagonal(d, np.inf)
    return d ** (-s)


def tail_weights(K, s, J=None, terms=60, chunk=1 << 22):
    """t_i = sum_{j > K} (j^{2/3} - i^{2/3})^{-s}, i = 1..K.

    Explicit sum for K < j <= J (default 16K); beyond J an Euler-Maclaurin
    remainder whose integral is expanded binomially in i^{2/3}/x^{2/3}.
    """
    J = J or 16 * K
    a = np.arange(1, K + 1, dtype=float) ** (2.0 / 3.0)
    t = np.zeros(K)
    rows = max(1, chunk // max(K, 1))
    for j0 in range(K + 1, J + 1, rows):
        j = np.arange(j0, min(j0 + rows, J + 1), dtype=float) ** (2.0 / 3.0)
        t += np.sum((j[:, None] - a[None, :]) ** (-s), axis=0)
    # sum_{j > J} f(j) = int_J^inf f - f(J)/2 - f'(J)/12 + ...
    Jf = float(J)
    m = np.arange(terms)
    coef = binom(s + m - 1, m)
    powr = 2.0 * (s + m) / 3.0 - 1.0
    integral = np.sum(coef[None, :] * a[:, None] ** m[None, :] * Jf ** (-powr[None, :]) / powr[None, :], axis=1)
    fJ = (Jf ** (2.0 / 3.0) - a) ** (-s)
    dfJ = -s * (Jf ** (2.0 / 3.0) - a) ** (-s - 1) * (2.0 / 3.0) * Jf ** (-1.0 / 3.0)
    return t + integral - 0.5 * fJ - dfJ / 12.0


def first_form_matrix(K, eta, tail=True):
    """G with E(u) = u^T G u."""
    s = 2.0 - eta
    C = pair_weights(K, s)
    G = 2.0 * (np.diag(C.sum(axis=1)) - C)
    if tail:
        G += 2.0 * np.diag(tail_weights(K, s))
    return G


def second_form_matrix(M):
    C = pair_weights(M, 2.0)
    return 2.0 * (np.diag(C.sum(axis=1)) - C) + np.eye(M)


def _pnorm(u, p):
    return np.sum(np.abs(u) ** p) ** (1.0 / p)


def rayleigh_first(u, G, p):
    n = _pnorm(u, p)
    return float(u @ G @ u) / n**2


def _minimize_ratio(G, p, u0, max_iter=20000, tol=1e-12):
    """Projected gradient with Barzilai-Borwein steps for
    min u^T G u subject to ||u||_p = 1."""
    u = u0 / _pnorm(u0, p)

    def grad(u):
        # gradient of R(u) = u^T G u / ||u||_p^2 on the constraint set
        Gu = G @ u
        q = float(u @ Gu)
        gn = np.sign(u) * np.abs(u) ** (p - 1)   # d ||u||_p^p / p
        return 2.0 * Gu - 2.0 * q * gn, q

    g, f = grad(u)
    tau = 1.0 / max(np.abs(np.diag(G)).max(), 1e-300)
    for it in range(max_iter):
        u_new = u - tau * g
        u_new /= _pnorm(u_new, p)
        g_new, f_new = grad(u_new)
        if f_new > f * (1 + 1e-12) and tau > 1e-16:
            tau *= 0.5
            continue
        s_vec = u_new - u
        y_vec = g_new - g
        sy = float(s_vec @ y_vec)
        tau = float(s_vec @ s_vec) / sy if sy > 0 else 2.0 * tau
        done = abs(f - f_new) <= tol * abs(f_new)
        u, g, f = u_new, g_new, f_new
        if done and it > 10:
            break
    if not np.isfinite(f):
        raise OptimFailed("projected gradient diverged")
    return f, u


def _inits(K, restarts, g):
    """Gaussian, positive and spike-shaped starting points."""
    out = []
    for r in range(restarts):
        kind = r % 4
        if kind == 0:
            v = np.abs(g.standard_normal(K))
        elif kind == 1:
            v = g.standard_normal(K)
        elif kind == 2:
            c = g.integers(0, K)
            w = 1 + g.integers(0, max(K // 4, 1))
            v = np.exp(-0.5 * ((np.arange(K) - c) / w) ** 2) + 1e-3
        else:
            v = (np.arange(1, K + 1) / K) ** g.uniform(-2, 2)
        out.append(v)
    return out


def estimate_first_constant(prob, restarts=32, rng=0, G=None):
    """Minimum of E(u)/||u||_p^2 over random restarts; (c_hat, minimizer)."""
    if prob.kind != "first":
        raise DomainError("problem kind must be 'first'")
    g = as_generator(rng)
    G = first_form_matrix(prob.K, prob.eta) if G is None else G
    best = (np.inf, None)
    for u0 in _inits(prob.K, restarts, g):
        f, u = _minimize_ratio(G, prob.p, u0)
        if f < best[0]:
            best = (f, u)
    if not np.isfinite(best[0]) or best[0] <= 0:
        raise OptimFailed("no positive finite minimum found")
    return best[0], best[1] * np.sign(best[1].sum() or 1.0)


def scan_first_constant_k2(eta, n=200001):
    """K = 2 oracle: scale invariance leaves one angle, u = (cos t, sin t)."""
    G = first_form_matrix(2, eta)
    p = 3.0 / (1.0 + eta)
    t = np.linspace(0.0, np.pi, n)
    U = np.column_stack([np.cos(t), np.sin(t)])
    num = np.einsum("ni,ij,nj->n", U, G, U)
    den = np.sum(np.abs(U) ** p, axis=1) ** (2.0 / p)
    r = num / den
    k = int(np.argmin(r))
    lo, hi = t[max(k - 1, 0)], t[min(k + 1, n - 1)]
    for _ in range(100):  # golden-section refinement
        m1 = hi - 0.618033988749895 * (hi - lo)
        m2 = lo + 0.618033988749895 * (hi - lo)
        f1 = rayleigh_first(np.array([np.cos(m1), np.sin(m1)]), G, p)
        f2 = rayleigh_first(np.array([np.cos(m2), np.sin(m2)]), G, p)
        if f1 < f2:
            hi = m2
        else:
            lo = m1
    tt = 0.5 * (lo + hi)
    return rayleigh_first(np.array([np.cos(tt), np.sin(tt)]), G, p)


def second_ratio(u, G):
    M = G.shape[0]
    return float(u[-1] ** 2 / (M ** (-2.0 / 3.0) * (u @ G @ u)))


def second_ratio_exact(M):
    """R(M) = M^{2/3} (G^{-1})_{MM}: the maximum is attained at u = G^{-1} e_M."""
    G = second_form_matrix(M)
    e = np.zeros(M)
    e[-1] = 1.0
    return float(M ** (2.0 / 3.0) * np.linalg.solve(G, e)[-1])


def estimate_second_constant(M, restarts=32, rng=0):
    """max over restarts of the ratio, by projected gradient on
    min u^T G u subject to u_M = 1 (BB steps); reports the exact value too."""
    if M < 2 or M > 4096:
        raise DomainError("M must lie in 2..4096")
    g = as_generator(rng)
    G = second_form_matrix(M)
    best = (-np.inf, None)
    for u0 in _inits(M, restarts, g):
        u = u0 / u0[-1] if u0[-1] != 0 else u0 + np.eye(M)[-1]
        grad = 2 * G @ u
        grad[-1] = 0.0
        tau = 1.0 / np.diag(G).max()
        f = float(u @ G @ u)
        for it in range(20000):
            u_new = u - tau * grad
            u_new[-1] = 1.0
            g_new = 2 * G @ u_new
            g_new[-1] = 0.0
            f_new = float(u_new @ G @ u_new)
            s_vec, y_vec = u_new - u, g_new - grad
            sy = float(s_vec @ y_vec)
            tau = float(s_vec @ s_vec) / sy if sy > 0 else tau
            done = abs(f - f_new) <= 1e-14 * f_new
            u, grad, f = u_new, g_new, f_new
            if done and it > 5:
                break
        r = second_ratio(u, G)
        if r > best[0]:
            best = (r, u)
    return {"R": best[0], "R_exact": second_ratio_exact(M), "u": best[1]}
