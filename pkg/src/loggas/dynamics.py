"""Dyson Brownian motion, the local SDE, the coupling matrix A = B + W and
the random-walk representation built on it.

Local dynamics live in micro coordinates (see ``LocalMeasureSpec``):

    dx_i = dB_i + (1/2) d/dx_i log p(x) dt,   log p = -beta Phi,

so the Jacobian of minus the drift is A = (beta/2) Hess Phi, split into the
jump rates B_ij = (beta/2)/(x_i-x_j)^2 and the diagonal W.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from . import kernels
from .errors import DomainError, StepCollapse, StepTooLarge
from .parallel import chunk_bounds, map_chunks
from .rng import as_generator, stream
from .samplers import MalaSettings, local_chain_micro

MAX_HALVINGS = 20
GAP_SHRINK = 0.25


def _gaps_kept(new, old, wall=np.inf):
    """Accept a step when it keeps the order and no gap (nor the distance to
    the wall) shrinks below GAP_SHRINK of its previous value."""
    ok = np.all(np.diff(new) > GAP_SHRINK * np.diff(old))
    if np.isfinite(wall):
        ok = ok and wall - new[-1] > GAP_SHRINK * (wall - old[-1])
    return bool(ok)


@dataclass
class DbmPath:
    times: np.ndarray
    states: np.ndarray
    dt_history: list = field(default_factory=list)
    collisions_avoided: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)


def _bridge_step(x, dt, dW, advance, ok, g, depth, log, sigma=1.0):
    """Take one step of length dt with increment dW of sigma * (Brownian
    motion); when ``ok`` rejects it, split into two halves drawn from the
    Brownian bridge."""
    y = advance(x, dt, dW)
    if ok(y, x):
        log.append(dt)
        return y
    if depth >= MAX_HALVINGS:
        raise StepCollapse("ordering violation persists after 20 halvings")
    half = 0.5 * dt
    w1 = 0.5 * dW + sigma * np.sqrt(0.25 * dt) * g.standard_normal(dW.shape)
    x = _bridge_step(x, half, w1, advance, ok, g, depth + 1, log, sigma)
    return _bridge_step(x, half, dW - w1, advance, ok, g, depth + 1, log, sigma)


def integrate_dbm_global(init, p, T, dt, rng, beta=None, noise=True, store_every=1):
    """Euler-Maruyama for
    d l_i = dB_i / sqrt(N) + [-(beta/4) V'(l_i) + (beta/2N) sum_j 1/(l_i - l_j)] dt.
    """
    lam = np.array(init.lam if hasattr(init, "lam") else init, dtype=float)
    beta = float(beta if beta is not None else getattr(init, "beta", 2.0))
    N = lam.shape[0]
    if dt <= 0 or T < 0:
        raise DomainError("need dt > 0 and T >= 0")
    if np.any(np.diff(lam) <= 0):
        raise DomainError("initial configuration not strictly ordered")
    g = as_generator(rng)
    dvc = p.poly(1)
    n_steps = int(round(T / dt))
    sd = np.sqrt(dt / N) if noise else 0.0
    sigma = 1.0 / np.sqrt(N) if noise else 0.0
    times = [0.0]
    states = [lam.copy()]
    depths = np.empty(0, dtype=np.int64)
    hist = []
    pool = np.empty((0, N))
    pos = 0
    block = 512
    t_done = 0
    while t_done < n_steps:
        m = min(block, n_steps - t_done)
        z = g.standard_normal((m, N)) * sd if noise else np.zeros((m, N))
        if depths.shape[0] < 4 * m:
            depths = np.empty(4 * m, dtype=np.int64)
        start = 0
        while start < m:
            # run up to the next storage time inside this block
            lim = min(m, start + store_every - (t_done + start) % store_every)
            nd = 0
            while start < lim:
                start, pos, nd, status = kernels.dbm_run_bridged(
                    lam, beta, float(N), dvc, dt, z, start, lim, pool, pos, sigma,
                    MAX_HALVINGS, depths, nd)
                if status == 2:
                    raise StepCollapse("ordering violation persists after 20 halvings",
                                       time=(t_done + start) * dt)
                if status:
                    hist.append(depths[:nd].copy())
                    nd = 0
                    if status == 1:
                        pool = g.standard_normal((max(64, m // 4), N))
                        pos = 0
                    else:
                        depths = np.empty(2 * depths.shape[0], dtype=np.int64)
            hist.append(depths[:nd].copy())
            if (t_done + start) % store_every == 0:
                times.append((t_done + start) * dt)
                states.append(lam.copy())
        t_done += m
    d = np.concatenate(hist) if hist else np.zeros(0, dtype=np.int64)
    # every halving turns one piece into two
    return DbmPath(np.array(times), np.array(states), list(dt * 0.5 ** d), int(d.size - n_steps))


@dataclass
class CouplingMatrix:
    B: np.ndarray
    W: np.ndarray

    def matrix(self):
        return np.diag(self.W + self.B.sum(axis=1)) - self.B

    def apply(self, u):
        return self.matrix() @ u

    def quad_B(self, u):
        """<u, B u> = sum_{i<j} B_ij (u_i - u_j)^2."""
        u = np.asarray(u, dtype=float)
        return float(0.5 * np.sum(self.B * (u[:, None] - u[None, :]) ** 2))


def build_coupling_matrix(x, spec=None, beta=None):
    """Coupling matrix at the interior configuration x (micro coordinates).

    Without ``spec`` only the pair part is built (W = 0) with
    B_ij = (beta/2)/(x_i-x_j)^2, beta defaulting to 1.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise DomainError("configuration must be strictly ordered (coincident points are singular)")
    if spec is None:
        b = 1.0 if beta is None else float(beta)
        d = x[:, None] - x[None, :]
        np.fill_diagonal(d, np.inf)
        return CouplingMatrix(0.5 * b / d**2, np.zeros_like(x))
    if x[-1] >= spec.wall():
        raise DomainError("configuration crosses the boundary point y_{K+1}")
    B, W = spec.coupling(x)
    return CouplingMatrix(B, W)


def integrate_local_sde(spec, init, T, dt, rng, store_every=1):
    """Euler-Maruyama for the local SDE in micro coordinates."""
    x = np.array(init, dtype=float).reshape(1, -1)
    args = spec.kernel_args(with_d2=True)
    lp, _ = spec.logp_grad(x[0])
    if not np.isfinite(lp):
        raise DomainError("initial state outside the configuration interval")
    g = as_generator(rng)
    n_steps = int(round(T / dt))
    V = np.zeros((1, spec.K, spec.K))
    failed = np.zeros(1, dtype=np.bool_)
    times, states, log = [0.0], [x[0].copy()], []
    collisions = 0
    advance, ok = _local_steppers(spec)
    for k in range(n_steps):
        dW = np.sqrt(dt) * g.standard_normal((1, spec.K))
        kernels.local_em_batch(x, V, dt, dW, *args, False, failed)
        if failed[0]:
            collisions += 1
            try:
                x[0] = _bridge_step(x[0], dt, dW[0], advance, ok, g, 0, log)
            except StepCollapse as exc:
                raise StepCollapse(str(exc), time=k * dt) from None
        else:
            log.append(dt)
        if (k + 1) % store_every == 0:
            times.append((k + 1) * dt)
            states.append(x[0].copy())
    return DbmPath(np.array(times), np.array(states), log, collisions)


def _local_steppers(spec):
    wall = spec.wall()

    def advance(x, h, dW):
        lp, grad = spec.logp_grad(x)
        if not np.isfinite(lp):
            raise StepCollapse("bridge refinement started outside the domain")
        return x + 0.5 * grad * h + dW

    def ok(y, x):
        return _gaps_kept(y, x, wall)

    return advance, ok


def evolve_v(path, spec, b, T=None, matrix_hook=None, check=True):
    """v^b(t) with dv/dt = -A(t) v, v(0) = e_b, A rebuilt from each stored
    state. Returns snapshots at the path times (up to T)."""
    K = path.states.shape[1]
    if not 1 <= b <= K:
        raise DomainError("b must lie in 1..K")
    v = np.zeros((K, 1))
    v[b - 1, 0] = 1.0
    out = [v[:, 0].copy()]
    times = path.times
    for k in range(len(times) - 1):
        if T is not None and times[k] >= T - 1e-15:
            break
        h = times[k + 1] - times[k]
        if T is not None:
            h = min(h, T - times[k])
        if matrix_hook is not None:
            B, W = matrix_hook(path.states[k])
        else:
            cm = build_coupling_matrix(path.states[k], spec)
            B, W = cm.B, cm.W
        n1 = np.abs(v).sum()
        kernels.rk4_fundamental(np.ascontiguousarray(B, dtype=float),
                                np.ascontiguousarray(W, dtype=float), v, h)
        if check and (np.abs(v).sum() > n1 * (1 + 1e-8) + 1e-300 or v.min() < -1e-12 * n1):
            raise StepTooLarge("v lost positivity or L1 contraction")
        out.append(v[:, 0].copy())
    return np.array(out)


# ----------------------------------------------------------------- observables


@dataclass
class Observable:
    """Smooth function of the K interior points with its gradient; both act on (P, K)."""
    name: str
    f: object
    grad: object


def coordinate(i):
    def f(X):
        return X[:, i - 1]

    def g(X):
        out = np.zeros_like(X)
        out[:, i - 1] = 1.0
        return out

    return Observable(f"x{i}", f, g)


def coordinate_square(i):
    def f(X):
        return X[:, i - 1] ** 2

    def g(X):
        out = np.zeros_like(X)
        out[:, i - 1] = 2.0 * X[:, i - 1]
        return out

    return Observable(f"x{i}^2", f, g)


def mean_coordinate():
    return Observable("mean", lambda X: X.mean(axis=1),
                      lambda X: np.full_like(X, 1.0 / X.shape[1]))


def gap(i):
    """x_{i+1} - x_i."""
    def f(X):
        return X[:, i] - X[:, i - 1]

    def g(X):
        out = np.zeros_like(X)
        out[:, i] = 1.0
        out[:, i - 1] = -1.0
        return out

    return Observable(f"gap{i}", f, g)


def constant(c=1.0):
    return Observable("const", lambda X: np.full(X.shape[0], c), lambda X: np.zeros_like(X))


def default_pairs(K):
    """Five (Q, F) pairs used by the representation check."""
    return [
        (coordinate(1), coordinate(min(2, K))),
        (coordinate(1), coordinate(1)),
        (coordinate(K), coordinate(1)),
        (mean_coordinate(), coordinate_square(K)),
        (gap(1) if K > 1 else coordinate(1), mean_coordinate()),
    ]


@dataclass
class RWReport:
    names: list
    lhs: np.ndarray
    rhs: np.ndarray
    se_lhs: np.ndarray
    se_rhs: np.ndarray
    n_paths: int
    T: float
    dt: float
    collisions: int = 0

    @property
    def gap(self):
        return np.abs(self.lhs - self.rhs)

    def within(self, k=3.0):
        return self.gap <= k * (self.se_lhs + self.se_rhs)

    @property
    def flagged(self):
        return ~self.within(5.0)


def check_rw_representation(spec, pairs, T, n_paths, rng=0, dt=0.01, settings=None,
                            threads=None, chunk=4096, init=None):
    """Compare both sides of the random-walk representation

        E[Q F] - E[Q(x(0)) F(x(T))] = (1/2) int_0^T E sum_ab d_bQ(x(0)) d_aF(x(S)) v^b_a(S) dS

    by Monte Carlo over paths started from (MALA) equilibrium samples.
    ``pairs`` is a list of (Q, F) observables evaluated on the same paths.
    """
    seed = int(rng) if not isinstance(rng, np.random.Generator) else int(rng.integers(2**62))
    K = spec.K
    n_steps = int(round(T / dt))
    if init is None:
        s = settings or MalaSettings(burn_in=5000, thin=10)
        init, _, _ = local_chain_micro(spec, n_paths, s, stream(seed, 10**6))
    init = np.asarray(init, dtype=float)
    args = spec.kernel_args(with_d2=True)
    advance, ok = _local_steppers(spec)
    bounds = chunk_bounds(n_paths, chunk)
    n_pairs = len(pairs)
    # Q enters the left side centred: under stationarity E F(x(0)) = E F(x(T)),
    # so this leaves the expectation unchanged and removes most of the variance
    q_mean = [float(np.mean(q.f(init))) for q, _ in pairs]

    def work(c):
        a, b = bounds[c]
        g = stream(seed, c)
        X = init[a:b].copy()
        P = b - a
        V = np.broadcast_to(np.eye(K), (P, K, K)).copy()
        failed = np.zeros(P, dtype=np.bool_)
        gQ = [np.array(q.grad(X)) for q, _ in pairs]
        Q0 = [np.array(q.f(X)) - q_mean[j] for j, (q, _) in enumerate(pairs)]
        F0 = [np.array(f.f(X)) for _, f in pairs]
        integ = np.zeros((n_pairs, P))

        def integrand(j):
            gF = pairs[j][1].grad(X)
            return np.einsum("pa,pab,pb->p", gF, V, gQ[j])

        prev = [integrand(j) for j in range(n_pairs)]
        coll = 0
        for _ in range(n_steps):
            dW = np.sqrt(dt) * g.standard_normal((P, K))
            kernels.local_em_batch(X, V, dt, dW, *args, True, failed)
            for p in np.flatnonzero(failed):
                coll += 1
                X[p], V[p] = _bridge_step_v(spec, X[p], V[p], dt, dW[p], advance, ok, g)
            for j in range(n_pairs):
                cur = integrand(j)
                integ[j] += 0.5 * dt * (prev[j] + cur)
                prev[j] = cur
        lhs = np.array([Q0[j] * (F0[j] - pairs[j][1].f(X)) for j in range(n_pairs)])
        rhs = 0.5 * integ
        return lhs, rhs, coll

    res = map_chunks(work, len(bounds), threads)
    lhs = np.concatenate([r[0] for r in res], axis=1)
    rhs = np.concatenate([r[1] for r in res], axis=1)
    n = lhs.shape[1]
    return RWReport([f"{q.name}|{f.name}" for q, f in pairs], lhs.mean(axis=1), rhs.mean(axis=1),
                    lhs.std(axis=1, ddof=1) / np.sqrt(n), rhs.std(axis=1, ddof=1) / np.sqrt(n),
                    n, T, dt, sum(r[2] for r in res))


def _bridge_step_v(spec, x, V, dt, dW, advance, ok, g):
    """Bridge refinement of one path step, carrying the fundamental solution."""
    state = {"V": V.copy()}

    def adv(xx, h, w):
        y = advance(xx, h, w)
        if ok(y, xx):
            B, W = spec.coupling(xx)
            kernels.rk4_fundamental(B, W, state["V"], h)
        return y

    x = _bridge_step(x, dt, dW, adv, ok, g, 0, [])
    return x, state["V"]


# ----------------------------------------------------------------- heat decay


def minimal_coupling(K, b=1.0):
    """Synthetic A with B_jk = b/(j^{2/3}-k^{2/3})^2 and W_j = b K^{1/3}/d_j,
    d_j = (K+1)^{2/3} - j^{2/3}: the smallest coefficients the decay estimate admits."""
    j = np.arange(1, K + 1) ** (2.0 / 3.0)
    d = j[:, None] - j[None, :]
    np.fill_diagonal(d, np.inf)
    B = b / d**2
    W = b * K ** (1.0 / 3.0) / ((K + 1) ** (2.0 / 3.0) - j)
    return B, W


def check_heat_decay(K, b=1.0, eta=0.05, p=1.0, q=np.inf, s_grid=None, starts=None,
                     coupling=None):
    """Evolve u(s) = exp(-s A) u(0) exactly (A is constant) and report

        sup_s ||u(s)||_q (s b K^{-2 eta/3})^{(3/p - 3/q)(1 - 6 eta)} / ||u(0)||_p

    over the unit initial data ``starts`` (default: every e_j).
    """
    B, W = coupling if coupling is not None else minimal_coupling(K, b)
    A = np.diag(W + B.sum(axis=1)) - B
    lam, U = eigh(A)
    if s_grid is None:
        s_grid = np.geomspace(1.0, K ** (1.0 / 3.0), 25)
    s_grid = np.asarray(s_grid, dtype=float)
    starts = np.eye(K) if starts is None else np.atleast_2d(starts)
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    expo = (3.0 / p - 3.0 * inv_q) * (1 - 6 * eta)
    ratios = np.empty((starts.shape[0], s_grid.size))
    norms = np.empty_like(ratios)
    for i, u0 in enumerate(starts):
        c = U.T @ u0
        n0 = np.linalg.norm(u0, p)
        for k, s in enumerate(s_grid):
            us = U @ (np.exp(-s * lam) * c)
            nq = np.linalg.norm(us, q)
            norms[i, k] = nq / n0
            ratios[i, k] = nq * (s * b * K ** (-2 * eta / 3)) ** expo / n0
    return {"K": K, "s": s_grid, "ratios": ratios, "norms": norms,
            "sup_ratio": float(ratios.max()), "exponent": expo,
            "envelope": (s_grid * b * K ** (-2 * eta / 3)) ** (-expo), "min_eig": float(lam[0])}


def heat_decay_scaling(K_list, growth_factor=2.0, **kw):
    """sup ratios across K; flags if any doubling of K inflates the ratio by more than growth_factor."""
    sups = [check_heat_decay(K, **kw)["sup_ratio"] for K in K_list]
    grows = [b > growth_factor * a for a, b in zip(sups, sups[1:])]
    return {"K": list(K_list), "sup_ratio": sups, "unbounded_growth": any(grows)}
