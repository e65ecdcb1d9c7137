"""Samplers for the global log-gas, local conditional measures and
generalized Wigner spectra."""
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .equilibrium import classical_locations, quantiles_alpha, solve_equilibrium
from .errors import ChainStalled, ConfigError, DomainError, NumericFailure
from .parallel import chunk_bounds, map_chunks
from .rng import as_generator, child_seed, stream

SAMPLER_IDS = {"tridiag": 1, "mala": 2, "local": 3, "wigner": 4, "dbm": 5, "airy": 6}


@dataclass
class ParticleConfiguration:
    lam: np.ndarray
    beta: float
    N: int = None

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        if self.N is None:
            self.N = self.lam.shape[0]
        if self.lam.shape != (self.N,):
            raise DomainError("configuration length does not match N")
        if not np.all(np.isfinite(self.lam)):
            raise DomainError("configuration has non-finite entries")
        if np.any(np.diff(self.lam) <= 0):
            raise DomainError("configuration is not strictly ordered")


@dataclass
class SampleArchive:
    """Rows of ordered eigenvalues. With ``indices`` set, each row holds only
    the listed (1-based) eigenvalue indices of an N-particle configuration."""
    samples: np.ndarray
    beta: float
    N: int
    sampler_id: str
    seed: int
    settings: dict = field(default_factory=dict)
    acceptance_rate: float = 1.0
    indices: np.ndarray = None

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise DomainError("acceptance rate outside [0, 1]")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def configs(self):
        if self.indices is not None:
            raise DomainError("archive holds selected indices only")
        return [ParticleConfiguration(row, self.beta, self.N) for row in self.samples]

    def column(self, k):
        """Samples of lambda_k (1-based index)."""
        if self.indices is None:
            return self.samples[:, k - 1]
        pos = np.flatnonzero(np.asarray(self.indices) == k)
        if pos.size == 0:
            raise DomainError(f"index {k} not stored in archive")
        return self.samples[:, pos[0]]

    def merge(self, other):
        if (other.N, other.beta) != (self.N, self.beta):
            raise ConfigError("cannot merge archives with different N or beta")
        if not np.array_equal(np.asarray(self.indices), np.asarray(other.indices)):
            raise ConfigError("cannot merge archives with different stored indices")
        n1, n2 = len(self), len(other)
        acc = (self.acceptance_rate * n1 + other.acceptance_rate * n2) / max(n1 + n2, 1)
        return SampleArchive(np.vstack([self.samples, other.samples]), self.beta, self.N,
                             self.sampler_id, self.seed, dict(self.settings), acc, self.indices)


# ----------------------------------------------------------------- tridiagonal


def tridiag_coefficients(N, beta, rng):
    """Diagonal N(0, 2/(beta N)) and off-diagonals chi_{beta(N-k)}/sqrt(beta N)."""
    s = np.sqrt(beta * N)
    d = rng.normal(0.0, np.sqrt(2.0 / (beta * N)), N)
    k = np.arange(1, N)
    e = np.sqrt(rng.gamma(beta * (N - k) / 2.0, 2.0)) / s
    return d, e


def sample_gbe_tridiag(N, beta, rng):
    """One configuration of the Gaussian beta ensemble (V = x^2/2)."""
    if N < 1 or not beta > 0:
        raise DomainError("need N >= 1 and beta > 0")
    d, e = tridiag_coefficients(N, beta, as_generator(rng))
    return ParticleConfiguration(kernels.tridiag_eigvalsh(d, e), beta, N)


def tridiag_archive(N, beta, n_samples, seed, select=None, threads=None, chunk=64):
    """``n_samples`` draws; ``select`` (1-based indices) uses Sturm bisection
    for just those eigenvalues instead of the full spectrum."""
    idx = None if select is None else np.asarray(sorted(select), dtype=np.int64)
    bounds = chunk_bounds(n_samples, chunk)

    def work(c):
        a, b = bounds[c]
        g = stream(seed, c)
        rows = np.empty((b - a, N if idx is None else idx.size))
        for i in range(b - a):
            d, e = tridiag_coefficients(N, beta, g)
            if idx is None:
                rows[i] = kernels.tridiag_eigvalsh(d, e)
            else:
                rows[i] = kernels.tridiag_select(d, e, idx - 1)
        return rows

    rows = map_chunks(work, len(bounds), threads)
    samples = np.vstack(rows) if rows else np.empty((0, N if idx is None else idx.size))
    return SampleArchive(samples, beta, N, "tridiag", int(seed), {"chunk": chunk}, 1.0, idx)


# ----------------------------------------------------------------- MALA


@dataclass
class MalaSettings:
    burn_in: int = 2000
    thin: int = 10
    target_accept: float = 0.574
    adapt_t0: float = 10.0
    n_chains: int = 1
    precondition: str = "hessian"   # hessian | diagonal | none
    block: int = 1000
    min_accept: float = 0.05

    def __post_init__(self):
        if self.burn_in < 1 or self.thin < 1 or self.n_chains < 1:
            raise ConfigError("burn_in, thin and n_chains must be positive")
        if self.precondition not in ("hessian", "diagonal", "none"):
            raise ConfigError(f"unknown preconditioner {self.precondition!r}")


def preconditioner_factor(H, kind):
    """Lower-triangular L with L L^T ~ H^{-1}."""
    n = H.shape[0]
    if kind == "none":
        return np.eye(n)
    if kind == "diagonal":
        return np.diag(1.0 / np.sqrt(np.diag(H)))
    try:
        return np.linalg.cholesky(np.linalg.inv(H))
    except np.linalg.LinAlgError as exc:
        raise NumericFailure("Hessian preconditioner is not positive definite") from exc


def loggas_hessian(x, p, beta, N):
    """Hessian of beta N H(x) (minus log density)."""
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, np.inf)
    inv2 = 1.0 / d**2
    H = -beta * inv2
    H[np.diag_indices_from(H)] = 0.5 * beta * N * p(x, 2) + beta * inv2.sum(axis=1)
    return H


def _run_chain(run_block, n, logp, log_eps, settings, n_out, g):
    """Burn-in with adaptation, then frozen sampling; shared by both chain kinds."""
    s = settings
    done = 0
    acc_b = 0
    while done < s.burn_in:
        m = min(s.block, s.burn_in - done)
        z = g.standard_normal((m, n))
        u = g.random(m)
        logp, log_eps, na, _, _ = run_block(logp, log_eps, z, u, True, s.adapt_t0 + done, 0,
                                            np.empty((0, n)))
        acc_b += na
        done += m
    out = np.empty((n_out, n))
    total = n_out * s.thin
    done = 0
    written = 0
    n_acc = 0
    while done < total:
        m = min(max(s.block // s.thin, 1) * s.thin, total - done)
        z = g.standard_normal((m, n))
        u = g.random(m)
        buf = np.empty((m // s.thin, n))
        logp, log_eps, na, _, nw = run_block(logp, log_eps, z, u, False, 0.0, s.thin, buf)
        out[written:written + nw] = buf[:nw]
        written += nw
        n_acc += na
        done += m
    rate = n_acc / max(total, 1)
    if rate < s.min_accept:
        raise ChainStalled(f"acceptance rate {rate:.3f} after adaptation")
    return out, rate, float(np.exp(log_eps))


def sample_loggas_mala(p, N, beta, n_samples, settings=None, rng=0, threads=None,
                       init=None):
    """Preconditioned MALA for exp(-beta N H) on the ordered cone.

    Proposals leaving the cone are rejected. The step size is adapted during
    burn-in toward ``target_accept`` and frozen afterwards.
    """
    s = settings or MalaSettings()
    if not p.is_polynomial:
        raise ConfigError("MALA sampling needs a polynomial potential")
    if beta < 1:
        raise DomainError("MALA sampler requires beta >= 1")
    seed = int(rng) if not isinstance(rng, np.random.Generator) else child_seed(rng)
    if init is None:
        eq = solve_equilibrium(p)
        x0 = np.atleast_1d(eq.inverse_cdf((np.arange(1, N + 1) - 0.5) / N))
    else:
        x0 = np.asarray(init, dtype=float).copy()
    if np.any(np.diff(x0) <= 0):
        raise DomainError("initial configuration not strictly ordered")
    L = np.ascontiguousarray(preconditioner_factor(loggas_hessian(x0, p, beta, N), s.precondition))
    vc, dvc = p.poly(0), p.poly(1)
    per = [n_samples // s.n_chains + (c < n_samples % s.n_chains) for c in range(s.n_chains)]

    def chain(c):
        g = stream(seed, c)
        x = x0.copy()
        grad = np.empty(N)
        logp = kernels.loggas_logp_grad(x, float(beta), float(N), vc, dvc, grad)
        u = L.T @ grad

        def run_block(logp, log_eps, z, uu, adapt, t0, thin, out):
            return kernels.mala_loggas_run(x, grad, u, logp, float(beta), float(N), vc, dvc, L,
                                           log_eps, z, uu, adapt, s.target_accept, t0, thin, out)

        log_eps = np.log(1.65 * N ** (-1.0 / 6.0))
        return _run_chain(run_block, N, logp, log_eps, s, per[c], g)

    res = map_chunks(chain, s.n_chains, threads)
    samples = np.vstack([r[0] for r in res])
    rate = float(np.average([r[1] for r in res], weights=per))
    settings_d = asdict(s)
    settings_d["step_sizes"] = [r[2] for r in res]
    return SampleArchive(samples, beta, N, "mala", seed, settings_d, rate)


# ----------------------------------------------------------------- local measures


@dataclass
class LocalMeasureSpec:
    """Conditional law of the K smallest particles given y = (y_{K+1}, ..., y_N).

    Work is done in micro coordinates x^ = N^{2/3}(x - A) with A the lower
    equilibrium edge of the potential. With ``r_interp`` in (0, 1] the second
    boundary/potential pair (``y_tilde``, ``potential_tilde``) enters the
    interpolated external field (1-r) V_y + r V~_y~.
    """
    y: np.ndarray
    K: int
    xi: float
    N: int
    potential: object
    beta: float = 2.0
    r_interp: float = 0.0
    y_tilde: np.ndarray = None
    potential_tilde: object = None
    confinement_weight: float = 2.0
    A: float = None
    A_tilde: float = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.y.shape[0] != self.N - self.K:
            raise DomainError("y must hold N - K external points")
        if self.K < 1 or self.K >= self.N:
            raise DomainError("need 1 <= K < N")
        if np.any(np.diff(self.y) <= 0):
            raise DomainError("y must be strictly increasing")
        if not 0.0 <= self.r_interp <= 1.0:
            raise DomainError("r_interp must lie in [0, 1]")
        if self.r_interp > 0 and (self.y_tilde is None or self.potential_tilde is None):
            raise DomainError("interpolation needs y_tilde and potential_tilde")
        if self.A is None:
            self.A = solve_equilibrium(self.potential).A
        if self.y_tilde is not None:
            self.y_tilde = np.asarray(self.y_tilde, dtype=float)
            if self.A_tilde is None:
                self.A_tilde = solve_equilibrium(self.potential_tilde).A

    @property
    def micro_scale(self):
        return self.N ** (-2.0 / 3.0)

    @property
    def confinement_scale(self):
        """N^{2/3 - xi} in macro units, i.e. N^{-xi} in micro units."""
        return self.N ** (2.0 / 3.0 - self.xi)

    def to_micro(self, x, which=0):
        A = self.A if which == 0 else self.A_tilde
        return (np.asarray(x, dtype=float) - A) / self.micro_scale

    def to_macro(self, xh, which=0):
        A = self.A if which == 0 else self.A_tilde
        return A + np.asarray(xh, dtype=float) * self.micro_scale

    def wall(self):
        w = []
        if self.r_interp < 1.0:
            w.append(self.to_micro(self.y[0]))
        if self.r_interp > 0.0:
            w.append(self.to_micro(self.y_tilde[0], 1))
        return float(min(w))

    def kernel_args(self, with_d2=False):
        """Positional argument block shared by the local kernels."""
        p1 = self.potential
        p2 = self.potential_tilde if self.potential_tilde is not None else p1
        y1 = self.to_micro(self.y)
        y2 = self.to_micro(self.y_tilde, 1) if self.y_tilde is not None else y1
        A2 = self.A_tilde if self.A_tilde is not None else self.A
        head = (float(self.beta), float(self.N), self.micro_scale, self.N ** (-self.xi),
                float(self.confinement_weight), float(self.r_interp))
        if with_d2:
            return head + (float(self.A), p1.poly(0), p1.poly(1), p1.poly(2), y1,
                           float(A2), p2.poly(0), p2.poly(1), p2.poly(2), y2, self.wall())
        return head + (float(self.A), p1.poly(0), p1.poly(1), y1,
                       float(A2), p2.poly(0), p2.poly(1), y2, self.wall())

    def coupling_args(self):
        a = self.kernel_args(with_d2=True)
        # (beta, N, micro, conf_scale, conf_w, r, A1, d2vc1, y1, A2, d2vc2, y2)
        return a[:6] + (a[6], a[9], a[10], a[11], a[14], a[15])

    def logp_grad(self, xh):
        grad = np.empty(self.K)
        lp = kernels.local_logp_grad(np.asarray(xh, dtype=float), *self.kernel_args(), grad)
        return lp, grad

    def coupling(self, xh):
        B = np.empty((self.K, self.K))
        W = np.empty(self.K)
        kernels.local_coupling(np.asarray(xh, dtype=float), *self.coupling_args(), B, W)
        return B, W

    def hessian(self, xh):
        """Hessian of minus the log density: 2 (Laplacian(B) + diag W)."""
        B, W = self.coupling(xh)
        return 2.0 * (np.diag(W + B.sum(axis=1)) - B)

    def initial_micro(self):
        """Quantiles alpha_j of the equilibrium density below y_{K+1}, in micro units."""
        eq = solve_equilibrium(self.potential)
        a = quantiles_alpha(eq, self.y[0], self.K)
        xh = self.to_micro(a)
        wall = self.wall()
        if xh[-1] >= wall:
            xh = xh - (xh[-1] - wall) - 0.5 * (wall - xh[0]) / self.K
        return xh


def local_spec_at_classical(p, N, K, xi, beta=2.0, **kw):
    """Local measure with y_k = gamma_k for k > K."""
    eq = solve_equilibrium(p)
    g = classical_locations(eq, N).gamma
    return LocalMeasureSpec(g[K:], K, xi, N, p, beta, A=eq.A, **kw)


def local_chain_micro(spec, n_samples, settings=None, rng=0, threads=None, init=None):
    """MALA samples of the local measure in micro coordinates, plus acceptance."""
    s = settings or MalaSettings()
    if spec.beta < 1:
        raise DomainError("local sampler requires beta >= 1")
    seed = int(rng) if not isinstance(rng, np.random.Generator) else child_seed(rng)
    x0 = spec.initial_micro() if init is None else np.asarray(init, dtype=float).copy()
    args = spec.kernel_args()
    lp0, _ = spec.logp_grad(x0)
    if not np.isfinite(lp0):
        raise DomainError("initial local configuration outside the domain")
    L = np.ascontiguousarray(preconditioner_factor(spec.hessian(x0), s.precondition))
    K = spec.K
    per = [n_samples // s.n_chains + (c < n_samples % s.n_chains) for c in range(s.n_chains)]

    def chain(c):
        g = stream(seed, c)
        x = x0.copy()
        grad = np.empty(K)
        logp = kernels.local_logp_grad(x, *args, grad)
        u = L.T @ grad

        def run_block(logp, log_eps, z, uu, adapt, t0, thin, out):
            return kernels.mala_local_run(x, grad, u, logp, *args, L, log_eps, z, uu, adapt,
                                          s.target_accept, t0, thin, out)

        out = _run_chain(run_block, K, logp, np.log(1.65 * K ** (-1.0 / 6.0)), s, per[c], g)
        if np.any(out[0][:, -1] >= args[-1]):
            raise NumericFailure("local chain left the configuration interval")
        return out

    res = map_chunks(chain, s.n_chains, threads)
    samples = np.vstack([r[0] for r in res])
    rate = float(np.average([r[1] for r in res], weights=per))
    return samples, rate, seed


def sample_local_conditional(spec, n_samples, settings=None, rng=0, threads=None):
    """Archive of the K interior points (macro coordinates) under sigma_y."""
    xs, rate, seed = local_chain_micro(spec, n_samples, settings, rng, threads)
    settings_d = asdict(settings or MalaSettings())
    settings_d.update(K=spec.K, xi=spec.xi, r_interp=spec.r_interp)
    return SampleArchive(spec.to_macro(xs), spec.beta, spec.K, "local", seed, settings_d, rate)


def estimate_rstar(spec, gamma1, n_samples=2000, settings=None, rng=0):
    """Monte Carlo estimate of P(x_1 >= gamma_1 - N^{-2/3+xi}) under the
    half-confined measure (confinement weight 1/N instead of 2/N).

    Returns (probability, standard error); the boundary is in R* when the
    probability is at least 1/2.
    """
    half = LocalMeasureSpec(spec.y, spec.K, spec.xi, spec.N, spec.potential, spec.beta,
                            confinement_weight=1.0, A=spec.A)
    xs, _, _ = local_chain_micro(half, n_samples, settings, rng)
    x1 = half.to_macro(xs[:, 0])
    hit = (x1 >= gamma1 - spec.N ** (-2.0 / 3.0 + spec.xi)).astype(float)
    return float(hit.mean()), float(hit.std(ddof=1) / np.sqrt(len(hit)))


def is_good_boundary(y, gammas, xi, K, kind="R"):
    """Membership of y = (y_{K+1}, ..., y_N) in the good-boundary sets R or R#."""
    g = gammas.gamma if hasattr(gammas, "gamma") else np.asarray(gammas)
    N = g.shape[0]
    y = np.asarray(y, dtype=float)
    if y.shape[0] != N - K:
        raise DomainError("y must cover indices K+1..N")
    k = np.arange(K + 1, N + 1)
    khat = np.minimum(k, N + 1 - k)

    def rigid(x):
        return bool(np.all(np.abs(y - g[K:]) <= N ** (-2.0 / 3.0 + x) * khat ** (-1.0 / 3.0)))

    if kind == "R":
        return rigid(xi)
    if kind == "Rsharp":
        if not rigid(xi / 3.0):
            return False
        if y.shape[0] < 2:
            return True
        return bool(y[1] - y[0] >= N ** (-2.0 / 3.0 - xi) * K ** (-1.0 / 3.0))
    raise DomainError(f"unknown boundary kind {kind!r}")


# ----------------------------------------------------------------- generalized Wigner


@dataclass
class VarianceProfile:
    sigma2: np.ndarray
    C1: float = None
    C2: float = None

    def __post_init__(self):
        s = np.asarray(self.sigma2, dtype=float)
        N = s.shape[0]
        if s.shape != (N, N) or not np.allclose(s, s.T, rtol=0, atol=1e-15) or np.any(s < 0):
            raise ConfigError("variance profile must be symmetric and nonnegative")
        if not np.allclose(s.sum(axis=1), 1.0, rtol=0, atol=1e-10):
            raise ConfigError("variance profile rows must sum to 1")
        self.sigma2 = s
        if self.C1 is None:
            self.C1 = float(s.min() * N)
        if self.C2 is None:
            self.C2 = float(s.max() * N)
        if not (self.C1 > 0 and self.C1 <= s.min() * N * (1 + 1e-12) and s.max() * N <= self.C2 * (1 + 1e-12)):
            raise ConfigError("variance profile violates C1/N <= sigma2 <= C2/N")

    @property
    def N(self):
        return self.sigma2.shape[0]


def constant_profile(N):
    return VarianceProfile(np.full((N, N), 1.0 / N))


def two_band_profile(N, c_same=1.5, c_cross=0.5, sweeps=200):
    """Two diagonal blocks at c_same/N, off-diagonal blocks at c_cross/N;
    symmetric Sinkhorn scaling restores unit row sums when the blocks differ in size."""
    half = N // 2
    grp = np.arange(N) >= half
    s = np.where(grp[:, None] == grp[None, :], c_same, c_cross) / N
    for _ in range(sweeps):
        r = s.sum(axis=1)
        if np.max(np.abs(r - 1)) < 1e-14:
            break
        d = 1.0 / np.sqrt(r)
        s = d[:, None] * s * d[None, :]
    return VarianceProfile(s)


def _entries(dist, size, g):
    if dist == "gaussian":
        return g.standard_normal(size)
    if dist == "bernoulli":
        return np.where(g.random(size) < 0.5, -1.0, 1.0)
    if dist == "laplace":
        return g.laplace(0.0, 1.0 / np.sqrt(2.0), size)
    raise ConfigError(f"unknown entry distribution {dist!r}")


def wigner_matrix(profile, dist, symmetry, rng):
    """Off-diagonal h_ij = sigma_ij xi_ij; the real diagonal has variance
    2 sigma_ii^2 (so a constant profile with Gaussian entries is exactly GOE),
    the hermitian diagonal has variance sigma_ii^2."""
    g = as_generator(rng)
    N = profile.N
    sig = np.sqrt(profile.sigma2)
    iu = np.triu_indices(N, 1)
    if symmetry == "real":
        H = np.zeros((N, N))
        H[iu] = sig[iu] * _entries(dist, iu[0].size, g)
        H = H + H.T
        H[np.diag_indices(N)] = np.sqrt(2.0) * np.diag(sig) * _entries(dist, N, g)
        return H
    if symmetry == "hermitian":
        H = np.zeros((N, N), dtype=complex)
        re = _entries(dist, iu[0].size, g)
        im = _entries(dist, iu[0].size, g)
        H[iu] = sig[iu] * (re + 1j * im) / np.sqrt(2.0)
        H = H + H.conj().T
        H[np.diag_indices(N)] = np.diag(sig) * _entries(dist, N, g)
        return H
    raise ConfigError(f"unknown symmetry {symmetry!r}")


def spectrum(H):
    """Sorted eigenvalues: Householder + implicit QL; hermitian matrices go
    through the 2N real embedding and the doubled spectrum is deduplicated."""
    if np.iscomplexobj(H):
        Re, Im = H.real, H.imag
        E = np.block([[Re, -Im], [Im, Re]])
        ev = np.sort(kernels.dense_eigvalsh(np.ascontiguousarray(E)))
        return ev[0::2].copy()
    return np.sort(kernels.dense_eigvalsh(np.ascontiguousarray(H)))


def sample_generalized_wigner(profile, dist="gaussian", symmetry="real", rng=0):
    lam = spectrum(wigner_matrix(profile, dist, symmetry, rng))
    beta = 1.0 if symmetry == "real" else 2.0
    return ParticleConfiguration(lam, beta, profile.N)


def wigner_archive(profile, n_samples, seed, dist="gaussian", symmetry="real",
                   select=None, threads=None, chunk=16):
    idx = None if select is None else np.asarray(sorted(select), dtype=np.int64)
    bounds = chunk_bounds(n_samples, chunk)

    def work(c):
        a, b = bounds[c]
        g = stream(seed, c)
        rows = []
        for _ in range(b - a):
            lam = spectrum(wigner_matrix(profile, dist, symmetry, g))
            rows.append(lam if idx is None else lam[idx - 1])
        return np.array(rows).reshape(b - a, -1)

    samples = np.vstack(map_chunks(work, len(bounds), threads))
    beta = 1.0 if symmetry == "real" else 2.0
    return SampleArchive(samples, beta, profile.N, "wigner", int(seed),
                         {"dist": dist, "symmetry": symmetry}, 1.0, idx)
