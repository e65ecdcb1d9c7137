"""Empirical statistics over sample archives.

Edge formulas are applied after moving the lower equilibrium edge to 0 and
rescaling so the square-root constant there is 1, i.e. the map
x -> s_A^{2/3} (x - A) of the solved measure. gamma_k always refers to the
limiting classical locations.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, DomainError
from .potentials import eval_potential


def _samples(archive):
    return archive.samples if hasattr(archive, "samples") else np.atleast_2d(np.asarray(archive, dtype=float))


def _column(archive, k):
    if hasattr(archive, "column"):
        return archive.column(k)
    return _samples(archive)[:, k - 1]


def _gamma(gammas):
    return gammas.gamma if hasattr(gammas, "gamma") else np.asarray(gammas, dtype=float)


def _edge_factor(eq):
    return 1.0 if eq is None else eq.s_A ** (2.0 / 3.0)


# ----------------------------------------------------------------- generic tools


def ks_distance(a, b):
    """Sup distance between the empirical CDF of ``a`` and either the
    empirical CDF of ``b``, a callable CDF, or an (n, 2) (value, cdf) table."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    if a.size == 0:
        raise DomainError("empty sample")
    if callable(b):
        F = b(a)
        n = a.size
        return float(max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n)))
    b = np.asarray(b, dtype=float)
    if b.ndim == 2 and b.shape[1] == 2:
        vals, cdf = b[:, 0], b[:, 1]

        def table(x):
            i = np.searchsorted(vals, x, side="right")
            return np.where(i > 0, cdf[np.maximum(i - 1, 0)], 0.0)

        grid = np.concatenate([a, vals])
        Fa = np.searchsorted(a, grid, side="right") / a.size
        return float(np.max(np.abs(Fa - table(grid))))
    b = np.sort(b.ravel())
    if b.size == 0:
        raise DomainError("empty sample")
    grid = np.concatenate([a, b])
    Fa = np.searchsorted(a, grid, side="right") / a.size
    Fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


def jackknife(stat, data, n_blocks=50):
    """Delete-one-block jackknife: (estimate, standard error).

    ``stat`` maps an (n, ...) array of per-sample rows to a scalar or array.
    """
    data = np.asarray(data)
    n = data.shape[0]
    full = np.asarray(stat(data))
    g = min(n_blocks, n)
    if g < 2:
        return full, np.full(full.shape, np.nan)
    edges = np.linspace(0, n, g + 1).astype(int)
    reps = []
    for k in range(g):
        keep = np.concatenate([np.arange(0, edges[k]), np.arange(edges[k + 1], n)])
        reps.append(np.asarray(stat(data[keep])))
    reps = np.array(reps)
    mean = reps.mean(axis=0)
    var = (g - 1) / g * np.sum(np.abs(reps - mean) ** 2, axis=0)
    return full, np.sqrt(var)


# ----------------------------------------------------------------- Stieltjes / loop equation


def empirical_stieltjes(archive, z):
    """Mean of m_N(z) = (1/N) sum 1/(z - lambda_k) over configurations, its
    variance (E|m - Em|^2) and standard error."""
    z = complex(z)
    if z.imag == 0:
        raise DomainError("z must be off the real axis")
    X = _samples(archive)
    m = np.mean(1.0 / (z - X), axis=1)
    var = float(np.mean(np.abs(m - m.mean()) ** 2)) if m.size > 1 else 0.0
    return {"mean": complex(m.mean()), "var": var, "se": float(np.sqrt(var / max(m.size - 1, 1)))}


def loop_equation_terms(X, p, beta, z):
    """Per-configuration summand of the first loop equation,

        S^2/N^2 - (1/N) sum V'(l)/(z-l) + (2/beta - 1) (1/N^2) sum 1/(z-l)^2,

    with S = sum 1/(z-l). Its mean equals
    m^2 + Var(S)/N^2 - int V'(s)/(z-s) rho_1 - (2/beta - 1) m'/N, which
    vanishes identically for the log-gas with potential V at inverse
    temperature beta.
    """
    N = X.shape[1]
    r = 1.0 / (z - X)
    S = r.sum(axis=1)
    c = (eval_potential(p, X, 1) * r).sum(axis=1)
    d = (r * r).sum(axis=1)
    return S * S / N**2 - c / N + (2.0 / beta - 1.0) * d / N**2


def loop_equation_residual(archive, p, beta, z, n_blocks=50):
    z = complex(z)
    if z.imag == 0:
        raise DomainError("z must be off the real axis")
    t = loop_equation_terms(_samples(archive), p, float(beta), z)
    res, se = jackknife(lambda a: a.mean(), t, n_blocks)
    return {"residual": complex(res), "se": float(se)}


# ----------------------------------------------------------------- rigidity and fluctuations


@dataclass
class RigidityReport:
    fractions: np.ndarray
    xi: float
    n_samples: int
    worst_index: int

    @property
    def max_fraction(self):
        return float(self.fractions.max())


def rigidity_report(archive, gammas, xi):
    X = _samples(archive)
    g = _gamma(gammas)
    N = g.shape[0]
    if X.shape[1] != N:
        raise DomainError("archive N does not match classical locations")
    k = np.arange(1, N + 1)
    khat = np.minimum(k, N + 1 - k)
    thr = N ** (-2.0 / 3.0 + xi) * khat ** (-1.0 / 3.0)
    frac = np.mean(np.abs(X - g) > thr, axis=0)
    return RigidityReport(frac, xi, X.shape[0], int(np.argmax(frac)) + 1)


@dataclass
class EdgeStatistic:
    j: int
    values: np.ndarray


def edge_statistic(archive, gammas, j, eq=None):
    """N^{2/3} j^{1/3} (lambda_j - gamma_j) in edge-normalized units."""
    g = _gamma(gammas)
    N = g.shape[0]
    v = N ** (2.0 / 3.0) * j ** (1.0 / 3.0) * _edge_factor(eq) * (_column(archive, j) - g[j - 1])
    return EdgeStatistic(j, v)


def fluctuation_constant(beta):
    """c = (3/2)^{1/3} pi beta^{1/2}."""
    return 1.5 ** (1.0 / 3.0) * np.pi * np.sqrt(beta)


def fluctuation_variable(archive, gammas, i, beta, eq=None):
    if i <= 1:
        raise DomainError("index must exceed 1 (log i > 0)")
    g = _gamma(gammas)
    N = g.shape[0]
    dev = _edge_factor(eq) * (_column(archive, i) - g[i - 1])
    return fluctuation_constant(beta) * dev / (np.sqrt(np.log(i)) * N ** (-2.0 / 3.0) * i ** (-1.0 / 3.0))


def gaussian_fluctuation_test(archive, gammas, i, beta, eq=None):
    X = fluctuation_variable(archive, gammas, i, beta, eq)
    N = _gamma(gammas).shape[0]
    return {
        "X": X,
        "mean": float(X.mean()),
        "var": float(X.var(ddof=1)) if X.size > 1 else 0.0,
        "ks": ks_distance(X, ndtr),
        "conjectural": beta not in (1, 2, 4),
        "index_in_range": i <= N ** 0.4,
    }


def joint_fluctuation_covariance(archive, gammas, indices, beta, delta, eq=None):
    ks = list(indices)
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise DomainError("indices must be strictly increasing")
    N = _gamma(gammas).shape[0]
    Xs = np.column_stack([fluctuation_variable(archive, gammas, k, beta, eq) for k in ks])
    cov = np.atleast_2d(np.cov(Xs, rowvar=False))
    theta = np.array([np.log(b - a) / np.log(N) for a, b in zip(ks, ks[1:])])
    m = len(ks)
    pred = np.ones((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            pred[a, b] = pred[b, a] = 1.0 - theta[a:b].max() / delta
    return {"cov": cov, "prediction": pred, "theta": theta}


def edge_covariance_decay(archive, gammas, i, j_list, eq=None, n_blocks=50):
    """Cov(N^{2/3} i^{1/3}(l_i - g_i), N^{2/3} j^{1/3}(l_j - g_j)) with jackknife SE."""
    if i > min(j_list):
        raise DomainError("i must not exceed the j indices")
    yi = edge_statistic(archive, gammas, i, eq).values
    out_c, out_se = [], []
    for j in j_list:
        yj = edge_statistic(archive, gammas, j, eq).values
        c, se = jackknife(lambda a: np.cov(a[:, 0], a[:, 1])[0, 1], np.column_stack([yi, yj]), n_blocks)
        out_c.append(float(c))
        out_se.append(float(se))
    return {"j": np.asarray(j_list), "cov": np.array(out_c), "se": np.array(out_se),
            "prediction_ratio": (i / np.asarray(j_list, dtype=float)) ** (1.0 / 3.0)}


def fit_loglog_slope(x, y):
    """Least-squares slope of log y against log x (y must be positive)."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        return float("nan")
    return float(np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(y), 1)[0])


# ----------------------------------------------------------------- level repulsion


def normalized_gaps(archive, gammas, indices):
    """(lambda_{k+1} - lambda_k) / (gamma_{k+1} - gamma_k) for k in ``indices``."""
    X = _samples(archive)
    g = _gamma(gammas)
    k = np.asarray(indices) - 1
    return ((X[:, k + 1] - X[:, k]) / (g[k + 1] - g[k])).ravel()


def level_repulsion_fit(gaps, beta=None, min_events=200, quantile=0.01):
    """Power-law exponent a in P(gap < s) ~ s^a at small s.

    Window upper edge: the larger of the ``min_events``-th smallest gap and the
    ``quantile`` quantile; the exponent is the maximum-likelihood estimate for
    a CDF proportional to s^a on (0, s_hi].
    """
    s = np.sort(np.asarray(gaps, dtype=float).ravel())
    s = s[s > 0]
    n = s.size
    advisory = None
    if n < 10 ** 4:
        advisory = "WidenWindow: fewer than 1e4 gap samples"
    if n <= min_events:
        raise DomainError("too few gap samples for the small-gap fit")
    s_hi = max(s[min_events - 1], np.quantile(s, quantile))
    tail = s[s <= s_hi]
    a = tail.size / np.sum(np.log(s_hi / tail))
    se = a / np.sqrt(tail.size)
    grid = np.geomspace(s_hi / 10, s_hi, 20)
    curve = np.searchsorted(s, grid, side="right") / n
    if tail.size < min_events:
        advisory = "WidenWindow: too few small-gap events"
    return {"exponent": float(a), "se": float(se), "ci": (float(a - 1.96 * se), float(a + 1.96 * se)),
            "window": (float(s_hi / 10), float(s_hi)), "events": int(tail.size),
            "curve_s": grid, "curve_p": curve,
            "predicted": None if beta is None else beta + 1.0, "advisory": advisory}


# ----------------------------------------------------------------- universality


def universality_comparison(arch1, arch2, gam1, gam2, indices, eq1=None, eq2=None):
    """KS distance per index of the edge-normalized statistic across two ensembles."""
    if arch1.N != arch2.N or arch1.beta != arch2.beta:
        raise ConfigError("archives differ in N or beta")
    out = {}
    for j in indices:
        a = edge_statistic(arch1, gam1, j, eq1).values
        b = edge_statistic(arch2, gam2, j, eq2).values
        out[j] = ks_distance(a, b)
    return out
