"""Stochastic Airy operator -d^2/dx^2 + x + (2/sqrt(beta)) b'(x) on [0, L].

Second-difference discretization with Dirichlet ends; white noise enters the
diagonal as independent Normal(0, dx) increments divided by dx.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError
from .parallel import chunk_bounds, map_chunks
from .rng import as_generator, stream

AIRY_ZERO_1 = 2.338107410459767  # -a_1, first zero of Ai


@dataclass(frozen=True)
class AiryDiscretization:
    L: float = 16.0
    n: int = 4000
    beta: float = 2.0

    def __post_init__(self):
        if self.L < 10:
            raise DomainError("domain cutoff L must be at least 10")
        if self.n < 100:
            raise DomainError("resolution floor dx <= 0.01 L needs n >= 100")
        if not self.beta > 0:
            raise DomainError("beta must be positive (use inf to switch off noise)")

    @property
    def dx(self):
        return self.L / self.n

    @property
    def grid(self):
        """Interior points x_i = i dx, i = 1..n-1."""
        return self.dx * np.arange(1, self.n)

    def matrix(self, rng=None):
        """(diagonal, off-diagonal) of the symmetric tridiagonal matrix."""
        dx = self.dx
        x = self.grid
        d = 2.0 / dx**2 + x
        if np.isfinite(self.beta):
            g = as_generator(rng)
            d = d + (2.0 / np.sqrt(self.beta)) * g.standard_normal(x.size) / np.sqrt(dx)
        e = np.full(x.size - 1, -1.0 / dx**2)
        return d, e


def sample_airy_eigs(d, m=1, rng=None):
    """The m smallest eigenvalues Lambda_1 <= ... <= Lambda_m (Sturm bisection)."""
    if not 1 <= m <= 10:
        raise DomainError("m must lie in 1..10")
    diag, off = d.matrix(rng)
    return kernels.tridiag_select(diag, off, np.arange(m, dtype=np.int64))


def airy_archive(d, n_draws, seed, m=1, threads=None, chunk=64):
    """(n_draws, m) array of independent draws; chunk c uses stream(seed, c)."""
    bounds = chunk_bounds(n_draws, chunk)

    def work(c):
        a, b = bounds[c]
        g = stream(seed, c)
        return np.array([sample_airy_eigs(d, m, g) for _ in range(b - a)]).reshape(b - a, m)

    return np.vstack(map_chunks(work, len(bounds), threads))


def tw_reference_cdf(beta, n_draws, d=None, seed=0, threads=None):
    """Sorted Lambda_1 draws with empirical CDF values, as a (n, 2) table."""
    if n_draws < 1000:
        raise DomainError("need at least 1000 draws")
    d = d or AiryDiscretization(beta=beta)
    if d.beta != beta:
        d = AiryDiscretization(d.L, d.n, beta)
    lam = np.sort(airy_archive(d, n_draws, seed, 1, threads)[:, 0])
    return np.column_stack([lam, np.arange(1, n_draws + 1) / n_draws])
