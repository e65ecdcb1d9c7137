"""One-cut equilibrium measures.

Ansatz rho(x) = (1/2pi) sqrt((x-A)(B-x)) h(x) on [A, B]. For given endpoints
the regular factor is the Chebyshev-weighted divided-difference mean

    h(x) = (1/pi) int (V'(x) - V'(y)) / ((x-y) sqrt((y-A)(B-y))) dy,

evaluated by Gauss-Chebyshev quadrature. Endpoints solve
mean V'(y_k) = 0 and (1/2) mean y_k V'(y_k) = 1 over the same nodes
(zero net force and unit mass).
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as P

from .errors import DomainError, NotOneCut, SolveDiverged
from .potentials import eval_potential


def _cheb_nodes(n):
    """Gauss-Chebyshev (first kind) angles and nodes on [-1, 1]."""
    th = np.pi * (np.arange(n) + 0.5) / n
    return th, np.cos(th)


def _endpoint_residual(p, A, B, t):
    c, r = 0.5 * (A + B), 0.5 * (B - A)
    y = c + r * t
    v1 = eval_potential(p, y, 1)
    v2 = eval_potential(p, y, 2)
    F = np.array([v1.mean(), 0.5 * (y * v1).mean() - 1.0])
    # d y / dA = (1 - t)/2, d y / dB = (1 + t)/2
    dA, dB = 0.5 * (1 - t), 0.5 * (1 + t)
    J = np.array([
        [(v2 * dA).mean(), (v2 * dB).mean()],
        [0.5 * ((v1 + y * v2) * dA).mean(), 0.5 * ((v1 + y * v2) * dB).mean()],
    ])
    return F, J


def _initial_endpoints(p, t):
    grid = np.linspace(-10, 10, 2001)
    m = float(grid[np.argmin(eval_potential(p, grid))])
    d2 = float(eval_potential(p, m, 2))
    w = 2.0 / np.sqrt(d2) if d2 > 1e-8 else 1.0

    def mass(w):
        y = m + w * t
        return 0.5 * np.mean(y * eval_potential(p, y, 1)) - 1.0

    # symmetric bracket around the minimiser, then bisection on the mass condition
    lo, hi = w, w
    while mass(lo) > 0 and lo > 1e-8:
        lo *= 0.5
    while mass(hi) < 0 and hi < 1e8:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mass(mid) < 0:
            lo = mid
        else:
            hi = mid
    w = 0.5 * (lo + hi)
    return m - w, m + w


@dataclass
class EquilibriumMeasure:
    potential: object
    A: float
    B: float
    order: int
    h_cheb: object            # numpy Chebyshev series of h on [A, B]
    s_A: float
    s_B: float
    mass_defect: float
    newton_iterations: int = 0
    cdf_grid: np.ndarray = field(default=None, repr=False)
    _nodes: np.ndarray = field(default=None, repr=False)

    @property
    def center(self):
        return 0.5 * (self.A + self.B)

    @property
    def radius(self):
        return 0.5 * (self.B - self.A)

    @property
    def h_coeffs(self):
        return self.h_cheb.coef

    def h(self, x):
        """Regular factor, exact divided-difference mean (valid on the real line)."""
        x = np.asarray(x, dtype=float)
        y = self.center + self.radius * self._nodes
        d1x = np.asarray(eval_potential(self.potential, x, 1))
        d1y = eval_potential(self.potential, y, 1)
        diff = x[..., None] - y
        near = np.abs(diff) < 1e-12 * max(1.0, self.radius)
        num = d1x[..., None] - d1y
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(near, 0.0, num / np.where(near, 1.0, diff))
        if near.any():
            q = np.where(near, eval_potential(self.potential, np.broadcast_to(y, diff.shape), 2), q)
        out = q.mean(axis=-1)
        return float(out) if out.ndim == 0 else out

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.A) & (x < self.B)
        root = np.sqrt(np.clip((x - self.A) * (self.B - x), 0.0, None))
        out = np.where(inside, root * self.h_cheb(x) / (2 * np.pi), 0.0)
        return float(out) if out.ndim == 0 else out

    # -- CDF in the angle variable x = c - r cos(phi), phi in [0, pi]
    def _cdf_phi(self, phi):
        a = self.h_cheb.coef
        r = self.radius
        phi = np.asarray(phi, dtype=float)

        def S(m):
            m = abs(m)
            return phi if m == 0 else np.sin(m * phi) / m

        tot = np.zeros_like(phi)
        for k, ak in enumerate(a):
            # int_0^phi sin^2 cos(k s) ds; T_k(-cos) = (-1)^k cos(k .)
            term = 0.5 * S(k) - 0.25 * S(k + 2) - 0.25 * S(k - 2)
            tot = tot + ((-1) ** k) * ak * term
        return r * r / (2 * np.pi) * tot

    def _phi(self, x):
        t = (np.asarray(x, dtype=float) - self.center) / self.radius
        return np.arccos(np.clip(-t, -1.0, 1.0))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.clip(self._cdf_phi(self._phi(x)), 0.0, 1.0)
        out = np.where(x <= self.A, 0.0, np.where(x >= self.B, 1.0, out))
        return float(out) if out.ndim == 0 else out

    def inverse_cdf(self, q):
        """x with F(x) = q, by bisection in the angle variable then a Newton step."""
        q = np.asarray(q, dtype=float)
        lo = np.zeros_like(q)
        hi = np.full_like(q, np.pi)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self._cdf_phi(mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        x = self.center - self.radius * np.cos(0.5 * (lo + hi))
        rho = self.density(x)
        ok = rho > 1e-300
        x = np.where(ok, x - (self.cdf(x) - q) / np.where(ok, rho, 1.0), x)
        x = np.clip(x, self.A, self.B)
        x = np.where(q <= 0, self.A, np.where(q >= 1, self.B, x))
        return float(x) if x.ndim == 0 else x

    def edge_rescale(self, x, edge="A"):
        """Affine map making the square-root constant at the edge equal to 1:
        x -> s_A^{2/3} (x - A), or s_B^{2/3} (B - x) for the upper edge."""
        x = np.asarray(x, dtype=float)
        if edge == "A":
            return self.s_A ** (2.0 / 3.0) * (x - self.A)
        return self.s_B ** (2.0 / 3.0) * (self.B - x)

    def residual(self, n_nodes=33):
        """max |V'(x)/2 - PV int rho(y)/(x-y) dy| at interior Chebyshev nodes.

        Uses (1/pi) PV int sqrt(1-s^2) U_m(s)/(t-s) ds = T_{m+1}(t) with h
        re-expanded in Chebyshev polynomials of the second kind.
        """
        a = self.h_cheb.coef
        # T_0 = U_0, T_1 = U_1/2, T_k = (U_k - U_{k-2})/2
        b = np.zeros(len(a))
        for k, ak in enumerate(a):
            if k == 0:
                b[0] += ak
            elif k == 1:
                b[1] += 0.5 * ak
            else:
                b[k] += 0.5 * ak
                b[k - 2] -= 0.5 * ak
        t = np.cos(np.pi * (np.arange(n_nodes) + 0.5) / n_nodes)
        tcoef = np.concatenate([[0.0], b])  # sum b_m T_{m+1}
        hilbert = 0.5 * self.radius * C.chebval(t, tcoef)
        x = self.center + self.radius * t
        return float(np.max(np.abs(0.5 * eval_potential(self.potential, x, 1) - hilbert)))


def solve_equilibrium(p, tol=1e-12, order=128, max_iter=100):
    if not 1e-14 <= tol <= 1e-6:
        raise DomainError("tol must lie in [1e-14, 1e-6]")
    _, t = _cheb_nodes(order)
    A, B = _initial_endpoints(p, t)
    F, J = _endpoint_residual(p, A, B, t)
    it = 0
    for it in range(1, max_iter + 1):
        step = np.linalg.solve(J, -F)
        lam = 1.0
        norm0 = np.linalg.norm(F)
        while True:
            A1, B1 = A + lam * step[0], B + lam * step[1]
            if B1 > A1:
                F1, J1 = _endpoint_residual(p, A1, B1, t)
                if np.linalg.norm(F1) <= norm0 or lam < 1e-6:
                    break
            lam *= 0.5
            if lam < 1e-12:
                raise SolveDiverged("endpoint Newton stalled")
        A, B, F, J = A1, B1, F1, J1
        scale = max(1.0, abs(A), abs(B))
        if np.linalg.norm(F) < 1e-15 * scale or np.max(np.abs(lam * step)) < 1e-15 * scale:
            break
    else:
        raise SolveDiverged(f"no convergence in {max_iter} Newton iterations")

    m = EquilibriumMeasure(p, float(A), float(B), order, None, 0.0, 0.0, 0.0,
                           newton_iterations=it, _nodes=t)
    m.h_cheb = C.Chebyshev.interpolate(m.h, order - 1, domain=[A, B])
    probe = np.concatenate([[A, B], np.linspace(A, B, 513)])
    hv = m.h(probe)
    if np.any(hv <= 0):
        raise NotOneCut("regular factor h is not positive on the support")
    m.s_A = float(np.sqrt(B - A) * m.h(A) / (2 * np.pi))
    m.s_B = float(np.sqrt(B - A) * m.h(B) / (2 * np.pi))
    m.mass_defect = float(abs(m._cdf_phi(np.pi) - 1.0))
    xs = np.linspace(A, B, 4096)
    m.cdf_grid = np.column_stack([xs, m.cdf(xs)])
    if m.residual() > max(tol, 1e-10) * max(1.0, float(np.max(np.abs(eval_potential(p, xs, 1))))):
        raise SolveDiverged("equilibrium residual above tolerance")
    return m


@dataclass
class ClassicalLocations:
    gamma: np.ndarray
    N: int


def classical_locations(m, N):
    """gamma_k = F^{-1}(k/N), k = 1..N (gamma_N = B)."""
    if N < 1:
        raise DomainError("N must be positive")
    g = m.inverse_cdf(np.arange(1, N + 1) / N)
    g = np.atleast_1d(np.asarray(g, dtype=float))
    g[-1] = m.B
    return ClassicalLocations(np.maximum.accumulate(g), int(N))


def quantiles_alpha(m, y_plus, K):
    """alpha_j with F(alpha_j) = j/(K+1) F(y_plus), j = 1..K."""
    if not y_plus > m.A:
        raise DomainError("y_plus must exceed the lower edge")
    target = np.arange(1, K + 1) / (K + 1) * m.cdf(y_plus)
    return np.atleast_1d(m.inverse_cdf(target))


def stieltjes_equilibrium(m, z, n=2048):
    """m(z) = int rho(s)/(z-s) ds by Gauss-Chebyshev (second kind) quadrature."""
    z = complex(z)
    if z.imag == 0:
        raise DomainError("z must be off the real axis")
    th = np.pi * np.arange(1, n + 1) / (n + 1)
    s = m.center + m.radius * np.cos(th)
    w = np.pi / (n + 1) * np.sin(th) ** 2 * m.radius ** 2
    return complex(np.sum(w * m.h_cheb(s) / (2 * np.pi * (z - s))))


def stieltjes_closed_form(m, z):
    """(V'(z) - h(z) sqrt((z-A)(z-B)))/2 for polynomial V, branch ~ 1/z."""
    z = complex(z)
    c1 = m.potential.poly(1)
    y = m.center + m.radius * m._nodes
    d1 = P.polyval(z, c1)
    hz = np.mean((d1 - P.polyval(y, c1)) / (z - y))
    root = np.sqrt(z - m.A) * np.sqrt(z - m.B)
    return complex(0.5 * (d1 - hz * root))
