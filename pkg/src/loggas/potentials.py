"""External potentials V, the confinement Theta and the standing-assumption checks."""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConfigError, DomainError


def default_probe_grid():
    """401 Chebyshev points on [-10, 10] plus +-{20, 50, 100}."""
    k = np.arange(401)
    cheb = 10.0 * np.cos(np.pi * (k + 0.5) / 401)
    far = np.array([20.0, 50.0, 100.0])
    return np.sort(np.concatenate([cheb, far, -far]))


@dataclass(frozen=True, eq=False)
class Potential:
    """V with derivatives. Build with :func:`quadratic`, :func:`polynomial` or
    :func:`from_callables` rather than directly.

    ``coeffs`` (polynomial kinds) are listed lowest degree first. ``W`` is the
    convexity bound (V'' >= -2W), ``alpha`` the growth exponent and ``x0`` the
    onset beyond which V(x) > (2+alpha) ln(1+|x|) is checked.
    """
    kind: str
    coeffs: tuple = ()
    funcs: tuple = ()
    W: float = 0.0
    alpha: float = 1.0
    x0: float = 5.0
    probe_grid: np.ndarray = field(default_factory=default_probe_grid)

    @property
    def is_polynomial(self):
        return self.kind in ("quadratic", "polynomial")

    def poly(self, order=0):
        """Coefficient array of V^(order), lowest degree first."""
        if not self.is_polynomial:
            raise ConfigError("potential is not polynomial")
        c = np.asarray(self.coeffs, dtype=float)
        if order:
            c = P.polyder(c, order)
        return c if c.size else np.zeros(1)

    def __call__(self, x, order=0):
        return eval_potential(self, x, order)

    def describe(self):
        if self.is_polynomial:
            return {"kind": self.kind, "coeffs": [float(c) for c in self.coeffs]}
        return {"kind": self.kind}


def quadratic(c=0.5, **kw):
    """V(x) = c x^2 (the default is the Gaussian potential x^2/2)."""
    if not c > 0:
        raise ConfigError("quadratic coefficient must be positive")
    return Potential("quadratic", (0.0, 0.0, float(c)), **kw)


def polynomial(coeffs, **kw):
    c = [float(v) for v in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    deg = len(c) - 1
    if deg < 2 or deg % 2 or c[-1] <= 0:
        raise ConfigError("polynomial potential needs even degree >= 2 and positive leading coefficient")
    return Potential("polynomial", tuple(c), **kw)


def from_callables(V, dV, d2V, d3V=None, d4V=None, **kw):
    """General potential; V'' must be given explicitly."""
    if d2V is None:
        raise ConfigError("callable potentials must supply V''")
    return Potential("callable", (), (V, dV, d2V, d3V, d4V), **kw)


def from_config(spec):
    """Build from a config mapping ``{kind, coeffs, W?, alpha?, x0?}``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("potential must be a table with a 'kind' key")
    kw = {k: float(spec[k]) for k in ("W", "alpha", "x0") if k in spec}
    kind = spec["kind"]
    coeffs = spec.get("coeffs", [])
    if kind == "quadratic":
        return quadratic(*(coeffs[:1] or [0.5]), **kw)
    if kind == "polynomial":
        return polynomial(coeffs, **kw)
    raise ConfigError(f"unknown potential kind {kind!r}")


def eval_potential(p, x, order=0):
    """V(x), V'(x) or V''(x) (order 3, 4 for polynomial or when supplied)."""
    if order not in (0, 1, 2, 3, 4):
        raise DomainError("order must be in 0..4")
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("non-finite abscissa")
    if p.is_polynomial:
        out = P.polyval(xa, p.poly(order))
    else:
        f = p.funcs[order]
        if f is None:
            raise DomainError(f"derivative of order {order} not supplied")
        out = np.asarray(f(xa), dtype=float)
    return float(out) if np.ndim(out) == 0 else out


def confinement_theta(u, order=0):
    """Theta(u) = (u+1)^2 for u < -1 and 0 otherwise, or its derivatives."""
    u = np.asarray(u, dtype=float)
    m = u < -1.0
    if order == 0:
        out = np.where(m, (u + 1.0) ** 2, 0.0)
    elif order == 1:
        out = np.where(m, 2.0 * (u + 1.0), 0.0)
    elif order == 2:
        out = np.where(m, 2.0, 0.0)
    else:
        raise DomainError("order must be 0, 1 or 2")
    return float(out) if out.ndim == 0 else out


@dataclass
class AssumptionReport:
    inf_d2V: float
    convexity_bound: float
    convexity_ok: bool
    growth_margin: dict
    growth_ok: bool
    derivative_error: float
    derivative_ok: bool
    one_cut: object = None  # filled by a downstream equilibrium solve

    @property
    def ok(self):
        return self.convexity_ok and self.growth_ok and self.derivative_ok


def check_assumptions(p, fd_step=1e-5, fd_tol=1e-6):
    grid = np.asarray(p.probe_grid, dtype=float)
    if grid.size == 0:
        raise DomainError("empty probe grid")
    d2 = eval_potential(p, grid, 2)
    inf_d2 = float(np.min(d2))

    far = grid[np.abs(grid) >= p.x0]
    v = eval_potential(p, far, 0) if far.size else np.zeros(0)
    margin = v - (2.0 + p.alpha) * np.log1p(np.abs(far))
    margins = {float(x): float(m) for x, m in zip(far, margin)}

    inner = grid[np.abs(grid) <= 10.0]
    fd = (eval_potential(p, inner + fd_step) - eval_potential(p, inner - fd_step)) / (2 * fd_step)
    d1 = eval_potential(p, inner, 1)
    err = float(np.max(np.abs(fd - d1) / np.maximum(1.0, np.abs(d1)))) if inner.size else 0.0

    return AssumptionReport(
        inf_d2V=inf_d2,
        convexity_bound=-2.0 * p.W,
        convexity_ok=inf_d2 >= -2.0 * p.W,
        growth_margin=margins,
        growth_ok=bool(np.all(margin > 0)),
        derivative_error=err,
        derivative_ok=err <= fd_tol,
    )
