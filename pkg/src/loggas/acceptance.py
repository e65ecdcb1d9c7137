"""The fourteen acceptance checks, each at a stated scale and tolerance.

``level="quick"`` divides sample counts by four and widens every tolerance by
a factor 1.5. Seeds are fixed per check so every run is reproducible.
"""
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import dynamics, equilibrium, potentials, samplers, sobolev, statistics
from .airy import AIRY_ZERO_1, AiryDiscretization, airy_archive, sample_airy_eigs


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    value: str
    tolerance: str
    runtime: float
    budget: float

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.number:2d} {self.name}: {self.value} (tolerance {self.tolerance}; "
                f"{self.runtime:.1f}s of {self.budget:.0f}s)")


def _scale(level):
    if level not in ("quick", "full"):
        raise ValueError("level is 'quick' or 'full'")
    return (4, 1.5) if level == "quick" else (1, 1.0)


def _semicircle():
    p = potentials.quadratic()
    return p, equilibrium.solve_equilibrium(p)


def c01_equilibrium(level):
    _, w = _scale(level)
    p, m = _semicircle()
    x = np.linspace(-2, 2, 401)
    err = float(np.max(np.abs(m.density(x) - np.sqrt(np.maximum(4 - x * x, 0)) / (2 * np.pi))))
    de = max(abs(m.A + 2), abs(m.B - 2))
    ok = de < 1e-10 * w and err < 1e-8 * w
    return ok, f"edge error {de:.1e}, density error {err:.1e}", f"{1e-10 * w:.1e} / {1e-8 * w:.1e}"


def c02_cross_sampler(level):
    d, w = _scale(level)
    n = 2000 // d
    p, _ = _semicircle()
    T = samplers.tridiag_archive(50, 2.0, n, 21, select=[50])
    M = samplers.sample_loggas_mala(p, 50, 2.0, n, samplers.MalaSettings(burn_in=5000, thin=100), rng=22)
    ks = statistics.ks_distance(T.column(50), M.column(50))
    return ks < 0.03 * w, f"KS {ks:.4f} (acceptance {M.acceptance_rate:.3f})", f"< {0.03 * w:.3f}"


def c03_edge_universality(level):
    d, w = _scale(level)
    n = 2000 // d
    p, m = _semicircle()
    q = potentials.polynomial([0, 0, 0, 0, 0.25])
    mq = equilibrium.solve_equilibrium(q)
    T = samplers.tridiag_archive(500, 2.0, n, 31, select=[1, 2, 3])
    M = samplers.sample_loggas_mala(q, 500, 2.0, n, samplers.MalaSettings(burn_in=5000, thin=50), rng=32)
    g1, g2 = equilibrium.classical_locations(m, 500), equilibrium.classical_locations(mq, 500)
    ks = [statistics.ks_distance(statistics.edge_statistic(T, g1, j, m).values,
                                 statistics.edge_statistic(M, g2, j, mq).values) for j in (1, 2, 3)]
    return max(ks) < 0.05 * w, "KS " + ", ".join(f"{k:.4f}" for k in ks), f"< {0.05 * w:.3f}"


def c04_wigner(level):
    d, w = _scale(level)
    n = 2000 // d
    _, m = _semicircle()
    W = samplers.wigner_archive(samplers.two_band_profile(400), n, 41, select=[1])
    T = samplers.tridiag_archive(400, 1.0, n, 42, select=[1])
    g = equilibrium.classical_locations(m, 400)
    ks = statistics.ks_distance(statistics.edge_statistic(W, g, 1, m).values,
                                statistics.edge_statistic(T, g, 1, m).values)
    return ks < 0.05 * w, f"KS {ks:.4f}", f"< {0.05 * w:.3f}"


def c05_tracy_widom(level):
    d, w = _scale(level)
    n = 4000 // d
    zero = sample_airy_eigs(AiryDiscretization(20.0, 4000, np.inf), 1)[0]
    A = airy_archive(AiryDiscretization(16.0, 4000, 2.0), n, 51)[:, 0]
    G = samplers.tridiag_archive(800, 2.0, n, 52, select=[800])
    ks = statistics.ks_distance(-A, 800 ** (2 / 3) * (G.column(800) - 2))
    zerr = abs(zero - AIRY_ZERO_1)
    return (ks < 0.05 * w and zerr < 1e-3 * w,
            f"KS {ks:.4f}, Airy zero {zero:.6f} (error {zerr:.1e})", f"< {0.05 * w:.3f} / {1e-3 * w:.1e}")


def c06_gaussian(level):
    d, w = _scale(level)
    _, m = _semicircle()
    g = equilibrium.classical_locations(m, 2000)
    G = samplers.tridiag_archive(2000, 2.0, 5000 // d, 61, select=[64])
    r = statistics.gaussian_fluctuation_test(G, g, 64, 2.0, m)
    ok = abs(r["mean"]) < 0.1 * w and abs(r["var"] - 1) < 0.15 * w and r["ks"] < 0.05 * w
    return (ok, f"mean {r['mean']:.3f}, var {r['var']:.3f}, KS {r['ks']:.3f}",
            f"|mean| < {0.1 * w:.3g}, |var-1| < {0.15 * w:.3g}, KS < {0.05 * w:.3g}")


def c07_rigidity(level):
    d, w = _scale(level)
    _, m = _semicircle()
    g = equilibrium.classical_locations(m, 1000)
    G = samplers.tridiag_archive(1000, 2.0, 500 // d, 71)
    r = statistics.rigidity_report(G, g, 0.2)
    return (r.max_fraction < 0.01 * w, f"max exceedance {r.max_fraction:.3f} at k={r.worst_index}",
            f"< {0.01 * w:.3f}")


def c08_repulsion(level):
    d, w = _scale(level)
    _, m = _semicircle()
    g = equilibrium.classical_locations(m, 200)
    out, ok = [], True
    for beta in (2.0, 1.0):
        A = samplers.tridiag_archive(200, beta, 1000 // d, 80 + int(beta))
        r = statistics.level_repulsion_fit(statistics.normalized_gaps(A, g, np.arange(50, 150)), beta)
        lo, hi = beta + 1 - 0.3 * w, beta + 1 + 0.3 * w
        ok &= lo <= r["exponent"] <= hi
        out.append(f"beta={beta:g}: {r['exponent']:.3f}")
    return ok, ", ".join(out), f"beta+1 +- {0.3 * w:.2f}"


def c09_decay(level):
    d, w = _scale(level)
    _, m = _semicircle()
    g = equilibrium.classical_locations(m, 4000)
    A = samplers.tridiag_archive(4000, 2.0, 10000 // d, 91, select=[4, 32, 128, 512])
    r = statistics.edge_covariance_decay(A, g, 4, [32, 128, 512], m)
    slope = statistics.fit_loglog_slope(r["j"], r["cov"])
    lo, hi = -1 / 3 - (0.67 - 1 / 3) * w, -1 / 3 + (1 / 3 - 0.17) * w
    return (bool(lo <= slope <= hi), f"slope {slope:.3f} (cov " + ", ".join(f"{c:.4f}" for c in r["cov"]) + ")",
            f"[{lo:.3f}, {hi:.3f}]")


def c10_loop(level):
    d, w = _scale(level)
    p, _ = _semicircle()
    A = samplers.tridiag_archive(200, 2.0, 10000 // d, 101)
    r = statistics.loop_equation_residual(A, p, 2.0, 1 + 0.5j)
    ok = abs(r["residual"]) <= 3 * w * r["se"]
    return ok, f"|residual| {abs(r['residual']):.2e}, SE {r['se']:.2e}", f"<= {3 * w:.1f} SE"


def c11_random_walk(level):
    d, w = _scale(level)
    p = potentials.quadratic()
    worst, ok = 0.0, True
    for K in (2, 4):
        spec = samplers.local_spec_at_classical(p, 64, K, 0.1, beta=2.0)
        rep = dynamics.check_rw_representation(spec, dynamics.default_pairs(K), 1.0, 100000 // d,
                                               rng=110 + K, dt=0.01)
        z = rep.gap / (rep.se_lhs + rep.se_rhs)
        worst = max(worst, float(z.max()))
        ok &= bool(np.all(rep.within(3.0 * w)))
    return ok, f"max |lhs-rhs|/(se_lhs+se_rhs) {worst:.2f}", f"<= {3 * w:.1f}"


def c12_sobolev(level):
    d, w = _scale(level)
    restarts = 32 // d
    c = {K: sobolev.estimate_first_constant(sobolev.RayleighProblem(K, 0.1), restarts, rng=120 + K)[0]
         for K in (128, 256, 512)}
    ratios = [c[256] / c[128], c[512] / c[256]]
    vals = []
    for M in (64, 256, 1024):
        R = sobolev.estimate_second_constant(M, restarts, rng=121)["R"]
        vals.append(np.log(R) / np.sqrt(np.log(M)))
    spread = max(abs(v) for v in vals) / min(abs(v) for v in vals)
    same_sign = all(np.sign(v) == np.sign(vals[0]) for v in vals)
    floor = 1 - 0.2 * w
    ok = all(v > 0 for v in c.values()) and min(ratios) >= floor and same_sign and spread < 2 * w
    return (ok, f"c_hat {c[128]:.3f}, {c[256]:.3f}, {c[512]:.3f}; ratios {ratios[0]:.3f}, {ratios[1]:.3f}; "
            f"lnR/sqrt(lnM) " + ", ".join(f"{v:.3f}" for v in vals),
            f"ratio >= {floor:.2f}, spread < {2 * w:.1f}")


def c13_heat(level):
    _, w = _scale(level)
    r = dynamics.check_heat_decay(64)
    return r["sup_ratio"] <= 10 * w, f"sup ratio to envelope {r['sup_ratio']:.4f}", f"<= {10 * w:.0f}"


def c14_determinism(level):
    from .harness import run_experiment
    from .config import load_config
    cases = [
        {"experiment": "equilibrium"},
        {"experiment": "sample", "csv": True, "sample": {"N": 30, "n_samples": 200}},
        {"experiment": "sample", "csv": True, "sample": {"sampler": "mala", "N": 20, "n_samples": 100,
                                                         "burn_in": 500}},
        {"experiment": "stats", "stats": {"kind": "loop", "N": 50, "n_samples": 400}},
    ]
    mismatched = []
    with tempfile.TemporaryDirectory() as tmp:
        for k, case in enumerate(cases):
            sums = []
            for rep in range(2):
                cfg = load_config(overrides=dict(case, seed=140 + k, out=f"{tmp}/c{k}_{rep}"), environ={})
                man = run_experiment(cfg)
                sums.append({n: h for n, h in man.outputs.items() if n.endswith(".csv")})
            if sums[0] != sums[1] or not sums[0]:
                mismatched.append(case["experiment"])
    return (not mismatched, f"{len(cases)} experiments re-run, mismatches: {mismatched or 'none'}",
            "identical CSV bytes")


CRITERIA = {
    1: ("equilibrium exactness", c01_equilibrium, 1),
    2: ("cross-sampler oracle", c02_cross_sampler, 300),
    3: ("edge universality", c03_edge_universality, 1800),
    4: ("generalized Wigner edge", c04_wigner, 1200),
    5: ("Tracy-Widom consistency", c05_tracy_widom, 900),
    6: ("Gaussian fluctuations", c06_gaussian, 600),
    7: ("rigidity", c07_rigidity, 300),
    8: ("level repulsion exponent", c08_repulsion, 600),
    9: ("correlation decay", c09_decay, 1800),
    10: ("loop equation", c10_loop, 300),
    11: ("random-walk representation", c11_random_walk, 1200),
    12: ("Sobolev constants", c12_sobolev, 900),
    13: ("heat-kernel decay", c13_heat, 120),
    14: ("determinism", c14_determinism, 600),
}


def run_criterion(number, level="full"):
    name, fn, budget = CRITERIA[number]
    t0 = time.perf_counter()
    ok, value, tol = fn(level)
    dt = time.perf_counter() - t0
    return CriterionResult(number, name, bool(ok) and dt < budget, value, tol, dt, budget)


def acceptance_suite(level="quick", criteria=None, echo=None):
    """Run the selected checks (all by default); failures are report rows."""
    rows = []
    for k in criteria or sorted(CRITERIA):
        r = run_criterion(k, level)
        rows.append(r)
        if echo:
            echo(r.line())
    return rows
