"""Time the numba kernels against the numpy fallback on identical inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each case runs once untimed (compilation), then the best of ``--repeat``
timed runs is reported together with the largest difference in output.
"""
import argparse
import time

import numpy as np

from loggas import kernels, potentials, samplers
from loggas.rng import stream


def case_tridiag_select(k):
    g = stream(1)
    N = 2000
    d, e = g.standard_normal(N), np.abs(g.standard_normal(N - 1)) + 0.1
    idx = np.arange(0, N, 100, dtype=np.int64)
    return lambda: k.tridiag_select(d, e, idx)


def case_dense_eigvalsh(k):
    g = stream(2)
    a = g.standard_normal((200, 200))
    a = (a + a.T) / 2
    return lambda: k.dense_eigvalsh(a.copy())


def case_mala(k):
    N = 100
    p = potentials.quadratic()
    x0 = np.sort(stream(3).standard_normal(N)) * 0.5 + np.linspace(-2, 2, N)
    L = np.ascontiguousarray(samplers.preconditioner_factor(samplers.loggas_hessian(x0, p, 2.0, N), "hessian"))
    g = stream(4)
    z, u = g.standard_normal((2000, N)), g.random(2000)

    def run():
        x, grad = x0.copy(), np.empty(N)
        lp = k.loggas_logp_grad(x, 2.0, float(N), p.poly(0), p.poly(1), grad)
        out = np.empty((200, N))
        k.mala_loggas_run(x, grad, L.T @ grad, lp, 2.0, float(N), p.poly(0), p.poly(1), L,
                          np.log(0.3), z, u, False, 0.574, 0.0, 10, out)
        return out
    return run


def case_local_em(k):
    spec = samplers.local_spec_at_classical(potentials.quadratic(), 64, 4, 0.1)
    args = spec.kernel_args(with_d2=True)
    x0 = spec.initial_micro()
    P = 4096
    noise = 0.1 * stream(5).standard_normal((20, P, 4))

    def run():
        X = np.tile(x0, (P, 1))
        V = np.broadcast_to(np.eye(4), (P, 4, 4)).copy()
        failed = np.zeros(P, dtype=np.bool_)
        for s in range(20):
            k.local_em_batch(X, V, 0.01, noise[s], *args, True, failed)
        return X
    return run


def case_dbm(k):
    N = 200
    p = potentials.quadratic()
    lam0 = np.linspace(-2, 2, N)
    noise = np.sqrt(1e-4 / N) * stream(6).standard_normal((2000, N))

    def run():
        lam = lam0.copy()
        k.dbm_run(lam, 2.0, float(N), p.poly(1), 1e-4, noise, 0)
        return lam
    return run


CASES = [("tridiag_select N=2000", case_tridiag_select), ("dense_eigvalsh N=200", case_dense_eigvalsh),
         ("mala_loggas_run N=100 x2000", case_mala), ("local_em_batch 4096x20", case_local_em),
         ("dbm_run N=200 x2000", case_dbm)]


def best_time(fn, repeat):
    out = fn()
    ts = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t)
    return min(ts), np.asarray(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args(argv)
    nb, npk = kernels.get("numba"), kernels.get("numpy")
    print(f"{'kernel':30s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, case in CASES:
        t1, o1 = best_time(case(nb), a.repeat)
        t2, o2 = best_time(case(npk), a.repeat)
        print(f"{name:30s} {t1:11.4f} {t2:11.4f} {t2 / t1:8.1f} {np.max(np.abs(o1 - o2)):10.2e}")


if __name__ == "__main__":
    main()
