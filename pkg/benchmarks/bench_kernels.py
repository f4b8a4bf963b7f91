"""Time the compiled trial loops against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 1000x16 10000x64]
"""
import argparse
import sys
import timeit

import numpy as np

from mtswitch import _pure
from mtswitch.core import TaskSchedule
from mtswitch.experts import tune_params

try:
    from mtswitch import _kernels
except ImportError:
    _kernels = None


def _size(text):
    T, n = text.lower().split("x")
    return int(T), int(n)


def bench(T, n, s, repeat):
    rng = np.random.default_rng(0)
    tasks = rng.integers(s, size=T).astype(np.intp)
    losses = rng.random((T, n))
    p = tune_params(n, s, 4, max(1, T // 100), T)
    impls = {"pure": _pure}
    if _kernels is not None:
        impls["compiled"] = _kernels
    results = {}
    for name, impl in impls.items():
        def experts():
            pi = np.full(n, 1.0 / n)
            w = np.full((s, n), p.rho_hat)
            impl.experts_trace(tasks, losses, pi, w, p.eta, p.theta, p.phi)

        def mw():
            impl.mw_trace(losses, 0.05)

        results[name] = {
            "experts": min(timeit.repeat(experts, number=1, repeat=repeat)),
            "mw": min(timeit.repeat(mw, number=1, repeat=repeat)),
        }
    # agreement check so a fast but wrong build is caught here too
    if "compiled" in results:
        pi_a, w_a = np.full(n, 1.0 / n), np.full((s, n), p.rho_hat)
        pi_b, w_b = pi_a.copy(), w_a.copy()
        a, _ = _pure.experts_trace(tasks, losses, pi_a, w_a, p.eta, p.theta, p.phi)
        b, _ = _kernels.experts_trace(tasks, losses, pi_b, w_b, p.eta, p.theta, p.phi)
        assert np.allclose(a, b, atol=1e-10), "backends disagree"
    return results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", nargs="+", type=_size, default=[(1000, 16), (10000, 16), (10000, 256), (50000, 64)])
    ap.add_argument("--tasks", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; timing the pure backend only", file=sys.stderr)
    print(f"{'T':>7} {'n':>5} {'loop':>8} {'pure (s)':>10} {'compiled (s)':>13} {'speedup':>8}")
    for T, n in args.sizes:
        res = bench(T, n, args.tasks, args.repeat)
        for loop in ("experts", "mw"):
            pure = res["pure"][loop]
            comp = res.get("compiled", {}).get(loop)
            comp_s = f"{comp:13.4f}" if comp is not None else f"{'-':>13}"
            speed = f"{pure / comp:7.1f}x" if comp else f"{'-':>8}"
            print(f"{T:>7} {n:>5} {loop:>8} {pure:10.4f} {comp_s} {speed}")


if __name__ == "__main__":
    main()
