"""Time the numba kernels against their pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on identical inputs in both flavours; results are checked
for agreement before timings are reported.  The first numba call (JIT
compilation) is excluded.
"""

import argparse
import time

import numpy as np

from reliaplace import _kernels


def _best_of(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _ok_tensor(rng, k, N):
    ok = rng.random((k, k, N, N)) < 0.85
    ok &= ok.transpose(1, 0, 3, 2)
    ok[:, :, np.arange(N), np.arange(N)] = True
    return ok


def cases(rng):
    member = rng.random((8, 24)) < 0.3
    member[np.arange(8), rng.integers(0, 24, 8)] = True
    probs = rng.uniform(0.5, 1.0, 24)
    yield "ie_union (H=8, 24 atoms)", (member, probs)
    small = member[:6, :20]
    small[np.arange(6), 0] = True
    yield "brute_force (20 atoms)", (small, probs[:20])
    yield "mc_count (200k x 24)", (member, probs, rng.random((200_000, 24)))

    k, N, E = 15, 30, 15
    demand = rng.integers(60, 130, k).astype(np.float64)
    cap = rng.integers(1000, 2000, N).astype(np.float64)
    prior = np.zeros((k, N), dtype=bool)
    node_avail = rng.choice([0.99, 0.999, 0.9995, 0.9999], N)
    node_srng = rng.random((N, E)) < 0.2
    lam = 1.0 - rng.choice([1e-6, 2e-6, 3e-6, 4e-6, 5e-6], E)
    ok = _ok_tensor(rng, k, N)
    T = rng.uniform(15, 25, (k, k))
    T = (T + T.T) / 2
    A = rng.choice([0.999, 0.9999], (k, k))
    A = np.maximum(A, A.T)
    yield "dsr_seed_runs (k=15, N=30)", (demand, cap, prior, node_avail, node_srng, lam, ok, T, A, 1.0)
    order = rng.permutation(N).astype(np.int64)
    vm_order = np.argsort(-demand, kind="stable").astype(np.int64)
    yield "fill_group (k=15, N=30)", (order, vm_order, demand, cap, prior, ok)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<30} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for label, inputs in cases(rng):
        name = label.split()[0]
        fast, slow = _kernels.NUMBA_KERNELS[name], _kernels.NUMPY_KERNELS[name]
        a, b = fast(*inputs), slow(*inputs)
        if not np.allclose(a, b, rtol=0, atol=1e-12):
            raise SystemExit(f"{name}: flavours disagree")
        t_fast = _best_of(fast, inputs, args.repeat)
        t_slow = _best_of(slow, inputs, args.repeat)
        print(f"{label:<30} {t_slow * 1e3:>10.2f} {t_fast * 1e3:>10.2f} {t_slow / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
