"""Both kernel flavours must agree with each other and with plain Python."""

import os
import subprocess
import sys
from itertools import product

import numpy as np
import pytest

from reliaplace import _kernels


def _random_member(rng, H, n):
    member = rng.random((H, n)) < 0.4
    member[np.arange(H), rng.integers(0, n, H)] = True
    return member


def _reference_union(member, probs):
    total = 0.0
    for state in product([False, True], repeat=probs.shape[0]):
        state = np.array(state)
        if any(state[member[h]].all() for h in range(member.shape[0])):
            total += np.prod(np.where(state, probs, 1 - probs))
    return total


@pytest.mark.parametrize("seed", range(5))
def test_union_kernels(kernels, seed):
    rng = np.random.default_rng(seed)
    member = _random_member(rng, int(rng.integers(1, 7)), int(rng.integers(1, 11)))
    probs = rng.uniform(0.05, 1.0, member.shape[1])
    ref = _reference_union(member, probs)
    assert abs(kernels["ie_union"](member, probs) - ref) <= 1e-12
    assert abs(kernels["brute_force"](member, probs) - ref) <= 1e-12


def test_mc_counts_identical_across_flavours():
    if not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    rng = np.random.default_rng(3)
    member = _random_member(rng, 5, 9)
    probs = rng.uniform(0.3, 1.0, 9)
    uniforms = rng.random((20_000, 9))
    a = _kernels.NUMBA_KERNELS["mc_count"](member, probs, uniforms)
    b = _kernels.NUMPY_KERNELS["mc_count"](member, probs, uniforms)
    assert a == b


def _dsr_inputs(seed, k=5, N=7, events=3):
    rng = np.random.default_rng(seed)
    demand = rng.integers(20, 80, k).astype(np.float64)
    cap = rng.integers(50, 200, N).astype(np.float64)
    prior = rng.random((k, N)) < 0.1
    node_avail = rng.choice([0.99, 0.999, 0.9999], N)
    node_srng = rng.random((N, events)) < 0.3
    lam = rng.choice([0.999, 0.9999], events)
    ok = rng.random((k, k, N, N)) < 0.8
    ok = ok & ok.transpose(1, 0, 3, 2)
    for n in range(N):
        ok[:, :, n, n] = True
    T = rng.uniform(10, 30, (k, k))
    T = (T + T.T) / 2
    A = rng.choice([0.999, 0.9999], (k, k))
    A = np.maximum(A, A.T)
    return demand, cap, prior, node_avail, node_srng, lam, ok, T, A, 1.0


@pytest.mark.parametrize("seed", range(10))
def test_dsr_and_fill_kernels_agree(seed):
    args = _dsr_inputs(seed)
    ref_runs = _kernels._dsr_seed_runs_loop(*args)
    assert np.array_equal(_kernels.NUMPY_KERNELS["dsr_seed_runs"](*args), ref_runs)
    if _kernels.HAVE_NUMBA:
        assert np.array_equal(_kernels.NUMBA_KERNELS["dsr_seed_runs"](*args), ref_runs)
    demand, cap, prior, _, _, _, ok, _, _, _ = args
    rng = np.random.default_rng(seed)
    order = rng.permutation(cap.shape[0]).astype(np.int64)
    vm_order = np.argsort(-demand, kind="stable").astype(np.int64)
    ref = _kernels._fill_group_loop(order, vm_order, demand, cap, prior, ok)
    assert np.array_equal(_kernels.NUMPY_KERNELS["fill_group"](order, vm_order, demand, cap, prior, ok), ref)
    if _kernels.HAVE_NUMBA:
        assert np.array_equal(_kernels.NUMBA_KERNELS["fill_group"](order, vm_order, demand, cap, prior, ok), ref)


def test_env_flag_selects_numpy():
    code = "from reliaplace import _kernels; print(_kernels.BACKEND)"
    env = dict(os.environ, RELIAPLACE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "numpy"


def test_benchmark_script_runs():
    if not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    script = os.path.join(os.path.dirname(__file__), os.pardir, "benchmarks", "bench_kernels.py")
    out = subprocess.run([sys.executable, script, "--repeat", "1"], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "dsr_seed_runs" in out.stdout


def test_warmup_is_idempotent():
    _kernels.warmup()
    _kernels.warmup()
