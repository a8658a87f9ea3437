"""Hot numeric loops, each in a numba flavour and a plain numpy flavour.

The numba versions are used when numba imports and the environment variable
``RELIAPLACE_DISABLE_NUMBA`` is unset (or set to ``0``).  Both flavours take
the same arrays and return the same values; ``benchmarks/bench_kernels.py``
times them side by side.

Array conventions
-----------------
member : bool[H, n]   group ``h`` contains atom ``a``
probs  : float64[n]   up probability of each atom
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("RELIAPLACE_DISABLE_NUMBA", "0").lower() in ("", "0", "false", "no")

_SUBSET_CHUNK = 1 << 14
_STATE_ROWS = 256


def _njit(func):
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


# ---------------------------------------------------------------------------
# inclusion-exclusion over groups

def _ie_union_loop(member, probs):
    H, n = member.shape
    total = 0.0
    union = np.zeros(n, dtype=np.bool_)
    for s in range(1, 1 << H):
        union[:] = False
        size = 0
        for h in range(H):
            if (s >> h) & 1:
                size += 1
                for a in range(n):
                    if member[h, a]:
                        union[a] = True
        term = 1.0
        for a in range(n):
            if union[a]:
                term *= probs[a]
        if size % 2 == 1:
            total += term
        else:
            total -= term
    return total


def _ie_union_numpy(member, probs):
    H, n = member.shape
    weights = member.astype(np.float64)
    shifts = np.arange(H)
    total = 0.0
    for start in range(1, 1 << H, _SUBSET_CHUNK):
        subsets = np.arange(start, min(start + _SUBSET_CHUNK, 1 << H), dtype=np.int64)
        bits = (subsets[:, None] >> shifts) & 1
        union = (bits.astype(np.float64) @ weights) > 0
        terms = np.prod(np.where(union, probs, 1.0), axis=1)
        signs = np.where(bits.sum(axis=1) % 2 == 1, 1.0, -1.0)
        total += float(signs @ terms)
    return total


# ---------------------------------------------------------------------------
# exhaustive enumeration of atom states

def _half_tables(probs):
    n = probs.shape[0]
    lo = n // 2
    return lo, _state_table(probs[:lo]), _state_table(probs[lo:])


def _state_table(p):
    # table[s] = P(atoms with bit set are up, the others down)
    table = np.ones(1 << p.shape[0])
    for a in range(p.shape[0]):
        width = 1 << a
        table[width:2 * width] = table[:width] * p[a]
        table[:width] = table[:width] * (1.0 - p[a])
    return table


def _group_masks(member):
    H, n = member.shape
    masks = np.zeros(H, dtype=np.int64)
    for h in range(H):
        for a in range(n):
            if member[h, a]:
                masks[h] |= np.int64(1) << np.int64(a)
    return masks


def _brute_force_loop(masks, lo, low_table, high_table):
    H = masks.shape[0]
    n_low = low_table.shape[0]
    total = 0.0
    comp = 0.0
    for hi in range(high_table.shape[0]):
        inner = 0.0
        for low in range(n_low):
            state = (hi << lo) | low
            for h in range(H):
                if (state & masks[h]) == masks[h]:
                    inner += low_table[low]
                    break
        # Kahan step on the outer sum
        y = inner * high_table[hi] - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def _brute_force_numba(member, probs):
    lo, low_table, high_table = _half_tables(probs)
    return _brute_force_loop_nb(_group_masks(member), lo, low_table, high_table)


def _brute_force_numpy(member, probs):
    lo, low_table, high_table = _half_tables(probs)
    masks = _group_masks(member)
    lows = np.arange(low_table.shape[0], dtype=np.int64)
    total = 0.0
    for start in range(0, high_table.shape[0], _STATE_ROWS):
        highs = np.arange(start, min(start + _STATE_ROWS, high_table.shape[0]), dtype=np.int64)
        states = (highs[:, None] << lo) | lows[None, :]
        up = np.zeros(states.shape, dtype=bool)
        for m in masks:
            up |= (states & m) == m
        inner = up.astype(np.float64) @ low_table
        total += float(inner @ high_table[highs])
    return total


# ---------------------------------------------------------------------------
# Monte Carlo counting on pre-drawn uniforms

def _mc_count_loop(member, probs, uniforms):
    H, n = member.shape
    hits = 0
    for i in range(uniforms.shape[0]):
        for h in range(H):
            ok = True
            for a in range(n):
                if member[h, a] and uniforms[i, a] >= probs[a]:
                    ok = False
                    break
            if ok:
                hits += 1
                break
    return hits


def _mc_count_numpy(member, probs, uniforms):
    up = uniforms < probs
    any_up = np.zeros(uniforms.shape[0], dtype=bool)
    for h in range(member.shape[0]):
        any_up |= up[:, member[h]].all(axis=1)
    return int(any_up.sum())


# ---------------------------------------------------------------------------
# DSR single-group construction, one run per seed VM

def _dsr_seed_runs_loop(demand, cap, prior, node_avail, node_srng, lam, ok, T, A, alpha):
    k = demand.shape[0]
    N = cap.shape[0]
    g = lam.shape[0]
    runs = np.full((k, k), -1, dtype=np.int64)
    for m in range(k):
        place = runs[m]
        capm = cap.copy()
        used = np.zeros(N, dtype=np.bool_)
        counted = np.zeros(g, dtype=np.bool_)
        chi = np.full(k, np.inf)
        placed = np.empty(k, dtype=np.int64)
        q = 0
        vx = m
        while q < k:
            best = -1
            best_score = -1.0
            for n in range(N):
                if capm[n] < demand[vx] or prior[vx, n]:
                    continue
                fits = True
                for j in range(q):
                    vj = placed[j]
                    if not ok[vx, vj, n, place[vj]]:
                        fits = False
                        break
                if not fits:
                    continue
                score = 1.0 if used[n] else node_avail[n]
                for e in range(g):
                    if node_srng[n, e] and not counted[e]:
                        score *= lam[e]
                # ties go to the node with more room left
                if score > best_score or (score == best_score and capm[n] > capm[best]):
                    best = n
                    best_score = score
            if best < 0:
                break
            place[vx] = best
            capm[best] -= demand[vx]
            used[best] = True
            for e in range(g):
                if node_srng[best, e]:
                    counted[e] = True
            placed[q] = vx
            q += 1
            if q == k:
                break
            nxt = -1
            best_chi = np.inf
            for vi in range(k):
                if place[vi] >= 0:
                    continue
                val = T[vi, vx] * alpha / A[vi, vx]
                if val < chi[vi]:
                    chi[vi] = val
                if nxt < 0 or chi[vi] < best_chi:
                    nxt = vi
                    best_chi = chi[vi]
            vx = nxt
    return runs


def _dsr_seed_runs_numpy(demand, cap, prior, node_avail, node_srng, lam, ok, T, A, alpha):
    k = demand.shape[0]
    runs = np.full((k, k), -1, dtype=np.int64)
    for m in range(k):
        place = runs[m]
        capm = cap.copy()
        used = np.zeros(cap.shape[0], dtype=bool)
        counted = np.zeros(lam.shape[0], dtype=bool)
        chi = np.full(k, np.inf)
        placed = []
        vx = m
        while len(placed) < k:
            feasible = (capm >= demand[vx]) & ~prior[vx]
            for vj in placed:
                feasible &= ok[vx, vj, :, place[vj]]
            if not feasible.any():
                break
            score = np.where(used, 1.0, node_avail)
            score = score * np.prod(np.where(node_srng & ~counted, lam, 1.0), axis=1)
            score = np.where(feasible, score, -1.0)
            best = int(np.argmax(np.where(score == score.max(), capm, -np.inf)))
            place[vx] = best
            capm[best] -= demand[vx]
            used[best] = True
            counted |= node_srng[best]
            placed.append(vx)
            if len(placed) == k:
                break
            chi = np.minimum(chi, T[:, vx] * alpha / A[:, vx])
            vx = int(np.argmin(np.where(place < 0, chi, np.inf)))
    return runs


# ---------------------------------------------------------------------------
# baseline group filling (GP / RP)

def _fill_group_loop(order, vm_order, demand, cap, prior, ok):
    k = demand.shape[0]
    place = np.full(k, -1, dtype=np.int64)
    capm = cap.copy()
    placed = np.empty(k, dtype=np.int64)
    q = 0
    for n in order:
        for v in vm_order:
            if place[v] >= 0 or capm[n] < demand[v] or prior[v, n]:
                continue
            fits = True
            for j in range(q):
                vj = placed[j]
                if not ok[v, vj, n, place[vj]]:
                    fits = False
                    break
            if fits:
                place[v] = n
                capm[n] -= demand[v]
                placed[q] = v
                q += 1
        if q == k:
            break
    return place


def _fill_group_numpy(order, vm_order, demand, cap, prior, ok):
    place = np.full(demand.shape[0], -1, dtype=np.int64)
    capm = cap.copy()
    for n in order:
        for v in vm_order:
            if place[v] >= 0 or capm[n] < demand[v] or prior[v, n]:
                continue
            others = np.flatnonzero(place >= 0)
            if ok[v, others, n, place[others]].all():
                place[v] = n
                capm[n] -= demand[v]
        if (place >= 0).all():
            break
    return place


if HAVE_NUMBA:
    _ie_union_nb = _njit(_ie_union_loop)
    _brute_force_loop_nb = _njit(_brute_force_loop)
    _mc_count_nb = _njit(_mc_count_loop)
    _dsr_seed_runs_nb = _njit(_dsr_seed_runs_loop)
    _fill_group_nb = _njit(_fill_group_loop)

    NUMBA_KERNELS = {
        "ie_union": _ie_union_nb,
        "brute_force": _brute_force_numba,
        "mc_count": _mc_count_nb,
        "dsr_seed_runs": _dsr_seed_runs_nb,
        "fill_group": _fill_group_nb,
    }
else:  # pragma: no cover
    NUMBA_KERNELS = {}

NUMPY_KERNELS = {
    "ie_union": _ie_union_numpy,
    "brute_force": _brute_force_numpy,
    "mc_count": _mc_count_numpy,
    "dsr_seed_runs": _dsr_seed_runs_numpy,
    "fill_group": _fill_group_numpy,
}

_ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS
BACKEND = "numba" if USE_NUMBA else "numpy"

ie_union = _ACTIVE["ie_union"]
brute_force = _ACTIVE["brute_force"]
mc_count = _ACTIVE["mc_count"]
dsr_seed_runs = _ACTIVE["dsr_seed_runs"]
fill_group = _ACTIVE["fill_group"]

_warm = False


def warmup() -> None:
    """Load (or compile) every numba kernel once, so the first timed call is not charged for it."""
    global _warm
    if _warm or not USE_NUMBA:
        return
    member = np.ones((1, 1), dtype=np.bool_)
    probs = np.full(1, 0.5)
    ie_union(member, probs)
    brute_force(member, probs)
    mc_count(member, probs, np.zeros((1, 1)))
    one = np.ones(1)
    flags = np.zeros((1, 1), dtype=np.bool_)
    dsr_seed_runs(one, one, flags, one, flags, one, np.ones((1, 1, 1, 1), dtype=np.bool_),
                  np.ones((1, 1)), np.ones((1, 1)), 1.0)
    idx = np.zeros(1, dtype=np.int64)
    fill_group(idx, idx, one, one, flags, np.ones((1, 1, 1, 1), dtype=np.bool_))
    _warm = True
