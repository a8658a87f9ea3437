"""Independent reference implementations and random instance generators for tests.

Nothing here calls the solvers under test; the placement oracle recomputes
compatibility, capacity and availability from the raw inputs.
"""

from itertools import combinations, product

import numpy as np

from reliaplace.placement import Infrastructure, PlacementRequest, ServerNode, SrngEvent
from reliaplace.routing import Link, Network


def group_avail(infra, node_ids):
    """Product of node availabilities and their distinct SRNG non-occurrence probabilities."""
    events = {e.id: e.up_prob for e in infra.srng_events}
    by_id = {n.id: n for n in infra.nodes}
    value = 1.0
    seen = set()
    for nid in node_ids:
        value *= by_id[nid].availability
        for e in by_id[nid].srng_ids:
            if e not in seen:
                seen.add(e)
                value *= events[e]
    return value


def enumerate_min_nodes(infra, request):
    """Fewest nodes over all placements with at most two complete groups (H <= 2).

    A partial group is never better: completing it by borrowing a host that
    already stores the VM changes neither the node set nor capacity use.
    Returns ``None`` when nothing is feasible.
    """
    ids = [n.id for n in infra.nodes]
    caps = {n.id: n.capacity for n in infra.nodes}
    k = request.k
    demand = [c for _, c in request.vms]
    T, A = request.delay_matrix, request.avail_matrix

    def fits(hosted):
        load = {}
        for (v, nid) in hosted:
            load[nid] = load.get(nid, 0.0) + demand[v]
        return all(load[n] <= caps[n] + 1e-9 for n in load)

    groups = []
    for g in product(ids, repeat=k):
        ok = all(g[a] == g[b] or infra.compatible(g[a], g[b], A[a, b], T[a, b])
                 for a, b in combinations(range(k), 2))
        hosted = {(v, g[v]) for v in range(k)}
        if ok and fits(hosted):
            groups.append((g, hosted, frozenset(g)))
    best = None
    floor = request.delta - 1e-12
    for g, hosted, nodes in groups:
        if group_avail(infra, nodes) >= floor:
            best = len(nodes) if best is None else min(best, len(nodes))
    if request.H >= 2:
        for (g1, h1, n1), (g2, h2, n2) in combinations(groups, 2):
            both = n1 | n2
            if best is not None and len(both) >= best:
                continue
            if not fits(h1 | h2):
                continue
            a = group_avail(infra, n1) + group_avail(infra, n2) - group_avail(infra, both)
            if a >= floor:
                best = len(both)
    return best


def random_placement_instance(rng, max_nodes=8, max_vms=3, max_H=2, srng=None):
    N = int(rng.integers(1, max_nodes + 1))
    k = int(rng.integers(1, max_vms + 1))
    H = int(rng.integers(1, max_H + 1))
    use_srng = bool(rng.random() < 0.3) if srng is None else srng
    events = []
    if use_srng:
        events = [SrngEvent(f"e{i}", float(rng.choice([0.001, 0.01, 0.05]))) for i in range(3)]
    nodes = []
    for i in range(N):
        member = frozenset(e.id for e in events if rng.random() < 0.4)
        nodes.append(ServerNode(f"n{i}", float(rng.integers(60, 260)),
                                float(rng.choice([0.9, 0.99, 0.999, 0.9999])), member))
    compat = {}
    for a, b in combinations([n.id for n in nodes], 2):
        if rng.random() < 0.85:
            compat[frozenset((a, b))] = [(0.999, float(rng.uniform(5, 20))), (0.9999, float(rng.uniform(15, 30)))]
    vms = [(f"v{j}", float(rng.integers(30, 130))) for j in range(k)]
    T = np.zeros((k, k))
    Am = np.ones((k, k))
    for i, j in combinations(range(k), 2):
        T[i, j] = T[j, i] = float(rng.uniform(10, 25))
        Am[i, j] = Am[j, i] = float(rng.choice([0.999, 0.9999]))
    delta = float(rng.choice([0.9, 0.99, 0.999, 0.9999, 0.99999]))
    return Infrastructure(tuple(nodes), tuple(events), compat), PlacementRequest(vms, T, Am, delta, H)


def random_small_network(rng, max_nodes=10, srlg=False):
    """Connected sparse graph with small integer delays (keeps path counts enumerable)."""
    n = int(rng.integers(3, max_nodes + 1))
    nodes = [f"v{i}" for i in range(n)]
    edges = set()
    for i in range(1, n):
        edges.add((int(rng.integers(0, i)), i))
    for _ in range(int(rng.integers(0, n // 2 + 2))):
        a, b = sorted(int(x) for x in rng.choice(n, 2, replace=False))
        edges.add((a, b))
    events = {"g0": 0.01, "g1": 0.05} if srlg else {}
    links = []
    for a, b in sorted(edges):
        groups = frozenset(e for e in events if rng.random() < 0.3)
        links.append(Link(nodes[a], nodes[b], float(rng.choice([0.9, 0.95, 0.99, 0.999])),
                          float(rng.integers(1, 6)), groups))
    return Network(nodes, links, events)
