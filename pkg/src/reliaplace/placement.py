"""Reliable VM placement: data model, feasibility checks and solvers.

A request asks for ``k`` VMs to be placed up to ``H`` times ("placement
groups") on as few server nodes as possible so that

* every node stays within its storage capacity (a VM held by several groups
  on the same node is stored once),
* two VMs of the same group on different nodes can reach each other within
  the pairwise delay/availability bounds of the request, and
* the probability that at least one group is fully up is at least ``delta``.

Solvers: :func:`exact_place` (minimum node count by exhaustive search),
:func:`dsr` (delay-sensitive reliable heuristic) and :func:`baseline_place`
(greedy / random).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .availability import (
    AtomKind,
    AtomUniverse,
    RiskAtom,
    min_survivor_availability,
    multi_group_availability,
)
from .errors import ResolutionError, SizeError

AVAIL_TOL = 1e-12
MULTI = "multi"
SINGLE_NODE = "single-node"
FAILURE_MODELS = (MULTI, SINGLE_NODE)
EXACT_MAX_VMS = 6
EXACT_MAX_NODES = 20


def node_atom(node_id) -> str:
    return f"node:{node_id}"


def srng_atom(event_id) -> str:
    return f"srng:{event_id}"


def pareto_frontier(points: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    """Nondominated (availability, delay) points; higher availability and lower delay win."""
    best: list[tuple[float, float]] = []
    for a, d in sorted(set(points), key=lambda p: (-p[0], p[1])):
        if not best or d < best[-1][1]:
            best.append((a, d))
    return tuple(best)


@dataclass(frozen=True)
class ServerNode:
    id: str
    capacity: float
    availability: float
    srng_ids: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "srng_ids", frozenset(self.srng_ids))
        if not self.capacity > 0:
            raise ValueError(f"node {self.id!r}: capacity must be positive")
        if not 0.0 < self.availability <= 1.0:
            raise ValueError(f"node {self.id!r}: availability must lie in (0, 1]")


@dataclass(frozen=True)
class SrngEvent:
    id: str
    failure_prob: float

    def __post_init__(self):
        if not 0.0 <= self.failure_prob < 1.0:
            raise ValueError(f"SRNG event {self.id!r}: failure_prob must lie in [0, 1)")

    @property
    def up_prob(self) -> float:
        return 1.0 - self.failure_prob


@dataclass
class Infrastructure:
    """Server nodes, shared-risk events, and the pairwise compatibility relation.

    ``compat`` maps an unordered node-id pair to its Pareto frontier of
    achievable (availability, delay) connections.  Pairs without an entry
    cannot communicate.
    """

    nodes: tuple
    srng_events: tuple = ()
    compat: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = tuple(self.nodes)
        self.srng_events = tuple(self.srng_events)
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node id")
        events = {e.id for e in self.srng_events}
        for n in self.nodes:
            missing = n.srng_ids - events
            if missing:
                raise ResolutionError(f"node {n.id!r} references unknown SRNG event(s) {sorted(missing)}")
        self.compat = {frozenset(k): pareto_frontier(v) for k, v in self.compat.items()}
        for pair in self.compat:
            for nid in pair:
                if nid not in self.index:
                    raise ResolutionError(f"compat entry references unknown node {nid!r}")

    @cached_property
    def index(self) -> dict:
        return {n.id: i for i, n in enumerate(self.nodes)}

    def frontier(self, m, n) -> tuple:
        return self.compat.get(frozenset((m, n)), ())

    def compatible(self, m, n, eta: float, max_delay: float) -> bool:
        """F(m, n, eta, D): some connection reaches availability eta within delay D."""
        if m == n:
            return True
        return any(a >= eta and d <= max_delay for a, d in self.frontier(m, n))

    @cached_property
    def universe(self) -> AtomUniverse:
        atoms = [RiskAtom(node_atom(n.id), AtomKind.NODE, n.availability) for n in self.nodes]
        atoms += [RiskAtom(srng_atom(e.id), AtomKind.SRNG_EVENT, e.up_prob) for e in self.srng_events]
        return AtomUniverse(atoms)

    def node_atoms(self, node_id) -> frozenset:
        node = self.nodes[self.index[node_id]]
        return frozenset([node_atom(node.id), *(srng_atom(e) for e in node.srng_ids)])


def complete_compat(node_ids: Sequence, availability: float = 1.0, delay: float = 0.0) -> dict:
    """Compat map where every pair has one (availability, delay) connection."""
    return {frozenset(p): ((availability, delay),) for p in combinations(node_ids, 2)}


@dataclass
class PlacementRequest:
    vms: tuple          # ((vm_id, demand), ...)
    delay_matrix: np.ndarray
    avail_matrix: np.ndarray
    delta: float
    H: int = 1
    alpha: float = 1.0

    def __post_init__(self):
        self.vms = tuple((str(v), float(c)) for v, c in self.vms)
        k = len(self.vms)
        if k < 1:
            raise ValueError("a request needs at least one VM")
        self.delay_matrix = np.asarray(self.delay_matrix, dtype=np.float64)
        self.avail_matrix = np.asarray(self.avail_matrix, dtype=np.float64)
        for name, mat in (("delay_matrix", self.delay_matrix), ("avail_matrix", self.avail_matrix)):
            if mat.shape != (k, k):
                raise ValueError(f"{name} must be {k}x{k}, got {mat.shape}")
            off = ~np.eye(k, dtype=bool)
            if not np.array_equal(mat[off], mat.T[off]):
                raise ValueError(f"{name} must be symmetric")
        off = ~np.eye(k, dtype=bool)
        if np.any(self.delay_matrix[off] <= 0):
            raise ValueError("delay bounds must be positive")
        if np.any((self.avail_matrix[off] <= 0) | (self.avail_matrix[off] > 1)):
            raise ValueError("pairwise availability bounds must lie in (0, 1]")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if self.H < 1:
            raise ValueError("H must be >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def k(self) -> int:
        return len(self.vms)

    @property
    def demands(self) -> np.ndarray:
        return np.array([c for _, c in self.vms], dtype=np.float64)

    def with_H(self, H: int) -> "PlacementRequest":
        return PlacementRequest(self.vms, self.delay_matrix, self.avail_matrix, self.delta, H, self.alpha)


@dataclass(frozen=True)
class PlacementAssignment:
    """``groups[h][v]`` is the node index hosting VM ``v`` in group ``h`` (-1: not placed)."""

    groups: tuple

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(tuple(int(n) for n in g) for g in self.groups))

    @classmethod
    def from_tensor(cls, place) -> "PlacementAssignment":
        place = np.asarray(place, dtype=bool)
        groups = []
        for h in range(place.shape[0]):
            row = []
            for v in range(place.shape[1]):
                hosts = np.flatnonzero(place[h, v])
                if len(hosts) > 1:
                    raise ValueError(f"group {h} places VM {v} more than once")
                row.append(int(hosts[0]) if len(hosts) else -1)
            groups.append(row)
        return cls(tuple(groups))

    def to_tensor(self, n_nodes: int) -> np.ndarray:
        k = len(self.groups[0]) if self.groups else 0
        place = np.zeros((len(self.groups), k, n_nodes), dtype=bool)
        for h, g in enumerate(self.groups):
            for v, n in enumerate(g):
                if n >= 0:
                    place[h, v, n] = True
        return place

    @property
    def used_nodes(self) -> frozenset:
        return frozenset(n for g in self.groups for n in g if n >= 0)

    def hosting(self) -> dict:
        """VM index -> set of node indices hosting it across all groups."""
        out: dict[int, set] = {}
        for g in self.groups:
            for v, n in enumerate(g):
                if n >= 0:
                    out.setdefault(v, set()).add(n)
        return out

    def describe(self, infra: Infrastructure, request: PlacementRequest) -> list:
        return [
            {request.vms[v][0]: infra.nodes[n].id for v, n in enumerate(g) if n >= 0}
            for g in self.groups
        ]


@dataclass
class Violation:
    kind: str          # coverage | capacity | compat | availability | groups
    detail: str
    shortfall: float | None = None


@dataclass
class FeasibilityReport:
    violations: list
    availability: float | None

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}


@dataclass
class PlacementOutcome:
    accepted: bool
    assignment: PlacementAssignment | None = None
    used_nodes: int = 0
    achieved_availability: float | None = None
    runtime: float = 0.0
    algorithm: str = ""


class _Problem:
    """Array view of one (infrastructure, request) pair shared by the solvers."""

    def __init__(self, infra: Infrastructure, request: PlacementRequest):
        self.infra = infra
        self.request = request
        self.k = request.k
        self.N = len(infra.nodes)
        self.demand = request.demands
        self.cap = np.array([n.capacity for n in infra.nodes], dtype=np.float64)
        self.node_avail = np.array([n.availability for n in infra.nodes], dtype=np.float64)
        events = [e.id for e in infra.srng_events]
        ev_index = {e: i for i, e in enumerate(events)}
        self.lam = np.array([e.up_prob for e in infra.srng_events], dtype=np.float64)
        self.node_srng = np.zeros((self.N, len(events)), dtype=bool)
        for i, n in enumerate(infra.nodes):
            for e in n.srng_ids:
                self.node_srng[i, ev_index[e]] = True
        # node score with all of its own SRNG events counted
        self.node_score = self.node_avail * np.prod(np.where(self.node_srng, self.lam, 1.0), axis=1)
        self.T = request.delay_matrix
        self.A = request.avail_matrix
        self.alpha = float(request.alpha)
        self.delta = float(request.delta)
        self.H = int(request.H)
        self.universe = infra.universe
        self.node_atoms = [infra.node_atoms(n.id) for n in infra.nodes]
        self.ok = self._compat_tensor()
        self._avail_cache: dict = {}

    def _compat_tensor(self) -> np.ndarray:
        k, N = self.k, self.N
        width = max([len(v) for v in self.infra.compat.values()], default=0)
        fa = np.full((N, N, max(width, 1)), -np.inf)
        fd = np.full((N, N, max(width, 1)), np.inf)
        for pair, front in self.infra.compat.items():
            m, n = (self.infra.index[x] for x in pair)
            for p, (a, d) in enumerate(front):
                fa[m, n, p] = fa[n, m, p] = a
                fd[m, n, p] = fd[n, m, p] = d
        ok = np.ones((k, k, N, N), dtype=bool)
        diag = np.eye(N, dtype=bool)
        for i in range(k):
            for j in range(i + 1, k):
                pair_ok = np.any((fa >= self.A[i, j]) & (fd <= self.T[i, j]), axis=-1) | diag
                ok[i, j] = pair_ok
                ok[j, i] = pair_ok
        return ok

    def group_atoms(self, group) -> frozenset:
        return frozenset().union(*(self.node_atoms[n] for n in set(group) if n >= 0))

    def availability(self, groups) -> float:
        key = tuple(sorted({frozenset(n for n in g if n >= 0) for g in groups}, key=sorted))
        if key not in self._avail_cache:
            self._avail_cache[key] = multi_group_availability(
                self.universe, [self.group_atoms(g) for g in key])
        return self._avail_cache[key]

    def group_compatible(self, group) -> bool:
        placed = [(v, n) for v, n in enumerate(group) if n >= 0]
        for i, (a, m) in enumerate(placed):
            for b, n in placed[i + 1:]:
                if not self.ok[a, b, m, n]:
                    return False
        return True

    def loads(self, groups) -> np.ndarray:
        """Per-node storage used; a VM on a node counts once however many groups share it."""
        hosted = self.hosted(groups)
        return hosted.T.astype(np.float64) @ self.demand

    def hosted(self, groups) -> np.ndarray:
        out = np.zeros((self.k, self.N), dtype=bool)
        for g in groups:
            for v, n in enumerate(g):
                if n >= 0:
                    out[v, n] = True
        return out

    def complete(self, groups):
        """Fill VMs missing from a group with another group's host for them.

        A group that does not place some VM shares that VM with another group
        (partially protected placement).  The lender is the lowest-index group
        whose host for the VM is compatible with the borrower's placements.
        Returns ``None`` for a group that cannot be completed.
        """
        out = []
        for h, g in enumerate(groups):
            g = list(g)
            for v in range(self.k):
                if g[v] >= 0:
                    continue
                for h2, other in enumerate(groups):
                    n = other[v]
                    if h2 == h or n < 0:
                        continue
                    if all(self.ok[v, u, n, g[u]] for u in range(self.k) if g[u] >= 0):
                        g[v] = n
                        break
            out.append(tuple(g) if min(g) >= 0 else None)
        return out


def _check_dims(prob: _Problem, assignment: PlacementAssignment):
    for h, g in enumerate(assignment.groups):
        if len(g) != prob.k:
            raise ValueError(f"group {h} has {len(g)} entries, expected {prob.k}")
        for n in g:
            if n < -1 or n >= prob.N:
                raise ValueError(f"group {h} references node index {n} outside 0..{prob.N - 1}")


def validate_placement(infra: Infrastructure, request: PlacementRequest,
                       assignment: PlacementAssignment, failure_model: str = MULTI,
                       *, _problem: _Problem | None = None) -> FeasibilityReport:
    """List every constraint the assignment violates (empty list: feasible)."""
    if failure_model not in FAILURE_MODELS:
        raise ValueError(f"unknown failure model {failure_model!r}")
    prob = _problem or _Problem(infra, request)
    _check_dims(prob, assignment)
    groups = assignment.groups
    violations: list[Violation] = []
    if not groups:
        return FeasibilityReport([Violation("coverage", "no placement groups")], None)

    max_groups = prob.H if failure_model == MULTI else min(prob.H, 2)
    if len(groups) > max_groups:
        violations.append(Violation("groups", f"{len(groups)} groups exceed the limit of {max_groups}"))

    hosting = assignment.hosting()
    for v in range(prob.k):
        if v not in hosting:
            violations.append(Violation("coverage", f"VM {request.vms[v][0]!r} is not placed"))
    if failure_model == SINGLE_NODE and min(groups[0]) < 0:
        violations.append(Violation("coverage", "the primary group must place every VM"))

    loads = prob.loads(groups)
    for n in np.flatnonzero(loads > prob.cap + 1e-9):
        violations.append(Violation(
            "capacity", f"node {infra.nodes[n].id!r} holds {loads[n]:g} > capacity {prob.cap[n]:g}"))

    availability = None
    if failure_model == MULTI:
        completed = prob.complete(groups)
        for h, g in enumerate(completed):
            if g is None:
                if not any(v.kind == "coverage" for v in violations):
                    violations.append(Violation("compat", f"group {h} cannot be completed by sharing"))
            elif not prob.group_compatible(g):
                violations.append(Violation("compat", f"group {h} violates a pairwise delay/availability bound"))
        if all(g is not None for g in completed):
            availability = prob.availability(completed)
    else:
        placements = [(v, n) for g in groups for v, n in enumerate(g) if n >= 0]
        for i, (a, m) in enumerate(placements):
            for b, n in placements[i + 1:]:
                if a != b and not prob.ok[a, b, m, n]:
                    violations.append(Violation(
                        "compat", f"VMs {request.vms[a][0]!r}@{infra.nodes[m].id} and "
                                  f"{request.vms[b][0]!r}@{infra.nodes[n].id} violate a pairwise bound"))
        if len(hosting) == prob.k:
            universe = AtomUniverse.from_probs({i: a for i, a in enumerate(prob.node_avail)})
            availability = min_survivor_availability(universe, hosting)

    if availability is not None and availability < prob.delta - AVAIL_TOL:
        violations.append(Violation(
            "availability", f"availability {availability:.12g} < delta {prob.delta:g}",
            shortfall=prob.delta - availability))
    return FeasibilityReport(violations, availability)


def _outcome(prob: _Problem, groups, started: float, algorithm: str,
             failure_model: str = MULTI) -> PlacementOutcome:
    runtime = time.perf_counter() - started
    if groups is None:
        return PlacementOutcome(False, runtime=runtime, algorithm=algorithm)
    assignment = PlacementAssignment(tuple(groups))
    report = validate_placement(prob.infra, prob.request, assignment, failure_model, _problem=prob)
    if not report.ok:
        return PlacementOutcome(False, runtime=runtime, algorithm=algorithm)
    return PlacementOutcome(True, assignment, len(assignment.used_nodes), report.availability,
                            runtime, algorithm)


# ---------------------------------------------------------------------------
# exact minimum-node search

def exact_place(infra: Infrastructure, request: PlacementRequest,
                failure_model: str = MULTI) -> PlacementOutcome:
    """Assignment using the fewest distinct nodes, or a rejection if none is feasible.

    Node subsets are tried by increasing size, so the first subset that admits
    a feasible assignment is optimal.
    """
    if failure_model not in FAILURE_MODELS:
        raise ValueError(f"unknown failure model {failure_model!r}")
    if request.k > EXACT_MAX_VMS or len(infra.nodes) > EXACT_MAX_NODES:
        raise SizeError(
            f"exact_place handles k <= {EXACT_MAX_VMS} and N <= {EXACT_MAX_NODES} "
            f"(got k={request.k}, N={len(infra.nodes)}); use dsr or baseline_place")
    started = time.perf_counter()
    prob = _Problem(infra, request)
    search = _exact_multi if failure_model == MULTI else _exact_single_node
    groups = search(prob)
    return _outcome(prob, groups, started, "exact", failure_model)


def _subsets(prob: _Problem, size: int):
    order = sorted(range(prob.N), key=lambda n: (-prob.node_score[n], n))
    for subset in combinations(order, size):
        if prob.cap[list(subset)].sum() + 1e-9 < prob.demand.sum():
            continue
        yield subset


def _group_floor(prob: _Problem) -> float:
    """Least availability a group needs to be useful in any feasible placement.

    No group beats the best single node, and groups are positively correlated,
    so with the other H-1 groups at that best value the union stays below
    delta whenever this group falls under the returned floor.
    """
    best = float(prob.node_score.max())
    other = (1.0 - best) ** (prob.H - 1)
    if other <= 0.0:
        return 0.0
    return 1.0 - (1.0 - (prob.delta - AVAIL_TOL)) / other


def _feasible_groups(prob: _Problem, subset, first_only: bool = False) -> list:
    """Every complete single group hosted inside ``subset`` that can still help reach delta."""
    k = prob.k
    floor = _group_floor(prob)
    out = []
    place = [-1] * k
    load = {n: 0.0 for n in subset}
    nodes: list = []

    def extend(v):
        if v == k:
            out.append(tuple(place))
            return first_only
        for n in subset:
            if load[n] + prob.demand[v] > prob.cap[n] + 1e-9:
                continue
            if any(not prob.ok[v, u, n, place[u]] for u in range(v)):
                continue
            fresh = load[n] == 0.0
            if fresh:
                nodes.append(n)
                # a partial group is at least as available as any completion of it
                if prob.availability([nodes]) < floor:
                    nodes.pop()
                    continue
            place[v] = n
            load[n] += prob.demand[v]
            stop = extend(v + 1)
            load[n] -= prob.demand[v]
            place[v] = -1
            if fresh:
                nodes.pop()
                load[n] = 0.0
            if stop:
                return True
        return False

    extend(0)
    return out


def _exact_multi(prob: _Problem):
    if not _feasible_groups(prob, tuple(range(prob.N)), first_only=True):
        return None
    max_size = min(prob.N, prob.k * prob.H)
    for size in range(1, max_size + 1):
        for subset in _subsets(prob, size):
            found = _search_groups(prob, _feasible_groups(prob, subset))
            if found is not None:
                return found
    return None


def _search_groups(prob: _Problem, candidates: list):
    if not candidates:
        return None
    scored = sorted(((prob.availability([g]), i, g) for i, g in enumerate(candidates)),
                    key=lambda t: (-t[0], t[1]))
    delta = prob.delta - AVAIL_TOL
    demand = prob.demand
    chosen: list = []
    hosted: dict = {}

    def fits(g):
        extra: dict = {}
        for v, n in enumerate(g):
            if v not in hosted.get(n, ()):
                extra[n] = extra.get(n, 0.0) + demand[v]
        for n, add in extra.items():
            base = sum(demand[v] for v in hosted.get(n, ()))
            if base + add > prob.cap[n] + 1e-9:
                return False
        return True

    def dfs(start, current):
        if chosen and current >= delta:
            return list(chosen)
        if len(chosen) == prob.H:
            return None
        slots = prob.H - len(chosen)
        for i in range(start, len(scored)):
            a_i, _, g = scored[i]
            # groups are positively correlated, so this bounds any extension from above
            if 1.0 - (1.0 - current) * (1.0 - a_i) ** slots < delta:
                break
            if not fits(g):
                continue
            added = [(n, v) for v, n in enumerate(g) if v not in hosted.get(n, ())]
            for n, v in added:
                hosted.setdefault(n, set()).add(v)
            chosen.append(g)
            result = dfs(i + 1, prob.availability(chosen))
            chosen.pop()
            for n, v in added:
                hosted[n].discard(v)
            if result is not None:
                return result
        return None

    return dfs(0, 0.0)


def _exact_single_node(prob: _Problem):
    """Single-node-failure model: each VM sits on one node with A >= delta or on two nodes."""
    k = prob.k
    delta = prob.delta - AVAIL_TOL
    allow_backup = prob.H >= 2
    for size in range(1, min(prob.N, 2 * k if allow_backup else k) + 1):
        for subset in _subsets(prob, size):
            options = []
            for v in range(k):
                opts = [(n,) for n in subset
                        if prob.node_avail[n] >= delta and prob.demand[v] <= prob.cap[n] + 1e-9]
                if allow_backup:
                    opts += [(m, n) for m, n in combinations(subset, 2)
                             if prob.demand[v] <= min(prob.cap[m], prob.cap[n]) + 1e-9]
                if not opts:
                    break
                options.append(opts)
            else:
                found = _single_node_dfs(prob, options)
                if found is not None:
                    primary = tuple(h[0] for h in found)
                    backup = tuple(h[1] if len(h) > 1 else -1 for h in found)
                    return [primary, backup] if max(backup) >= 0 else [primary]
    return None


def _single_node_dfs(prob: _Problem, options):
    k = prob.k
    load = np.zeros(prob.N)
    chosen: list = []

    def dfs(v):
        if v == k:
            return list(chosen)
        for hosts in options[v]:
            if any(load[n] + prob.demand[v] > prob.cap[n] + 1e-9 for n in hosts):
                continue
            if any(not prob.ok[v, u, m, n]
                   for u in range(v) for n in chosen[u] for m in hosts):
                continue
            for n in hosts:
                load[n] += prob.demand[v]
            chosen.append(hosts)
            result = dfs(v + 1)
            chosen.pop()
            for n in hosts:
                load[n] -= prob.demand[v]
            if result is not None:
                return result
        return None

    return dfs(0)


# ---------------------------------------------------------------------------
# DSR heuristic

def _residual(prob: _Problem, groups):
    return prob.cap - prob.loads(groups), prob.hosted(groups)


def dsr_place(infra: Infrastructure, request: PlacementRequest, prior_groups: Sequence = (),
              *, _problem: _Problem | None = None) -> tuple:
    """Build one placement group greedily, trying every VM as the starting point.

    Nodes are taken in decreasing order of (effective) availability; a node
    already used by the group counts as fully available.  The next VM to host
    is the unplaced one with the tightest delay/availability requirement
    towards the placed ones.  Returns the best complete group, or failing
    that the largest partial group, as a tuple of node indices (-1: unplaced).
    """
    prob = _problem or _Problem(infra, request)
    cap, prior = _residual(prob, prior_groups)
    runs = _kernels.dsr_seed_runs(prob.demand, cap, prior, prob.node_avail, prob.node_srng,
                                  prob.lam, prob.ok, prob.T, prob.A, prob.alpha)
    best_key = None
    best = None
    for seed, run in enumerate(runs):
        run = tuple(int(n) for n in run)
        placed = sum(n >= 0 for n in run)
        if placed == 0:
            continue
        avail = prob.availability([run])
        key = (placed == prob.k, placed, avail, -len({n for n in run if n >= 0}), -seed)
        if best_key is None or key > best_key:
            best_key, best = key, run
    return best if best is not None else tuple([-1] * prob.k)


def partially_dsr_place(infra: Infrastructure, request: PlacementRequest, groups: Sequence,
                        *, _problem: _Problem | None = None) -> list:
    """Try to empty used nodes one by one while keeping the placement valid.

    Nodes are visited in increasing order of availability.  The VMs on the
    visited node are re-hosted on the other nodes their group already uses;
    the eviction is kept only if the result still satisfies every constraint.
    """
    prob = _problem or _Problem(infra, request)
    groups = [tuple(g) for g in groups]
    used = sorted({n for g in groups for n in g if n >= 0}, key=lambda n: (prob.node_score[n], n))
    vm_order = sorted(range(prob.k), key=lambda v: (-prob.demand[v], v))
    for node in used:
        trial = [list(g) for g in groups]
        evicted = [[v for v in range(prob.k) if g[v] == node] for g in trial]
        if not any(evicted):
            continue
        for g, out in zip(trial, evicted):
            for v in out:
                g[v] = -1
        for h, g in enumerate(trial):
            if not evicted[h]:
                continue
            loads = prob.loads(trial)
            others = sorted({n for n in g if n >= 0}, key=lambda n: (-(prob.cap[n] - loads[n]), n))
            pending = [v for v in vm_order if v in evicted[h]]
            for n in others:
                for v in list(pending):
                    hosted = prob.hosted(trial)
                    extra = 0.0 if hosted[v, n] else prob.demand[v]
                    if prob.loads(trial)[n] + extra > prob.cap[n] + 1e-9:
                        continue
                    if any(g[u] >= 0 and not prob.ok[v, u, n, g[u]] for u in range(prob.k) if u != v):
                        continue
                    g[v] = n
                    pending.remove(v)
        candidate = PlacementAssignment(tuple(tuple(g) for g in trial))
        if validate_placement(infra, request, candidate, _problem=prob).ok:
            groups = [tuple(g) for g in trial]
    return groups


def _usable_availability(prob: _Problem, groups):
    """Availability of the groups that can be completed; a group that cannot is left out."""
    usable = [g for g in prob.complete(groups) if g is not None and prob.group_compatible(g)]
    if not usable:
        return None, None
    return prob.availability(usable), usable


def dsr(infra: Infrastructure, request: PlacementRequest) -> PlacementOutcome:
    """Add groups one at a time until the placement availability reaches delta."""
    started = time.perf_counter()
    prob = _Problem(infra, request)
    groups: list = []
    for _ in range(prob.H):
        group = dsr_place(infra, request, groups, _problem=prob)
        if max(group) < 0:
            break
        groups.append(group)
        avail, completed = _usable_availability(prob, groups)
        if avail is not None and avail >= prob.delta - AVAIL_TOL:
            reduced = partially_dsr_place(infra, request, completed, _problem=prob)
            return _outcome(prob, prob.complete(reduced), started, "dsr")
    return _outcome(prob, None, started, "dsr")


# ---------------------------------------------------------------------------
# greedy / random baselines

def baseline_place(infra: Infrastructure, request: PlacementRequest, strategy: str = "greedy",
                   seed: int | Sequence[int] = 0) -> PlacementOutcome:
    """Fill nodes one after another with as many VMs as fit.

    ``greedy`` visits nodes by decreasing availability, ``random`` in a
    seeded random order drawn anew for each group.
    """
    if strategy not in ("greedy", "random"):
        raise ValueError(f"unknown strategy {strategy!r}")
    started = time.perf_counter()
    prob = _Problem(infra, request)
    rng = np.random.default_rng(seed)
    vm_order = np.array(sorted(range(prob.k), key=lambda v: (-prob.demand[v], v)), dtype=np.int64)
    greedy_order = np.array(sorted(range(prob.N), key=lambda n: (-prob.node_avail[n], n)), dtype=np.int64)
    groups: list = []
    name = "gp" if strategy == "greedy" else "rp"
    for _ in range(prob.H):
        order = greedy_order if strategy == "greedy" else rng.permutation(prob.N).astype(np.int64)
        cap, prior = _residual(prob, groups)
        group = tuple(int(n) for n in _kernels.fill_group(order, vm_order, prob.demand, cap, prior, prob.ok))
        if max(group) < 0:
            break
        groups.append(group)
        avail, completed = _usable_availability(prob, groups)
        if avail is not None and avail >= prob.delta - AVAIL_TOL:
            return _outcome(prob, completed, started, name)
    return _outcome(prob, None, started, name)


SOLVERS = ("exact", "dsr", "gp", "rp")


def solve(infra: Infrastructure, request: PlacementRequest, algorithm: str,
          failure_model: str = MULTI, seed=0) -> PlacementOutcome:
    """Dispatch by algorithm name (exact, dsr, gp, rp)."""
    if algorithm == "exact":
        return exact_place(infra, request, failure_model)
    if failure_model != MULTI:
        raise ValueError("heuristics support the multi-failure model only")
    if algorithm == "dsr":
        return dsr(infra, request)
    if algorithm == "gp":
        return baseline_place(infra, request, "greedy", seed)
    if algorithm == "rp":
        return baseline_place(infra, request, "random", seed)
    raise ValueError(f"unknown placement algorithm {algorithm!r}")
