"""Availability-based delay-constrained routing.

A request asks for up to ``w`` source-destination paths, each within delay
``D``, such that the probability that at least one path is fully up reaches
``eta``.  Paths may share links; a shared link is counted once.

Solvers: :func:`route_exact` (best-first label search, on a layered copy of
the graph when ``w > 1``), :func:`tadra` (same search with a per-node label
budget), :func:`seq_tamcra` (one path per round, pruning used links),
:func:`route_single_link_failure` (min-availability model) and the
:func:`brute_force_route` oracle.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, count
from typing import Iterable, Sequence

from .availability import (
    MAX_BRUTE_FORCE_ATOMS,
    AtomKind,
    AtomUniverse,
    RiskAtom,
    brute_force_availability,
    multi_group_availability,
)
from .errors import ResolutionError, SizeError, SoundnessError

AVAIL_TOL = 1e-12
DELAY_TOL = 1e-9
BRUTE_FORCE_MAX_NODES = 10


def link_key(u, v) -> tuple:
    return (u, v) if str(u) <= str(v) else (v, u)


@dataclass(frozen=True)
class Link:
    u: object
    v: object
    availability: float
    delay: float
    srlg: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "srlg", frozenset(self.srlg))
        if self.u == self.v:
            raise ValueError(f"self-loop at {self.u!r}")
        if not 0.0 < self.availability <= 1.0:
            raise ValueError(f"link {self.u}-{self.v}: availability must lie in (0, 1]")
        if not self.delay >= 0:
            raise ValueError(f"link {self.u}-{self.v}: delay must be non-negative")

    @property
    def key(self) -> tuple:
        return link_key(self.u, self.v)


class Network:
    """Undirected graph with per-link availability and delay.

    ``srlg_events`` maps shared-risk event ids to failure probabilities; a
    link fails when it fails itself or when any of its events occurs.
    """

    def __init__(self, nodes: Iterable, links: Iterable[Link], srlg_events: dict | None = None):
        self.nodes = tuple(dict.fromkeys(nodes))
        self.srlg_events = dict(srlg_events or {})
        node_set = set(self.nodes)
        self.links: tuple = tuple(links)
        self._index: dict = {}
        for i, link in enumerate(self.links):
            for end in (link.u, link.v):
                if end not in node_set:
                    raise ResolutionError(f"link {link.u}-{link.v} references unknown node {end!r}")
            if link.key in self._index:
                raise ValueError(f"duplicate link {link.u}-{link.v}")
            missing = link.srlg - self.srlg_events.keys()
            if missing:
                raise ResolutionError(f"link {link.u}-{link.v} references unknown SRLG event(s) {sorted(missing)}")
            self._index[link.key] = i
        for e, p in self.srlg_events.items():
            if not 0.0 <= p < 1.0:
                raise ValueError(f"SRLG event {e!r}: failure_prob must lie in [0, 1)")
        self.adjacency: dict = {n: [] for n in self.nodes}
        for i, link in enumerate(self.links):
            self.adjacency[link.u].append((link.v, i))
            self.adjacency[link.v].append((link.u, i))

    def __repr__(self):
        return f"Network({len(self.nodes)} nodes, {len(self.links)} links)"

    def link_index(self, u, v) -> int:
        try:
            return self._index[link_key(u, v)]
        except KeyError:
            raise ResolutionError(f"no link between {u!r} and {v!r}") from None

    @property
    def has_srlg(self) -> bool:
        return any(link.srlg for link in self.links)

    @cached_property
    def universe(self) -> AtomUniverse:
        atoms = [RiskAtom(self.link_atom(i), AtomKind.LINK, link.availability)
                 for i, link in enumerate(self.links)]
        atoms += [RiskAtom(f"srlg:{e}", AtomKind.SRNG_EVENT, 1.0 - p) for e, p in self.srlg_events.items()]
        return AtomUniverse(atoms)

    def link_atom(self, i: int) -> str:
        u, v = self.links[i].key
        return f"link:{u}-{v}"

    @cached_property
    def _link_atoms(self) -> list:
        return [frozenset([self.link_atom(i), *(f"srlg:{e}" for e in link.srlg)])
                for i, link in enumerate(self.links)]

    def atoms_of(self, link_ids: Iterable[int]) -> frozenset:
        return frozenset().union(*(self._link_atoms[i] for i in link_ids))

    def path_links(self, path: Sequence) -> list:
        return [self.link_index(a, b) for a, b in zip(path, path[1:])]

    def path_delay(self, path: Sequence) -> float:
        return sum(self.links[i].delay for i in self.path_links(path))

    def availability(self, link_sets: Sequence[Iterable[int]]) -> float:
        return multi_group_availability(self.universe, [self.atoms_of(s) for s in link_sets])

    def without_links(self, removed: Iterable[int]) -> "Network":
        removed = set(removed)
        return Network(self.nodes, [l for i, l in enumerate(self.links) if i not in removed], self.srlg_events)


@dataclass(frozen=True)
class RouteRequest:
    s: object
    t: object
    eta: float
    max_delay: float
    w: int = 1

    def __post_init__(self):
        if self.s == self.t:
            raise ValueError("source and destination must differ")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if not self.max_delay > 0:
            raise ValueError("max_delay must be positive")
        if self.w < 1:
            raise ValueError("w must be >= 1")


@dataclass(frozen=True)
class PathSet:
    paths: tuple        # node sequences
    delays: tuple
    availability: float

    def link_sets(self, net: Network) -> list:
        return [frozenset(net.path_links(p)) for p in self.paths]


@dataclass
class RouteOutcome:
    accepted: bool
    path_set: PathSet | None = None
    stats: dict = field(default_factory=dict)
    runtime: float = 0.0
    algorithm: str = ""


def make_path_set(net: Network, paths: Sequence[Sequence]) -> PathSet:
    paths = tuple(tuple(p) for p in paths)
    delays = tuple(net.path_delay(p) for p in paths)
    return PathSet(paths, delays, net.availability([net.path_links(p) for p in paths]))


def verify_path_set(net: Network, req: RouteRequest, path_set: PathSet) -> list:
    """Reasons the path set violates the request (empty list: sound)."""
    problems = []
    if not 1 <= len(path_set.paths) <= req.w:
        problems.append(f"{len(path_set.paths)} paths, allowed 1..{req.w}")
    link_sets = []
    for p in path_set.paths:
        if p[0] != req.s or p[-1] != req.t:
            problems.append(f"path {p} does not run from {req.s!r} to {req.t!r}")
        if len(set(p)) != len(p):
            problems.append(f"path {p} is not simple")
        try:
            links = net.path_links(p)
        except ResolutionError as exc:
            problems.append(str(exc))
            continue
        delay = sum(net.links[i].delay for i in links)
        if delay > req.max_delay + DELAY_TOL:
            problems.append(f"path {p} has delay {delay:g} > {req.max_delay:g}")
        link_sets.append(links)
    if problems:
        return problems
    groups = [net.atoms_of(s) for s in link_sets]
    if len(frozenset().union(*groups)) <= MAX_BRUTE_FORCE_ATOMS:
        avail = brute_force_availability(net.universe, groups)
    else:
        avail = multi_group_availability(net.universe, groups)
    if avail < req.eta - AVAIL_TOL:
        problems.append(f"availability {avail:.12g} < eta {req.eta:g}")
    if abs(avail - path_set.availability) > 1e-9:
        problems.append(f"reported availability {path_set.availability:.12g} != recomputed {avail:.12g}")
    return problems


def check_sound(net: Network, req: RouteRequest, outcome: RouteOutcome) -> None:
    if outcome.accepted:
        problems = verify_path_set(net, req, outcome.path_set)
        if problems:
            raise SoundnessError(f"{outcome.algorithm}: " + "; ".join(problems))


# ---------------------------------------------------------------------------
# layered graph

@dataclass
class LayeredGraph:
    """``w`` copies of a network chained by bridges (t_i, s_{i+1}).

    Layered node ids are ``(original_id, layer)`` with layers numbered from 1.
    ``link_map`` sends every layered link index to its original link index,
    or to ``None`` for a bridge.
    """

    network: Network
    w: int
    s: object
    t: object
    link_map: dict

    def node_map(self, node) -> object:
        return node[0]


def _layered(net: Network, w: int, s, t) -> LayeredGraph:
    nodes = [(v, i) for i in range(1, w + 1) for v in net.nodes]
    links, link_map = [], {}
    for i in range(1, w + 1):
        for j, link in enumerate(net.links):
            link_map[len(links)] = j
            links.append(Link((link.u, i), (link.v, i), link.availability, link.delay))
    for i in range(1, w):
        link_map[len(links)] = None
        links.append(Link((t, i), (s, i + 1), 1.0, 0.0))
    return LayeredGraph(Network(nodes, links), w, s, t, link_map)


def build_layered_graph(net: Network, w: int, s, t) -> LayeredGraph:
    """Layered copy used to search ``w`` paths as one walk."""
    if w < 2:
        raise ValueError("the layered graph needs w >= 2")
    for v in (s, t):
        if v not in net.adjacency:
            raise ResolutionError(f"unknown node {v!r}")
    return _layered(net, w, s, t)


# ---------------------------------------------------------------------------
# label search

class _Label:
    __slots__ = ("node", "layer", "completed", "cur", "visited", "delay", "avail",
                 "parent", "expanded", "dead")

    def __init__(self, node, layer, completed, cur, visited, delay, avail, parent):
        self.node = node
        self.layer = layer
        self.completed = completed      # tuple of frozensets of original link ids
        self.cur = cur                  # frozenset of original link ids
        self.visited = visited          # original nodes of the current segment
        self.delay = delay
        self.avail = avail
        self.parent = parent
        self.expanded = False
        self.dead = False

    def segments(self) -> list:
        """Node sequences of every segment, the in-progress one last."""
        chain = []
        label = self
        while label is not None:
            chain.append(label)
            label = label.parent
        chain.reverse()
        segments = [[chain[0].node]]
        for prev, label in zip(chain, chain[1:]):
            if label.layer != prev.layer:
                segments.append([label.node])
            else:
                segments[-1].append(label.node)
        return segments


def _dijkstra(net: Network, source, weight) -> dict:
    dist = {source: 0.0}
    heap = [(0.0, 0, source)]
    tie = count(1)
    while heap:
        d, _, u = heapq.heappop(heap)
        if d > dist.get(u, math.inf):
            continue
        for v, i in net.adjacency[u]:
            nd = d + weight(net.links[i])
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, next(tie), v))
    return dist


class _Search:
    """Best-first search over (node, layer) labels.

    Every queue key is an upper bound on the best connection availability any
    completion of the label can reach, so the first finished path set taken
    from the queue is optimal.  ``budget`` caps the labels kept per node copy
    (``None``: unbounded).
    """

    def __init__(self, net: Network, req: RouteRequest, budget: int | None = None,
                 single_path_bound: float = 1.0):
        self.net = net
        self.req = req
        self.budget = budget
        self.a_max = single_path_bound
        self.pareto = req.w == 1 and not net.has_srlg
        to_t_log = _dijkstra(net, req.t, lambda l: -math.log(l.availability))
        self.h = {u: math.exp(-d) for u, d in to_t_log.items()}
        self.min_delay = _dijkstra(net, req.t, lambda l: l.delay)
        self._avail_cache: dict = {}
        self.stats = {"labels_created": 0, "labels_expanded": 0, "max_labels_per_node": 0}

    def availability(self, completed, cur=None) -> float:
        key = frozenset(completed) if cur is None else frozenset(completed) | {cur}
        value = self._avail_cache.get(key)
        if value is None:
            value = self.net.availability(list(key))
            self._avail_cache[key] = value
        return value

    def bound(self, label: _Label) -> float:
        remaining = (1.0 - self.a_max) ** (self.req.w - label.layer)
        if label.node == self.req.t:
            seg = label.avail
        else:
            base = self.availability(label.completed) if label.completed else 0.0
            path_cap = min(self._cur_avail(label) * self.h.get(label.node, 0.0), self.a_max)
            # an empty in-progress path imposes nothing yet
            with_cur = label.avail if label.cur else 1.0
            seg = min(with_cur, 1.0 - (1.0 - base) * (1.0 - path_cap))
        return 1.0 - (1.0 - seg) * remaining

    def _cur_avail(self, label: _Label) -> float:
        return self.availability((), label.cur)

    def run(self):
        req, net = self.req, self.net
        if req.s not in net.adjacency or req.t not in net.adjacency:
            raise ResolutionError(f"unknown endpoint {req.s!r} or {req.t!r}")
        floor = req.eta - AVAIL_TOL
        heap: list = []
        tie = count()
        store: dict = {}     # (node, layer) -> labels kept
        seen: set = set()

        def push(label: _Label) -> None:
            if label.delay + self.min_delay.get(label.node, math.inf) > req.max_delay + DELAY_TOL:
                return
            b = self.bound(label)
            if b < floor:
                return
            slot = (label.node, label.layer)
            kept = store.setdefault(slot, [])
            if self.pareto:
                for other in kept:
                    if not other.dead and other.avail >= label.avail and other.delay <= label.delay:
                        return
                for other in kept:
                    if not other.dead and label.avail >= other.avail and label.delay <= other.delay:
                        other.dead = True
            else:
                key = (label.node, label.layer, frozenset(label.completed), label.cur)
                if key in seen:
                    return
                seen.add(key)
            if self.budget is not None and len(kept) >= self.budget:
                victims = [o for o in kept if not o.expanded]
                if not victims:
                    return
                worst = min(victims, key=lambda o: (o.dead is False, o.avail, -o.delay))
                if not worst.dead and (worst.avail, -worst.delay) >= (label.avail, -label.delay):
                    return
                worst.dead = True
                kept.remove(worst)
            kept.append(label)
            self.stats["labels_created"] += 1
            self.stats["max_labels_per_node"] = max(self.stats["max_labels_per_node"], len(kept))
            n_paths = len(label.completed) + 1
            if label.node == req.t and label.avail >= floor:
                heapq.heappush(heap, (-label.avail, n_paths, 0, label.delay, next(tie), label))
            if label.node != req.t or label.layer < req.w:
                heapq.heappush(heap, (-b, n_paths, 1, label.delay, next(tie), label))

        push(_Label(req.s, 1, (), frozenset(), frozenset([req.s]), 0.0, 1.0, None))
        while heap:
            _, _, expand, _, _, label = heapq.heappop(heap)
            if label.dead:
                continue
            if not expand:
                return label
            label.expanded = True
            self.stats["labels_expanded"] += 1
            if label.node == req.t:
                # freeze the finished segment and restart at the source one layer up
                done = label.completed + (label.cur,)
                if label.cur in label.completed:
                    continue
                push(_Label(req.s, label.layer + 1, done, frozenset(), frozenset([req.s]),
                            0.0, label.avail, label))
                continue
            for v, i in net.adjacency[label.node]:
                if v in label.visited:
                    continue
                delay = label.delay + net.links[i].delay
                if delay > req.max_delay + DELAY_TOL:
                    continue
                cur = label.cur | {i}
                if v == req.t and cur in label.completed:
                    continue
                push(_Label(v, label.layer, label.completed, cur, label.visited | {v},
                            delay, self.availability(label.completed, cur), label))
        return None


def _outcome_from_label(net: Network, label, stats, started, algorithm) -> RouteOutcome:
    runtime = time.perf_counter() - started
    if label is None:
        return RouteOutcome(False, None, stats, runtime, algorithm)
    return RouteOutcome(True, make_path_set(net, label.segments()), stats, runtime, algorithm)


def _best_single_path(net: Network, req: RouteRequest) -> float:
    single = RouteRequest(req.s, req.t, 0.0, req.max_delay, 1)
    label = _Search(net, single).run()
    return 0.0 if label is None else label.avail


def _route_search(net: Network, req: RouteRequest, budget, algorithm) -> RouteOutcome:
    started = time.perf_counter()
    a_max = 1.0
    if req.w > 1:
        a_max = _best_single_path(net, req)
        if a_max <= 0.0:
            return RouteOutcome(False, None, {}, time.perf_counter() - started, algorithm)
    search = _Search(net, req, budget, a_max)
    label = search.run()
    return _outcome_from_label(net, label, search.stats, started, algorithm)


def route_exact(net: Network, req: RouteRequest) -> RouteOutcome:
    """Path set of maximum connection availability, accepted iff it reaches eta.

    With ``w > 1`` the search walks the layered graph: reaching t in layer i
    closes path i and the bridge to s in layer i+1 starts the next one.
    Labels carry the original link sets of every path, so a link used by two
    paths counts once.  For ``w = 1`` without shared-risk events, labels
    dominated in both availability and delay are discarded.
    """
    return _route_search(net, req, None, "exact")


def tadra(net: Network, req: RouteRequest, M: int | None = None) -> RouteOutcome:
    """:func:`route_exact` keeping at most ``M`` labels per node copy (default ``w * N``)."""
    if M is None:
        M = req.w * len(net.nodes)
    if M < 1:
        raise ValueError("M must be >= 1")
    return _route_search(net, req, M, "tadra")


def _bounded_best_path(net: Network, s, t, max_delay: float, M: int):
    """Most available s-t path within the delay bound, keeping <= M nondominated labels per node."""
    heap: list = []
    tie = count()
    kept: dict = {}

    def push(label):
        labels = kept.setdefault(label.node, [])
        for other in labels:
            if not other.dead and other.avail >= label.avail and other.delay <= label.delay:
                return
        for other in labels:
            if not other.dead and label.avail >= other.avail and label.delay <= other.delay:
                other.dead = True
        labels[:] = [o for o in labels if not o.dead]
        if len(labels) >= M:
            worst = min(labels, key=lambda o: (o.avail, -o.delay))
            if (worst.avail, -worst.delay) >= (label.avail, -label.delay):
                return
            worst.dead = True
            labels.remove(worst)
        labels.append(label)
        heapq.heappush(heap, (-label.avail, label.delay, next(tie), label))

    push(_Label(s, 1, (), frozenset(), frozenset([s]), 0.0, 1.0, None))
    while heap:
        _, _, _, label = heapq.heappop(heap)
        if label.dead:
            continue
        if label.node == t:
            return label
        for v, i in net.adjacency[label.node]:
            if v in label.visited:
                continue
            delay = label.delay + net.links[i].delay
            if delay > max_delay + DELAY_TOL:
                continue
            cur = label.cur | {i}
            push(_Label(v, 1, (), cur, label.visited | {v}, delay,
                        net.availability([cur]), label))
    return None


def seq_tamcra(net: Network, req: RouteRequest, M: int | None = None) -> RouteOutcome:
    """Pick the most available path, delete its links, repeat up to ``w`` times."""
    if M is None:
        M = req.w * len(net.nodes)
    if M < 1:
        raise ValueError("M must be >= 1")
    started = time.perf_counter()
    work = net
    paths: list = []
    for _ in range(req.w):
        label = _bounded_best_path(work, req.s, req.t, req.max_delay, M)
        if label is None:
            break
        path = label.segments()[0]
        paths.append(path)
        work = work.without_links(net.path_links(path))
        if net.availability([net.path_links(p) for p in paths]) >= req.eta - AVAIL_TOL:
            return RouteOutcome(True, make_path_set(net, paths), {"rounds": len(paths)},
                                time.perf_counter() - started, "seqtamcra")
    return RouteOutcome(False, None, {"rounds": len(paths)}, time.perf_counter() - started, "seqtamcra")


def route_single_link_failure(net: Network, req: RouteRequest) -> RouteOutcome:
    """Min-delay path over links with availability >= eta (at most one link fails at a time)."""
    if req.w != 1:
        raise ValueError("the single-link-failure algorithm finds one path (w = 1)")
    started = time.perf_counter()
    pruned = Network(net.nodes, [l for l in net.links if l.availability >= req.eta], net.srlg_events)
    dist = {req.s: 0.0}
    prev: dict = {}
    heap = [(0.0, 0, req.s)]
    tie = count(1)
    while heap:
        d, _, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if u == req.t:
            break
        for v, i in pruned.adjacency[u]:
            nd = d + pruned.links[i].delay
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, next(tie), v))
    runtime = time.perf_counter() - started
    if dist.get(req.t, math.inf) > req.max_delay + DELAY_TOL:
        return RouteOutcome(False, None, {}, runtime, "single-link")
    path = [req.t]
    while path[-1] != req.s:
        path.append(prev[path[-1]])
    path.reverse()
    links = net.path_links(path)
    ps = PathSet((tuple(path),), (dist[req.t],), min(net.links[i].availability for i in links))
    return RouteOutcome(True, ps, {}, runtime, "single-link")


def simple_paths(net: Network, s, t, max_delay: float) -> list:
    """Every simple s-t path with delay <= max_delay, as (nodes, delay)."""
    out = []
    stack = [(s, [s], 0.0)]
    while stack:
        u, path, delay = stack.pop()
        if u == t:
            out.append((tuple(path), delay))
            continue
        for v, i in net.adjacency[u]:
            d = delay + net.links[i].delay
            if v not in path and d <= max_delay + DELAY_TOL:
                stack.append((v, path + [v], d))
    out.sort()
    return out


def brute_force_route(net: Network, req: RouteRequest) -> RouteOutcome:
    """Try every set of at most ``w`` delay-feasible simple paths."""
    if len(net.nodes) > BRUTE_FORCE_MAX_NODES:
        raise SizeError(f"brute_force_route handles at most {BRUTE_FORCE_MAX_NODES} nodes")
    started = time.perf_counter()
    paths = simple_paths(net, req.s, req.t, req.max_delay)
    link_sets = [frozenset(net.path_links(p)) for p, _ in paths]
    best, best_key = None, None
    for size in range(1, req.w + 1):
        for combo in combinations(range(len(paths)), size):
            avail = net.availability([link_sets[i] for i in combo])
            key = (avail, -size)
            if best_key is None or key > best_key:
                best, best_key = combo, key
    runtime = time.perf_counter() - started
    if best is None or best_key[0] < req.eta - AVAIL_TOL:
        return RouteOutcome(False, None, {"paths": len(paths)}, runtime, "brute-force")
    return RouteOutcome(True, make_path_set(net, [paths[i][0] for i in best]),
                        {"paths": len(paths)}, runtime, "brute-force")


def compat_oracle(net: Network, pairs: Iterable, eta_values: Sequence[float],
                  delay_values: Sequence[float], w: int = 1, use_tadra: bool = False,
                  M: int | None = None) -> dict:
    """Pareto frontier of (availability, delay) connections for each node pair.

    For each delay bound the best path set is computed once; a pair is then
    compatible at (eta, D) exactly when some frontier point has availability
    >= eta and delay <= D.
    """
    if not eta_values or not delay_values:
        raise ValueError("eta_values and delay_values must be non-empty")
    from .placement import pareto_frontier

    eta_min = min(eta_values)
    out = {}
    for a, b in pairs:
        points = []
        for D in sorted(set(delay_values)):
            req = RouteRequest(a, b, eta_min, D, w)
            outcome = tadra(net, req, M) if use_tadra else route_exact(net, req)
            if outcome.accepted:
                ps = outcome.path_set
                points.append((ps.availability, max(ps.delays)))
        out[frozenset((a, b))] = pareto_frontier(points)
    return out


ALGORITHMS = ("exact", "tadra", "seqtamcra")


def solve(net: Network, req: RouteRequest, algorithm: str, M: int | None = None) -> RouteOutcome:
    if algorithm == "exact":
        return route_exact(net, req)
    if algorithm == "tadra":
        return tadra(net, req, M)
    if algorithm == "seqtamcra":
        return seq_tamcra(net, req, M)
    if algorithm in ("single-link", "single_link"):
        return route_single_link_failure(net, req)
    raise ValueError(f"unknown routing algorithm {algorithm!r}")
