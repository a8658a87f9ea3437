"""Workload generation, experiment runs and AR/ANUN aggregation."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _kernels
from . import placement as pl
from . import routing as rt
from .errors import SizeError, SoundnessError

CSV_HEADER = ("algorithm", "seed", "request_id", "accepted", "used_nodes", "availability", "runtime_us")


def _check_range(name, lo_hi):
    lo, hi = lo_hi
    if lo > hi:
        raise ValueError(f"{name}: empty range {lo_hi}")


def _check_set(name, values):
    if not values:
        raise ValueError(f"{name}: empty value set")


@dataclass
class SrngSpec:
    event_count: int = 15
    prob_set: tuple = (1e-6, 2e-6, 3e-6, 4e-6, 5e-6)
    max_memberships: int = 5

    def __post_init__(self):
        if self.event_count < 1 or self.max_memberships < 1:
            raise ValueError("SRNG event count and memberships must be >= 1")
        _check_set("srng prob_set", self.prob_set)


@dataclass
class PlacementWorkloadSpec:
    node_count: int = 16
    capacity_range: tuple = (100, 200)
    node_avail_set: tuple = (0.99, 0.999, 0.9995, 0.9999)
    srng_spec: SrngSpec | None = None
    request_count: int = 100
    k_range: tuple = (3, 5)
    demand_range: tuple = (60, 130)
    T_range: tuple = (15.0, 25.0)
    A_set: tuple = (0.999, 0.9999)
    delta_set: tuple = (0.999, 0.9999, 0.99999, 0.999999)
    H: int = 2
    alpha: float = 1.0
    seed: int = 0
    # direct: per-pair frontier drawn as below; oracle: routed over a random network
    compat_mode: str = "direct"
    compat_tiers: tuple = ((0.999, (10.0, 20.0)), (0.9999, (20.0, 30.0)))

    def __post_init__(self):
        if self.node_count < 1 or self.request_count < 0:
            raise ValueError("node_count must be >= 1 and request_count >= 0")
        for name in ("capacity_range", "k_range", "demand_range", "T_range"):
            _check_range(name, getattr(self, name))
        for name in ("node_avail_set", "A_set", "delta_set", "compat_tiers"):
            _check_set(name, getattr(self, name))
        if self.k_range[0] < 1:
            raise ValueError("k_range must start at >= 1")
        if self.compat_mode not in ("direct", "oracle"):
            raise ValueError(f"unknown compat_mode {self.compat_mode!r}")


@dataclass
class RoutingWorkloadSpec:
    network: rt.Network | None = None
    node_count: int = 24
    link_count: int = 43
    link_avail_set: tuple = (0.99, 0.999, 0.9999)
    link_delay_range: tuple = (10.0, 25.0)
    request_count: int = 1000
    eta_set: tuple = (0.9995, 0.9996, 0.9997, 0.9998, 0.9999)
    D_range: tuple = (15.0, 25.0)
    w: int = 1
    M: int | None = None
    seed: int = 0

    def __post_init__(self):
        _check_range("link_delay_range", self.link_delay_range)
        _check_range("D_range", self.D_range)
        _check_set("link_avail_set", self.link_avail_set)
        _check_set("eta_set", self.eta_set)
        if self.w < 1:
            raise ValueError("w must be >= 1")


def random_network(rng: np.random.Generator, node_count: int, link_count: int,
                   avail_set, delay_range, node_ids=None) -> rt.Network:
    """Connected random graph: a random spanning tree plus extra random links."""
    if node_count < 2:
        raise ValueError("a network needs at least two nodes")
    ids = list(node_ids) if node_ids is not None else [f"n{i}" for i in range(node_count)]
    order = rng.permutation(node_count)
    edges = set()
    for i in range(1, node_count):
        a, b = int(order[i]), int(order[rng.integers(0, i)])
        edges.add((min(a, b), max(a, b)))
    all_pairs = [p for p in combinations(range(node_count), 2) if p not in edges]
    extra = min(max(link_count - len(edges), 0), len(all_pairs))
    for j in rng.choice(len(all_pairs), size=extra, replace=False):
        edges.add(all_pairs[int(j)])
    links = []
    for a, b in sorted(edges):
        links.append(rt.Link(ids[a], ids[b], float(rng.choice(avail_set)),
                             round(float(rng.uniform(*delay_range)), 6)))
    return rt.Network(ids, links)


def gen_placement_workload(spec: PlacementWorkloadSpec):
    """Random infrastructure and requests, fully determined by ``spec.seed``."""
    # independent streams: toggling SRNG leaves nodes, compat and requests unchanged
    node_ss, srng_ss, compat_ss, request_ss = np.random.SeedSequence(spec.seed).spawn(4)
    rng = np.random.default_rng(node_ss)
    nodes = [pl.ServerNode(f"n{i}", float(rng.integers(spec.capacity_range[0], spec.capacity_range[1] + 1)),
                           float(rng.choice(spec.node_avail_set)))
             for i in range(spec.node_count)]
    events = []
    if spec.srng_spec is not None:
        rng = np.random.default_rng(srng_ss)
        events = [pl.SrngEvent(f"e{i}", float(rng.choice(spec.srng_spec.prob_set)))
                  for i in range(spec.srng_spec.event_count)]
        most = min(spec.srng_spec.max_memberships, len(events))
        for i, node in enumerate(nodes):
            picks = rng.choice(len(events), size=int(rng.integers(1, most + 1)), replace=False)
            nodes[i] = pl.ServerNode(node.id, node.capacity, node.availability,
                                     frozenset(events[int(j)].id for j in picks))
    ids = [n.id for n in nodes]
    rng = np.random.default_rng(compat_ss)
    if spec.compat_mode == "direct":
        compat = {}
        for a, b in combinations(ids, 2):
            compat[frozenset((a, b))] = [(eta, float(rng.uniform(*d_range)))
                                         for eta, d_range in spec.compat_tiers]
    else:
        net = random_network(rng, len(ids), 3 * len(ids), (0.999, 0.9999, 0.99999), (2.0, 10.0), ids)
        delays = np.arange(spec.T_range[0], spec.T_range[1] + 1.0)
        compat = rt.compat_oracle(net, list(combinations(ids, 2)), list(spec.A_set), list(delays), w=2)
    infra = pl.Infrastructure(tuple(nodes), tuple(events), compat)
    rng = np.random.default_rng(request_ss)
    requests = []
    for r in range(spec.request_count):
        k = int(rng.integers(spec.k_range[0], spec.k_range[1] + 1))
        vms = [(f"v{j}", float(rng.integers(spec.demand_range[0], spec.demand_range[1] + 1)))
               for j in range(k)]
        T = np.zeros((k, k))
        A = np.ones((k, k))
        for i, j in combinations(range(k), 2):
            T[i, j] = T[j, i] = float(rng.uniform(*spec.T_range))
            A[i, j] = A[j, i] = float(rng.choice(spec.A_set))
        requests.append(pl.PlacementRequest(vms, T, A, float(rng.choice(spec.delta_set)), spec.H, spec.alpha))
    return infra, requests


def gen_routing_workload(spec: RoutingWorkloadSpec):
    rng = np.random.default_rng(spec.seed)
    net = spec.network
    if net is None:
        net = random_network(rng, spec.node_count, spec.link_count, spec.link_avail_set, spec.link_delay_range)
    if len(net.nodes) < 2:
        raise ValueError("the network needs at least two nodes to draw s != t")
    requests = []
    for _ in range(spec.request_count):
        s, t = rng.choice(len(net.nodes), size=2, replace=False)
        requests.append(rt.RouteRequest(net.nodes[int(s)], net.nodes[int(t)],
                                        float(rng.choice(spec.eta_set)),
                                        round(float(rng.uniform(*spec.D_range)), 6), spec.w))
    return net, requests


@dataclass
class ResultRow:
    algorithm: str
    seed: int
    request_id: int
    accepted: bool
    used_nodes: int | None
    availability: float | None
    runtime_us: int
    error: str = ""

    def csv_fields(self) -> list:
        return [self.algorithm, self.seed, self.request_id, int(self.accepted),
                "" if self.used_nodes is None else self.used_nodes,
                "" if self.availability is None else repr(float(self.availability)),
                self.runtime_us]


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)

    def algorithms(self) -> list:
        return list(dict.fromkeys(r.algorithm for r in self.rows))

    def _select(self, algorithm):
        return [r for r in self.rows if algorithm is None or r.algorithm == algorithm]

    def total(self, algorithm=None) -> int:
        return len(self._select(algorithm))

    def accepted(self, algorithm=None) -> int:
        return sum(r.accepted for r in self._select(algorithm))

    def AR(self, algorithm=None) -> float | None:
        total = self.total(algorithm)
        return None if total == 0 else self.accepted(algorithm) / total

    def ANUN(self, algorithm=None) -> float | None:
        accepted = [r for r in self._select(algorithm) if r.accepted]
        if not accepted:
            return None
        return sum(r.used_nodes for r in accepted) / len(accepted)

    def total_runtime_us(self, algorithm=None) -> int:
        return sum(r.runtime_us for r in self._select(algorithm))

    def summary(self) -> dict:
        return {a: {"total": self.total(a), "accepted": self.accepted(a), "AR": self.AR(a),
                    "ANUN": self.ANUN(a), "runtime_us": self.total_runtime_us(a)}
                for a in self.algorithms()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow(r.csv_fields())
        return buf.getvalue()


def _runtime_us(seconds: float, timing: bool) -> int:
    return int(round(seconds * 1e6)) if timing else 0


def run_placement_experiment(infra, requests, algorithms=("dsr", "gp", "rp"), H_values=(2,),
                             seed: int = 0, failure_model: str = pl.MULTI, timing: bool = True,
                             ) -> ExperimentReport:
    """Run every algorithm on every request for every H.

    Requests are independent: each starts from the full infrastructure.  An
    oversized instance for ``exact`` becomes a rejected row carrying the error.
    """
    unknown = set(algorithms) - set(pl.SOLVERS)
    if unknown:
        raise ValueError(f"unknown placement algorithm(s) {sorted(unknown)}")
    if timing:
        _kernels.warmup()
    report = ExperimentReport()
    for H in H_values:
        for algorithm in algorithms:
            label = f"{algorithm}-H{H}"
            for rid, request in enumerate(requests):
                req = request.with_H(H)
                started = time.perf_counter()
                try:
                    outcome = pl.solve(infra, req, algorithm, failure_model, seed=[seed, rid])
                except SizeError as exc:
                    report.rows.append(ResultRow(label, seed, rid, False, None, None,
                                                 _runtime_us(time.perf_counter() - started, timing), str(exc)))
                    continue
                if outcome.accepted:
                    check = pl.validate_placement(infra, req, outcome.assignment, failure_model)
                    if not check.ok:
                        raise SoundnessError(f"{label} request {rid}: {check.violations}")
                report.rows.append(ResultRow(
                    label, seed, rid, outcome.accepted,
                    outcome.used_nodes if outcome.accepted else None,
                    outcome.achieved_availability if outcome.accepted else None,
                    _runtime_us(outcome.runtime, timing)))
    return report


def run_routing_experiment(net, requests, algorithms=("exact", "seqtamcra", "tadra"), w: int | None = None,
                           M: int | None = None, seed: int = 0, timing: bool = True) -> ExperimentReport:
    """Run every algorithm on every request; accepted path sets are re-verified."""
    unknown = set(algorithms) - set(rt.ALGORITHMS)
    if unknown:
        raise ValueError(f"unknown routing algorithm(s) {sorted(unknown)}")
    if timing:
        _kernels.warmup()
    report = ExperimentReport()
    for algorithm in algorithms:
        for rid, req in enumerate(requests):
            if w is not None and req.w != w:
                req = rt.RouteRequest(req.s, req.t, req.eta, req.max_delay, w)
            label = f"{algorithm}-w{req.w}"
            outcome = rt.solve(net, req, algorithm, M)
            rt.check_sound(net, req, outcome)
            ps = outcome.path_set
            report.rows.append(ResultRow(
                label, seed, rid, outcome.accepted,
                len(ps.paths) if outcome.accepted else None,
                ps.availability if outcome.accepted else None,
                _runtime_us(outcome.runtime, timing)))
    return report
