"""JSON documents: parsers with path-qualified errors, and serializers.

Every parser takes an already-decoded JSON value.  Errors name the offending
field with a JSONPath-like pointer such as ``$.nodes[2].availability``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import harness as hs
from . import placement as pl
from . import routing as rt
from .availability import AtomKind, AtomUniverse, RiskAtom
from .errors import ResolutionError, SchemaError

_MISSING = object()


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON in {path}: {exc}") from None


def dump_json(doc, path=None) -> str:
    text = json.dumps(doc, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# ---------------------------------------------------------------------------
# field helpers

def _obj(value, path) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, "expected an object")
    return value


def _list(value, path) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, "expected an array")
    return value


def _get(obj, key, path, default=_MISSING):
    if key in obj:
        return obj[key]
    if default is _MISSING:
        raise SchemaError(f"{path}.{key}", "required field is missing")
    return default


def _number(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(path, "expected a finite number")
    return float(value)


def _int(value, path) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, "expected an integer")
    return value


def _ident(value, path) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(path, "expected a non-empty string id")
    return value


def _prob(value, path, *, zero_ok=False, one_ok=True) -> float:
    x = _number(value, path)
    lo_ok = x >= 0 if zero_ok else x > 0
    hi_ok = x <= 1 if one_ok else x < 1
    if not (lo_ok and hi_ok):
        lo = "[0" if zero_ok else "(0"
        hi = "1]" if one_ok else "1)"
        raise SchemaError(path, f"value {x} out of range {lo}, {hi}")
    return x


def _positive(value, path) -> float:
    x = _number(value, path)
    if not x > 0:
        raise SchemaError(path, f"value {x} must be positive")
    return x


def _events(items, path) -> dict:
    out = {}
    for i, e in enumerate(_list(items, path)):
        p = f"{path}[{i}]"
        e = _obj(e, p)
        eid = _ident(_get(e, "id", p), f"{p}.id")
        if eid in out:
            raise SchemaError(f"{p}.id", f"duplicate event id {eid!r}")
        out[eid] = _prob(_get(e, "failure_prob", p), f"{p}.failure_prob", zero_ok=True, one_ok=False)
    return out


# ---------------------------------------------------------------------------
# infrastructure

def parse_infrastructure(doc) -> pl.Infrastructure:
    doc = _obj(doc, "$")
    events = _events(doc.get("srng_events", []), "$.srng_events")
    nodes, seen = [], set()
    for i, n in enumerate(_list(_get(doc, "nodes", "$"), "$.nodes")):
        p = f"$.nodes[{i}]"
        n = _obj(n, p)
        nid = _ident(_get(n, "id", p), f"{p}.id")
        if nid in seen:
            raise SchemaError(f"{p}.id", f"duplicate node id {nid!r}")
        seen.add(nid)
        srng = []
        for j, e in enumerate(_list(n.get("srng", []), f"{p}.srng")):
            e = _ident(e, f"{p}.srng[{j}]")
            if e not in events:
                raise ResolutionError(f"{p}.srng[{j}]: unknown SRNG event {e!r}")
            srng.append(e)
        nodes.append(pl.ServerNode(nid, _positive(_get(n, "capacity", p), f"{p}.capacity"),
                                   _prob(_get(n, "availability", p), f"{p}.availability"),
                                   frozenset(srng)))
    compat = {}
    pairs = _obj(doc.get("compat", {"pairs": []}), "$.compat")
    for i, entry in enumerate(_list(pairs.get("pairs", []), "$.compat.pairs")):
        p = f"$.compat.pairs[{i}]"
        entry = _obj(entry, p)
        a = _ident(_get(entry, "a", p), f"{p}.a")
        b = _ident(_get(entry, "b", p), f"{p}.b")
        for key, nid in (("a", a), ("b", b)):
            if nid not in seen:
                raise ResolutionError(f"{p}.{key}: unknown node {nid!r}")
        if a == b:
            raise SchemaError(p, "a compat pair needs two distinct nodes")
        key = frozenset((a, b))
        if key in compat:
            raise SchemaError(p, f"duplicate compat pair {a!r}-{b!r}")
        points = []
        for j, pt in enumerate(_list(_get(entry, "frontier", p), f"{p}.frontier")):
            q = f"{p}.frontier[{j}]"
            pt = _obj(pt, q)
            points.append((_prob(_get(pt, "availability", q), f"{q}.availability"),
                           _number(_get(pt, "delay", q), f"{q}.delay")))
        for j, (x, dx) in enumerate(points):
            for y, dy in points[:j] + points[j + 1:]:
                if y >= x and dy <= dx:
                    raise SchemaError(f"{p}.frontier[{j}]", "point is dominated by another frontier point")
        compat[key] = points
    return pl.Infrastructure(tuple(nodes), tuple(pl.SrngEvent(e, q) for e, q in events.items()), compat)


def serialize_infrastructure(infra: pl.Infrastructure) -> dict:
    doc = {
        "nodes": [{"id": n.id, "capacity": n.capacity, "availability": n.availability,
                   "srng": sorted(n.srng_ids)} for n in infra.nodes],
        "srng_events": [{"id": e.id, "failure_prob": e.failure_prob} for e in infra.srng_events],
        "compat": {"pairs": []},
    }
    order = infra.index
    for pair, front in sorted(infra.compat.items(), key=lambda kv: sorted(order[x] for x in kv[0])):
        a, b = sorted(pair, key=order.get)
        doc["compat"]["pairs"].append({"a": a, "b": b, "frontier": [
            {"availability": x, "delay": d} for x, d in front]})
    return doc


# ---------------------------------------------------------------------------
# network

def parse_network(doc) -> rt.Network:
    doc = _obj(doc, "$")
    nodes = []
    for i, n in enumerate(_list(_get(doc, "nodes", "$"), "$.nodes")):
        n = _ident(n, f"$.nodes[{i}]")
        if n in nodes:
            raise SchemaError(f"$.nodes[{i}]", f"duplicate node id {n!r}")
        nodes.append(n)
    node_set = set(nodes)
    events = _events(doc.get("srlg_events", []), "$.srlg_events")
    links, seen = [], set()
    for i, l in enumerate(_list(_get(doc, "links", "$"), "$.links")):
        p = f"$.links[{i}]"
        l = _obj(l, p)
        u = _ident(_get(l, "u", p), f"{p}.u")
        v = _ident(_get(l, "v", p), f"{p}.v")
        for key, nid in (("u", u), ("v", v)):
            if nid not in node_set:
                raise ResolutionError(f"{p}.{key}: unknown node {nid!r}")
        if u == v:
            raise SchemaError(p, "self-loops are not allowed")
        key = rt.link_key(u, v)
        if key in seen:
            raise SchemaError(p, f"duplicate link {u!r}-{v!r}")
        seen.add(key)
        srlg = []
        for j, e in enumerate(_list(l.get("srlg", []), f"{p}.srlg")):
            e = _ident(e, f"{p}.srlg[{j}]")
            if e not in events:
                raise ResolutionError(f"{p}.srlg[{j}]: unknown SRLG event {e!r}")
            srlg.append(e)
        links.append(rt.Link(u, v, _prob(_get(l, "availability", p), f"{p}.availability"),
                             _positive(_get(l, "delay", p), f"{p}.delay"), frozenset(srlg)))
    return rt.Network(nodes, links, events)


def serialize_network(net: rt.Network) -> dict:
    doc = {"nodes": list(net.nodes), "links": []}
    for l in net.links:
        item = {"u": l.u, "v": l.v, "availability": l.availability, "delay": l.delay}
        if l.srlg:
            item["srlg"] = sorted(l.srlg)
        doc["links"].append(item)
    if net.srlg_events:
        doc["srlg_events"] = [{"id": e, "failure_prob": p} for e, p in net.srlg_events.items()]
    return doc


# ---------------------------------------------------------------------------
# requests

def _matrix(value, k, path, check) -> np.ndarray:
    rows = _list(value, path)
    if len(rows) != k:
        raise SchemaError(path, f"expected {k} rows, got {len(rows)}")
    out = np.zeros((k, k))
    for i, row in enumerate(rows):
        row = _list(row, f"{path}[{i}]")
        if len(row) != k:
            raise SchemaError(f"{path}[{i}]", f"expected {k} entries, got {len(row)}")
        for j, x in enumerate(row):
            q = f"{path}[{i}][{j}]"
            out[i, j] = check(x, q) if i != j else _number(x, q)
    for i in range(k):
        for j in range(i + 1, k):
            if out[i, j] != out[j, i]:
                raise SchemaError(f"{path}[{j}][{i}]", "matrix must be symmetric")
    return out


def parse_placement_request(doc) -> pl.PlacementRequest:
    doc = _obj(doc, "$")
    vms, seen = [], set()
    for i, v in enumerate(_list(_get(doc, "vms", "$"), "$.vms")):
        p = f"$.vms[{i}]"
        v = _obj(v, p)
        vid = _ident(_get(v, "id", p), f"{p}.id")
        if vid in seen:
            raise SchemaError(f"{p}.id", f"duplicate VM id {vid!r}")
        seen.add(vid)
        vms.append((vid, _positive(_get(v, "demand", p), f"{p}.demand")))
    if not vms:
        raise SchemaError("$.vms", "at least one VM is required")
    k = len(vms)
    T = _matrix(_get(doc, "delay_matrix", "$"), k, "$.delay_matrix", _positive)
    A = _matrix(_get(doc, "avail_matrix", "$"), k, "$.avail_matrix", _prob)
    delta = _prob(_get(doc, "delta", "$"), "$.delta")
    H = _int(doc.get("H", 1), "$.H")
    if H < 1:
        raise SchemaError("$.H", "H must be >= 1")
    alpha = _positive(doc.get("alpha", 1.0), "$.alpha")
    return pl.PlacementRequest(vms, T, A, delta, H, alpha)


def serialize_placement_request(req: pl.PlacementRequest) -> dict:
    return {"vms": [{"id": v, "demand": c} for v, c in req.vms],
            "delay_matrix": req.delay_matrix.tolist(), "avail_matrix": req.avail_matrix.tolist(),
            "delta": req.delta, "H": req.H, "alpha": req.alpha}


def parse_route_request(doc, net: rt.Network | None = None) -> rt.RouteRequest:
    doc = _obj(doc, "$")
    s = _ident(_get(doc, "s", "$"), "$.s")
    t = _ident(_get(doc, "t", "$"), "$.t")
    if net is not None:
        for key, nid in (("s", s), ("t", t)):
            if nid not in net.adjacency:
                raise ResolutionError(f"$.{key}: unknown node {nid!r}")
    if s == t:
        raise SchemaError("$.t", "destination must differ from source")
    eta = _prob(_get(doc, "eta", "$"), "$.eta", zero_ok=True)
    D = _positive(_get(doc, "max_delay", "$"), "$.max_delay")
    w = _int(doc.get("w", 1), "$.w")
    if w < 1:
        raise SchemaError("$.w", "w must be >= 1")
    return rt.RouteRequest(s, t, eta, D, w)


def serialize_route_request(req: rt.RouteRequest) -> dict:
    return {"s": req.s, "t": req.t, "eta": req.eta, "max_delay": req.max_delay, "w": req.w}


# ---------------------------------------------------------------------------
# availability oracle input

def parse_groups(doc):
    """``{"atoms": [{"id", "up_prob", "kind"}], "groups": [[atom ids]]}`` -> (universe, groups)."""
    doc = _obj(doc, "$")
    atoms, seen = [], set()
    kinds = {k.value for k in AtomKind}
    for i, a in enumerate(_list(_get(doc, "atoms", "$"), "$.atoms")):
        p = f"$.atoms[{i}]"
        a = _obj(a, p)
        aid = _ident(_get(a, "id", p), f"{p}.id")
        if aid in seen:
            raise SchemaError(f"{p}.id", f"duplicate atom id {aid!r}")
        seen.add(aid)
        kind = a.get("kind", "node")
        if kind not in kinds:
            raise SchemaError(f"{p}.kind", f"kind must be one of {sorted(kinds)}")
        atoms.append(RiskAtom(aid, AtomKind(kind), _prob(_get(a, "up_prob", p), f"{p}.up_prob")))
    groups = []
    for i, g in enumerate(_list(_get(doc, "groups", "$"), "$.groups")):
        group = []
        for j, aid in enumerate(_list(g, f"$.groups[{i}]")):
            aid = _ident(aid, f"$.groups[{i}][{j}]")
            if aid not in seen:
                raise ResolutionError(f"$.groups[{i}][{j}]: unknown atom {aid!r}")
            group.append(aid)
        groups.append(group)
    return AtomUniverse(atoms), groups


def serialize_groups(universe: AtomUniverse, groups) -> dict:
    return {"atoms": [{"id": a.id, "up_prob": a.up_prob, "kind": a.kind.value} for a in universe.values()],
            "groups": [list(g) for g in groups]}


# ---------------------------------------------------------------------------
# workload spec files

def _range(value, path, cast=_number) -> tuple:
    items = _list(value, path)
    if len(items) != 2:
        raise SchemaError(path, "expected [low, high]")
    lo, hi = cast(items[0], f"{path}[0]"), cast(items[1], f"{path}[1]")
    if lo > hi:
        raise SchemaError(path, "empty range (low > high)")
    return (lo, hi)


def _value_set(value, path, cast) -> tuple:
    items = _list(value, path)
    if not items:
        raise SchemaError(path, "expected a non-empty array")
    return tuple(cast(x, f"{path}[{i}]") for i, x in enumerate(items))


def parse_placement_spec(doc) -> hs.PlacementWorkloadSpec:
    doc = _obj(doc, "$")
    kw = {}
    for key in ("node_count", "request_count", "H", "seed"):
        if key in doc:
            kw[key] = _int(doc[key], f"$.{key}")
    for key in ("capacity_range", "k_range", "demand_range"):
        if key in doc:
            kw[key] = _range(doc[key], f"$.{key}", _int)
    if "T_range" in doc:
        kw["T_range"] = _range(doc["T_range"], "$.T_range")
    for key in ("node_avail_set", "A_set", "delta_set"):
        if key in doc:
            kw[key] = _value_set(doc[key], f"$.{key}", _prob)
    if "alpha" in doc:
        kw["alpha"] = _positive(doc["alpha"], "$.alpha")
    if "compat_mode" in doc:
        if doc["compat_mode"] not in ("direct", "oracle"):
            raise SchemaError("$.compat_mode", "expected 'direct' or 'oracle'")
        kw["compat_mode"] = doc["compat_mode"]
    if doc.get("srng") is not None:
        s = _obj(doc["srng"], "$.srng")
        skw = {}
        if "event_count" in s:
            skw["event_count"] = _int(s["event_count"], "$.srng.event_count")
        if "max_memberships" in s:
            skw["max_memberships"] = _int(s["max_memberships"], "$.srng.max_memberships")
        if "prob_set" in s:
            skw["prob_set"] = _value_set(s["prob_set"], "$.srng.prob_set",
                                         lambda x, p: _prob(x, p, zero_ok=True, one_ok=False))
        kw["srng_spec"] = hs.SrngSpec(**skw)
    try:
        return hs.PlacementWorkloadSpec(**kw)
    except ValueError as exc:
        raise SchemaError("$", str(exc)) from None


def parse_routing_spec(doc, base_dir=None) -> hs.RoutingWorkloadSpec:
    doc = _obj(doc, "$")
    kw = {}
    if "network" in doc:
        kw["network"] = parse_network(doc["network"])
    elif "network_file" in doc:
        path = Path(_ident(doc["network_file"], "$.network_file"))
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        kw["network"] = parse_network(load_json(path))
    for key in ("node_count", "link_count", "request_count", "w", "seed"):
        if key in doc:
            kw[key] = _int(doc[key], f"$.{key}")
    if doc.get("M") is not None:
        kw["M"] = _int(doc["M"], "$.M")
    for key in ("link_delay_range", "D_range"):
        if key in doc:
            kw[key] = _range(doc[key], f"$.{key}")
    for key in ("link_avail_set", "eta_set"):
        if key in doc:
            kw[key] = _value_set(doc[key], f"$.{key}", _prob)
    try:
        return hs.RoutingWorkloadSpec(**kw)
    except ValueError as exc:
        raise SchemaError("$", str(exc)) from None


# ---------------------------------------------------------------------------
# results

def placement_result(infra, request, outcome: pl.PlacementOutcome) -> dict:
    doc = {"algorithm": outcome.algorithm, "accepted": outcome.accepted}
    if outcome.accepted:
        doc.update(used_nodes=outcome.used_nodes, availability=outcome.achieved_availability,
                   groups=outcome.assignment.describe(infra, request))
    return doc


def route_result(outcome: rt.RouteOutcome) -> dict:
    doc = {"algorithm": outcome.algorithm, "accepted": outcome.accepted}
    if outcome.accepted:
        ps = outcome.path_set
        doc.update(availability=ps.availability,
                   paths=[{"nodes": list(p), "delay": d} for p, d in zip(ps.paths, ps.delays)])
    return doc
