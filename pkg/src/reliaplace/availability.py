"""Availability of atom sets and of groups of atom sets.

An *atom* is anything that fails independently: a server node, a link, or a
shared-risk event (rack, duct).  A *group* is a set of atoms that must all be
up for the group to work, e.g. the nodes hosting one full copy of a VM set or
the links of one path.  The availability of several groups is the probability
that at least one group is fully up; shared atoms are counted once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import ResolutionError, SizeError

MAX_CLOSED_FORM_GROUPS = 30
MAX_BRUTE_FORCE_ATOMS = 24
# below this many groups a plain set-based loop beats building arrays
_SMALL_GROUPS = 4
_MC_CHUNK_VALUES = 1 << 21


class AtomKind(str, enum.Enum):
    NODE = "node"
    LINK = "link"
    SRNG_EVENT = "srng_event"


@dataclass(frozen=True)
class RiskAtom:
    id: str
    kind: AtomKind
    up_prob: float

    def __post_init__(self):
        if not 0.0 < self.up_prob <= 1.0:
            raise ValueError(f"atom {self.id!r}: up_prob must lie in (0, 1], got {self.up_prob}")


class AtomUniverse(Mapping[str, RiskAtom]):
    """Id-indexed collection of atoms with unique ids."""

    def __init__(self, atoms: Iterable[RiskAtom] = ()):
        self._atoms: dict[str, RiskAtom] = {}
        for atom in atoms:
            self.add(atom)

    @classmethod
    def from_probs(cls, probs: Mapping[str, float], kind: AtomKind = AtomKind.NODE) -> "AtomUniverse":
        return cls(RiskAtom(k, kind, float(p)) for k, p in probs.items())

    def add(self, atom: RiskAtom) -> None:
        if atom.id in self._atoms:
            raise ValueError(f"duplicate atom id {atom.id!r}")
        self._atoms[atom.id] = atom

    def prob(self, atom_id: str) -> float:
        try:
            return self._atoms[atom_id].up_prob
        except KeyError:
            raise ResolutionError(f"unknown atom id {atom_id!r}") from None

    def __getitem__(self, atom_id):
        try:
            return self._atoms[atom_id]
        except KeyError:
            raise ResolutionError(f"unknown atom id {atom_id!r}") from None

    def __iter__(self):
        return iter(self._atoms)

    def __len__(self):
        return len(self._atoms)

    def __repr__(self):
        return f"AtomUniverse({len(self)} atoms)"


def _product(universe, atom_ids) -> float:
    p = 1.0
    for a in sorted(atom_ids):
        p *= universe.prob(a)
    return p


def _compile(universe, groups: Sequence[Iterable[str]]):
    """Resolve groups into a membership matrix over their distinct atoms."""
    sets = [frozenset(g) for g in groups]
    atoms = sorted(set().union(*sets)) if sets else []
    index = {a: i for i, a in enumerate(atoms)}
    probs = np.array([universe.prob(a) for a in atoms], dtype=np.float64)
    member = np.zeros((len(sets), len(atoms)), dtype=np.bool_)
    for h, s in enumerate(sets):
        for a in s:
            member[h, index[a]] = True
    return member, probs


def _clip(value: float) -> float:
    return min(1.0, max(0.0, value))


def atom_set_availability(universe, group: Iterable[str]) -> float:
    """Product of up probabilities over the distinct atoms of ``group``."""
    return _product(universe, frozenset(group))


def multi_group_availability(universe, groups: Sequence[Iterable[str]]) -> float:
    """Probability that at least one group has all of its atoms up.

    Inclusion-exclusion over the non-empty subsets of ``groups``; each term
    multiplies the distinct atoms of the subset's union once, so atoms shared
    between groups are never double counted.
    """
    groups = [frozenset(g) for g in groups]
    if not groups:
        raise ValueError("at least one group is required")
    if len(groups) > MAX_CLOSED_FORM_GROUPS:
        raise SizeError(f"{len(groups)} groups exceed the closed-form limit of {MAX_CLOSED_FORM_GROUPS}")
    # duplicates never change the value and only double the work
    groups = list(dict.fromkeys(groups))
    if len(groups) <= _SMALL_GROUPS:
        for g in groups:
            for a in g:
                universe.prob(a)
        total = 0.0
        for size in range(1, len(groups) + 1):
            sign = 1.0 if size % 2 else -1.0
            for subset in combinations(groups, size):
                total += sign * _product(universe, frozenset().union(*subset))
        return _clip(total)
    member, probs = _compile(universe, groups)
    return _clip(float(_kernels.ie_union(member, probs)))


def brute_force_availability(universe, groups: Sequence[Iterable[str]]) -> float:
    """Sum the probability of every atom state in which some group is fully up.

    Independent check on :func:`multi_group_availability`; limited to 24
    distinct atoms (2**24 states).
    """
    groups = [frozenset(g) for g in groups]
    if not groups:
        return 0.0
    member, probs = _compile(universe, groups)
    if probs.shape[0] > MAX_BRUTE_FORCE_ATOMS:
        raise SizeError(f"{probs.shape[0]} atoms exceed the enumeration limit of {MAX_BRUTE_FORCE_ATOMS}")
    if probs.shape[0] == 0:
        return 1.0
    return _clip(float(_kernels.brute_force(member, probs)))


def monte_carlo_availability(universe, groups: Sequence[Iterable[str]], samples: int, seed: int) -> float:
    """Fraction of ``samples`` random atom states in which some group is fully up."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    groups = [frozenset(g) for g in groups]
    if not groups:
        return 0.0
    member, probs = _compile(universe, groups)
    n = probs.shape[0]
    if n == 0:
        return 1.0
    rng = np.random.default_rng(seed)
    rows = max(1, _MC_CHUNK_VALUES // n)
    hits = 0
    done = 0
    while done < samples:
        batch = min(rows, samples - done)
        hits += int(_kernels.mc_count(member, probs, rng.random((batch, n))))
        done += batch
    return hits / samples


def min_survivor_availability(universe, hosting: Mapping[str, Iterable[str]]) -> float:
    """Placement availability when at most one node can be down at a time.

    A VM hosted on two or more distinct nodes always survives.  Otherwise the
    placement is only as available as the weakest node carrying a VM that has
    no replica elsewhere.
    """
    unprotected = set()
    for vm, nodes in hosting.items():
        nodes = set(nodes)
        if not nodes:
            raise ValueError(f"VM {vm!r} is not hosted on any node")
        for n in nodes:
            universe.prob(n)
        if len(nodes) == 1:
            unprotected |= nodes
    if not unprotected:
        return 1.0
    return min(universe.prob(n) for n in unprotected)
