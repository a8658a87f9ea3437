import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reliaplace.availability import (
    AtomKind,
    AtomUniverse,
    RiskAtom,
    atom_set_availability,
    brute_force_availability,
    min_survivor_availability,
    monte_carlo_availability,
    multi_group_availability,
)
from reliaplace.errors import ResolutionError, SizeError


def fig1a():
    return AtomUniverse.from_probs({"a": 0.9, "b": 0.8, "c": 0.7})


def srng_example():
    u = AtomUniverse.from_probs({"a": 0.9, "b": 0.8, "c": 0.7})
    for name, lam in (("l1", 0.999), ("l2", 0.99), ("l3", 0.9)):
        u.add(RiskAtom(name, AtomKind.SRNG_EVENT, lam))
    return u


def test_atom_set_products():
    u = AtomUniverse.from_probs({"a": 0.9, "b": 0.8})
    assert atom_set_availability(u, ["a", "b"]) == pytest.approx(0.72, abs=1e-15)
    assert atom_set_availability(u, []) == 1.0
    assert atom_set_availability(u, ["a", "a", "b"]) == atom_set_availability(u, ["a", "b"])


def test_atom_set_with_srng_events():
    assert atom_set_availability(srng_example(), ["a", "b", "l1", "l2"]) == pytest.approx(0.7120872, abs=1e-12)


def test_unknown_atom():
    with pytest.raises(ResolutionError, match="zz"):
        atom_set_availability(fig1a(), ["a", "zz"])
    with pytest.raises(ResolutionError):
        multi_group_availability(fig1a(), [["zz"]])


def test_fig1a_value():
    u = fig1a()
    assert abs(multi_group_availability(u, [{"a", "b"}, {"c", "b"}]) - 0.776) <= 1e-12
    assert abs(brute_force_availability(u, [{"a", "b"}, {"c", "b"}]) - 0.776) <= 1e-12


def test_srng_value():
    groups = [{"l1", "l2", "a", "b"}, {"l2", "l3", "b", "c"}]
    assert abs(multi_group_availability(srng_example(), groups) - 0.762432264) <= 1e-12


def test_partial_link_sharing_value():
    u = AtomUniverse.from_probs({"u": 0.99, "w": 0.9, "x": 0.95, "v": 0.9}, AtomKind.LINK)
    groups = [{"u", "w"}, {"u", "x", "v"}]
    assert multi_group_availability(u, groups) == pytest.approx(0.975645, abs=1e-12)
    assert brute_force_availability(u, groups) == pytest.approx(0.975645, abs=1e-12)


def test_identical_groups_collapse():
    u = fig1a()
    assert multi_group_availability(u, [{"a", "b"}, {"a", "b"}]) == pytest.approx(0.72, abs=1e-15)


def test_disjoint_pair_formula():
    u = AtomUniverse.from_probs({"p": 0.93, "q": 0.71})
    p, q = 0.93, 0.71
    assert multi_group_availability(u, [{"p"}, {"q"}]) == pytest.approx(p + q - p * q, abs=1e-15)


def test_argument_errors():
    with pytest.raises(ValueError):
        multi_group_availability(fig1a(), [])
    big = AtomUniverse.from_probs({f"x{i}": 0.9 for i in range(31)})
    with pytest.raises(SizeError):
        multi_group_availability(big, [{f"x{i}"} for i in range(31)])
    many = AtomUniverse.from_probs({f"x{i}": 0.9 for i in range(25)})
    with pytest.raises(SizeError):
        brute_force_availability(many, [set(many)])
    with pytest.raises(ValueError):
        RiskAtom("z", AtomKind.NODE, 0.0)
    with pytest.raises(ValueError):
        AtomUniverse([RiskAtom("a", AtomKind.NODE, 0.5), RiskAtom("a", AtomKind.LINK, 0.5)])


def test_brute_force_edge_cases():
    u = AtomUniverse.from_probs({"a": 0.9, "b": 0.8})
    assert brute_force_availability(u, []) == 0.0
    assert brute_force_availability(u, [{"a", "b"}]) == pytest.approx(0.72, abs=1e-15)


def test_monte_carlo_contract():
    u = fig1a()
    assert monte_carlo_availability(AtomUniverse.from_probs({"a": 1.0}), [{"a"}], 1000, 3) == 1.0
    first = monte_carlo_availability(u, [{"a", "b"}, {"c", "b"}], 200_000, 11)
    assert first == monte_carlo_availability(u, [{"a", "b"}, {"c", "b"}], 200_000, 11)
    estimate = monte_carlo_availability(u, [{"a", "b"}, {"c", "b"}], 1_000_000, 5)
    assert abs(estimate - 0.776) <= 0.002
    with pytest.raises(ValueError):
        monte_carlo_availability(u, [{"a"}], 0, 1)


def test_min_survivor():
    u = AtomUniverse.from_probs({"a": 0.9, "b": 0.8, "c": 0.95})
    assert min_survivor_availability(u, {"v1": {"a"}, "v2": {"b"}}) == 0.8
    assert min_survivor_availability(u, {"v1": {"a", "b"}, "v2": {"b", "c"}}) == 1.0
    assert min_survivor_availability(u, {"v1": {"a", "c"}, "v2": {"b"}}) == 0.8
    with pytest.raises(ValueError):
        min_survivor_availability(u, {"v1": set()})


# -- properties ---------------------------------------------------------------

probs = st.floats(min_value=0.01, max_value=1.0)


@st.composite
def universes(draw, max_atoms=10, max_groups=6):
    n = draw(st.integers(1, max_atoms))
    values = draw(st.lists(probs, min_size=n, max_size=n))
    u = AtomUniverse.from_probs({f"a{i}": p for i, p in enumerate(values)})
    ids = list(u)
    groups = draw(st.lists(st.sets(st.sampled_from(ids), min_size=1), min_size=1, max_size=max_groups))
    return u, groups


@settings(max_examples=150, deadline=None)
@given(universes())
def test_closed_form_matches_enumeration(case):
    u, groups = case
    assert abs(multi_group_availability(u, groups) - brute_force_availability(u, groups)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(universes(), st.randoms(use_true_random=False))
def test_permutation_invariance(case, rnd):
    u, groups = case
    shuffled = [sorted(g, key=lambda _: rnd.random()) for g in groups]
    rnd.shuffle(shuffled)
    assert math.isclose(multi_group_availability(u, groups), multi_group_availability(u, shuffled),
                        abs_tol=1e-13)


@settings(max_examples=100, deadline=None)
@given(universes(max_groups=5), st.data())
def test_monotone_and_idempotent(case, data):
    u, groups = case
    base = multi_group_availability(u, groups)
    dup = data.draw(st.sampled_from(groups))
    assert math.isclose(multi_group_availability(u, groups + [dup]), base, abs_tol=1e-13)
    extra = data.draw(st.sets(st.sampled_from(list(u)), min_size=1))
    assert multi_group_availability(u, groups + [extra]) >= base - 1e-13
    assert 0.0 <= base <= 1.0


@settings(max_examples=100, deadline=None)
@given(universes(max_groups=1), st.data())
def test_adding_an_atom_never_helps(case, data):
    u, groups = case
    atom = data.draw(st.sampled_from(list(u)))
    assert atom_set_availability(u, groups[0] | {atom}) <= atom_set_availability(u, groups[0]) + 1e-15
