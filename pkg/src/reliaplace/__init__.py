"""Availability calculus, reliable VM placement and availability-constrained routing."""

from ._kernels import BACKEND
from .availability import (
    AtomKind,
    AtomUniverse,
    RiskAtom,
    atom_set_availability,
    brute_force_availability,
    min_survivor_availability,
    monte_carlo_availability,
    multi_group_availability,
)
from .errors import ReliaplaceError, ResolutionError, SchemaError, SizeError, SoundnessError
from .placement import (
    FeasibilityReport,
    Infrastructure,
    PlacementAssignment,
    PlacementOutcome,
    PlacementRequest,
    ServerNode,
    SrngEvent,
    baseline_place,
    complete_compat,
    dsr,
    dsr_place,
    exact_place,
    partially_dsr_place,
    validate_placement,
)
from .routing import (
    Link,
    Network,
    PathSet,
    RouteOutcome,
    RouteRequest,
    brute_force_route,
    build_layered_graph,
    compat_oracle,
    route_exact,
    route_single_link_failure,
    seq_tamcra,
    tadra,
)

__version__ = "0.1.0"
