# flake8: noqa
"""ascg is a Python library for away-steps conditional gradient over polytopes."""
from .caratheodory import IrrState, irr_update, reduce_full
from .certificates import (
    check_error_bound,
    check_rate_bound,
    check_vertex_facet_lemma,
    hoffman_theta,
    rate_certificate,
    solution_certificate,
)
from .objective import CompositeObjective, QuadraticFunction, problem_constants
from .oracle import mapped_oracle_naive, vertex_oracle, verify_oracle
from .polyhedron import (
    Box,
    HPolytope,
    L1Ball,
    LiftedL1Box,
    Simplex,
    active_set,
    active_set_of_union,
    enumerate_vertices,
    geometric_constants,
)
from .solver import (
    Reduction,
    Representation,
    SolverConfig,
    StepType,
    Stepsize,
    ascg_run,
    ascg_step,
    cg_run,
    stepsize,
)


__version__ = "0.1.0"
