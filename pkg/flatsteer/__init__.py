from flatsteer.borel_interp import R0, CoeffSequence, FlatOutput, steer_output_even, steer_output_odd
from flatsteer.flatness import dirichlet_control, neumann_control, robin_two_sided
from flatsteer.heatsim import Boundary, solve_heat
from flatsteer.laplace import steer_laplace_even, steer_laplace_odd
from flatsteer.precision import ExtendedPrecision, extended_precision

__all__ = [
    "R0",
    "Boundary",
    "CoeffSequence",
    "ExtendedPrecision",
    "FlatOutput",
    "dirichlet_control",
    "extended_precision",
    "neumann_control",
    "robin_two_sided",
    "solve_heat",
    "steer_laplace_even",
    "steer_laplace_odd",
    "steer_output_even",
    "steer_output_odd",
]
