"""Self-dual Ruijsenaars-Schneider flows, their Lax spectral duality and the
pole-ansatz link to the ILW equation with discrete Laplacian."""
from .dynamics import (
    FlowForm,
    SelfDualState,
    Termination,
    Trajectory,
    integrate,
    rescale_constant,
    selfdual_velocity,
)
from .elliptic import Elliptic, EllipticParams, Hyperbolic, Rational, kronecker_phi
from .errors import RSDualError

__all__ = [
    "Elliptic",
    "EllipticParams",
    "FlowForm",
    "Hyperbolic",
    "RSDualError",
    "Rational",
    "SelfDualState",
    "Termination",
    "Trajectory",
    "integrate",
    "kronecker_phi",
    "rescale_constant",
    "selfdual_velocity",
]
