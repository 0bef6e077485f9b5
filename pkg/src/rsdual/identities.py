"""Residuals of the algebraic identities behind the self-dual flows.

Every function returns the complex difference LHS - RHS; callers compare
its magnitude against a tolerance.  Residuals stay complex so that a sign
or parity error shows up in the phase.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import FlowForm, SelfDualState, selfdual_velocity
from .elliptic import POLE_EPS, Elliptic, KernelKind, eisenstein_e1, kronecker_phi
from .errors import DegenerateInput, ShapeMismatch

__all__ = [
    "IdentitySample",
    "fay_terms",
    "fay_residual",
    "higher_fay_terms",
    "higher_fay_residual",
    "term_scale",
    "velocity_sum_residual",
    "derivative_identity_residual",
]


@dataclass(frozen=True)
class IdentitySample:
    points: tuple
    kind: KernelKind
    residual: complex
    tolerance: float
    scale: float = 1.0

    @property
    def passed(self) -> bool:
        bound = self.tolerance * max(1.0, self.scale)
        return bool(np.isfinite(self.residual) and abs(self.residual) < bound)


def fay_terms(z, w, q, u, kind: KernelKind, pole_eps: float = POLE_EPS):
    """The three products of the genus-one Fay identity (lhs, rhs_1, rhs_2)."""
    phi = lambda a, b: complex(kronecker_phi(a, b, kind, pole_eps))  # noqa: E731
    return (
        phi(z, q) * phi(w, u),
        phi(z - w, q) * phi(w, q + u),
        phi(w - z, u) * phi(z, q + u),
    )


def fay_residual(z, w, q, u, kind: KernelKind, pole_eps: float = POLE_EPS) -> complex:
    """phi(z,q) phi(w,u) - phi(z-w,q) phi(w,q+u) - phi(w-z,u) phi(z,q+u)."""
    lhs, r1, r2 = fay_terms(z, w, q, u, kind, pole_eps)
    return lhs - r1 - r2


def term_scale(terms) -> float:
    """Largest term magnitude; tolerances are applied as tol * max(1, scale)."""
    return float(np.max(np.abs(np.asarray(terms))))


def higher_fay_terms(
    xs: Sequence[complex], ys: Sequence[complex], kind: KernelKind, pole_eps: float = POLE_EPS
):
    """(lhs, array of the n rhs summands) of the n-th order Fay identity."""
    xs = np.asarray(xs, dtype=complex)
    ys = np.asarray(ys, dtype=complex)
    n = len(xs)
    if n < 2 or len(ys) != n:
        raise ShapeMismatch("need n >= 2 and len(xs) == len(ys)")
    dx = xs[None, :] - xs[:, None]  # dx[i, j] = x_j - x_i
    off = ~np.eye(n, dtype=bool)
    if np.any(np.asarray(kind.proximity(dx[off])) < pole_eps):
        raise DegenerateInput("two of the x_i coincide")
    total = ys.sum()
    lhs = np.prod(kronecker_phi(xs, ys, kind, pole_eps))
    cross = np.ones((n, n), dtype=complex)
    cross[off] = kronecker_phi(dx[off], np.broadcast_to(ys, (n, n))[off], kind, pole_eps)
    return complex(lhs), kronecker_phi(xs, total, kind, pole_eps) * cross.prod(axis=1)


def higher_fay_residual(
    xs: Sequence[complex], ys: Sequence[complex], kind: KernelKind, pole_eps: float = POLE_EPS
) -> complex:
    """prod_i phi(x_i, y_i) - sum_i phi(x_i, Y) prod_{j!=i} phi(x_j - x_i, y_j), Y = sum y."""
    lhs, rhs = higher_fay_terms(xs, ys, kind, pole_eps)
    return complex(lhs - rhs.sum())


def _require_balanced(state: SelfDualState):
    if isinstance(state.kind, Elliptic) and state.N != state.M:
        raise ShapeMismatch("elliptic identity needs N == M")


def velocity_sum_residual(state: SelfDualState, pole_eps: float = POLE_EPS) -> complex:
    """sum qdot - sum mudot for the phi-product flow.

    Vanishes identically in the elliptic (N = M) case and for N = M in the
    degenerate kernels; for N != M it is reported as-is.
    """
    _require_balanced(state)
    qdot, mudot = selfdual_velocity(state, FlowForm.PHI, pole_eps)
    return complex(qdot.sum() - mudot.sum())


def derivative_identity_residual(state: SelfDualState, i: int, pole_eps: float = POLE_EPS) -> complex:
    """d/dq_i of the velocity-sum identity, written through g/phi = E1(eta+u) - E1(u).

    ``i`` is zero-based.
    """
    _require_balanced(state)
    if not 0 <= i < state.N:
        raise IndexError(f"particle index {i} out of range for N={state.N}")
    kind, eta = state.kind, state.eta
    qdot, mudot = selfdual_velocity(state, FlowForm.PHI, pole_eps)
    e1 = lambda z: np.asarray(eisenstein_e1(z, kind, pole_eps))  # noqa: E731

    def log_g(shift, u):
        return e1(shift + u) - e1(u)

    q, mu = state.q, state.mu
    others = np.arange(state.N) != i
    d_ik = q[i] - q[others]
    term1 = qdot[i] * np.sum(log_g(eta, d_ik))
    term2 = np.sum(qdot[others] * log_g(eta, -d_ik))
    term3 = np.sum((qdot[i] - mudot) * log_g(-eta, q[i] - mu))
    return complex(term1 - term2 + term3)
