"""Pole-ansatz solutions of the ILW equation with discrete Laplacian and
the periodic ILW integral operator.

Pole fields
-----------
For a self-dual state the field

    f(z) = prod_k phi(eta, z - q_k) prod_g phi(-eta, z - mu_g)            (PHI)
    f(z) = th'(0)/th(eta) prod_k th(z-q_k+eta)/th(z-q_k)
                          prod_g th(z-mu_g-eta)/th(z-mu_g)                 (THETA)

has simple poles at q and mu with residues res_q = qdot, res_mu = -mudot of
the matching flow normalization.  It splits as f = F+ - F- + f0 with

    F+(z) = sum_k E1(z - q_k) res_q_k,   F-(z) = -sum_g E1(z - mu_g) res_mu_g.

Periodic operator
-----------------
On 2L-periodic signals with Fourier modes exp(i pi n x / L) the operator T
acts diagonally with multiplier i coth(pi n delta / L); equivalently it is
the principal-value convolution with -(1/pi) E1(x / 2L | i delta / L) / 2L.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np

from .dynamics import FlowForm, SelfDualState, rescale_constant, selfdual_velocity
from .elliptic import POLE_EPS, Elliptic, Hyperbolic, KernelKind, _unwrap, kronecker_phi
from .errors import InvalidParams, PoleHit, ProbeInconsistent, QuadratureDiverged, ShapeMismatch

__all__ = [
    "PoleField",
    "PeriodicSignal",
    "pole_field_from_state",
    "eval_f",
    "eval_F_plus",
    "eval_F_minus",
    "eval_F_derivatives",
    "ilw_residual",
    "discrete_T_of_field",
    "discrete_T_expansion",
    "apply_T_fourier",
    "apply_T_kernel",
    "t_multiplier",
    "kdv_multiplier_residual",
    "hyperbolic_kernel_limit_residual",
]

PROBE_TOL = 1e-10


def _ro(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PoleField:
    poles_q: np.ndarray
    poles_mu: np.ndarray
    res_q: np.ndarray
    res_mu: np.ndarray
    f0: complex
    eta: complex
    kind: KernelKind
    normalization: FlowForm = FlowForm.PHI

    def __post_init__(self):
        for name in ("poles_q", "poles_mu", "res_q", "res_mu"):
            object.__setattr__(self, name, _ro(getattr(self, name)))
        if len(self.poles_q) != len(self.res_q) or len(self.poles_mu) != len(self.res_mu):
            raise ShapeMismatch("each pole needs one residue")
        if isinstance(self.kind, Elliptic):
            if len(self.poles_q) != len(self.poles_mu):
                raise ShapeMismatch("elliptic pole field needs equal numbers of q and mu poles")
            total = self.res_q.sum() + self.res_mu.sum()
            scale = max(1.0, np.abs(self.res_q).max(initial=0), np.abs(self.res_mu).max(initial=0))
            if abs(total) > 1e-10 * scale:
                raise InvalidParams(f"residues of a doubly periodic field must sum to zero, got {total}")

    @property
    def poles(self) -> np.ndarray:
        return np.concatenate([self.poles_q, self.poles_mu])

    @property
    def residues(self) -> np.ndarray:
        return np.concatenate([self.res_q, self.res_mu])


@dataclass(frozen=True)
class PeriodicSignal:
    """2L-periodic signal f0 + sum_n coeffs[n] exp(i pi n x / L), n != 0."""

    coeffs: Mapping[int, complex]
    L: float = 0.5
    delta: float = 1.0
    f0: complex = 0.0

    def __post_init__(self):
        if not (self.L > 0 and self.delta > 0):
            raise InvalidParams("L and delta must be positive")
        coeffs = {int(n): complex(c) for n, c in dict(self.coeffs).items()}
        if 0 in coeffs:
            raise InvalidParams("mode 0 belongs in f0, not in coeffs")
        object.__setattr__(self, "coeffs", MappingProxyType(coeffs))
        object.__setattr__(self, "f0", complex(self.f0))

    @property
    def tau(self) -> complex:
        return 1j * self.delta / self.L

    @property
    def max_mode(self) -> int:
        return max((abs(n) for n in self.coeffs), default=0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.f0, dtype=complex)
        for n, c in self.coeffs.items():
            out = out + c * np.exp(1j * np.pi * n * x / self.L)
        return _unwrap(out)

    def is_real(self, tol: float = 0.0) -> bool:
        """Conjugate-symmetric coefficients and real f0."""
        if abs(self.f0.imag) > tol:
            return False
        return all(abs(c - np.conj(self.coeffs.get(-n, 0.0))) <= tol for n, c in self.coeffs.items())


# ---------------------------------------------------------------------------
# pole fields
# ---------------------------------------------------------------------------


def _product_f(q, mu, eta, kind, normalization, z, pole_eps):
    z = np.asarray(z, dtype=complex)[..., None]
    if normalization is FlowForm.PHI:
        a = kronecker_phi(eta, z - q, kind, pole_eps)
        b = kronecker_phi(-eta, z - mu, kind, pole_eps)
        return np.prod(a, axis=-1) * np.prod(b, axis=-1)
    dq, dm = z - q, z - mu
    args = np.concatenate([dq + eta, dq, dm - eta, dm], axis=-1)
    th, prox = kind.theta_prox(args)
    n, m = q.shape[-1], mu.shape[-1]
    if np.any(prox[..., n : 2 * n] < pole_eps) or np.any(prox[..., 2 * n + m :] < pole_eps):
        raise PoleHit("product field evaluated at a pole")
    ratio = np.prod(th[..., :n] / th[..., n : 2 * n], axis=-1)
    ratio = ratio * np.prod(th[..., 2 * n : 2 * n + m] / th[..., 2 * n + m :], axis=-1)
    return kind.dtheta0 / complex(kind.theta(eta)) * ratio


def _partial_sum(poles, res, kind, z, pole_eps):
    z = np.asarray(z, dtype=complex)
    if len(poles) == 0:
        return np.zeros(z.shape, complex)
    e1 = kind.e_funcs(z[..., None] - poles, 1, pole_eps)[0]
    return e1 @ res


def _probe_grid(poles, kind, size=24):
    """Candidate probe points with unit-square parameters for separation tests."""
    a, b = np.meshgrid(np.arange(size) / size, np.arange(size) / size, indexing="ij")
    a, b = a.ravel(), b.ravel()
    if isinstance(kind, Elliptic):
        z = a + b * kind.tau
    else:
        lo, hi = poles.real.min() - 1.0, poles.real.max() + 1.0
        if isinstance(kind, Hyperbolic):
            z = lo + (hi - lo) * a + 1j * np.pi * b
        else:
            ilo, ihi = poles.imag.min() - 1.0, poles.imag.max() + 1.0
            z = lo + (hi - lo) * a + 1j * (ilo + (ihi - ilo) * b)
    return z, a, b


def _choose_probes(poles, kind):
    z, a, b = _probe_grid(poles, kind)
    dist = np.asarray(kind.proximity(z[:, None] - poles[None, :])).min(axis=1)
    order = np.argsort(-dist)
    first = order[0]
    for j in order[1:]:
        da = abs(a[j] - a[first])
        db = abs(b[j] - b[first])
        if min(da, 1 - da) ** 2 + min(db, 1 - db) ** 2 >= 0.09:
            return z[first], z[j]
    raise ProbeInconsistent("could not place two separated probe points")  # pragma: no cover


def pole_field_from_state(
    state: SelfDualState, normalization: FlowForm = FlowForm.PHI, pole_eps: float = POLE_EPS
) -> PoleField:
    """Pole field of ``state`` with residues from the closed products and f0 from two probes."""
    state.check_separated(pole_eps)
    kind, q, mu = state.kind, state.q, state.mu
    qdot, mudot = selfdual_velocity(state, normalization, pole_eps)
    res_q, res_mu = qdot, -mudot
    poles = np.concatenate([q, mu])
    res = np.concatenate([res_q, res_mu])
    f0s, scale = [], 1.0
    for z in _choose_probes(poles, kind):
        fz = complex(_product_f(q, mu, state.eta, kind, normalization, z, pole_eps))
        terms = kind.e_funcs(z - poles, 1, pole_eps)[0] * res
        f0s.append(fz - terms.sum())
        scale = max(scale, abs(fz), np.abs(terms).max())
    if abs(f0s[0] - f0s[1]) > PROBE_TOL * scale:
        raise ProbeInconsistent(f"probe values of f0 differ by {abs(f0s[0] - f0s[1]):.3e}")
    return PoleField(q, mu, res_q, res_mu, f0s[0], state.eta, kind, normalization)


def eval_F_plus(fld: PoleField, z, pole_eps: float = POLE_EPS):
    return _unwrap(_partial_sum(fld.poles_q, fld.res_q, fld.kind, z, pole_eps))


def eval_F_minus(fld: PoleField, z, pole_eps: float = POLE_EPS):
    return _unwrap(-_partial_sum(fld.poles_mu, fld.res_mu, fld.kind, z, pole_eps))


def eval_f(fld: PoleField, z, method: str = "product", pole_eps: float = POLE_EPS):
    """f(z) from the closed product (default) or from F+ - F- + f0 (``method='partial'``)."""
    if method == "product":
        return _unwrap(_product_f(fld.poles_q, fld.poles_mu, fld.eta, fld.kind, fld.normalization, z, pole_eps))
    if method == "partial":
        return _unwrap(np.asarray(eval_F_plus(fld, z, pole_eps)) - eval_F_minus(fld, z, pole_eps) + fld.f0)
    raise ValueError(f"unknown method {method!r}")


def eval_F_derivatives(fld: PoleField, z, pole_eps: float = POLE_EPS):
    """((F+', F+''), (F-', F-'')) at z, using E1' = -E2 and E1'' = -E2'."""
    kind = fld.kind
    z = np.asarray(z, dtype=complex)

    def derivs(poles, res):
        if len(poles) == 0:
            return 0j, 0j
        _, e2, e2p = kind.e_funcs(z[..., None] - poles, 3, pole_eps)
        return _unwrap(-(e2 @ res)), _unwrap(-(e2p @ res))

    dp = derivs(fld.poles_q, fld.res_q)
    dm = derivs(fld.poles_mu, fld.res_mu)
    return dp, (-dm[0], -dm[1])


def discrete_T_of_field(fld: PoleField, x, shift=None, pole_eps: float = POLE_EPS):
    """F+(x) + F-(x) - F+(x + s) - F-(x - s) with s = ``shift`` (default: the field's eta)."""
    s = fld.eta if shift is None else complex(shift)
    x = np.asarray(x, dtype=complex)
    fp = lambda w: np.asarray(eval_F_plus(fld, w, pole_eps))  # noqa: E731
    fm = lambda w: np.asarray(eval_F_minus(fld, w, pole_eps))  # noqa: E731
    return _unwrap(fp(x) + fm(x) - fp(x + s) - fm(x - s))


def discrete_T_expansion(fld: PoleField, x, shift, pole_eps: float = POLE_EPS):
    """Two-term small-shift expansion -s (F+' - F-') - s^2/2 (F+'' + F-'')."""
    s = complex(shift)
    (p1, p2), (m1, m2) = eval_F_derivatives(fld, x, pole_eps)
    return _unwrap(-s * (np.asarray(p1) - m1) - 0.5 * s * s * (np.asarray(p2) + m2))


def ilw_residual(
    state: SelfDualState,
    z,
    normalization: FlowForm = FlowForm.PHI,
    velocities: Optional[tuple] = None,
    pole_eps: float = POLE_EPS,
    fld: Optional[PoleField] = None,
):
    """d/dt log f(z) - [F+(z) + F-(z) - F+(z + eta) - F-(z - eta)].

    The time derivative uses the closed form
    -sum_i [qdot_i (E1(z-q_i+eta) - E1(z-q_i)) + mudot_i (E1(z-mu_i-eta) - E1(z-mu_i))]
    with velocities from the self-dual flow of the same normalization, unless
    ``velocities=(qdot, mudot)`` is given.  The right-hand side comes from the
    pole field of ``state``.
    """
    if fld is None:
        fld = pole_field_from_state(state, normalization, pole_eps)
    if velocities is None:
        qdot, mudot = fld.res_q, -fld.res_mu
    else:
        qdot, mudot = (np.asarray(v, dtype=complex) for v in velocities)
        if qdot.shape != state.q.shape or mudot.shape != state.mu.shape:
            raise ShapeMismatch("velocity override has the wrong shape")
    kind, eta = state.kind, state.eta
    z = np.asarray(z, dtype=complex)
    e1 = lambda w: kind.e_funcs(w, 1, pole_eps)[0]  # noqa: E731
    dq = z[..., None] - state.q
    dm = z[..., None] - state.mu
    lhs = -((e1(dq + eta) - e1(dq)) @ qdot + (e1(dm - eta) - e1(dm)) @ mudot)
    return _unwrap(lhs - np.asarray(discrete_T_of_field(fld, z, None, pole_eps)))


# ---------------------------------------------------------------------------
# periodic ILW operator
# ---------------------------------------------------------------------------


def t_multiplier(n, delta: float, L: float):
    """i coth(pi n delta / L) for nonzero integer modes n."""
    n = np.asarray(n, dtype=float)
    if np.any(n == 0):
        raise InvalidParams("the multiplier is defined for nonzero modes only")
    return _unwrap(1j / np.tanh(np.pi * n * delta / L))


def apply_T_fourier(sig: PeriodicSignal) -> PeriodicSignal:
    """Diagonal action on the modes; the constant mode is annihilated."""
    out = {n: c * t_multiplier(n, sig.delta, sig.L) for n, c in sig.coeffs.items()}
    return PeriodicSignal(out, sig.L, sig.delta, 0.0)


def _kernel_apply(sig: PeriodicSignal, nodes: int, kind: Elliptic):
    """Mode coefficients of the quadrature result on ``nodes`` equispaced points."""
    L = sig.L
    h = 2 * L / nodes
    x = -L + h * np.arange(nodes)
    fy = np.asarray(sig(x + 0.5 * h))  # midpoints y_k = x_k + h/2
    # w_m = T~(x_i - y_k) for i - k = m: offsets (m - 1/2) h, wrapped into one period
    off = (np.arange(nodes) - 0.5) * h
    off = np.where(off > L, off - 2 * L, off)
    w = -kind.e_funcs(off / (2 * L), 1)[0] / np.pi
    g = np.fft.ifft(np.fft.fft(w) * np.fft.fft(fy)) / nodes
    modes = sorted(sig.coeffs)
    phase = lambda n: np.exp(-1j * np.pi * n * x / L)  # noqa: E731
    coeffs = {n: complex(np.mean(g * phase(n))) for n in modes}
    return coeffs, complex(np.mean(g))


def apply_T_kernel(sig: PeriodicSignal, quad_nodes: int = 512) -> PeriodicSignal:
    """Principal-value quadrature of the E1 kernel on a midpoint grid.

    Kernel offsets are odd multiples of half the grid spacing, so the cot-type
    singularity cancels between symmetric neighbours.  The result is
    re-projected onto the input modes and checked against a run with twice as
    many nodes.
    """
    if quad_nodes < 8 * max(sig.max_mode, 1) or quad_nodes % 2:
        raise InvalidParams("quad_nodes must be even and at least 8 times the largest mode")
    kind = Elliptic.with_tau(sig.tau)
    coarse, c0 = _kernel_apply(sig, quad_nodes, kind)
    fine, _ = _kernel_apply(sig, 2 * quad_nodes, kind)
    scale = max([1.0] + [abs(c) for c in fine.values()])
    gap = max([0.0] + [abs(coarse[n] - fine[n]) for n in coarse])
    if gap > 1e-6 * scale:
        raise QuadratureDiverged(f"node doubling changed the result by {gap:.3e}")
    return PeriodicSignal(coarse, sig.L, sig.delta, c0)


def kdv_multiplier_residual(delta: float, L: float, n_max: int) -> float:
    """max_{1<=|n|<=n_max} |i coth(a) - i (1/a + a/3)|, a = pi n delta / L."""
    if n_max < 1:
        raise InvalidParams("n_max must be at least 1")
    n = np.concatenate([np.arange(-n_max, 0), np.arange(1, n_max + 1)])
    a = np.pi * n * delta / L
    exact = np.asarray(t_multiplier(n, delta, L))
    return float(np.max(np.abs(exact - 1j * (1.0 / a + a / 3.0))))


def hyperbolic_kernel_limit_residual(x: float, delta: float, L: float, max_terms: int = 200) -> float:
    """|T~(x)/2L - [-(1/2 delta) coth(pi x / 2 delta) + x / (2 delta L)]|.

    After the modular transformation tau -> -1/tau the difference equals
    (1/(2 pi delta)) |E1(w | i L/delta) - pi cot(pi w)|, w = -i x / (2 delta),
    which is summed here without cancellation: the leading theta term is
    removed analytically.
    """
    if not (delta > 0 and L > 0):
        raise InvalidParams("delta and L must be positive")
    if x == 0:
        raise PoleHit("kernel is singular at x = 0")
    if not abs(x) < L:
        raise InvalidParams("need 0 < |x| < L")
    w = -1j * x / (2 * delta)
    tau = 1j * L / delta
    cot = cmath.cos(np.pi * w) / cmath.sin(np.pi * w)
    num = 0j
    th = 0j
    for k in range(max_terms):
        a = (-1) ** k * cmath.exp(1j * np.pi * tau * (k + 0.5) ** 2)
        s = (2 * k + 1) * np.pi
        sn = cmath.sin(s * w)
        th_term = -2 * a * sn
        th += th_term
        if k:
            tail = -2 * a * (s * cmath.cos(s * w) - np.pi * cot * sn)
            num += tail
            if abs(tail) <= 1e-17 * abs(num) and abs(th_term) <= 1e-17 * abs(th):
                break
    return abs(num / th) / (2 * np.pi * delta)
