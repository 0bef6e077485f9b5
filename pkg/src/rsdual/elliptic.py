"""Odd theta function, Kronecker function and Eisenstein functions.

Three kernel rows are supported:

* ``Elliptic(params)``: theta series with modular parameter ``tau``;
* ``Hyperbolic()``: theta -> sinh(z), E1 -> coth(z), E2 -> 1/sinh(z)**2;
* ``Rational()``: theta -> z, E1 -> 1/z, E2 -> 1/z**2.

All evaluators accept scalars or numpy arrays and broadcast.  Elliptic
arguments are reduced into the fundamental cell of ``Z + tau Z`` before the
series is summed and the exact quasi-periodicity factor is reapplied.
"""
from __future__ import annotations

import cmath
from functools import cached_property
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidParams, NonConvergent, PoleHit

POLE_EPS = 1e-12

__all__ = [
    "EllipticParams",
    "Elliptic",
    "Hyperbolic",
    "Rational",
    "KernelKind",
    "theta",
    "theta_d1_at_0",
    "theta_d3_at_0",
    "kronecker_phi",
    "eisenstein_e1",
    "eisenstein_e2",
    "eisenstein_e2_prime",
    "g_func",
    "e1_modular_residual",
]


@dataclass(frozen=True)
class EllipticParams:
    tau: complex
    trunc_eps: float = 1e-16
    max_terms: int = 200

    def __post_init__(self):
        tau = complex(self.tau)
        object.__setattr__(self, "tau", tau)
        if not tau.imag > 0:
            raise InvalidParams(f"Im(tau) must be positive, got tau={tau}")
        if not self.trunc_eps > 0:
            raise InvalidParams("trunc_eps must be positive")
        if self.max_terms < 8:
            raise InvalidParams("max_terms must be at least 8")

    @property
    def nome(self) -> complex:
        return cmath.exp(1j * cmath.pi * self.tau)

    def with_tau(self, tau) -> "EllipticParams":
        return EllipticParams(tau, self.trunc_eps, self.max_terms)


def _as_array(z):
    return np.asarray(z, dtype=complex)


def _unwrap(a):
    return a[()] if isinstance(a, np.ndarray) and a.ndim == 0 else a


def _check_poles(prox, pole_eps, what, z):
    bad = prox < pole_eps
    if np.any(bad):
        where = np.asarray(z)[bad] if np.ndim(z) else z
        raise PoleHit(f"{what}: argument {np.ravel(where)[0]!r} within {pole_eps:g} of a pole")


# ---------------------------------------------------------------------------
# elliptic row: theta series on the reduced argument
# ---------------------------------------------------------------------------


def _reduce(z, tau):
    """Split z = zr + m + n*tau with |Re zr| <= 1/2 and |Im zr| <= Im(tau)/2."""
    n = np.round(z.imag / tau.imag)
    w = z - n * tau
    m = np.round(w.real)
    return w - m, m, n


def _theta_series(zr, params: EllipticParams, orders):
    """Sum the derivatives ``orders`` of theta at reduced arguments ``zr``.

    Returns a dict order -> array.  Uses the paired form of the defining
    series, theta(z) = -2 sum_k (-1)^k nome^{(k+1/2)^2} sin((2k+1) pi z).
    """
    tau = params.tau
    sums = {d: np.zeros_like(zr) for d in orders}
    lift = np.exp(np.pi * np.abs(zr.imag))
    for k in range(params.max_terms):
        h = k + 0.5
        a = (-1) ** k * cmath.exp(1j * np.pi * tau * h * h)
        s = (2 * k + 1) * np.pi
        sz = s * zr
        sin_sz = cos_sz = None
        done = True
        # magnitude of the larger of the k and -k-1 exponential terms
        mag = abs(a) * lift ** (2 * k + 1)
        for d in orders:
            if d % 2 == 0:
                if sin_sz is None:
                    sin_sz = np.sin(sz)
                trig = sin_sz
            else:
                if cos_sz is None:
                    cos_sz = np.cos(sz)
                trig = cos_sz
            sign = -2.0 if d % 4 in (0, 1) else 2.0
            sums[d] = sums[d] + sign * a * s**d * trig
            if np.any(mag * s**d >= params.trunc_eps * (np.abs(sums[d]) + 1.0)):
                done = False
        if done:
            return sums
    raise NonConvergent(
        f"theta series did not reach tail bound {params.trunc_eps:g} in {params.max_terms} terms"
    )


def theta(z, params: EllipticParams):
    """Odd theta function with quasi-periodic argument reduction."""
    return _unwrap(_theta_reduced(_as_array(z), params)[0])


def _theta_reduced(z, params: EllipticParams):
    """(theta(z), theta(z_r)) where z_r is z reduced into the fundamental cell."""
    zr, m, n = _reduce(z, params.tau)
    th = _theta_series(zr, params, (0,))[0]
    factor = (-1.0) ** (m + n) * np.exp(-1j * np.pi * n * n * params.tau - 2j * np.pi * n * zr)
    return factor * th, th


def theta_d1_at_0(params: EllipticParams) -> complex:
    return complex(_theta_series(np.zeros(1, complex), params, (1,))[1][0])


def theta_d3_at_0(params: EllipticParams) -> complex:
    return complex(_theta_series(np.zeros(1, complex), params, (3,))[3][0])


# ---------------------------------------------------------------------------
# kernel kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Elliptic:
    params: EllipticParams
    name: str = field(default="elliptic", init=False)

    @classmethod
    def with_tau(cls, tau, **kw) -> "Elliptic":
        return cls(EllipticParams(tau, **kw))

    @property
    def tau(self) -> complex:
        return self.params.tau

    @cached_property
    def dtheta0(self) -> complex:
        return theta_d1_at_0(self.params)

    def theta(self, z):
        return theta(z, self.params)

    def theta_prox(self, z):
        """theta(z) and the proximity |theta(z_r) / theta'(0)| in one series pass."""
        th, th_r = _theta_reduced(_as_array(z), self.params)
        return th, np.abs(th_r) / abs(self.dtheta0)

    def proximity(self, z):
        """Lattice-aware distance proxy, close to the distance to the nearest
        lattice point when that distance is small."""
        return self.theta_prox(z)[1]

    def e_funcs(self, z, order=1, pole_eps=POLE_EPS):
        """Return (E1, E2, E2') up to ``order`` (1, 2 or 3 entries)."""
        z = _as_array(z)
        zr, _, n = _reduce(z, self.params.tau)
        orders = tuple(range(order + 1)) if order < 3 else (0, 1, 2, 3)
        ser = _theta_series(zr, self.params, orders)
        th = ser[0]
        _check_poles(np.abs(th) / abs(self.dtheta0), pole_eps, "Eisenstein function", z)
        r1 = ser[1] / th
        out = [r1 - 2j * np.pi * n]
        if order >= 2:
            r2 = ser[2] / th
            out.append(r1 * r1 - r2)
        if order >= 3:
            r3 = ser[3] / th
            out.append(-r3 + 3 * r1 * r2 - 2 * r1**3)
        return out


@dataclass(frozen=True)
class Hyperbolic:
    name: str = field(default="hyperbolic", init=False)
    dtheta0 = 1.0

    def theta(self, z):
        return _unwrap(np.sinh(_as_array(z)))

    def theta_prox(self, z):
        th = np.sinh(_as_array(z))
        return th, np.abs(th)

    def proximity(self, z):
        return np.abs(np.sinh(_as_array(z)))

    def e_funcs(self, z, order=1, pole_eps=POLE_EPS):
        z = _as_array(z)
        sh = np.sinh(z)
        _check_poles(np.abs(sh), pole_eps, "coth", z)
        coth = np.cosh(z) / sh
        out = [coth]
        if order >= 2:
            out.append(1.0 / (sh * sh))
        if order >= 3:
            out.append(-2.0 * coth / (sh * sh))
        return out


@dataclass(frozen=True)
class Rational:
    name: str = field(default="rational", init=False)
    dtheta0 = 1.0

    def theta(self, z):
        return _unwrap(_as_array(z))

    def theta_prox(self, z):
        z = _as_array(z)
        return z, np.abs(z)

    def proximity(self, z):
        return np.abs(_as_array(z))

    def e_funcs(self, z, order=1, pole_eps=POLE_EPS):
        z = _as_array(z)
        _check_poles(np.abs(z), pole_eps, "1/z", z)
        inv = 1.0 / z
        out = [inv]
        if order >= 2:
            out.append(inv * inv)
        if order >= 3:
            out.append(-2.0 * inv**3)
        return out


KernelKind = Union[Elliptic, Hyperbolic, Rational]


# ---------------------------------------------------------------------------
# kernel-generic functions
# ---------------------------------------------------------------------------


def kronecker_phi(eta, z, kind: KernelKind, pole_eps: float = POLE_EPS):
    """phi(eta, z) = theta'(0) theta(eta + z) / (theta(eta) theta(z)); symmetric."""
    eta = _as_array(eta)
    z = _as_array(z)
    if isinstance(kind, Elliptic):
        eta, z = np.broadcast_arrays(eta, z)
        th, prox = kind.theta_prox(np.concatenate([(eta + z).ravel(), eta.ravel(), z.ravel()]))
        th_sum, th_eta, th_z = (a.reshape(z.shape) for a in np.split(th, 3))
        _, p_eta, p_z = (a.reshape(z.shape) for a in np.split(prox, 3))
        _check_poles(p_eta, pole_eps, "phi (first argument)", eta)
        _check_poles(p_z, pole_eps, "phi (second argument)", z)
        return _unwrap(kind.dtheta0 * th_sum / (th_eta * th_z))
    _check_poles(kind.proximity(eta), pole_eps, "phi (first argument)", eta)
    _check_poles(kind.proximity(z), pole_eps, "phi (second argument)", z)
    if isinstance(kind, Rational):
        return _unwrap(1.0 / z + 1.0 / eta)
    return _unwrap(np.cosh(z) / np.sinh(z) + np.cosh(eta) / np.sinh(eta))


def eisenstein_e1(z, kind: KernelKind, pole_eps: float = POLE_EPS):
    return _unwrap(kind.e_funcs(z, 1, pole_eps)[0])


def eisenstein_e2(z, kind: KernelKind, pole_eps: float = POLE_EPS):
    return _unwrap(kind.e_funcs(z, 2, pole_eps)[1])


def eisenstein_e2_prime(z, kind: KernelKind, pole_eps: float = POLE_EPS):
    """Analytic z-derivative of E2."""
    return _unwrap(kind.e_funcs(z, 3, pole_eps)[2])


def g_func(z, u, kind: KernelKind, pole_eps: float = POLE_EPS):
    """Derivative of phi(z, u) in its second argument."""
    phi = _as_array(kronecker_phi(z, u, kind, pole_eps))
    e1 = kind.e_funcs(_as_array(z) + _as_array(u), 1, pole_eps)[0] - kind.e_funcs(u, 1, pole_eps)[0]
    return _unwrap(phi * e1)


def e1_modular_residual(z, params: EllipticParams, pole_eps: float = POLE_EPS):
    """E1(z|tau) - [E1(z/tau | -1/tau)/tau - 2 pi i z/tau]."""
    tau = params.tau
    dual = Elliptic(params.with_tau(-1.0 / tau))
    z = _as_array(z)
    lhs = Elliptic(params).e_funcs(z, 1, pole_eps)[0]
    rhs = dual.e_funcs(z / tau, 1, pole_eps)[0] / tau - 2j * np.pi * z / tau
    return _unwrap(lhs - rhs)
