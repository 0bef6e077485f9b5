"""Dual Lax matrices of the rational and trigonometric RS models and the
determinant identities relating their spectra.

No eigensolver is used: spectral statements are checked through
determinants and characteristic polynomials.  Coefficient lists are in
ascending powers of lambda, ``c[0] + c[1] lam + ... + c[n] lam**n``, for
``det(A - lam I)``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P

from .dynamics import FlowForm, SelfDualState, Trajectory, selfdual_velocity
from .elliptic import POLE_EPS, Hyperbolic, Rational
from .errors import IllConditioned, PoleHit, ShapeMismatch, UnsupportedKind

__all__ = [
    "LaxPair",
    "build_lax",
    "lu_det",
    "det",
    "det_identity_residual",
    "degenerate_factor",
    "char_poly",
    "SpectralReport",
    "spectral_drift",
]


class LaxPair(NamedTuple):
    L: np.ndarray
    Ltilde: np.ndarray
    g: complex
    S: np.ndarray  # diagonal of the (N-M)x(N-M) matrix, trig case only
    kind: str  # "rational" | "trigonometric"


def _lax_matrix(x, y, eta, shift, kind, g, pole_eps):
    """g th(eta)/th(x_i - x_j + eta) * P_j with the column product
    P_j = prod_{k!=j} th(x_jk + shift)/th(x_jk) * prod_c th(x_j - y_c - shift)/th(x_j - y_c),
    th = z or sinh z.  Returns (matrix, P)."""
    th = kind.theta
    n = len(x)
    off = ~np.eye(n, dtype=bool)
    dxx = x[:, None] - x[None, :]
    dxy = x[:, None] - y[None, :]
    denom = np.asarray(th(dxx + eta), dtype=complex)
    if np.any(np.abs(denom) < pole_eps):
        raise PoleHit("Lax matrix denominator th(x_i - x_j + eta) vanishes")
    if np.any(kind.proximity(dxy) < pole_eps) or np.any(kind.proximity(dxx[off]) < pole_eps):
        raise PoleHit("coinciding positions in Lax matrix")
    ratio = np.ones((n, n), dtype=complex)
    ratio[off] = np.asarray(th(dxx[off] + shift)) / np.asarray(th(dxx[off]))
    cols = ratio.prod(axis=1) * (np.asarray(th(dxy - shift)) / np.asarray(th(dxy))).prod(axis=1)
    return g * complex(th(eta)) / denom * cols[None, :], cols


def build_lax(state: SelfDualState, g=1.0, pole_eps: float = POLE_EPS, check: bool = True) -> LaxPair:
    """Rational (theta -> z) or trigonometric (theta -> sinh) dual Lax pair.

    With ``check`` the column products are compared with the theta-quotient
    velocities of the self-dual flow (relative 1e-11).
    """
    kind = state.kind
    if isinstance(kind, Rational):
        label = "rational"
    elif isinstance(kind, Hyperbolic):
        label = "trigonometric"
    else:
        raise UnsupportedKind("Lax matrices are available for rational and trigonometric kernels only")
    eta, g = state.eta, complex(g)
    L, cols = _lax_matrix(state.q, state.mu, eta, eta, kind, g, pole_eps)
    Lt, cols_t = _lax_matrix(state.mu, state.q, eta, -eta, kind, g, pole_eps)
    if check:
        qdot, mudot = selfdual_velocity(state, FlowForm.THETA, pole_eps)
        scale = max(1.0, np.abs(qdot).max(initial=0), np.abs(mudot).max(initial=0))
        gap = max(np.abs(cols - qdot).max(initial=0), np.abs(cols_t - mudot).max(initial=0))
        if gap > 1e-11 * scale:
            raise AssertionError("Lax column products disagree with the self-dual velocities")
    d = state.N - state.M
    if label == "trigonometric" and d > 0:
        S = np.exp(-(2 * np.arange(1, d + 1) - 1 - d) * eta)
    else:
        S = np.empty(0, complex)
    return LaxPair(L, Lt, g, S, label)


def lu_det(a):
    """(phase, log|det|) from an LU factorization with partial pivoting."""
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return 1.0 + 0j, 0.0
    phase, logabs = np.linalg.slogdet(a)
    return complex(phase), float(logabs)


def det(a) -> complex:
    phase, logabs = lu_det(a)
    if logabs == -np.inf:
        return 0j
    with np.errstate(over="ignore"):
        return phase * np.exp(logabs)


def degenerate_factor(pair: LaxPair, lam) -> complex:
    """(g - lam)^(N-M) in the rational case, det(g S - lam I) in the trig case."""
    d = len(pair.L) - len(pair.Ltilde)
    if pair.kind == "rational":
        return (pair.g - lam) ** d
    return complex(np.prod(pair.g * pair.S - lam))


def det_identity_residual(pair: LaxPair, lam) -> complex:
    """det(L - lam) - degenerate_factor * det(Ltilde - lam)."""
    n, m = len(pair.L), len(pair.Ltilde)
    if n < m:
        raise ShapeMismatch("determinant identity is stated for N >= M")
    lam = complex(lam)
    lhs = det(pair.L - lam * np.eye(n))
    return lhs - degenerate_factor(pair, lam) * det(pair.Ltilde - lam * np.eye(m))


def char_poly(a) -> np.ndarray:
    """Coefficients (ascending) of det(A - lam I) from determinants on a circle.

    With r = 2 * (max row sum), det(A/r - z I) is sampled at n+1 equally
    spaced nodes on |z| = 1, the Vandermonde system is solved for the
    coefficients in z, and coefficient k is scaled back by r**(n-k).
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ShapeMismatch("char_poly needs a square matrix")
    if n > 16:
        raise ShapeMismatch("char_poly supports n <= 16")
    if n == 0:
        return np.array([1.0 + 0j])
    r = 2.0 * np.abs(a).sum(axis=1).max()
    r = r if r > 0 else 1.0
    nodes = np.exp(2j * np.pi * (np.arange(n + 1) + 0.5) / (n + 1))
    b = a / r
    vals = np.array([det(b - z * np.eye(n)) for z in nodes])
    V = np.vander(nodes, n + 1, increasing=True)
    c_scaled = np.linalg.solve(V, vals)
    resid = np.linalg.norm(V @ c_scaled - vals) / max(np.linalg.norm(vals), 1e-300)
    if not resid <= 1e-8:
        raise IllConditioned(f"Vandermonde solve residual {resid:.2e}")
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        # r**(n-k) can leave the double range even when the product does not
        coeffs = c_scaled * np.exp(np.arange(n, -1, -1) * np.log(r))
    if not np.all(np.isfinite(coeffs)):
        raise IllConditioned("characteristic polynomial coefficients overflow")
    coeffs[-1] = (-1.0) ** n
    return coeffs


class SpectralReport(NamedTuple):
    drift: float
    shared_residual: float


def _reduced_poly(pair: LaxPair) -> np.ndarray:
    """char_poly(L) divided by the degenerate factor (as a polynomial in lam)."""
    cl = char_poly(pair.L)
    d = len(pair.L) - len(pair.Ltilde)
    if d == 0:
        return cl
    if pair.kind == "rational":
        factor = P.polypow(np.array([pair.g, -1.0]), d)
    else:
        factor = np.array([1.0 + 0j])
        for s in pair.S:
            factor = P.polymul(factor, np.array([pair.g * s, -1.0]))
    quo, _ = P.polydiv(cl, factor)
    return quo


def spectral_drift(traj: Trajectory, g=1.0) -> SpectralReport:
    """Conservation of char_poly(L) along ``traj`` and the L / Ltilde shared spectrum.

    ``drift`` is max_t max_k |c_k(t) - c_k(0)| / max_k |c_k(0)|;
    ``shared_residual`` is max_t of the coefficient mismatch between
    det(L - lam)/degenerate_factor and det(Ltilde - lam), scaled the same way.
    """
    c0 = None
    drift = shared = 0.0
    for st in traj.states:
        pair = build_lax(st, g)
        c = char_poly(pair.L)
        if c0 is None:
            c0 = c
        scale = np.abs(c0).max()
        drift = max(drift, float(np.abs(c - c0).max() / scale))
        red = _reduced_poly(pair)
        ct = char_poly(pair.Ltilde)
        shared = max(shared, float(np.abs(red - ct).max() / max(np.abs(ct).max(), 1.0)))
    return SpectralReport(drift, shared)
