"""Self-dual Ruijsenaars-Schneider flows, their Calogero-Moser limits and
time integration on the complexified first-order system.

Two normalizations of the first-order flow are provided (``FlowForm``):

``THETA``
    products of theta quotients,
    qdot_i = prod_{k!=i} th(q_ik + eta)/th(q_ik) * prod_g th(q_i - mu_g - eta)/th(q_i - mu_g)
    (and the mirrored expression for mu).
``PHI``
    products of Kronecker functions,
    qdot_i = prod_{k!=i} phi(eta, q_ik) prod_g phi(-eta, q_i - mu_g),
    mudot_a = -prod_{b!=a} phi(-eta, mu_ab) prod_j phi(eta, mu_a - q_j).

The two differ by the constant factor returned by :func:`rescale_constant`:
``PHI velocities = rescale_constant * THETA velocities``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .elliptic import POLE_EPS, Elliptic, KernelKind, Rational, kronecker_phi
from .errors import InvalidParams, NonConvergent, PoleHit, ShapeMismatch, UnsupportedKind

__all__ = [
    "FlowForm",
    "SelfDualState",
    "Termination",
    "Trajectory",
    "rescale_constant",
    "selfdual_velocity",
    "rs_acceleration",
    "rs_acceleration_gphi",
    "cm_selfdual_velocity",
    "cm_acceleration",
    "integrate",
    "flow_consistency_residual",
    "nonrelativistic_limit_residual",
    "hamiltonian_drift",
    "dimensional_reduction_residual",
]


class FlowForm(enum.Enum):
    THETA = "theta"
    PHI = "phi"


@dataclass(frozen=True)
class SelfDualState:
    q: np.ndarray
    mu: np.ndarray
    eta: complex
    kind: KernelKind

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=complex)).copy()
        mu = np.atleast_1d(np.asarray(self.mu, dtype=complex)).copy()
        q.flags.writeable = False
        mu.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "eta", complex(self.eta))
        if q.ndim != 1 or mu.ndim != 1 or len(q) < 1 or len(mu) < 1:
            raise ShapeMismatch("need N >= 1 positions q and M >= 1 positions mu")
        if isinstance(self.kind, Elliptic) and len(q) != len(mu):
            raise ShapeMismatch(f"elliptic kernel requires N == M, got N={len(q)}, M={len(mu)}")

    @property
    def N(self) -> int:
        return len(self.q)

    @property
    def M(self) -> int:
        return len(self.mu)

    def with_positions(self, q, mu) -> "SelfDualState":
        return replace(self, q=q, mu=mu)

    def swapped(self) -> "SelfDualState":
        """Exchange q <-> mu and eta <-> -eta."""
        return SelfDualState(self.mu, self.q, -self.eta, self.kind)

    def min_proximity(self):
        """Smallest lattice-aware separation over all pairs, with the pair label."""
        best = (np.inf, None)
        for label, a, b, same in (
            ("q-q", self.q, self.q, True),
            ("mu-mu", self.mu, self.mu, True),
            ("q-mu", self.q, self.mu, False),
        ):
            if same and len(a) < 2:
                continue
            d = a[:, None] - b[None, :]
            prox = np.asarray(self.kind.proximity(d), dtype=float)
            if same:
                np.fill_diagonal(prox, np.inf)
            idx = np.unravel_index(np.argmin(prox), prox.shape)
            if prox[idx] < best[0]:
                best = (float(prox[idx]), (label, int(idx[0]), int(idx[1])))
        return best

    def check_separated(self, pole_eps: float = POLE_EPS):
        prox, pair = self.min_proximity()
        if prox < pole_eps:
            raise PoleHit(f"particles collide ({pair}), separation {prox:.3g}", pair=pair)


# ---------------------------------------------------------------------------
# velocity fields
# ---------------------------------------------------------------------------


def _pair_diffs(a, b):
    return a[:, None] - b[None, :]


def rescale_constant(n: int, eta, kind: KernelKind, m: Optional[int] = None) -> complex:
    """Constant c with PHI velocities = c * THETA velocities.

    c = th'(0)^(N+M-1) / (th(eta)^(N-1) th(-eta)^M); for N = M this is
    th'(0)^(2N-1) / (th(eta)^(N-1) th(-eta)^N).
    """
    m = n if m is None else m
    eta = complex(eta)
    th_p = complex(kind.theta(eta))
    th_m = complex(kind.theta(-eta))
    if min(abs(th_p), abs(th_m)) < POLE_EPS:
        raise PoleHit("theta(eta) vanishes")
    return complex(kind.dtheta0) ** (n + m - 1) / (th_p ** (n - 1) * th_m**m)


def _offdiag(d, fn, fill):
    """Apply ``fn`` to the off-diagonal entries of square ``d``; diagonal := fill."""
    out = np.full(d.shape, fill, dtype=complex)
    mask = ~np.eye(len(d), dtype=bool)
    if mask.any():
        out[mask] = fn(d[mask])
    return out


def selfdual_velocity(state: SelfDualState, form: FlowForm = FlowForm.PHI, pole_eps: float = POLE_EPS):
    """Velocities (qdot, mudot) of the self-dual first-order system."""
    kind, eta = state.kind, state.eta
    q, mu = state.q, state.mu
    N, M = state.N, state.M
    off_n = ~np.eye(N, dtype=bool)
    off_m = ~np.eye(M, dtype=bool)
    # all pair arguments in one batch: (q_i - q_k, +eta), (q_i - mu_g, -eta),
    # (mu_a - mu_b, -eta), (mu_a - q_j, +eta)
    blocks = [
        (_pair_diffs(q, q)[off_n], eta),
        (_pair_diffs(q, mu).ravel(), -eta),
        (_pair_diffs(mu, mu)[off_m], -eta),
        (_pair_diffs(mu, q).ravel(), eta),
    ]
    d = np.concatenate([b[0] for b in blocks])
    shift = np.concatenate([np.full(len(b[0]), b[1]) for b in blocks])
    try:
        if form is FlowForm.THETA:
            th, prox = kind.theta_prox(np.concatenate([d + shift, d]))
            if np.any(prox[len(d):] < pole_eps):
                raise PoleHit("theta quotient denominator vanishes")
            vals = th[: len(d)] / th[len(d):]
            sign = 1.0
        else:
            vals = np.asarray(kronecker_phi(shift, d, kind, pole_eps))
            sign = -1.0
    except PoleHit as exc:
        _, pair = state.min_proximity()
        raise PoleHit(str(exc), pair=pair) from None
    parts = np.split(vals, np.cumsum([len(b[0]) for b in blocks])[:-1])
    fqq = np.ones((N, N), complex)
    fqq[off_n] = parts[0]
    fmm = np.ones((M, M), complex)
    fmm[off_m] = parts[2]
    qdot = fqq.prod(axis=1) * parts[1].reshape(N, M).prod(axis=1)
    mudot = sign * fmm.prod(axis=1) * parts[3].reshape(M, N).prod(axis=1)
    return qdot, mudot


def _rs_pair_term(q, kind, eta, pole_eps):
    e1 = lambda x: kind.e_funcs(x, 1, pole_eps)[0]  # noqa: E731
    return _offdiag(_pair_diffs(q, q), lambda d: 2 * e1(d) - e1(d + eta) - e1(d - eta), 0.0)


def rs_acceleration(q, qdot, eta, kind: KernelKind, pole_eps: float = POLE_EPS):
    """qddot_i = sum_{k!=i} qdot_i qdot_k (2 E1(q_ik) - E1(q_ik + eta) - E1(q_ik - eta))."""
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    qdot = np.atleast_1d(np.asarray(qdot, dtype=complex))
    if len(q) < 2:
        return np.zeros_like(q)
    w = _rs_pair_term(q, kind, complex(eta), pole_eps)
    return qdot * (w @ qdot)


def rs_acceleration_gphi(q, qdot, eta, kind: KernelKind, pole_eps: float = POLE_EPS):
    """Same accelerations written through g/phi:
    qddot_i / qdot_i = sum_{k!=i} qdot_k (g/phi(eta, q_ki) - g/phi(eta, q_ik)).
    """
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    qdot = np.atleast_1d(np.asarray(qdot, dtype=complex))
    if len(q) < 2:
        return np.zeros_like(q)
    eta = complex(eta)
    e1 = lambda x: kind.e_funcs(x, 1, pole_eps)[0]  # noqa: E731
    # g(eta, u) / phi(eta, u) = E1(eta + u) - E1(u)
    lg = _offdiag(_pair_diffs(q, q), lambda d: e1(eta + d) - e1(d), 0.0)
    return qdot * ((lg.T - lg) @ qdot)


def cm_selfdual_velocity(state: SelfDualState, nu, pole_eps: float = POLE_EPS):
    """Calogero-Moser self-dual velocities built from E1 sums."""
    kind = state.kind
    q, mu = state.q, state.mu
    e1 = lambda x: kind.e_funcs(x, 1, pole_eps)[0]  # noqa: E731
    eqq = _offdiag(_pair_diffs(q, q), e1, 0.0)
    emm = _offdiag(_pair_diffs(mu, mu), e1, 0.0)
    eqm = e1(_pair_diffs(q, mu))
    qdot = nu * eqq.sum(axis=1) - nu * eqm.sum(axis=1)
    mudot = -nu * emm.sum(axis=1) - nu * eqm.sum(axis=0)
    return qdot, mudot


def cm_acceleration(q, nu, kind: KernelKind, pole_eps: float = POLE_EPS):
    """qddot_i = nu^2 sum_{k!=i} E2'(q_i - q_k)."""
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    if len(q) < 2:
        return np.zeros_like(q)
    e2p = _offdiag(_pair_diffs(q, q), lambda d: kind.e_funcs(d, 3, pole_eps)[2], 0.0)
    return nu**2 * e2p.sum(axis=1)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


class Termination(enum.Enum):
    COMPLETED = "completed"
    COLLISION_ABORT = "collision_abort"
    NON_CONVERGENT = "non_convergent"


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    q: np.ndarray  # (T, N)
    mu: np.ndarray  # (T, M)
    eta: complex
    kind: KernelKind
    form: FlowForm
    time_scale: complex = 1.0
    accepted: int = 0
    rejected: int = 0
    termination: Termination = Termination.COMPLETED
    abort_time: Optional[float] = None
    abort_pair: Optional[tuple] = None

    def __len__(self):
        return len(self.times)

    @property
    def step_stats(self):
        return {"accepted": self.accepted, "rejected": self.rejected}

    def state(self, i: int) -> SelfDualState:
        return SelfDualState(self.q[i], self.mu[i], self.eta, self.kind)

    @property
    def states(self):
        return [self.state(i) for i in range(len(self.times))]

    def velocities(self, i: int):
        qd, md = selfdual_velocity(self.state(i), self.form)
        return self.time_scale * qd, self.time_scale * md


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = _B - np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def integrate(
    state0: SelfDualState,
    form: FlowForm = FlowForm.PHI,
    t_end: float = 1.0,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    record_dt: Optional[float] = None,
    collision_eps: float = 1e-6,
    time_scale: complex = 1.0,
    h0: Optional[float] = None,
    max_steps: int = 1_000_000,
) -> Trajectory:
    """Integrate the self-dual system with an embedded Dormand-Prince 5(4) pair.

    The right-hand side is ``time_scale * velocity(form)``; a complex
    ``time_scale`` integrates along a ray in complex time.  Steps are clipped
    so that every multiple of ``record_dt`` is hit exactly (every accepted
    step is recorded when ``record_dt`` is None).  The error norm is the max
    over all 2(N+M) real components of err / (rel_tol*|y| + abs_tol) and the
    step size follows a PI controller.
    """
    if not t_end > 0:
        raise InvalidParams("t_end must be positive")
    for tol in (rel_tol, abs_tol):
        if not 0 < tol <= 1e-2:
            raise InvalidParams("tolerances must lie in (0, 1e-2]")
    N, M = state0.N, state0.M
    kind, eta = state0.kind, state0.eta
    time_scale = complex(time_scale)

    def rhs(y):
        qd, md = selfdual_velocity(state0.with_positions(y[:N], y[N:]), form)
        return time_scale * np.concatenate([qd, md])

    def make(times, ys, acc, rej, term, at=None, pair=None):
        ys = np.array(ys)
        return Trajectory(
            np.array(times, dtype=float), ys[:, :N], ys[:, N:], eta, kind, form,
            time_scale, acc, rej, term, at, pair,
        )

    y = np.concatenate([state0.q, state0.mu])
    times, ys = [0.0], [y.copy()]
    prox, pair = state0.min_proximity()
    if prox < collision_eps:
        return make(times, ys, 0, 0, Termination.COLLISION_ABORT, 0.0, pair)

    t = 0.0
    f0 = rhs(y)
    if h0 is None:
        scale = abs_tol + rel_tol * np.abs(y.view(float)).max()
        h = 0.01 * max(scale, 1e-6) ** 0.2 / max(np.abs(f0.view(float)).max(), 1e-10) ** 1.0
        h = min(max(h, 1e-6 * t_end), 0.1 * t_end)
    else:
        h = h0
    if record_dt is not None:
        h = min(h, record_dt)
    next_rec = record_dt if record_dt is not None else None
    accepted = rejected = 0
    err_prev = 1e-4
    safety, beta, alpha = 0.9, 0.04, 0.2 - 0.04 * 0.75
    k = [None] * 7
    k[0] = f0
    h_min = 1e-14 * t_end

    for _ in range(max_steps):
        if t >= t_end * (1 - 1e-15):
            break
        target = t_end if next_rec is None else min(next_rec, t_end)
        hit = t + h >= target * (1 - 1e-13)
        h_try = target - t if hit else h
        try:
            for s in range(1, 7):
                ys_ = y + h_try * sum(a * k[j] for j, a in enumerate(_A[s]) if a)
                k[s] = rhs(ys_)
        except PoleHit as exc:
            # a stage landed on a pole: shrink and retry, give up below h_min
            rejected += 1
            h = h_try / 4
            if h < h_min:
                return make(times, ys, accepted, rejected, Termination.COLLISION_ABORT, t, exc.pair)
            continue
        y_new = y + h_try * sum(b * kk for b, kk in zip(_B, k) if b)
        err_vec = h_try * sum(e * kk for e, kk in zip(_E, k) if e)
        sc = abs_tol + rel_tol * np.maximum(np.abs(y.view(float)), np.abs(y_new.view(float)))
        err = max(float(np.max(np.abs(err_vec.view(float)) / sc)), 1e-16)
        if err <= 1.0:
            accepted += 1
            t = target if hit else t + h_try
            y = y_new
            k[0] = k[6]  # FSAL
            fac = min(5.0, max(0.2, safety * err ** (-alpha) * err_prev**beta))
            err_prev = max(err, 1e-4)
            h_prop = h_try * fac
            # do not let a short landing step shrink the natural step size
            h = max(h_prop, h) if hit else h_prop
            if record_dt is not None:
                h = min(h, record_dt)
            if next_rec is None or hit:
                times.append(t)
                ys.append(y.copy())
                if next_rec is not None:
                    next_rec = record_dt * (round(t / record_dt) + 1)
            st = state0.with_positions(y[:N], y[N:])
            prox, pair = st.min_proximity()
            if prox < collision_eps:
                if times[-1] != t:
                    times.append(t)
                    ys.append(y.copy())
                return make(times, ys, accepted, rejected, Termination.COLLISION_ABORT, t, pair)
        else:
            rejected += 1
            h = h_try * max(0.2, safety * err ** (-alpha))
        if h < h_min:
            return make(times, ys, accepted, rejected, Termination.NON_CONVERGENT, t)
    else:
        return make(times, ys, accepted, rejected, Termination.NON_CONVERGENT, t)
    return make(times, ys, accepted, rejected, Termination.COMPLETED)


# ---------------------------------------------------------------------------
# consistency checks
# ---------------------------------------------------------------------------


def _fd2(x, h):
    """4th-order central second difference along axis 0 at interior points."""
    return (-x[:-4] + 16 * x[1:-3] - 30 * x[2:-2] + 16 * x[3:-1] - x[4:]) / (12 * h * h)


def flow_consistency_residuals(traj: Trajectory):
    """(q-set, mu-set) max |FD2(positions) - RS acceleration| over interior records."""
    if len(traj) < 5:
        raise ShapeMismatch("need at least 5 recorded states")
    dt = np.diff(traj.times)
    h = dt[0]
    if np.max(np.abs(dt - h)) > 1e-9 * h:
        raise ShapeMismatch("recorded states must be uniformly spaced")
    qdd, mdd = _fd2(traj.q, h), _fd2(traj.mu, h)
    rq = rm = 0.0
    for j in range(2, len(traj) - 2):
        qd, md = traj.velocities(j)
        aq = rs_acceleration(traj.q[j], qd, traj.eta, traj.kind)
        am = rs_acceleration(traj.mu[j], md, traj.eta, traj.kind)
        rq = max(rq, float(np.max(np.abs(qdd[j - 2] - aq))))
        rm = max(rm, float(np.max(np.abs(mdd[j - 2] - am))))
    return rq, rm


def flow_consistency_residual(traj: Trajectory, form: Optional[FlowForm] = None) -> float:
    """Max second-difference mismatch against the RS equations for both sets.

    ``form`` defaults to the form the trajectory was integrated with; passing
    the other form re-derives velocities through :func:`rescale_constant`.
    """
    if form is not None and form is not traj.form:
        c = rescale_constant(traj.q.shape[1], traj.eta, traj.kind, traj.mu.shape[1])
        scale = traj.time_scale * (c if traj.form is FlowForm.PHI else 1 / c)
        traj = replace(traj, form=form, time_scale=scale)
    return max(flow_consistency_residuals(traj))


def nonrelativistic_limit_residual(state: SelfDualState, nu, c: float) -> float:
    """max |c * v_theta - c - v_CM| over both sets, with eta = nu / c."""
    if c < 10:
        raise InvalidParams("c must be at least 10")
    st = replace(state, eta=complex(nu) / c)
    qd, md = selfdual_velocity(st, FlowForm.THETA)
    cq, cm = cm_selfdual_velocity(st, nu)
    r = np.concatenate([c * qd - c - cq, c * md - c - cm])
    return float(np.max(np.abs(r)))


def hamiltonian_drift(traj: Trajectory) -> float:
    """Relative drift of the RS Hamiltonians sum(qdot) and sum(mudot) along ``traj``.

    Both sets obey RS equations of motion, for which the sum of velocities is
    the conserved energy; the result is max_t |H(t) - H(0)| / max(1, |H(0)|).
    """
    h = np.array([[v.sum() for v in traj.velocities(i)] for i in range(len(traj))])
    return float(np.max(np.abs(h - h[0]) / np.maximum(1.0, np.abs(h[0]))))


def dimensional_reduction_residual(state: SelfDualState, R: float) -> float:
    """Distance between the (N, M) theta-quotient velocities of ``state`` and
    those of the (N, M+1) system with an extra dual coordinate at ``R``.

    Rational kernel only; the gap closes like 1/R.
    """
    if not isinstance(state.kind, Rational):
        raise UnsupportedKind("dimensional reduction is checked for the rational kernel")
    big = replace(state, mu=np.append(state.mu, complex(R)))
    qd, md = selfdual_velocity(state, FlowForm.THETA)
    qb, mb = selfdual_velocity(big, FlowForm.THETA)
    return float(max(np.abs(qb - qd).max(), np.abs(mb[:-1] - md).max(initial=0.0)))
