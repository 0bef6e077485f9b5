"""Scenario-driven command line front end.

Usage::

    rsdual <command> --config scenario.json --out results/ [--seed N]

Commands: simulate, verify-identities, lax-spectrum, ilw-residual, limits.
Exit codes: 0 all checks pass, 2 configuration error, 3 collision abort,
4 a check failed.  The config schema is documented in the README.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import (
    FlowForm,
    SelfDualState,
    Termination,
    dimensional_reduction_residual,
    flow_consistency_residuals,
    integrate,
    nonrelativistic_limit_residual,
)
from .elliptic import Elliptic, Hyperbolic, Rational, e1_modular_residual
from .errors import RSDualError
from .identities import (
    derivative_identity_residual,
    fay_terms,
    higher_fay_terms,
    term_scale,
    velocity_sum_residual,
)
from .ilw import (
    PeriodicSignal,
    apply_T_fourier,
    apply_T_kernel,
    hyperbolic_kernel_limit_residual,
    ilw_residual,
    kdv_multiplier_residual,
    pole_field_from_state,
)
from .lax import build_lax, char_poly, det, det_identity_residual, spectral_drift

COMMANDS = ("simulate", "verify-identities", "lax-spectrum", "ilw-residual", "limits")
EXIT_OK, EXIT_CONFIG, EXIT_COLLISION, EXIT_CHECK = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _cplx(v, name) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        z = complex(v)
    elif isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        z = complex(v[0], v[1])
    else:
        raise ConfigError(f"{name}: expected a number or [re, im], got {v!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ConfigError(f"{name}: non-finite value")
    return z


def _real(v, name) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{name}: expected a finite number, got {v!r}")
    return float(v)


@dataclass(frozen=True)
class Scenario:
    kind: object
    q0: tuple
    mu0: tuple
    eta: complex
    nu: complex = 1.0
    form: FlowForm = FlowForm.PHI
    t_end: float = 0.2
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    record_dt: Optional[float] = None
    seed: int = 0
    samples: int = 20
    command: Optional[str] = None

    @property
    def N(self) -> int:
        return len(self.q0)

    @property
    def M(self) -> int:
        return len(self.mu0)

    def state(self) -> SelfDualState:
        return SelfDualState(list(self.q0), list(self.mu0), self.eta, self.kind)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {"kind", "q0", "mu0", "eta", "nu", "form", "t_end", "rel_tol", "abs_tol",
                 "record_dt", "seed", "samples", "command", "N", "M"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        for key in ("kind", "q0", "mu0", "eta"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        kind = _parse_kind(d["kind"])
        if not isinstance(d["q0"], list) or not isinstance(d["mu0"], list):
            raise ConfigError("q0 and mu0 must be lists")
        q0 = tuple(_cplx(v, f"q0[{i}]") for i, v in enumerate(d["q0"]))
        mu0 = tuple(_cplx(v, f"mu0[{i}]") for i, v in enumerate(d["mu0"]))
        if "N" in d and d["N"] != len(q0):
            raise ConfigError("N does not match len(q0)")
        if "M" in d and d["M"] != len(mu0):
            raise ConfigError("M does not match len(mu0)")
        kw = dict(kind=kind, q0=q0, mu0=mu0, eta=_cplx(d["eta"], "eta"))
        if "nu" in d:
            kw["nu"] = _cplx(d["nu"], "nu")
        if "form" in d:
            try:
                kw["form"] = FlowForm(d["form"])
            except ValueError:
                raise ConfigError(f"form must be 'phi' or 'theta', got {d['form']!r}") from None
        for key in ("t_end", "rel_tol", "abs_tol"):
            if key in d:
                kw[key] = _real(d[key], key)
        if d.get("record_dt") is not None:
            kw["record_dt"] = _real(d["record_dt"], "record_dt")
        for key in ("seed", "samples"):
            if key in d:
                if isinstance(d[key], bool) or not isinstance(d[key], int) or d[key] < 0:
                    raise ConfigError(f"{key} must be a non-negative integer")
                kw[key] = d[key]
        if "command" in d:
            if d["command"] not in COMMANDS:
                raise ConfigError(f"unknown command {d['command']!r}")
            kw["command"] = d["command"]
        sc = cls(**kw)
        if not 0 < sc.rel_tol <= 1e-2 or not 0 < sc.abs_tol <= 1e-2 or not sc.t_end > 0:
            raise ConfigError("need t_end > 0 and tolerances in (0, 1e-2]")
        try:
            sc.state()  # validates counts and the elliptic N == M rule
        except RSDualError as exc:
            raise ConfigError(str(exc)) from None
        return sc


def _parse_kind(value):
    if value in ("rational", {"type": "rational"}):
        return Rational()
    if value in ("hyperbolic", {"type": "hyperbolic"}):
        return Hyperbolic()
    if isinstance(value, dict) and value.get("type") == "elliptic":
        return Elliptic.with_tau(_cplx(value.get("tau", [0, 1]), "kind.tau"))
    if value == "elliptic":
        return Elliptic.with_tau(1j)
    raise ConfigError(f"unknown kind {value!r}")


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    try:
        return Scenario.from_dict(data)
    except RSDualError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# report helpers
# ---------------------------------------------------------------------------


def _num(x):
    x = complex(x)
    return x.real if x.imag == 0 else [x.real, x.imag]


class Report:
    def __init__(self, command: str, sc: Scenario):
        self.data = {"command": command, "kind": sc.kind.name, "N": sc.N, "M": sc.M,
                     "seed": sc.seed, "checks": {}}

    def check(self, name, residual, tol, scale=1.0):
        residual = float(abs(residual))
        bound = tol * max(1.0, float(scale))
        self.data["checks"][name] = {
            "residual": residual,
            "tolerance": tol,
            "scale": float(max(1.0, scale)),
            "passed": bool(math.isfinite(residual) and residual < bound),
        }

    def check_range(self, name, value, lo, hi):
        self.data["checks"][name] = {"value": float(value), "range": [lo, hi],
                                     "passed": bool(lo <= value <= hi)}

    def info(self, name, value):
        self.data[name] = value

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.data["checks"].values())

    def write(self, out: Path):
        self.data["passed"] = self.passed
        text = json.dumps(self.data, sort_keys=True, indent=2) + "\n"
        (out / "report.json").write_text(text, encoding="utf-8")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_trajectory(traj, out: Path):
    n, m = traj.q.shape[1], traj.mu.shape[1]
    header = ["t"]
    header += [f"q_{k}_{p}" for k in range(1, n + 1) for p in ("re", "im")]
    header += [f"mu_{a}_{p}" for a in range(1, m + 1) for p in ("re", "im")]
    with open(out / "trajectory.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, t in enumerate(traj.times):
            row = [_fmt(t)]
            for z in np.concatenate([traj.q[i], traj.mu[i]]):
                row += [_fmt(z.real), _fmt(z.imag)]
            w.writerow(row)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _integrate(sc: Scenario, form: FlowForm):
    return integrate(sc.state(), form, t_end=sc.t_end, rel_tol=sc.rel_tol, abs_tol=sc.abs_tol,
                     record_dt=sc.record_dt)


def _trajectory_info(rep: Report, traj):
    rep.info("termination", traj.termination.value)
    rep.info("steps", traj.step_stats)
    if traj.termination is not Termination.COMPLETED:
        rep.info("abort_time", traj.abort_time)
        rep.info("abort_pair", list(traj.abort_pair) if traj.abort_pair else None)


def cmd_simulate(sc: Scenario, out: Path) -> int:
    rep = Report("simulate", sc)
    traj = _integrate(sc, sc.form)
    _write_trajectory(traj, out)
    _trajectory_info(rep, traj)
    if traj.termination is Termination.COMPLETED and len(traj) >= 5 and sc.record_dt:
        rq, rm = flow_consistency_residuals(traj)
        rep.check("flow_consistency_q", rq, 1e-6)
        rep.check("flow_consistency_mu", rm, 1e-6)
    rep.write(out)
    if traj.termination is Termination.COLLISION_ABORT:
        return EXIT_COLLISION
    return EXIT_OK if rep.passed and traj.termination is Termination.COMPLETED else EXIT_CHECK


def _random_points(rng, kind, size):
    """Points in a box scaled to the kernel's natural cell."""
    if isinstance(kind, Elliptic):
        return rng.uniform(-0.4, 0.4, size) + rng.uniform(0.05, 0.45, size) * kind.tau
    return rng.uniform(-1, 1, size) + 1j * rng.uniform(-1, 1, size)


def cmd_verify_identities(sc: Scenario, out: Path) -> int:
    rep = Report("verify-identities", sc)
    rng = np.random.default_rng(sc.seed)
    kind = sc.kind
    tol = 1e-10 if isinstance(kind, Elliptic) else 1e-13
    worst = 0.0
    for _ in range(sc.samples):
        terms = fay_terms(*_random_points(rng, kind, 4), kind)
        worst = max(worst, abs(terms[0] - terms[1] - terms[2]) / max(1.0, term_scale(terms)))
    rep.check("fay_relative", worst, tol)
    worst = 0.0
    for n in range(2, 7):
        lhs, rhs = higher_fay_terms(_random_points(rng, kind, n), _random_points(rng, kind, n), kind)
        scale = max(1.0, abs(lhs), term_scale(rhs))
        worst = max(worst, abs(lhs - rhs.sum()) / scale)
    rep.check("higher_fay_relative", worst, tol)
    st = sc.state()
    if sc.N == sc.M:
        rep.check("velocity_sum", velocity_sum_residual(st), 1e-10)
        deriv = max(abs(derivative_identity_residual(st, i)) for i in range(sc.N))
        rep.check("derivative_identity", deriv, 1e-9)
    if isinstance(kind, Elliptic):
        z = _random_points(rng, kind, sc.samples)
        rep.check("e1_modular", np.max(np.abs(e1_modular_residual(z, kind.params))), 1e-10)
    rep.write(out)
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_lax_spectrum(sc: Scenario, out: Path) -> int:
    rep = Report("lax-spectrum", sc)
    rng = np.random.default_rng(sc.seed)
    st = sc.state()
    pair = build_lax(st)
    worst = 0.0
    for lam in rng.normal(size=sc.samples) + 1j * rng.normal(size=sc.samples):
        scale = max(abs(det(pair.L - lam * np.eye(sc.N))), 1e-300)
        worst = max(worst, abs(det_identity_residual(pair, lam)) / scale)
    rep.check("det_identity_relative", worst, 1e-9)
    traj = _integrate(sc, FlowForm.THETA)
    _trajectory_info(rep, traj)
    if traj.termination is Termination.COLLISION_ABORT:
        rep.write(out)
        return EXIT_COLLISION
    n = sc.N
    with open(out / "spectrum.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"c_{k}_{p}" for k in range(n + 1) for p in ("re", "im")])
        for i, s in enumerate(traj.states):
            c = char_poly(build_lax(s).L)
            w.writerow([_fmt(traj.times[i])] + [_fmt(v) for z in c for v in (z.real, z.imag)])
    drift = spectral_drift(traj)
    rep.check("charpoly_drift", drift.drift, 1e-8)
    rep.check("shared_spectrum", drift.shared_residual, 1e-8)
    rep.write(out)
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_ilw_residual(sc: Scenario, out: Path) -> int:
    rep = Report("ilw-residual", sc)
    rng = np.random.default_rng(sc.seed)
    st = sc.state()
    fld = pole_field_from_state(st, sc.form)
    z = _random_points(rng, sc.kind, sc.samples)
    res = np.abs(np.asarray(ilw_residual(st, z, sc.form, fld=fld)))
    rep.info("f0", _num(fld.f0))
    rep.info("max_residual", float(res.max()))
    rep.check("ilw_residual", res.max(), 1e-9)
    rep.write(out)
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_limits(sc: Scenario, out: Path) -> int:
    rep = Report("limits", sc)
    st = sc.state()
    if sc.N == sc.M or not isinstance(sc.kind, Elliptic):
        a = nonrelativistic_limit_residual(st, sc.nu, 1e3)
        b = nonrelativistic_limit_residual(st, sc.nu, 1e4)
        rep.check_range("nonrelativistic_ratio", a / b, 8.0, 12.0)
    if isinstance(sc.kind, Rational):
        a = dimensional_reduction_residual(st, 1e3)
        b = dimensional_reduction_residual(st, 1e4)
        rep.check_range("dimensional_reduction_ratio", a / b, 8.0, 12.0)
    rep.check_range("kdv_multiplier_ratio",
                    kdv_multiplier_residual(1e-2, 0.5, 4) / kdv_multiplier_residual(1e-3, 0.5, 4), 900.0, 1100.0)
    rep.check("hyperbolic_kernel_limit", hyperbolic_kernel_limit_residual(0.3, 1.0, 20.0), 1e-10)
    bo = apply_T_fourier(PeriodicSignal({n: 1.0 for n in (-3, -2, -1, 1, 2, 3)}, 0.5, 50.0))
    rep.check("benjamin_ono_limit", max(abs(c - 1j * np.sign(n)) for n, c in bo.coeffs.items()), 1e-12)
    rng = np.random.default_rng(sc.seed)
    c = rng.normal(size=5) + 1j * rng.normal(size=5)
    coeffs = {}
    for n in range(1, 6):
        coeffs[n], coeffs[-n] = c[n - 1], np.conj(c[n - 1])
    sig = PeriodicSignal(coeffs, 0.5, 1.0)
    a, b = apply_T_fourier(sig), apply_T_kernel(sig, 512)
    rep.check("fourier_vs_kernel", max(abs(a.coeffs[n] - b.coeffs[n]) for n in coeffs), 1e-8)
    rep.write(out)
    return EXIT_OK if rep.passed else EXIT_CHECK


HANDLERS = {
    "simulate": cmd_simulate,
    "verify-identities": cmd_verify_identities,
    "lax-spectrum": cmd_lax_spectrum,
    "ilw-residual": cmd_ilw_residual,
    "limits": cmd_limits,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rsdual", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    return p


def run(command: str, config_path, out_dir, seed: Optional[int] = None) -> int:
    try:
        sc = load_scenario(config_path)
    except ConfigError as exc:
        print(f"rsdual: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if seed is not None:
        if seed < 0:
            print("rsdual: config error: seed must be non-negative", file=sys.stderr)
            return EXIT_CONFIG
        sc = replace(sc, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        code = HANDLERS[command](sc, out)
    except RSDualError as exc:
        print(f"rsdual: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK
    if code == EXIT_COLLISION:
        print("rsdual: integration stopped on a pole collision", file=sys.stderr)
    elif code == EXIT_CHECK:
        print(f"rsdual: {command}: some checks failed, see {out / 'report.json'}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
