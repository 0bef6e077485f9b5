"""Integrate the self-dual system for each kernel and report how well the
recorded positions satisfy the second-order RS equations.

    python3 scripts/flow_consistency.py [--t-end 0.2] [--record-dt 1e-3]
"""
import argparse
import time

from rsdual.dynamics import FlowForm, SelfDualState, flow_consistency_residuals, hamiltonian_drift, integrate
from rsdual.elliptic import Elliptic, Hyperbolic, Rational

CASES = {
    "elliptic 2,2": ([-0.25 + 0.1j, 0.25 + 0.12j], [-0.2 + 0.4j, 0.3 + 0.38j], 0.15 + 0.03j, Elliptic.with_tau(1j)),
    "elliptic 3,3": (
        [-0.3 + 0.1j, 0.12j, 0.3 + 0.08j],
        [-0.15 + 0.42j, 0.15 + 0.4j, 0.45 + 0.38j],
        0.1 + 0.02j,
        Elliptic.with_tau(1j),
    ),
}
for _name, _kind in (("rational", Rational()), ("hyperbolic", Hyperbolic())):
    for _m in (2, 1):
        CASES[f"{_name} 3,{_m}"] = ([0.0, 1.1 + 0.2j, -0.9 + 0.1j], [0.4 + 1.3j, -0.5 - 1.1j][:_m], 0.3 + 0.1j, _kind)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--t-end", type=float, default=0.2)
    ap.add_argument("--record-dt", type=float, default=1e-3)
    ap.add_argument("--rel-tol", type=float, default=1e-10)
    args = ap.parse_args()
    print(f"{'case':<16}{'res q':>10}{'res mu':>10}{'H drift':>10}{'steps':>8}{'sec':>7}")
    for name, (q, mu, eta, kind) in CASES.items():
        t0 = time.perf_counter()
        tr = integrate(SelfDualState(q, mu, eta, kind), FlowForm.THETA, t_end=args.t_end,
                       rel_tol=args.rel_tol, record_dt=args.record_dt)
        rq, rm = flow_consistency_residuals(tr)
        dt = time.perf_counter() - t0
        print(f"{name:<16}{rq:>10.2e}{rm:>10.2e}{hamiltonian_drift(tr):>10.2e}"
              f"{tr.accepted:>8d}{dt:>7.2f}")


if __name__ == "__main__":
    main()
