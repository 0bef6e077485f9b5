"""Convergence rates of the limiting regimes: non-relativistic (1/c),
dimensional reduction (1/R) and the shallow-water multiplier (delta^3).

    python3 scripts/limit_rates.py
"""
import numpy as np

from rsdual.dynamics import SelfDualState, dimensional_reduction_residual, nonrelativistic_limit_residual
from rsdual.elliptic import Elliptic, Rational
from rsdual.ilw import hyperbolic_kernel_limit_residual, kdv_multiplier_residual

Q, MU, ETA = [-0.25 + 0.1j, 0.25 + 0.12j], [-0.2 + 0.4j, 0.3 + 0.38j], 0.15 + 0.03j


def rate(xs, ys):
    return np.polyfit(np.log10(xs), np.log10(ys), 1)[0]


def main():
    cs = np.array([1e2, 1e3, 1e4, 1e5])
    for kind in (Rational(), Elliptic.with_tau(1j)):
        s = SelfDualState(Q, MU, ETA, kind)
        r = [nonrelativistic_limit_residual(s, 1.0, c) for c in cs]
        print(f"non-relativistic {kind.name:<9} residuals {np.array2string(np.array(r), precision=2)}"
              f"  slope {rate(cs, r):+.3f}")
    s = SelfDualState([0.0, 1.1 + 0.2j, -0.9 + 0.1j], [0.4 + 1.3j, -0.5 - 1.1j], 0.3 + 0.1j, Rational())
    r = [dimensional_reduction_residual(s, R) for R in cs]
    print(f"dimensional reduction       residuals {np.array2string(np.array(r), precision=2)}"
          f"  slope {rate(cs, r):+.3f}")
    ds = np.array([3e-2, 1e-2, 3e-3, 1e-3])
    r = [kdv_multiplier_residual(d, 0.5, 4) for d in ds]
    print(f"shallow-water multiplier    residuals {np.array2string(np.array(r), precision=2)}"
          f"  slope {rate(ds, r):+.3f}")
    for L in (2.0, 5.0, 10.0, 20.0):
        print(f"hyperbolic kernel limit L={L:<5g} residual {hyperbolic_kernel_limit_residual(0.3, 1.0, L):.2e}")


if __name__ == "__main__":
    main()
