import numpy as np
import pytest
from hypothesis import settings

from rsdual.dynamics import SelfDualState
from rsdual.elliptic import Elliptic, Hyperbolic, Rational

settings.register_profile("rsdual", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("rsdual")

TAU_I = Elliptic.with_tau(1j)
KINDS = {"elliptic": TAU_I, "hyperbolic": Hyperbolic(), "rational": Rational()}

# gentle initial data: separated, velocities of order one
ELL22 = ([-0.25 + 0.1j, 0.25 + 0.12j], [-0.2 + 0.4j, 0.3 + 0.38j], 0.15 + 0.03j)
ELL33 = (
    [-0.3 + 0.1j, 0.0 + 0.12j, 0.3 + 0.08j],
    [-0.15 + 0.42j, 0.15 + 0.4j, 0.45 + 0.38j],
    0.1 + 0.02j,
)
DEG_Q = [0.0, 1.1 + 0.2j, -0.9 + 0.1j]
DEG_MU = [0.4 + 1.3j, -0.5 - 1.1j]
DEG_ETA = 0.3 + 0.1j


def ell_state(data=ELL22, kind=TAU_I):
    return SelfDualState(data[0], data[1], data[2], kind)


def deg_state(kind, n=3, m=2):
    return SelfDualState(DEG_Q[:n], DEG_MU[:m], DEG_ETA, kind)


def random_state(rng, kind, n, m, tries=200):
    """Random non-colliding state; elliptic points in a strip of the cell."""
    for _ in range(tries):
        if isinstance(kind, Elliptic):
            q = rng.uniform(-0.4, 0.4, n) + rng.uniform(0.05, 0.45, n) * kind.tau
            mu = rng.uniform(-0.4, 0.4, m) + rng.uniform(0.05, 0.45, m) * kind.tau
            eta = complex(rng.uniform(0.05, 0.2), rng.uniform(0.0, 0.1))
        else:
            q = rng.normal(size=n) + 1j * rng.normal(size=n)
            mu = rng.normal(size=m) + 1j * rng.normal(size=m)
            eta = complex(rng.uniform(0.1, 0.5), rng.uniform(-0.2, 0.2))
        st = SelfDualState(q, mu, eta, kind)
        prox, _ = st.min_proximity()
        if prox > 5e-2:
            return st
    raise RuntimeError("could not draw a separated state")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# filled by the acceptance tests and echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
