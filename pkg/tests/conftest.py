import time

import numpy as np
import pytest

from hyperflow.curvfun import CurvatureFunctionSpec
from hyperflow.diagnostics import GRAD1_TERMS, grad1_residual, max_point_identity
from hyperflow.flow import FlowState, SpeedFunction, integrate_to, step
from hyperflow.geometry import AxiMesh, offcenter_sphere_graph

REFINEMENT_NS = (32, 64, 128, 256)


def observed_orders(errors):
    e = np.asarray(errors, dtype=float)
    return np.log2(e[:-1] / e[1:])


def states_around(N, t_mid=1.0, n=2, p=1.5):
    """Three states at t_mid - dt, t_mid, t_mid + dt on the off-center run, dt ~ dphi^2."""
    speed = SpeedFunction(p, CurvatureFunctionSpec.gauss(n))
    s0 = FlowState.initial(offcenter_sphere_graph(1.2, 0.5, AxiMesh(N, n)), speed)
    delta = 0.25 * (np.pi / N) ** 2
    s1 = integrate_to(s0, t_mid - delta)
    s2 = step(s1, delta)
    return s1, s2, step(s2, delta)


@pytest.fixture(scope="session")
def identity_study():
    """Grad1 and max-point defects at t = 1 for every mesh in REFINEMENT_NS."""
    start = time.perf_counter()
    out = {"grad1": [], "max_point": [], "ablation": {name: [] for name in GRAD1_TERMS}}
    for N in REFINEMENT_NS:
        prev, mid, nxt = states_around(N)
        out["grad1"].append(grad1_residual(prev, mid, nxt).max_defect)
        out["max_point"].append(max_point_identity(mid).residual)
        for name in GRAD1_TERMS:
            out["ablation"][name].append(grad1_residual(prev, mid, nxt, drop=(name,)).max_defect)
    out["seconds"] = time.perf_counter() - start
    return out


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record a criterion's outcome for the end-of-session summary, then assert it."""

    def _verdict(label, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {label}" + (f"  [{detail}]" if detail else "")
        _VERDICTS.append(line)
        print(line)
        assert passed, line

    return _verdict


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
