import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from v2vrrm.formulations import FormulationSpec, extract_allocation, formulate  # noqa: E402
from v2vrrm.model import Scenario  # noqa: E402
from v2vrrm.solver import SolveOptions, solve  # noqa: E402

HIGHS = SolveOptions(backend="highs")


def tiny_scenario(rng, N=3, F=1, T=2, gamma_db=3.0, spread=(0.5, 40.0), **kw):
    """Random small instance in noise-normalised units (noise = 1, Pmax = 1).

    Gains are drawn log-uniform so that some links are easy, some need
    power control, and some are out of reach.
    """
    lo, hi = np.log(spread[0]), np.log(spread[1])
    H = np.exp(rng.uniform(lo, hi, size=(N, N)))
    H = np.triu(H, 1)
    H = H + H.T
    acir = kw.pop("acir", (1.0, 1e-3, 1e-3)[:F])
    return Scenario.build(H, T=T, acir=acir, noise=1.0, p_max=1.0, gamma_t=10 ** (gamma_db / 10), **kw)


def solve_spec(scenario, spec=None, opts=HIGHS):
    spec = spec or FormulationSpec()
    model = formulate(scenario, spec)
    sol = solve(model, opts)
    return model, sol


def solve_alloc(scenario, spec=None, opts=HIGHS):
    model, sol = solve_spec(scenario, spec, opts)
    return sol, extract_allocation(model, sol)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
