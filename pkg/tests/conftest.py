import math

import numpy as np
import pytest

from tpgate import TrapConfig, solve_equilibrium
from tpgate.modes import Axis, build_matrix, normal_modes

TAU0 = 2.0 * math.pi


@pytest.fixture(scope="session")
def ref_config():
    return TrapConfig(n_ions=10, beta_x=10.0, eta_ref=0.1, nbar_cm=3.0)


@pytest.fixture(scope="session")
def chain10():
    return solve_equilibrium(10)


@pytest.fixture(scope="session")
def modes_x(chain10, ref_config):
    return normal_modes(build_matrix(chain10, ref_config.beta_x, Axis.TRANSVERSE), Axis.TRANSVERSE, ref_config.eta_ref)


@pytest.fixture(scope="session")
def modes_z(chain10, ref_config):
    return normal_modes(build_matrix(chain10, 1.0, Axis.LONGITUDINAL), Axis.LONGITUDINAL, ref_config.eta_ref)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def slow_gate(ref_config, modes_x):
    """Optimal single-segment (mu, amplitude) for pair (1,2) at 37 tau0."""
    from tpgate.optimizer import OptimizationProblem, optimize_gate, sideband_window

    tau = 37 * TAU0
    rep = optimize_gate(OptimizationProblem(ref_config, modes_x, (1, 2), tau, 1, sideband_window(modes_x, tau)))
    return rep.best_mu, float(rep.best_amplitudes[0])
