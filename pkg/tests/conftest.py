"""Shared fixtures. The two bundled example simulations are expensive
(tens of seconds each at rtol=atol=1e-12), so they are session-scoped and
shared between the module tests and the acceptance suite."""
import pytest

from hexnet.integrator import IntegratorConfig, integrate
from hexnet.scenario import bundled_scenario_path, load_scenario


@pytest.fixture(scope="session")
def example1():
    sc = load_scenario(bundled_scenario_path("example1"))
    return sc, sc.field_params(), sc.initial_state()


@pytest.fixture(scope="session")
def example2():
    sc = load_scenario(bundled_scenario_path("example2"))
    return sc, sc.field_params(), sc.initial_state()


@pytest.fixture(scope="session")
def example1_trajectory(example1):
    sc, p, s0 = example1
    import time

    t0 = time.time()
    traj = integrate(s0, p, sc.integrator)
    return traj, time.time() - t0


@pytest.fixture(scope="session")
def example2_trajectory(example2):
    sc, p, s0 = example2
    return integrate(s0, p, sc.integrator)


@pytest.fixture(scope="session")
def example1_fine_window0(example1):
    """Finely sampled prefix covering the first active window of block 3."""
    sc, p, s0 = example1
    cfg = IntegratorConfig(t_end=140.0, sample_dt=0.005)
    return integrate(s0, p, cfg)


_SMALL_SCENARIO = """\
hierarchy:
  superstructure:
    vertices: 3
    edges: [[1, 2], [2, 3], [3, 1]]
  substructures:
    - {vertices: 3, edges: [[1, 2], [2, 3], [3, 1]]}
    - {vertices: 3, edges: [[1, 2], [2, 3], [3, 1]]}
    - {vertices: 3, edges: [[1, 2], [2, 3], [3, 1]]}
coefficients:
  c_plus: 1.0
  c_minus: -1.5
field:
  epsilon: 0.2
initial_state:
  X: [0.9, 0.1, 0.1]
  x:
    - [0.9, 0.1, 0.1]
    - [0.9, 0.1, 0.1]
    - [0.9, 0.1, 0.1]
integrator:
  t_end: 80.0
  rtol: 1.0e-09
  atol: 1.0e-09
  sample_dt: 0.1
analysis:
  witness_deltas: [0.01]
"""


@pytest.fixture(scope="session")
def small_scenario_file(tmp_path_factory):
    """A cheap unit-timescale scenario for CLI and workbench tests."""
    path = tmp_path_factory.mktemp("scen") / "small.yaml"
    path.write_text(_SMALL_SCENARIO, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def small_scenario(small_scenario_file):
    sc = load_scenario(small_scenario_file)
    return sc, sc.field_params(), sc.initial_state()
