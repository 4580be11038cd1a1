import numpy as np
import pytest

from bwopt.experiment import resolve_scenario
from bwopt.scenario import build_scenario

# filled by test_acceptance.py, echoed after the test summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny_scenario():
    return resolve_scenario("tiny_discrete")


@pytest.fixture(scope="session")
def harbor_scenario():
    return resolve_scenario("sochi_like")


def scenario_dict(**overrides) -> dict:
    """Small synthetic scenario for unit tests: open water below a coast.

    20x14 grid, coast at row 12, one existing groin at x=4 with a two-segment
    attachment at its seaward end, one control point, a vertical fairway at
    x=16. Waves travel straight toward the coast.
    """
    coast_row = 12
    depth = [
        [-1.0] * 20 if y >= coast_row else [5.0] * 20
        for y in range(14)
    ]
    data = {
        "name": "unit",
        "grid": {"cell_size": 10.0, "depth": depth},
        "boundary": {"incident_height": 2.0, "wave_direction": 90.0},
        "existing_structures": [
            {"vertices": [[4, 12], [4, 8]], "material": "solid_wall"},
        ],
        "attachments": [
            {"x": 4, "y": 8, "base_angle": 0.0, "n_segments": 2, "material": "solid_wall"},
        ],
        "control_points": [[10, 9]],
        "fairway": [[16, 0], [16, 10]],
        "initialization": {"max_length": 6.0},
    }
    data.update(overrides)
    return data


@pytest.fixture()
def unit_scenario():
    return build_scenario(scenario_dict())


def mc_hypervolume(points, reference, n_samples=1_000_000, seed=0):
    """Monte-Carlo oracle: uniform samples in [ideal, reference].

    Returns (estimate, standard_error) of the dominated volume.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(reference, dtype=float)
    low = pts.min(axis=0)
    box = float(np.prod(ref - low))
    rng = np.random.default_rng(seed)
    samples = rng.uniform(low, ref, size=(n_samples, len(ref)))
    hit = np.zeros(n_samples, dtype=bool)
    for p in pts:
        hit |= np.all(samples >= p, axis=1)
    rate = hit.mean()
    return rate * box, np.sqrt(rate * (1.0 - rate) / n_samples) * box
