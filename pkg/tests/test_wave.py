import subprocess
import sys

import numpy as np
import pytest

from bwopt.geometry import LAND, ScenarioGrid
from bwopt.wave import (
    BoundaryConditions,
    FileExchangeWaveModel,
    ObstacleSet,
    ShadowDiffusionModel,
    read_field,
    sample,
    simulate,
    write_field,
)

H0 = 2.0


def open_grid(n_cols=12, n_rows=10):
    return ScenarioGrid.from_depth(np.full((n_rows, n_cols), 5.0), 25.0)


def south_boundary():
    # waves travel toward +y, i.e. from the open sea at the low rows
    return BoundaryConditions(incident_height=H0, wave_direction=90.0)


# ----- exact base cases -----

def test_open_water_is_uniform_incident_height():
    field = simulate(open_grid(), ObstacleSet(), south_boundary())
    assert np.all(field == H0)


def test_full_width_wall_shadows_exactly():
    grid = open_grid()
    wall_row = 4
    obstacles = ObstacleSet({(c, wall_row): 0.1 for c in range(grid.n_cols)})
    field = simulate(grid, obstacles, south_boundary(), diffusion_passes=0)
    assert np.all(field[:wall_row] == H0)
    assert np.all(field[wall_row:] == 0.1 * H0)


def test_vertical_ray_oracle_column_products():
    # direction 90 degrees means each column is independent: the height at
    # (row, col) is H0 times the product of the column's coefficients at or
    # below that row, which a cumulative product computes directly
    grid = open_grid(n_cols=6, n_rows=8)
    rng = np.random.default_rng(7)
    coeff = np.ones((8, 6))
    cells = {}
    for _ in range(10):
        col, row = int(rng.integers(0, 6)), int(rng.integers(0, 8))
        c = float(rng.uniform(0.05, 0.9))
        cells[(col, row)] = min(c, cells.get((col, row), 1.0))
        coeff[row, col] = min(coeff[row, col], c)
    field = simulate(grid, ObstacleSet(cells), south_boundary(), diffusion_passes=0)
    oracle = H0 * np.cumprod(coeff, axis=0)
    assert field == pytest.approx(oracle, rel=1e-12)


def test_horizontal_ray_oracle_row_products():
    grid = open_grid(n_cols=9, n_rows=5)
    boundary = BoundaryConditions(incident_height=H0, wave_direction=0.0)
    obstacles = ObstacleSet({(3, 2): 0.5, (6, 2): 0.5, (4, 0): 0.2})
    field = simulate(grid, obstacles, boundary, diffusion_passes=0)
    coeff = np.ones((5, 9))
    coeff[2, 3] = coeff[2, 6] = 0.5
    coeff[0, 4] = 0.2
    assert field == pytest.approx(H0 * np.cumprod(coeff, axis=1), rel=1e-12)


def test_land_blocks_completely():
    depth = np.full((10, 12), 5.0)
    depth[4, :] = LAND
    grid = ScenarioGrid.from_depth(depth, 25.0)
    field = simulate(grid, ObstacleSet(), south_boundary(), diffusion_passes=0)
    assert np.all(field[:4] == H0)
    assert np.all(field[4:] == 0.0)


def test_unit_transmission_is_transparent():
    grid = open_grid()
    obstacles = ObstacleSet({(c, 3): 1.0 for c in range(grid.n_cols)})
    field = simulate(grid, obstacles, south_boundary())
    assert np.all(field == H0)


# ----- independent two-stage oracle on an oblique direction -----

def shadow_oracle(grid, cells, boundary, samples=20001):
    """Trace each cell's upwave ray by dense sampling, then multiply coefficients.

    Dense sampling only sees cells crossed with positive measure; exact corner
    touches are avoided by the test's choice of obstacle positions.
    """
    theta = np.radians(boundary.wave_direction)
    reach = np.hypot(grid.n_cols, grid.n_rows) + 2.0
    ts = np.linspace(0.0, 1.0, samples)
    field = np.zeros((grid.n_rows, grid.n_cols))
    coeff = {cell: c for cell, c in cells.items()}
    for row in range(grid.n_rows):
        for col in range(grid.n_cols):
            if grid.land_mask[row, col]:
                continue
            xs = col - ts * reach * np.cos(theta)
            ys = row - ts * reach * np.sin(theta)
            ray_cells = set(
                zip(
                    np.floor(xs + 0.5).astype(int).tolist(),
                    np.floor(ys + 0.5).astype(int).tolist(),
                )
            )
            f = 1.0
            for cell in ray_cells:
                c, r = cell
                if 0 <= c < grid.n_cols and 0 <= r < grid.n_rows and grid.land_mask[r, c]:
                    f = 0.0
                f *= coeff.get(cell, 1.0)
            field[row, col] = boundary.incident_height * f
    return field


def test_oblique_shadowing_matches_sampling_oracle():
    grid = open_grid(n_cols=10, n_rows=8)
    boundary = BoundaryConditions(incident_height=H0, wave_direction=105.0)
    # obstacle cells away from exact corner alignments of the 105-degree ray
    cells = {(3, 4): 0.1, (4, 4): 0.1, (6, 2): 0.35, (7, 5): 0.5}
    got = simulate(grid, ObstacleSet(cells), boundary, diffusion_passes=0)
    oracle = shadow_oracle(grid, cells, boundary)
    assert got == pytest.approx(oracle, rel=1e-9)


# ----- properties -----

def test_bounds_and_land_zero_on_random_fields():
    rng = np.random.default_rng(11)
    for _ in range(20):
        depth = np.full((9, 9), 5.0)
        for _ in range(6):
            depth[rng.integers(0, 9), rng.integers(0, 9)] = LAND
        grid = ScenarioGrid.from_depth(depth, 25.0)
        cells = {
            (int(rng.integers(0, 9)), int(rng.integers(0, 9))): float(rng.uniform(0, 1))
            for _ in range(5)
        }
        direction = float(rng.uniform(-180, 180))
        field = simulate(grid, ObstacleSet(cells), BoundaryConditions(H0, direction))
        assert np.all(field >= 0.0) and np.all(field <= H0 + 1e-12)
        assert np.all(field[grid.land_mask] == 0.0)


def test_adding_obstacles_never_raises_heights():
    rng = np.random.default_rng(23)
    grid = open_grid(n_cols=10, n_rows=10)
    violations = 0
    for _ in range(100):
        base_cells = {
            (int(rng.integers(0, 10)), int(rng.integers(0, 10))): float(rng.uniform(0.05, 1))
            for _ in range(rng.integers(0, 4))
        }
        extra_cells = dict(base_cells)
        for _ in range(int(rng.integers(1, 6))):
            cell = (int(rng.integers(0, 10)), int(rng.integers(0, 10)))
            value = float(rng.uniform(0.05, 1))
            extra_cells[cell] = min(value, extra_cells.get(cell, 1.0))
        direction = float(rng.uniform(-180, 180))
        boundary = BoundaryConditions(H0, direction)
        base = simulate(grid, ObstacleSet(base_cells), boundary)
        more = simulate(grid, ObstacleSet(extra_cells), boundary)
        violations += int(np.any(more > base + 1e-12))
    assert violations == 0


def test_mirror_symmetry_about_x_axis():
    grid = open_grid(n_cols=10, n_rows=8)
    cells = {(3, 2): 0.1, (6, 5): 0.35}
    mirrored = {(c, grid.n_rows - 1 - r): v for (c, r), v in cells.items()}
    f1 = simulate(grid, ObstacleSet(cells), BoundaryConditions(H0, 70.0))
    f2 = simulate(grid, ObstacleSet(mirrored), BoundaryConditions(H0, -70.0))
    assert f1 == pytest.approx(f2[::-1], abs=1e-12)


def test_diffusion_smears_but_preserves_constants():
    grid = open_grid()
    wall_row = 4
    obstacles = ObstacleSet({(c, wall_row): 0.1 for c in range(grid.n_cols)})
    sharp = simulate(grid, obstacles, south_boundary(), diffusion_passes=0)
    smooth = simulate(grid, obstacles, south_boundary(), diffusion_passes=3)
    # rows far from the wall keep their plateau values; the step is softened
    assert np.all(smooth[0] == H0)
    jump_sharp = sharp[wall_row + 1, 5] - sharp[wall_row - 1, 5]
    jump_smooth = smooth[wall_row + 1, 5] - smooth[wall_row - 1, 5]
    assert abs(jump_smooth) < abs(jump_sharp)


# ----- obstacle set semantics -----

def test_obstacle_set_keeps_most_blocking_coefficient():
    obs = ObstacleSet()
    obs.add((2, 3), 0.5)
    obs.add((2, 3), 0.2)
    obs.add((2, 3), 0.9)
    assert obs.cells[(2, 3)] == 0.2


def test_obstacle_set_clamps_coefficients():
    obs = ObstacleSet({(0, 0): 1.7, (1, 1): -0.4})
    assert obs.cells[(0, 0)] == 1.0
    assert obs.cells[(1, 1)] == 0.0


def test_obstacle_merge():
    a = ObstacleSet({(0, 0): 0.5})
    b = ObstacleSet({(0, 0): 0.3, (1, 0): 0.8})
    merged = a.merged_with(b)
    assert merged.cells == {(0, 0): 0.3, (1, 0): 0.8}
    assert a.cells == {(0, 0): 0.5}  # inputs untouched


def test_boundary_rejects_nonpositive_height():
    with pytest.raises(ValueError):
        BoundaryConditions(incident_height=0.0, wave_direction=90.0)


# ----- sampling -----

def test_sample_at_cell_centers_is_exact():
    field = np.arange(12, dtype=float).reshape(3, 4)
    got = sample(field, [(0.0, 0.0), (3.0, 2.0), (1.0, 1.0)])
    assert got == pytest.approx([0.0, 11.0, 5.0])


def test_sample_bilinear_midpoint():
    field = np.array([[0.0, 2.0], [4.0, 6.0]])
    assert sample(field, [(0.5, 0.5)]) == pytest.approx([3.0])


def test_sample_clamps_outside_grid():
    field = np.array([[1.0, 2.0], [3.0, 4.0]])
    got = sample(field, [(-5.0, -5.0), (9.0, 9.0)])
    assert got == pytest.approx([1.0, 4.0])


# ----- file exchange -----

def test_field_file_round_trip_is_bitexact(tmp_path):
    rng = np.random.default_rng(5)
    field = rng.uniform(0, 3, size=(6, 7))
    path = tmp_path / "field.txt"
    write_field(path, field)
    assert np.array_equal(read_field(path), field)


def test_write_field_marks_land(tmp_path):
    field = np.ones((2, 2))
    mask = np.array([[True, False], [False, False]])
    path = tmp_path / "field.txt"
    write_field(path, field, land_mask=mask)
    back = read_field(path)
    assert back[0, 0] == LAND
    assert back[0, 1] == 1.0


def test_read_field_rejects_ragged(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 2 3\n4 5\n")
    with pytest.raises(ValueError):
        read_field(path)


EXTERNAL_MODEL = """\
import numpy as np
depth = np.loadtxt("depth.txt", ndmin=2)
h0 = dict(line.split() for line in open("boundary.txt"))
field = np.where(depth == -1.0, 0.0, float(h0["incident_height"]) / 2.0)
with open("heights.txt", "w") as fh:
    for row in field:
        fh.write(" ".join(repr(float(v)) for v in row) + "\\n")
"""


def test_file_exchange_model_round_trip(tmp_path):
    script = tmp_path / "model.py"
    script.write_text(EXTERNAL_MODEL)
    depth = np.full((4, 5), 5.0)
    depth[0, 0] = LAND
    grid = ScenarioGrid.from_depth(depth, 25.0)
    model = FileExchangeWaveModel([sys.executable, str(script)], tmp_path / "work")
    field = model.simulate(grid, ObstacleSet({(1, 1): 0.5}), south_boundary())
    assert field.shape == (4, 5)
    assert field[0, 0] == 0.0  # land forced to zero
    assert np.all(field[1:] == H0 / 2.0)
    # the adapter wrote the documented exchange files
    work = tmp_path / "work"
    assert (work / "depth.txt").exists()
    assert (work / "obstacles.txt").read_text() == "1 1 0.5\n"
    assert "incident_height 2.0" in (work / "boundary.txt").read_text()


def test_file_exchange_model_rejects_wrong_shape(tmp_path):
    script = tmp_path / "model.py"
    script.write_text('open("heights.txt", "w").write("1.0 2.0\\n")\n')
    grid = ScenarioGrid.from_depth(np.full((3, 3), 5.0), 25.0)
    model = FileExchangeWaveModel([sys.executable, str(script)], tmp_path / "work")
    with pytest.raises(ValueError):
        model.simulate(grid, ObstacleSet(), south_boundary())


def test_file_exchange_model_propagates_command_failure(tmp_path):
    script = tmp_path / "model.py"
    script.write_text("raise SystemExit(3)\n")
    grid = ScenarioGrid.from_depth(np.full((3, 3), 5.0), 25.0)
    model = FileExchangeWaveModel([sys.executable, str(script)], tmp_path / "work")
    with pytest.raises(subprocess.CalledProcessError):
        model.simulate(grid, ObstacleSet(), south_boundary())


def test_shadow_diffusion_model_wraps_simulate():
    grid = open_grid()
    model = ShadowDiffusionModel(diffusion_passes=0)
    wall = ObstacleSet({(c, 4): 0.1 for c in range(grid.n_cols)})
    direct = simulate(grid, wall, south_boundary(), diffusion_passes=0)
    assert np.array_equal(model.simulate(grid, wall, south_boundary()), direct)
