"""Regenerate the scenario files shipped in src/bwopt/data/.

Both scenarios are synthetic. The harbor one is drawn to resemble a real
attached-breakwater layout qualitatively (a shore mole bending into open
water, a detached breakwater, a fairway entering between them); the tiny one
is a deliberately small discretized search space whose 40 genotypes can be
enumerated exhaustively in tests.

Output is deterministic; running this script twice changes nothing.
"""
from __future__ import annotations

import json
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "bwopt" / "data"
LAND = -1.0


def harbor_depth(n_cols: int, n_rows: int, coast_row: int) -> list[list[float]]:
    """Plane beach: depth shrinks linearly toward the coast, land beyond it."""
    rows = []
    for y in range(n_rows):
        if y >= coast_row:
            rows.append([LAND] * n_cols)
        else:
            depth = round(2.0 + 0.5 * (coast_row - 1 - y), 1)
            rows.append([depth] * n_cols)
    return rows


def sochi_like() -> dict:
    return {
        "name": "sochi_like",
        "grid": {
            "cell_size": 25.0,
            "depth": harbor_depth(n_cols=60, n_rows=45, coast_row=36),
        },
        "boundary": {"incident_height": 3.0, "wave_direction": 105.0},
        "materials": {"solid_wall": 0.1, "tetrapod": 0.35},
        "existing_structures": [
            {"vertices": [[14, 36], [14, 24], [24, 19]], "material": "solid_wall"},
            {"vertices": [[33, 21], [44, 25]], "material": "solid_wall"},
        ],
        "attachments": [
            {"x": 24, "y": 19, "base_angle": -45.0, "n_segments": 2, "material": "solid_wall"},
            {"x": 33, "y": 21, "base_angle": -165.0, "n_segments": 2, "material": "solid_wall"},
            {"x": 44, "y": 25, "base_angle": 10.0, "n_segments": 2, "material": "solid_wall"},
        ],
        "control_points": [[24, 29], [32, 30], [41, 30]],
        "fairway": [[28, 2], [28, 22], [25, 28]],
        "initialization": {"max_length": 12.0, "angle_low": -90.0, "angle_high": 90.0},
        "nav_sampling_step": 0.25,
        "diffusion_passes": 3,
    }


def tiny_depth(n_cols: int, n_rows: int, coast_row: int) -> list[list[float]]:
    rows = []
    for y in range(n_rows):
        if y >= coast_row:
            rows.append([LAND] * n_cols)
        else:
            rows.append([round(6.0 - 0.3 * y, 1)] * n_cols)
    return rows


def tiny_discrete() -> dict:
    return {
        "name": "tiny_discrete",
        "grid": {"cell_size": 10.0, "depth": tiny_depth(n_cols=20, n_rows=16, coast_row=13)},
        "boundary": {"incident_height": 2.0, "wave_direction": 90.0},
        "materials": {"solid_wall": 0.1, "tetrapod": 0.35},
        "existing_structures": [
            {"vertices": [[6, 13], [6, 10]], "material": "solid_wall"},
        ],
        "attachments": [
            {"x": 6, "y": 10, "base_angle": 0.0, "n_segments": 1, "material": "solid_wall"},
        ],
        "control_points": [[10, 11]],
        "fairway": [[16, 0], [16, 12]],
        "gene_levels": {
            "lengths": [0.0, 2.0, 4.0, 6.0, 8.0],
            "angles": [-90.0, -75.0, -60.0, -45.0, -30.0, -15.0, 0.0, 15.0],
        },
        "nav_sampling_step": 0.25,
        "diffusion_passes": 3,
    }


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    for build in (sochi_like, tiny_discrete):
        data = build()
        path = DATA_DIR / f"{data['name']}.json"
        path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
