"""Run the full comparison matrix on the shipped harbor scenario.

Covers both algorithms, both encodings and the greedy switch over the
default seed list; writes the usual experiment tree plus a short console
summary of median final hypervolumes per variant.
"""
from __future__ import annotations

import argparse

import numpy as np

from bwopt.experiment import (
    DEFAULT_SEEDS,
    ExperimentPlan,
    VariantSpec,
    resolve_scenario,
    run_experiment,
)
from bwopt.geometry import Encoding

ALL_VARIANTS = [
    VariantSpec(algorithm, Encoding(encoding), greedy)
    for algorithm in ("spea2", "de")
    for encoding in ("angular", "cartesian")
    for greedy in (False, True)
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", default="sochi_like")
    parser.add_argument("--out", default="out/comparison")
    parser.add_argument("--seeds", type=int, nargs="+", default=list(DEFAULT_SEEDS))
    parser.add_argument("--generations", type=int, default=30)
    parser.add_argument("--population", type=int, default=30)
    args = parser.parse_args()

    scenario = resolve_scenario(args.scenario)
    plan = ExperimentPlan(
        variants=ALL_VARIANTS,
        seeds=args.seeds,
        generations=args.generations,
        population_size=args.population,
        archive_size=args.population,
        scenario=args.scenario,
        name="comparison",
    )
    result = run_experiment(plan, scenario, args.out)
    by_variant: dict[str, list[float]] = {}
    for row in result.summary_rows:
        by_variant.setdefault(row["variant"], []).append(row["final_hypervolume"])
    for name, values in by_variant.items():
        print(f"{name}: median final hypervolume {np.median(values):.6g} over {len(values)} seeds")
    for failure in result.failures:
        print(f"FAILED {failure['variant']} seed {failure['seed']}: {failure['error']}")
    return 0 if result.ok else 2


if __name__ == "__main__":
    raise SystemExit(main())
