"""Core-equivalence sweep: forward check of equilibria, converse check of perturbations.

    python scripts/run_equivalence.py --trials 100 --out results/equivalence.csv
"""

import argparse
import time
from dataclasses import fields
from pathlib import Path

from distcore.experiment import ExperimentConfig, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for f in fields(ExperimentConfig):
        if isinstance(f.default, tuple):
            ap.add_argument(f"--{f.name}", type=int, nargs=2, default=f.default)
        elif isinstance(f.default, bool):
            ap.add_argument(f"--{f.name}", action=argparse.BooleanOptionalAction, default=f.default)
        else:
            ap.add_argument(f"--{f.name}", type=type(f.default), default=f.default)
    ap.add_argument("--out", type=Path, help="write .csv or .json here")
    args = vars(ap.parse_args())
    out = args.pop("out")
    cfg = ExperimentConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in args.items()})

    start = time.perf_counter()
    summary = run_experiment(cfg)
    secs = time.perf_counter() - start
    c = summary.counts
    n = max(c["perturbations"], 1)
    print(f"trials {c['trials']} ({c['skipped']} without an exact equilibrium)")
    print(f"forward: {c['forward_pass']}/{c['equilibria']} equilibria unblocked on the default grid")
    print(f"converse: {c['converse_default']}/{c['perturbations']} blocked on the default grid ({c['converse_default'] / n:.1%})")
    print(f"          {c['converse_refined']}/{c['perturbations']} after one refinement, {c['witnesses_valid']} witnesses re-verified")
    print(f"{secs:.1f}s")
    if out:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(summary.to_json() if out.suffix == ".json" else summary.to_csv())


if __name__ == "__main__":
    main()
