"""Random check that better-set dominance and coupling feasibility agree.

    python scripts/strassen_sweep.py --pairs 5000 --seed 1
"""

import argparse
from dataclasses import dataclass
from fractions import Fraction as F

import numpy as np

from distcore.dominance import coupling_marginals_match, dominates_D, strassen_coupling
from distcore.economy import Reallocation, TypeProfile
from distcore.prefs import ExplicitStrict, strictly_prefers


@dataclass(frozen=True)
class SweepConfig:
    pairs: int = 1000
    seed: int = 0
    grid: int = 5  # bundle coordinates drawn from 0..grid-1
    support: int = 4


def random_pair(rng: np.random.Generator, cfg: SweepConfig):
    pts = list(dict.fromkeys((F(int(a)), F(int(b))) for a, b in rng.integers(0, cfg.grid, size=(2 * cfg.support, 2))))
    levels = [int(v) for v in rng.integers(0, len(pts), size=len(pts))]
    pref = ExplicitStrict.from_ranking([[p for p, lv in zip(pts, levels) if lv == k] for k in sorted(set(levels), reverse=True)])
    prof = TypeProfile(pref, pts[0])

    def dist():
        k = int(rng.integers(1, min(cfg.support, len(pts)) + 1))
        idx = rng.choice(len(pts), size=k, replace=False)
        w = [int(v) for v in rng.integers(1, 7, size=k)]
        return Reallocation.from_atoms((prof, pts[int(i)], F(m, sum(w))) for i, m in zip(idx, w))

    return pref, dist(), dist()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=SweepConfig.pairs)
    ap.add_argument("--seed", type=int, default=SweepConfig.seed)
    cfg = SweepConfig(**vars(ap.parse_args()))
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    agree = dominated = valid = 0
    for _ in range(cfg.pairs):
        pref, a, b = random_pair(rng, cfg)
        d = dominates_D(a, b).holds
        res = strassen_coupling(a, b)
        agree += d == res.ok
        dominated += d
        if res.ok:
            valid += coupling_marginals_match(res.coupling, a, b) and all(
                not strictly_prefers(pref, xp, x) for _, x, xp, _ in res.coupling.atoms
            )
    print(f"{agree}/{cfg.pairs} verdicts agree; {dominated} dominated pairs, {valid} couplings verified")


if __name__ == "__main__":
    main()
