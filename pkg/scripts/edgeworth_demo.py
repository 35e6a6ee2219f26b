"""Two-type exchange economy: equilibrium, core membership and a blocked misallocation."""

from fractions import Fraction as F

from distcore.blocking import blocking_search
from distcore.economy import DistributionalEconomy, Reallocation, TypeProfile
from distcore.grids import default_blocking_grid, refine_grid
from distcore.prefs import CobbDouglas, fmt_bundle
from distcore.walras import find_equilibrium, is_walrasian


def main() -> None:
    half = CobbDouglas((F(1, 2), F(1, 2)))
    a, b = TypeProfile(half, (F(1), F(0))), TypeProfile(half, (F(0), F(1)))
    E = DistributionalEconomy(((a, F(1, 2)), (b, F(1, 2))), 2)

    eq = find_equilibrium(E)
    print(f"equilibrium price {fmt_bundle(eq.price)} ({eq.method})")
    for p, x, m in eq.reallocation.atoms:
        print(f"  endowment {fmt_bundle(p.endowment)} mass {m}: demand {fmt_bundle(x)}")
    print(f"walrasian check: {is_walrasian(eq.reallocation, eq.price).ok}")
    v = blocking_search(eq.reallocation, default_blocking_grid(eq.reallocation))
    print(f"core on the default grid ({v.grid_size} bundles): {v.core}")

    lopsided = Reallocation(((a, (F(1, 8), F(1, 8)), F(1, 2)), (b, (F(7, 8), F(7, 8)), F(1, 2))))
    grid = default_blocking_grid(lopsided)
    v = blocking_search(lopsided, grid)
    print(f"lopsided allocation unblocked on the default grid ({v.grid_size} bundles): {v.core}")
    if v.core:
        # the failed search's resource-row multipliers point at the missing bundles
        v = blocking_search(lopsided, refine_grid(lopsided, grid, v.dual[-E.l :]))
        print(f"after one refinement ({v.grid_size} bundles): {v.core}")
    if v.witness:
        for p, (x, xp), m in v.witness.measure.atoms:
            print(f"  mass {m} of endowment {fmt_bundle(p.endowment)}: {fmt_bundle(x)} -> {fmt_bundle(xp)}")


if __name__ == "__main__":
    main()
