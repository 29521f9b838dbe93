"""Residual of each fixture as the grid is refined.

    python scripts/convergence_study.py [--sizes 8 12 16 24 32 48 64]

Smooth data should show spectral decay down to a rounding floor.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from covrep import fixtures
from covrep.checks import residual_direct


@dataclass
class StudyConfig:
    sizes: list = field(default_factory=lambda: [8, 12, 16, 24, 32, 48, 64, 96])
    names: list = field(default_factory=lambda: ["example3", "example4", "disjoint-support", "final-ode"])


def study(cfg: StudyConfig) -> dict:
    table = {}
    for name in cfg.names:
        table[name] = []
        for n in cfg.sizes:
            fx = fixtures.build(name, n=n)
            r = residual_direct(fx.A, fx.B, fx.F, fx.family)
            table[name].append((n, r.max_residual))
    return table


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=StudyConfig().sizes)
    p.add_argument("--names", nargs="+", default=StudyConfig().names, choices=sorted(fixtures.FIXTURES))
    cfg = StudyConfig(**vars(p.parse_args(argv)))
    for name, rows in study(cfg).items():
        print(name)
        prev = None
        for n, res in rows:
            gain = f"  x{prev / res:.1e}" if prev and res > 0 else ""
            print(f"  n={n:<4d} {res:.3e}{gain}")
            prev = res


if __name__ == "__main__":
    main()
