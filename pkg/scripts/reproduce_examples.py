"""Rebuild the worked examples and print their residuals.

    python scripts/reproduce_examples.py [--n 64] [--out results/]

With --out each fixture's verify report is written as JSON.
"""

from __future__ import annotations

import argparse
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from covrep import fixtures
from covrep.constructors import (
    build_final_example,
    example4_xi0,
    phi_closed_form,
    phi_gamma_xi,
    select_branch,
    solve_xi0_general,
)
from covrep.grid import build_grid, sample
from covrep.operators import PolynomialSpec


@dataclass
class RunConfig:
    n: int = 64
    perturb_b: float = 0.1
    out: str | None = None


def example3_xi0(n: int) -> dict:
    ln2 = math.log(2.0)
    a = sample(build_grid(n), lambda t: (t + 1) * ln2)
    roots = solve_xi0_general(a, PolynomialSpec.monomial(2), 1.0)
    return {"roots": roots, "expected": (1 - ln2) / ln2}


def example4_numbers() -> dict:
    xi0 = example4_xi0(0.5)
    return {"xi0": xi0, "phi_quadrature": phi_gamma_xi(0.5, xi0), "phi_closed": phi_closed_form(0.5, xi0)}


def fixture_table(cfg: RunConfig) -> list:
    rows = []
    for name in sorted(fixtures.FIXTURES):
        for shift in (0.0, cfg.perturb_b):
            fx = fixtures.build(name, n=cfg.n, perturb_b=shift)
            for rep in fixtures.verify(fx):
                rows.append({"fixture": name, "perturb_b": shift, **rep.to_dict()})
    return rows


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=RunConfig.n)
    p.add_argument("--perturb-b", type=float, default=RunConfig.perturb_b)
    p.add_argument("--out")
    cfg = RunConfig(**vars(p.parse_args(argv)))

    ex3 = example3_xi0(cfg.n)
    print(f"example3 xi0: {ex3['roots']}  expected {ex3['expected']:.15f}")
    ex4 = example4_numbers()
    print(f"example4 xi0={ex4['xi0']:.15f} phi={ex4['phi_quadrature']:.15f} (closed {ex4['phi_closed']:.15f})")
    branch, residuals = select_branch(n=cfg.n)
    prof = build_final_example(branch=branch, n=cfg.n)
    print(f"final example: branch={branch} residuals={residuals} e(1/2)={prof.e_at_half:.6f}")

    rows = fixture_table(cfg)
    for r in rows:
        verdict = "PASS" if r["pass"] else "FAIL"
        print(f"{r['fixture']:<17} b+{r['perturb_b']:<4} {r['condition_id']:<18} {r['max_residual']:.2e} {verdict}")

    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        doc = {
            "config": asdict(cfg),
            "example3": ex3,
            "example4": ex4,
            "final": prof.summary(),
            "fixtures": rows,
        }
        (out / "examples.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
