"""Command-line entry point: ``covrep {verify,construct,solve-xi0,report}``.

Exit status is 0 when every requested check passes, 1 when a check fails or a
construction is infeasible, and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fixtures
from .checks import ResidualReport, residual_direct, residual_eq5
from .constructors import (
    BRANCHES,
    REAL_SOLUTION,
    ConstructionParams,
    build_final_example,
    construct_separable_representation,
    family_sample,
    solve_xi0_closed_form,
    solve_xi0_general,
    xi0_for_q,
)
from .errors import ConstructionError, CovrepError, InvalidArgument, UnsupportedBranch
from .grid import DEFAULT_N, build_grid, make_test_family, read_sample_csv, write_sample_csv
from .operators import PolynomialSpec, write_kernel

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
AGREEMENT_TOL = 1e-9


class UsageError(Exception):
    pass


# -- config ---------------------------------------------------------------------


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    text = p.read_text()
    try:
        if p.suffix == ".toml":
            raw = tomllib.loads(text)
        else:
            raw = json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot parse {p}: {exc}") from exc
    return flatten_config(raw)


def flatten_config(raw: dict) -> dict:
    """Map the nested construct layout onto flat option names.

    ``grid = {n, alpha, beta}``, ``a = {family, nu0, ...} | {csv}``,
    ``F = [coefficients]`` and ``k1_target`` are accepted alongside plain
    option names.
    """
    out = {}
    for key, val in raw.items():
        key = key.replace("-", "_")
        if key == "grid":
            out.update({k: v for k, v in val.items()})
        elif key == "a":
            for k, v in val.items():
                out["a_csv" if k == "csv" else ("m" if k == "m_power" else k)] = v
        elif key == "F":
            out["coeffs"] = list(val)
        elif key == "k1_target":
            out["k1"] = val
        else:
            out[key] = val
    return out


# -- parser -----------------------------------------------------------------------


def _grid_flags(p, alpha=0.0, beta=1.0):
    p.add_argument("--n", type=int, default=DEFAULT_N, help="grid nodes (default 64)")
    p.add_argument("--alpha", type=float, default=alpha)
    p.add_argument("--beta", type=float, default=beta)


def _coeffs(text):
    try:
        vals = [float(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad coefficient list {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty coefficient list")
    return vals


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covrep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="evaluate residual reports on a named fixture")
    v.add_argument("--config", help="TOML or JSON file with option defaults")
    v.add_argument("--fixture", choices=sorted(fixtures.FIXTURES))
    v.add_argument("--n", type=int, default=DEFAULT_N)
    v.add_argument("--tol", type=_positive, help="tolerance override")
    v.add_argument("--perturb-b", type=float, default=0.0, help="add a constant to b")
    v.add_argument("--relation", default="AB=BF(A)", help='"AB=BF(A)", "AB=BA^n" or "AB=BA^<k>"')
    v.add_argument("--max-n", type=int, default=5, help="largest power for AB=BA^n")
    v.add_argument("--coeffs", type=_coeffs, help="override F: delta_0,delta_1,...")
    v.add_argument("--gamma0", type=float, help="example4: gamma0")
    v.add_argument("--lambda-scale", type=float, help="example4: b = lambda a")
    v.add_argument("--branch", choices=BRANCHES, help="final-ode: reading of (s(s-1))^(3/2)")
    v.add_argument("--lambda2", type=float, help="final-ode: lambda2")
    v.add_argument("--out", help="directory for report.json and CSV samples")

    c = sub.add_parser("construct", help="build b and c from a and F")
    c.add_argument("--config", help="TOML or JSON construction file")
    _grid_flags(c)
    c.add_argument("--family", choices=["monomial", "affine"], help="named family for a")
    c.add_argument("--a-csv", help="CSV sample of a (node,value)")
    c.add_argument("--nu0", type=float, default=1.0)
    c.add_argument("--nu1", type=float, default=0.0)
    c.add_argument("--m", type=int, default=2, help="monomial exponent")
    c.add_argument("--coeffs", type=_coeffs, help="F: delta_0,delta_1,...")
    c.add_argument("--k1", type=float, help="target k1")
    c.add_argument("--lambda-scale", type=float, default=1.0)
    c.add_argument("--tol", type=_positive, default=1e-8)
    c.add_argument("--final", action="store_true", help="build the AB=BA^2 ODE profile instead")
    c.add_argument("--lambda-neg", type=float, default=-1.0)
    c.add_argument("--lambda1", type=float, default=1.0)
    c.add_argument("--lambda2", type=float, default=1.0)
    c.add_argument("--lambda3", type=float, default=1.0)
    c.add_argument("--branch", choices=BRANCHES, default="abs")
    c.add_argument("--interior", type=float, nargs=2, default=(0.1, 0.9), metavar=("LO", "HI"))
    c.add_argument("--out", help="directory for kernels, samples and provenance.json")

    s = sub.add_parser("solve-xi0", help="closed-form and numerical xi0 side by side")
    s.add_argument("--config", help="TOML or JSON file with option defaults")
    _grid_flags(s)
    s.add_argument("--family", choices=["monomial", "affine"], required=False)
    s.add_argument("--nu0", type=float, default=1.0)
    s.add_argument("--nu1", type=float, default=0.0)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--q-ac", type=float, help="Q for the monomial relation AB = delta B A^n")
    s.add_argument("--delta", type=float, default=1.0)
    s.add_argument("--n-power", type=int, default=1)
    s.add_argument("--coeffs", type=_coeffs, help="F: delta_0,delta_1,... (with --k1)")
    s.add_argument("--k1", type=float)
    s.add_argument("--out", help="write the outcome as JSON here")

    r = sub.add_parser("report", help="re-render stored JSON reports")
    r.add_argument("inputs", nargs="+", help="report.json files")
    return parser


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        cfg = load_config(cfg_path)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {unknown}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# -- output helpers ---------------------------------------------------------------


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _outdir(path):
    if path is None:
        return None
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _print_table(rows):
    for row in rows:
        print(row)


# -- verify -----------------------------------------------------------------------


def _powers(relation: str, max_n: int):
    rel = relation.replace(" ", "")
    if rel == "AB=BF(A)":
        return None
    if rel == "AB=BA^n":
        if max_n < 1:
            raise UsageError("--max-n must be at least 1")
        return list(range(1, max_n + 1))
    if rel.startswith("AB=BA^"):
        try:
            k = int(rel[len("AB=BA^"):])
        except ValueError:
            raise UsageError(f"cannot parse relation {relation!r}") from None
        if k < 0:
            raise UsageError("power must be nonnegative")
        return [k]
    raise UsageError(f"cannot parse relation {relation!r}")


def cmd_verify(args) -> int:
    if not args.fixture:
        raise UsageError("verify needs --fixture")
    kwargs = {}
    for opt, key, names in (
        ("gamma0", "gamma0", {"example4"}),
        ("lambda_scale", "lam", {"example4"}),
        ("branch", "branch", {"final-ode"}),
        ("lambda2", "lambda2", {"final-ode"}),
    ):
        val = getattr(args, opt)
        if val is not None:
            if args.fixture not in names:
                raise UsageError(f"--{opt.replace('_', '-')} does not apply to {args.fixture}")
            kwargs[key] = val
    fx = fixtures.build(args.fixture, n=args.n, perturb_b=args.perturb_b, **kwargs)
    powers = _powers(args.relation, args.max_n)
    if args.coeffs is not None and powers is not None:
        raise UsageError("--coeffs and --relation AB=BA^... are exclusive")
    if args.coeffs is not None:
        variants = [fx.with_polynomial(PolynomialSpec(tuple(args.coeffs)))]
    elif powers is not None:
        variants = [fx.with_polynomial(PolynomialSpec.monomial(k)) for k in powers]
    else:
        variants = [fx]

    reports = []
    for f in variants:
        reports.extend(fixtures.verify(f, args.tol))
    _print_table(r.row() for r in reports)
    ok = all(r.passed for r in reports)
    print("ALL PASS" if ok else "SOME CHECKS FAILED")

    out = _outdir(args.out)
    if out is not None:
        meta = {k: v for k, v in fx.meta.items() if k != "profile"}
        sup = fixtures.supports(fx).to_dict()
        doc = {
            "fixture": fx.name,
            "grid": fx.grid.summary(),
            "perturb_b": args.perturb_b,
            "relation": args.relation,
            "fixture_params": meta,
            "reports": [r.to_dict() for r in reports],
            "supports": sup,
            "pass": ok,
        }
        (out / "report.json").write_text(_dump(doc))
        for name in ("a", "b", "c"):
            write_sample_csv(getattr(fx, name), out / f"{name}.csv")
    return EXIT_OK if ok else EXIT_FAIL


# -- construct ----------------------------------------------------------------------


def _a_from_args(args):
    if args.a_csv and args.family:
        raise UsageError("give either --family or --a-csv, not both")
    if args.a_csv:
        path = Path(args.a_csv)
        if not path.is_file():
            raise UsageError(f"a sample not found: {path}")
        return read_sample_csv(path), {"source": str(path)}
    if not args.family:
        raise UsageError("construct needs --family or --a-csv")
    grid = build_grid(args.n, args.alpha, args.beta)
    params = ConstructionParams(nu0=args.nu0, nu1=args.nu1, m_power=args.m)
    info = {"family": args.family, "nu0": args.nu0}
    info.update({"nu1": args.nu1} if args.family == "affine" else {"m": args.m})
    return family_sample(args.family, params, grid), info


def cmd_construct(args) -> int:
    out = _outdir(args.out)
    if args.final:
        prof = build_final_example(
            args.lambda_neg, args.lambda1, args.lambda2, args.lambda3, tuple(args.interior), args.n, args.branch
        )
        doc = {"kind": "final-ode", "profile": prof.summary()}
        print(_dump(doc), end="")
        if out is not None:
            (out / "provenance.json").write_text(_dump(doc))
            for name in ("a", "b", "c", "e"):
                write_sample_csv(getattr(prof, f"{name}_sample"), out / f"{name}.csv")
        return EXIT_OK if prof.ode_residual <= 1e-6 else EXIT_FAIL

    if args.coeffs is None or args.k1 is None:
        raise UsageError("construct needs --coeffs and --k1 (or --final)")
    a, a_info = _a_from_args(args)
    F = PolynomialSpec(tuple(args.coeffs))
    try:
        A, B, params = construct_separable_representation(a, F, args.k1, args.lambda_scale, args.tol)
    except ConstructionError as exc:
        print(f"construction failed: {exc}")
        if out is not None:
            (out / "provenance.json").write_text(_dump({"a": a_info, "error": str(exc), "pass": False}))
        return EXIT_FAIL
    fam = make_test_family(a.grid, fixtures.FAMILY_SIZE)
    direct = residual_direct(A, B, F, fam, args.tol, label="constructed")
    eq5 = residual_eq5(A.kernel, B.multiplier, F)
    doc = {
        "a": a_info,
        "grid": a.grid.summary(),
        "F": list(F.coeffs),
        "params": params.to_dict(),
        "xi0_selected": params.xi0,
        "xi0_rule": "smallest root",
        "post_check": {"eq5": eq5, "direct": direct.to_dict()},
        "pass": bool(direct.passed and eq5 <= args.tol),
    }
    print(_dump(doc), end="")
    if out is not None:
        (out / "provenance.json").write_text(_dump(doc))
        write_kernel(A.kernel, out / "kernel")
        write_sample_csv(B.multiplier, out / "b.csv")
    return EXIT_OK if doc["pass"] else EXIT_FAIL


# -- solve-xi0 ----------------------------------------------------------------------


def cmd_solve_xi0(args) -> int:
    if not args.family:
        raise UsageError("solve-xi0 needs --family")
    params = ConstructionParams(
        nu0=args.nu0,
        nu1=args.nu1,
        m_power=args.m,
        q_ac=args.q_ac,
        delta_mono=args.delta,
        n_power=args.n_power,
        k1_const=args.k1 if args.k1 is not None else 1.0,
    )
    if args.coeffs is not None:
        if args.k1 is None:
            raise UsageError("--coeffs needs --k1")
        F = PolynomialSpec(tuple(args.coeffs))
        closed_F, k1 = F, args.k1
    elif args.q_ac is not None:
        F = PolynomialSpec.monomial(args.n_power, args.delta)
        closed_F, k1 = None, params.kappa()
    else:
        raise UsageError("solve-xi0 needs --q-ac or --coeffs with --k1")

    try:
        outcome = solve_xi0_closed_form(args.family, params, args.alpha, args.beta, closed_F)
    except UnsupportedBranch as exc:
        doc = {"closed_form": {"error": str(exc), "verdict": "unsupported-branch"}}
        print(_dump(doc), end="")
        return EXIT_OK
    doc = {"closed_form": outcome.to_dict(), "k1": k1}

    general, note = None, None
    try:
        a = family_sample(args.family, params, build_grid(args.n, args.alpha, args.beta))
        if closed_F is None:
            general = xi0_for_q(a, k1, args.q_ac)
        else:
            general = solve_xi0_general(a, F, k1)
    except (ConstructionError, InvalidArgument) as exc:
        note = f"general solver not applicable: {exc}"
    doc["general"] = general
    if note:
        doc["general_note"] = note
    ok = True
    if general is not None and outcome.verdict == REAL_SOLUTION and not outcome.identically:
        gaps = [min((abs(r - q) for q in general), default=math.inf) for r in outcome.roots]
        worst = max(gaps, default=0.0)
        doc["agreement"] = {"max_gap": worst, "tol": AGREEMENT_TOL, "pass": worst <= AGREEMENT_TOL}
        ok = worst <= AGREEMENT_TOL
    print(_dump(doc), end="")
    out = _outdir(args.out)
    if out is not None:
        (out / "xi0.json").write_text(_dump(doc))
    return EXIT_OK if ok else EXIT_FAIL


# -- report -------------------------------------------------------------------------


def cmd_report(args) -> int:
    ok = True
    for path in args.inputs:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"report not found: {p}")
        try:
            doc = json.loads(p.read_text())
            reports = [ResidualReport.from_dict(d) for d in doc["reports"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"{p} is not a verify report: {exc}") from exc
        print(f"# {p}")
        _print_table(r.row() for r in reports)
        ok = ok and all(r.passed for r in reports)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "verify": cmd_verify,
    "construct": cmd_construct,
    "solve-xi0": cmd_solve_xi0,
    "report": cmd_report,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    except (UsageError, InvalidArgument) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CovrepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
