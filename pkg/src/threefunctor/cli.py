"""Command-line entry point: ``verify``, ``fuzz`` and ``explain``.

Exit codes: 0 all checks pass, 1 a check failed, 2 the input could not be
parsed (or an unknown check id was asked for), 3 a document object failed
validation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np
import pydantic

from . import __version__, mutations
from . import functors as fn
from . import groupoid as gp
from . import hmod as hm
from .coherence import CHECK_INDEX, CHECKS, FAMILIES, SuiteConfig, run_all
from .cvna import AlgebraElement, State, ce_from_positive_map, ce_identity_check, mu_independence_check, sqrt_ce
from .document import DocumentError, Instance, build, parse_document
from .linalg import DimensionError, Tolerance, frobenius, make_rng

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INVALID = 0, 1, 2, 3
TOL_ENV = "THREEFUNCTOR_TOL"
DEFAULT_TOL = 1e-9

# verify groups the generated families the way they are usually run together
GROUPS = {
    "coherence": ("projection", "base_change", "mixed"),
    "standard_form": ("standard_form",),
    "involutive": ("involutive",),
    "fell": (),
}

FELL_CHECKS = {
    "fell": "Absorption of a unitary representation into the regular one: the absorbing map is unitary "
            "and intertwines the two actions; for groups the characters of both sides agree with counting "
            "fixed points.",
    "fell-unitarity": "The absorbing map is unitary.",
    "fell-intertwiner": "The absorbing map carries the untwisted translation action to the twisted one.",
    "fell-character": "For groups, the traces of both actions equal rank times the number of fixed points.",
}


def default_tolerance() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        val = float(raw)
    except ValueError:
        raise SystemExit(f"error: {TOL_ENV}={raw!r} is not a number") from None
    return val


@dataclass
class Row:
    check: str
    obj: str
    residual: float
    passed: bool

    def as_dict(self) -> dict:
        return {"check": self.check, "object": self.obj, "residual": _finite(self.residual), "passed": self.passed}


def _finite(x: float):
    return float(x) if np.isfinite(x) else "inf"


def _row(check: str, obj: str, compute, tol: float) -> Row:
    try:
        res = float(compute())
    except (ValueError, DimensionError, np.linalg.LinAlgError):
        res = float("inf")
    return Row(check, obj, res, bool(res <= tol))


def document_checks(inst: Instance, groups, tol: float, seed: int) -> list[Row]:
    """Checks on the objects a document defines, in document order."""
    rng = make_rng(seed)
    rows = []
    if "coherence" in groups:
        for hname, f in inst.homs.items():
            for mname, m in inst.modules.items():
                if m.algebra != f.target:
                    continue
                for nname, n in inst.modules.items():
                    if n.algebra == f.source:
                        obj = f"{hname}({mname}, {nname})"
                        rows.append(_row("projection-unitary", obj,
                                         lambda f=f, m=m, n=n: hm.unitary_residual(fn.projection_iso(f, m, n)), tol))
            srcs = [(k, n) for k, n in inst.modules.items() if n.algebra == f.source]
            for mname, m in srcs:
                for nname, n in srcs:
                    rows.append(_row("ind-mult-unitary", f"{hname}({mname}, {nname})",
                                     lambda f=f, m=m, n=n: hm.unitary_residual(fn.ind_mult_iso(f, m, n)), tol))
        for sname, sq in inst.squares.items():
            for mname, m in inst.modules.items():
                if m.algebra == sq.b:
                    rows.append(_row("base-change-unitary", f"{sname}({mname})",
                                     lambda sq=sq, m=m: hm.unitary_residual(fn.base_change_iso(sq, m)), tol))
    if "standard_form" in groups:
        for cname, phi in inst.cond_exps.items():
            a = phi.hom.target

            def roundtrip(phi=phi):
                back = ce_from_positive_map(sqrt_ce(phi), phi.hom)
                return float(np.max(np.abs(back.weights - phi.weights), initial=0.0))

            x = AlgebraElement(a, rng.standard_normal(a.size) + 1j * rng.standard_normal(a.size))
            rows.append(_row("sqrt-roundtrip", cname, roundtrip, tol))
            rows.append(_row("sqrt-identity", cname, lambda phi=phi, x=x: ce_identity_check(phi, x), tol))
            for mu_name, mu in inst.states.items():
                if mu.algebra == phi.hom.source and mu.faithful:
                    ref = State(mu.algebra, np.ones(mu.algebra.size))
                    rows.append(_row("sqrt-state-independence", f"{cname}, {mu_name}",
                                     lambda phi=phi, mu=mu, ref=ref: mu_independence_check(phi, mu, ref), tol))
        for sname, sq in inst.squares.items():
            rows.append(_row("lambda-unitary", sname, lambda sq=sq: hm.unitary_residual(hm.lambda_iso(sq)), tol))
    if "involutive" in groups:
        for hname, h in inst.module_maps.items():
            rows.append(_row("dagger-involution", hname, lambda h=h: hm.map_residual(hm.dagger(hm.dagger(h)), h), tol))
            rows.append(_row("dagger-adjoint", hname,
                             lambda h=h: frobenius(hm.dagger(h).matrix() - h.matrix().conj().T), tol))
        for mname, m in inst.modules.items():
            rows.append(_row("double-dual-unitary", mname, lambda m=m: hm.unitary_residual(hm.phi_iso(m)), tol))
    if "fell" in groups:
        for rname, rep in inst.representations.items():
            try:
                parts = gp.decompose_by_rank(rep.groupoid, rep)
            except gp.GroupoidError as exc:
                rows.append(Row("fell", rname, float("inf"), False))
                print(f"warning: {rname}: {exc}", file=sys.stderr)
                continue
            for sub, part in parts:
                obj = rname if len(parts) == 1 else f"{rname}[rank {part.bundle.dims[0]}]"
                try:
                    rep_check = gp.fell_check(sub, part)
                except (ValueError, DimensionError) as exc:
                    rows.append(Row("fell", obj, float("inf"), False))
                    print(f"warning: {obj}: {exc}", file=sys.stderr)
                    continue
                rows.append(Row("fell-unitarity", obj, rep_check.unitarity, rep_check.unitarity <= tol))
                rows.append(Row("fell-intertwiner", obj, rep_check.intertwiner, rep_check.intertwiner <= tol))
                if rep_check.character_match is not None:
                    ok = rep_check.character_match
                    rows.append(Row("fell-character", obj, 0.0 if ok else 1.0, ok))
    return rows


def fell_summary(seed: int, tol: float, reps: int = 5) -> dict:
    results = gp.run_fell_suite(seed=seed, reps_per_groupoid=reps)
    failures = [
        r for r in results
        if not (r.unitarity <= tol and r.intertwiner <= tol and r.cocycle <= tol and r.character_match is not False)
    ]
    worst = max(results, key=lambda r: max(r.unitarity, r.intertwiner))
    return {
        "checks": len(results),
        "failures": len(failures),
        "max_residual": _finite(max(worst.unitarity, worst.intertwiner)),
        "worst_check": worst.groupoid,
        "worst_seed": worst.seed,
        "character_mismatches": sum(r.character_match is False for r in results),
        "failed": [{"groupoid": r.groupoid, "seed": r.seed, "rank": r.rank,
                    "unitarity": _finite(r.unitarity), "intertwiner": _finite(r.intertwiner)} for r in failures[:50]],
    }


def _config(args) -> SuiteConfig:
    return SuiteConfig(
        seed=args.seed, trials=max(args.trials, 1), max_atoms=args.max_atoms,
        max_fiber_dim=args.max_fiber_dim, tolerance=Tolerance(args.tol),
    )


def _suite(args, families, with_fell: bool) -> dict:
    out = {}
    if families:
        rep = run_all(_config(args), families)
        out = rep.summary(include_timings=args.timings)
    else:
        out = {"seed": args.seed, "trials": args.trials, "tolerance": args.tol, "families": {}, "failures": []}
    if with_fell:
        out["families"]["fell"] = fell_summary(args.seed, args.tol)
    out["passed"] = all(f["failures"] == 0 for f in out["families"].values())
    return out


def cmd_verify(args) -> tuple[int, dict]:
    try:
        with open(args.path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        return EXIT_PARSE, {"error": "parse", "message": f"{args.path}: {exc.strerror}"}
    try:
        doc = parse_document(text)
    except pydantic.ValidationError as exc:
        where = [".".join(str(p) for p in e["loc"]) or "<root>" for e in exc.errors()]
        msgs = [f"{loc}: {e['msg']}" for loc, e in zip(where, exc.errors())]
        return EXIT_PARSE, {"error": "parse", "message": "; ".join(msgs), "locations": where}
    try:
        inst = build(doc, tol=args.tol)
    except DocumentError as exc:
        return EXIT_INVALID, {"error": "validation", "kind": exc.kind, "object": exc.name, "message": str(exc)}
    groups = [g for g in GROUPS if getattr(args, g)] or list(GROUPS)
    report = {"command": "verify", "document": os.path.basename(args.path), "seed": args.seed, "tolerance": args.tol,
              "groups": groups}
    rows = document_checks(inst, groups, args.tol, args.seed)
    report["document_checks"] = [r.as_dict() for r in rows]
    passed = all(r.passed for r in rows)
    if args.trials > 0:
        fams = [f for g in groups for f in GROUPS[g]]
        suite = _suite(args, fams, "fell" in groups)
        report["generated"] = suite
        passed = passed and suite["passed"]
    report["passed"] = passed
    return (EXIT_OK if passed else EXIT_FAIL), report


def cmd_fuzz(args) -> tuple[int, dict]:
    report = {"command": "fuzz", "mutation": args.mutate}
    with mutations.active(args.mutate):
        report.update(_suite(args, list(FAMILIES), True))
    return (EXIT_OK if report["passed"] else EXIT_FAIL), report


def explain_text(check_id: str) -> str | None:
    if check_id in CHECK_INDEX:
        spec = CHECK_INDEX[check_id]
        level = "both the standard-form generator and random modules" if spec.module_valued else "random instances"
        return f"{spec.check_id} (family {spec.family})\n  {spec.summary}\n  Evaluated on {level}."
    if check_id in FELL_CHECKS:
        return f"{check_id} (family fell)\n  {FELL_CHECKS[check_id]}"
    if check_id in mutations.MUTATIONS:
        return (f"mutation {check_id}\n  {mutations.MUTATIONS[check_id]}; "
                f"expected to break family {mutations.TARGETS[check_id]}.")
    fams = {c.family for c in CHECKS} | set(GROUPS)
    if check_id in fams:
        members = [c.check_id for c in CHECKS if c.family == check_id or c.family in GROUPS.get(check_id, ())]
        members = members or [k for k in FELL_CHECKS if k != "fell"]
        return f"family {check_id}\n  checks: {', '.join(members)}"
    return None


def cmd_explain(args) -> tuple[int, str]:
    text = explain_text(args.check_id)
    if text is None:
        known = sorted(CHECK_INDEX) + sorted(FELL_CHECKS)
        return EXIT_PARSE, f"unknown check id {args.check_id!r}; known ids: {', '.join(known)}"
    return EXIT_OK, text


def format_text(report: dict) -> str:
    if "error" in report:
        return f"error ({report['error']}): {report['message']}"
    lines = []
    if report["command"] == "fuzz" and report.get("mutation"):
        lines.append(f"mutation: {report['mutation']}")
    for row in report.get("document_checks", []):
        mark = "PASS" if row["passed"] else "FAIL"
        lines.append(f"{mark}  {row['check']:<26} {row['object']:<24} residual={row['residual']}")
    suite = report.get("generated", report if report["command"] == "fuzz" else None)
    if suite:
        lines.append(f"seed={suite['seed']} trials={suite['trials']} tol={suite['tolerance']}")
        for fam, info in suite["families"].items():
            mark = "PASS" if info["failures"] == 0 else "FAIL"
            lines.append(
                f"{mark}  {fam:<14} checks={info['checks']:<6} failures={info['failures']:<4} "
                f"max_residual={info['max_residual']} ({info['worst_check']})"
            )
        for fam, sec in (suite.get("timings") or {}).items():
            lines.append(f"time  {fam:<14} {sec:.2f}s")
    lines.append("all checks passed" if report["passed"] else "some checks FAILED")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None,
                        help=f"residual tolerance (default ${TOL_ENV} or {DEFAULT_TOL})")
    common.add_argument("--max-atoms", type=int, default=5)
    common.add_argument("--max-fiber-dim", type=int, default=3)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--output", help="also write the JSON report to this file")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")

    p = argparse.ArgumentParser(prog="threefunctor", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="check the objects of an instance document")
    v.add_argument("path")
    v.add_argument("--trials", type=int, default=0, help="also run generated suites with this many trials")
    for g in GROUPS:
        v.add_argument(f"--{g.replace('_', '-')}", dest=g, action="store_true", help=f"run the {g} checks")

    f = sub.add_parser("fuzz", parents=[common], help="run every generated suite")
    f.add_argument("--trials", type=int, default=200)
    f.add_argument("--mutate", choices=sorted(mutations.MUTATIONS), default=None,
                   help="corrupt one structure map to show the checks can fail")

    e = sub.add_parser("explain", help="describe a check, family or mutation")
    e.add_argument("check_id")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    if args.command == "explain":
        code, text = cmd_explain(args)
        print(text, file=sys.stdout if code == EXIT_OK else sys.stderr)
        return code
    if args.tol is None:
        args.tol = default_tolerance()
    if not args.tol > 0 or args.seed < 0 or min(args.max_atoms, args.max_fiber_dim) < 1 or args.trials < 0:
        print("error: tolerance must be positive, bounds at least 1 and seed/trials nonnegative", file=sys.stderr)
        return EXIT_PARSE
    if args.command == "fuzz" and args.trials < 1:
        print("error: fuzz needs at least one trial", file=sys.stderr)
        return EXIT_PARSE
    code, report = (cmd_verify if args.command == "verify" else cmd_fuzz)(args)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(format_text(report), file=sys.stdout if "error" not in report else sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
