"""Acceptance criteria, each run at its stated tolerance, size and time budget.

Every criterion prints one PASS/FAIL line; they are repeated in the pytest
terminal summary. Run ``python3 tests/test_acceptance.py`` to see only them.
"""

import json
import time
from importlib.resources import files

from threefunctor import groupoid as gp
from threefunctor import mutations
from threefunctor.cli import main
from threefunctor.coherence import CHECKS, CONSISTENCY_ID, SuiteConfig, run_all, run_checks
from threefunctor.linalg import Tolerance

RESULTS: list[str] = []
EXAMPLES = files("threefunctor") / "examples"


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def worst(results) -> float:
    return max((r.residual for r in results if r.check_id != CONSISTENCY_ID), default=0.0)


def test_criterion_1_sqrt_bijection():
    cfg = SuiteConfig(seed=101, trials=500, max_atoms=6, tolerance=Tolerance(1e-12))
    ids = ["sqrt-roundtrip", "sqrt-identity", "sqrt-state-independence"]
    results, secs = timed(lambda: run_checks(ids, cfg))
    ok = all(r.passed for r in results) and secs < 5 and len(results) == 3 * 500
    report(1, ok, f"{len(results)} instances, max residual {worst(results):.2e} <= 1e-12, {secs:.2f}s < 5s")


def test_criterion_2_lambda():
    cfg12 = SuiteConfig(seed=102, trials=200, max_atoms=6, tolerance=Tolerance(1e-12))
    cfg10 = SuiteConfig(seed=102, trials=200, max_atoms=6, tolerance=Tolerance(1e-10))
    core = ["lambda-unitary", "lambda-spanning-vectors"]
    lemmas = ["lambda-unitor", "lambda-unitor-left", "lambda-three-step", "lambda-associator"]

    def run():
        return run_checks(core, cfg12), run_checks(lemmas, cfg10)

    (r_core, r_lem), secs = timed(run)
    ok = all(r.passed for r in r_core + r_lem) and secs < 10
    report(2, ok, f"200 squares x 20 vectors max {worst(r_core):.2e} <= 1e-12; "
                  f"compatibility lemmas max {worst(r_lem):.2e} <= 1e-10; {secs:.2f}s < 10s")


def test_criterion_3_coherence_diagrams():
    cfg = SuiteConfig(seed=103, trials=200, max_atoms=5, max_fiber_dim=3, tolerance=Tolerance(1e-9))
    rep, secs = timed(lambda: run_all(cfg, families=("projection", "base_change", "mixed")))
    diagrams = [c.check_id for c in CHECKS if c.family in ("projection", "base_change", "mixed")]
    per_level = {
        (d, lvl): sum(r.check_id == d and r.level == lvl for r in rep.results)
        for d in diagrams for lvl in ("generator", "extended")
    }
    consistency = [r for r in rep.results if r.check_id == CONSISTENCY_ID]
    ok = (
        len(diagrams) == 10
        and all(n >= 200 for n in per_level.values())
        and rep.passed
        and len(consistency) == 10 * 200
        and secs < 40
    )
    report(3, ok, f"10 diagrams x 200 instances at generator and extended level, max {worst(rep.results):.2e} "
                  f"<= 1e-9, {len(consistency)} consistency checks, {secs:.2f}s < 40s")


def test_criterion_4_involutive():
    cfg = SuiteConfig(seed=104, trials=100, tolerance=Tolerance(1e-10))
    ids = [c.check_id for c in CHECKS if c.family == "involutive"]
    results, secs = timed(lambda: run_checks(ids, cfg))
    ok = all(r.passed for r in results) and secs < 10
    report(4, ok, f"{len(ids)} checks x 100 instances, max {worst(results):.2e} <= 1e-10, {secs:.2f}s < 10s")


def test_criterion_5_fell():
    groupoids = gp.corpus()
    names = {g.name for g in groupoids}
    covered = (
        {f"C{n}" for n in range(1, 9)} <= names
        and {"S3", "pair1", "pair2", "pair3", "pair4", "pair5"} <= names
        and sum(" on " in n for n in names) >= 4
    )
    results, secs = timed(lambda: gp.run_fell_suite(seed=105, reps_per_groupoid=5, max_rank=3))
    per_group = {n: sum(r.groupoid == n for r in results) for n in names}
    unit = max(r.unitarity for r in results)
    inter = max(r.intertwiner for r in results)
    chars = [r.character_match for r in results if r.character_match is not None]
    groups = sum(g.is_group for g in groupoids) * 5
    ok = (
        covered
        and min(per_group.values()) >= 5
        and all(r.rank <= 3 for r in results)
        and unit <= 1e-10
        and inter <= 1e-9
        and len(chars) == groups
        and all(chars)
        and secs < 20
    )
    report(5, ok, f"{len(groupoids)} groupoids x 5 reps, unitarity {unit:.2e} <= 1e-10, intertwiner {inter:.2e} "
                  f"<= 1e-9, {sum(chars)}/{groups} group characters match, {secs:.2f}s < 20s")


def test_criterion_6_mutations():
    cfg = SuiteConfig(seed=106, trials=20)
    found = {}
    for name, family in sorted(mutations.TARGETS.items()):
        with mutations.active(name):
            if family == "fell":
                res = gp.run_fell_suite(seed=106, reps_per_groupoid=2)
                found[name] = max(max(r.unitarity, r.intertwiner) for r in res)
            else:
                found[name] = run_all(cfg, families=(family,)).max_residual(family)
    ok = all(v > 1e-3 for v in found.values()) and set(found) == set(mutations.MUTATIONS)
    detail = ", ".join(f"{k}->{mutations.TARGETS[k]} {v:.3g}" for k, v in found.items())
    report(6, ok, f"every mutation exceeds 1e-3 on its family: {detail}")


def test_criterion_7_determinism_and_cli(capsys):
    cfg = SuiteConfig(seed=42, trials=10)
    same = run_all(cfg).summary(include_timings=False) == run_all(cfg).summary(include_timings=False)
    argv = ["verify", str(EXAMPLES / "small_square.json"), "--seed", "42", "--trials", "2", "--format", "json"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    same = same and first == capsys.readouterr().out and json.loads(first)["passed"]
    codes = (main(["verify", str(EXAMPLES / "z2_sign.json")]), main(["verify", str(EXAMPLES / "nonunitary.json")]))
    explain = (main(["explain", "two-projections"]), main(["explain", "not-a-check"]))
    fuzz_code, secs = timed(lambda: main(["fuzz", "--format", "json"]))
    capsys.readouterr()
    ok = same and codes == (0, 3) and explain == (0, 2) and fuzz_code == 0 and secs < 60
    report(7, ok, f"identical reports {same}; example exit codes {codes}; explain {explain}; "
                  f"default fuzz exit {fuzz_code} in {secs:.2f}s < 60s")


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
