"""Command-line entry point.

One binary, subcommand style; every artifact is a JSON file so runs are
scriptable and diffable.  Exit codes: 0 success, 1 validation or
design-for-test failure, 2 generation failure (nondeterministic product,
branch explosion, ...), 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from . import model_io, mutation
from .csxms import (
    build_product_sxm,
    check_csxm_dft,
    extend_for_testing,
    validate_csxm,
    validate_system,
)
from .dft import check_dft
from .errors import (
    AlphabetCollision,
    BranchBoundExceeded,
    DeadlockError,
    DepthCapExceeded,
    DftFailure,
    EmptyMutantSet,
    ExplosionBoundExceeded,
    HeterotestError,
    NondeterministicInput,
    NondeterministicProduct,
    NotMinimalError,
    NoValidMutants,
    OracleInvalidResult,
    OracleTimeout,
    PortIncompatibility,
    SchemaError,
    TermError,
    TraceReplayMismatch,
    UnextendedSystem,
    UnreachableStateError,
)
from .heterotic import generate_integration_tests
from .psystem import generate_coverage_test_set, psystem_run, rule_coverage, validate_psystem
from .sxm import validate_sxm
from .testgen import generate_sxm_test_suite

GENERATION_ERRORS = (
    NondeterministicProduct,
    NondeterministicInput,
    BranchBoundExceeded,
    ExplosionBoundExceeded,
    NotMinimalError,
    UnreachableStateError,
    DepthCapExceeded,
    DeadlockError,
    OracleTimeout,
    OracleInvalidResult,
    AlphabetCollision,
    UnextendedSystem,
    PortIncompatibility,
    NoValidMutants,
    EmptyMutantSet,
    TraceReplayMismatch,
    TermError,
)


def _env_seed() -> int:
    try:
        return int(os.environ.get("HETEROTEST_SEED", "0"))
    except ValueError:
        return 0


def _emit(args, payload: dict, text_lines: list[str]) -> None:
    rendered = model_io.canonical_json(payload)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(rendered)
    if args.format == "json":
        sys.stdout.write(rendered)
    else:
        for line in text_lines:
            print(line)


def _cmd_validate(args) -> int:
    from .csxms import CsxmSystem
    from .sxm import Violation

    def component_reports(system, violations):
        # The design-for-test conditions apply to the extended components:
        # unextended communicating functions consume no input symbol and
        # would trivially fail completeness.
        try:
            extended = extend_for_testing(system)
        except AlphabetCollision as exc:
            violations.append(Violation(system.name, str(exc)))
            return {}
        return {comp.name: check_csxm_dft(comp) for comp in extended.components}

    kind, model = model_io.load_model_file(args.model)
    violations = []
    reports = {}
    if kind == "sxm":
        violations = validate_sxm(model)
        if args.dft:
            reports[model.name] = check_dft(model)
    elif kind == "csxm":
        violations = validate_csxm(model)
        if args.dft:
            reports = component_reports(CsxmSystem(model.name, (model,)), violations)
    elif kind == "system":
        violations = validate_system(model)
        if args.dft:
            reports = component_reports(model, violations)
    elif kind == "psystem":
        violations = validate_psystem(model)
    else:  # heterotic: loading already built and validated the wiring
        violations = validate_system(model.as_system)
        if args.dft:
            reports = component_reports(model.as_system, violations)

    payload = {
        "schema": 1,
        "kind": kind,
        "violations": [{"where": v.where, "message": v.message} for v in violations],
    }
    lines = [f"{kind}: {'valid' if not violations else f'{len(violations)} violation(s)'}"]
    lines += [f"  {v}" for v in violations]
    dft_failed = False
    if reports:
        payload["dft"] = {}
        for name, report in sorted(reports.items()):
            payload["dft"][name] = model_io.dft_report_to_dict(report)
            lines.append(f"dft [{name}]:")
            lines += [f"  {line}" for line in report.summary_lines()]
            dft_failed = dft_failed or not report.all_pass()
    _emit(args, payload, lines)
    return 1 if (violations or dft_failed) else 0


def _cmd_simulate(args) -> int:
    kind, model = model_io.load_model_file(args.model)
    if kind == "heterotic":
        return _simulate_heterotic(args, model)
    if kind != "psystem":
        raise SchemaError("simulate expects a P-system or heterotic model file")
    if args.depth is None:
        raise SchemaError("simulate on a P system needs --depth")
    mode = "seeded" if args.seed is not None else "all"
    seed = args.seed if args.seed is not None else _env_seed()
    traces = psystem_run(model, args.depth, mode=mode, seed=seed)
    payload = {
        "schema": 1,
        "system": model.name,
        "depth": args.depth,
        "mode": mode,
        "seed": seed if mode == "seeded" else None,
        "traces": [model_io.ptrace_to_dict(t) for t in traces],
    }
    lines = [model_io.render_ptrace(t) for t in traces]
    _emit(args, payload, lines)
    return 0


def _simulate_heterotic(args, system) -> int:
    from .heterotic import run_heterotic, subprocess_oracle

    oracle = None
    if args.oracle_cmd:
        oracle = subprocess_oracle(
            args.oracle_cmd.split(),
            system.psystem,
            timeout_ms=args.oracle_timeout_ms,
            retries=args.oracle_retries,
        )
    trace = run_heterotic(system, rounds=args.rounds, oracle=oracle)
    payload = model_io.htrace_to_dict(trace)
    lines = []
    for e in trace.exchanges:
        arrow = "base -> control" if e.direction == "base_to_control" else "control -> base"
        steps = f" after {e.steps} step(s)" if e.steps is not None else ""
        lines.append(
            f"round {e.round}: {arrow}: (" + ",".join(e.configuration) + ")" + steps
        )
    _emit(args, payload, lines)
    return 0


def _cmd_gen_tests(args) -> int:
    kind, model = model_io.load_model_file(args.model)
    if args.target == "sxm":
        if kind != "sxm":
            raise SchemaError("gen-tests sxm expects a machine model file")
        suite = generate_sxm_test_suite(model, args.extra_states)
        payload = model_io.suite_to_dict(suite)
        lines = [f"{len(suite.cases)} cases (k={args.extra_states})"]
        lines += [" ".join(case.input) or "<empty>" for case in suite.cases]
        _emit(args, payload, lines)
        return 0
    if args.target == "psystem":
        if kind != "psystem":
            raise SchemaError("gen-tests psystem expects a P-system model file")
        members, report = generate_coverage_test_set(model, args.depth)
        payload = model_io.testset_to_dict(members, report, args.depth)
        lines = [f"{len(members)} member(s), depth {args.depth}"]
        lines += ["member: (" + ",".join(m.canonical() for m in cfg) + ")" for cfg in members]
        for entry in report.entries:
            status = "covered" if entry.covered else "UNCOVERED"
            lines.append(f"rule {entry.rule}: {status}")
        _emit(args, payload, lines)
        return 0 if report.all_covered() else 2
    # heterotic
    if kind != "heterotic":
        raise SchemaError("gen-tests heterotic expects a heterotic system file")
    suite = generate_integration_tests(model, args.extra_states)
    payload = model_io.suite_to_dict(suite)
    lines = [f"{len(suite.cases)} cases (k={args.extra_states})"]
    _emit(args, payload, lines)
    return 0


def _cmd_product(args) -> int:
    kind, model = model_io.load_model_file(args.model)
    if kind != "system":
        raise SchemaError("product expects a system model file")
    product = build_product_sxm(extend_for_testing(model))
    payload = model_io.product_summary_to_dict(product)
    lines = [
        f"product {product.name}",
        f"inputs: {len(product.inputs)}",
        f"outputs: {len(product.outputs)}",
        f"states: {len(product.states)}",
        f"functions: {len(product.functions)}",
        f"arcs: {sum(len(t) for t in product.next_state.values())}",
        f"memory values: {payload['memory_size']}",
    ]
    _emit(args, payload, lines)
    return 0


def _cmd_coverage(args) -> int:
    kind, model = model_io.load_model_file(args.model)
    if kind != "psystem":
        raise SchemaError("coverage expects a P-system model file")
    traces = psystem_run(model, args.depth, mode="all")
    report = rule_coverage(model, traces)
    payload = model_io.coverage_report_to_dict(report)
    lines = []
    for entry in report.entries:
        status = "covered" if entry.covered else "UNCOVERED"
        lines.append(f"rule {entry.rule} (compartment {entry.compartment}): {status}")
    _emit(args, payload, lines)
    return 0


def _cmd_mutate(args) -> int:
    kind, model = model_io.load_model_file(args.model)
    if kind not in ("sxm", "psystem"):
        raise SchemaError("mutate expects a machine or P-system model file")
    operators = args.ops.split(",") if args.ops else None
    seed = args.seed if args.seed is not None else _env_seed()
    batch = mutation.mutate_model(model, operators, seed=seed, count=args.count)
    payload = mutation.mutants_to_dict(kind, batch)
    lines = [f"{len(batch.mutants)} mutant(s), {batch.invalid} invalid, "
             f"{batch.duplicates} duplicate(s)"]
    lines += [f"  {m.mutant_id}" for m in batch.mutants]
    _emit(args, payload, lines)
    return 0


def _cmd_score(args) -> int:
    kind, model = model_io.load_model_file(args.model)
    mutants_kind, batch = mutation.mutants_from_dict(model_io.load_json(args.mutants))
    if mutants_kind != kind:
        raise SchemaError(f"mutants are for a {mutants_kind} model, spec is {kind}")
    if kind == "sxm":
        if not args.suite:
            raise SchemaError("score on a machine spec needs --suite")
        suite = model_io.suite_from_dict(model_io.load_json(args.suite))
        report = mutation.score_sxm_suite(model, batch, suite)
    else:
        if not args.test_set:
            raise SchemaError("score on a P-system spec needs --test-set")
        testset_doc = model_io.load_json(args.test_set)
        members = model_io.testset_members_from_dict(testset_doc)
        depth = args.depth if args.depth is not None else int(testset_doc.get("depth", 3))
        report = mutation.score_psystem_testset(model, batch, members, depth)
    payload = mutation.score_to_dict(report)
    lines = [
        f"total {report.total}, killed {report.killed}, survived {report.survived}, "
        f"invalid {report.invalid}, identical {report.identical}",
    ]
    lines += [
        f"  {v.mutant_id}: {v.verdict}" + (f" (witness: {v.witness})" if v.witness else "")
        for v in report.per_mutant
    ]
    _emit(args, payload, lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heterotest",
        description="Model and test stream X-machines, communicating systems "
                    "and cell-like P systems.",
    )
    parser.add_argument("--format", choices=("text", "json"), default="text")
    # accept --format after the subcommand as well; SUPPRESS keeps the
    # subparser from clobbering a value given before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a model file; --dft adds design-for-test checks")
    p.add_argument("model")
    p.add_argument("--dft", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("simulate", parents=[common], help="run a P system, or drive a heterotic system")
    p.add_argument("model")
    p.add_argument("--depth", type=int, default=None)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--all-branches", action="store_true")
    group.add_argument("--seed", type=int, default=None)
    p.add_argument("--rounds", type=int, default=1, help="heterotic systems only")
    p.add_argument("--oracle-cmd", default=None,
                   help="external oracle command (heterotic systems only)")
    p.add_argument("--oracle-timeout-ms", type=int, default=10_000)
    p.add_argument("--oracle-retries", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("gen-tests", parents=[common], help="generate a test suite or coverage test set")
    p.add_argument("target", choices=("sxm", "psystem", "heterotic"))
    p.add_argument("model")
    p.add_argument("--extra-states", type=int, default=0)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=_cmd_gen_tests)

    p = sub.add_parser("product", parents=[common], help="fold a communicating system into one machine")
    p.add_argument("model")
    p.add_argument("-o", "--output")
    p.set_defaults(handler=_cmd_product)

    p = sub.add_parser("coverage", parents=[common], help="rule coverage of the bounded branch exploration")
    p.add_argument("model")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=_cmd_coverage)

    p = sub.add_parser("mutate", parents=[common], help="seed faults into a model")
    p.add_argument("model")
    p.add_argument("--ops", default=None, help="comma-separated operator names")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=_cmd_mutate)

    p = sub.add_parser("score", parents=[common], help="mutation-kill scoring of a suite or test set")
    p.add_argument("model")
    p.add_argument("--mutants", required=True)
    p.add_argument("--suite")
    p.add_argument("--test-set")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=_cmd_score)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except DftFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        for line in exc.report.summary_lines():
            print(f"  {line}", file=sys.stderr)
        return 1
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GENERATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HeterotestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
