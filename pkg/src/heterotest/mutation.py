"""Fault seeding and kill scoring.

P-system operators: rule-delete, rhs-target-swap, symbol-substitute,
lhs-multiplicity-change.  Machine operators: transition-retarget,
transition-delete, case-output-swap, memory-update-perturb.  Candidate
mutants enumerate deterministically; invalid ones (failing validation) and
duplicates are filtered out but counted, and the seeded sample is byte
reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

from .errors import EmptyMutantSet, NoValidMutants, TermError
from .model_io import (
    canonical_json,
    psystem_from_dict,
    psystem_to_dict,
    sxm_from_dict,
    sxm_to_dict,
)
from .multiset import Multiset
from .psystem import HERE, PConfiguration, PRule, PSystem, config_canonical, validate_psystem
from .sxm import Case, CaseFunction, Sxm, run_outputs, validate_sxm
from .testgen import TestSuite

SXM_OPERATORS = (
    "transition-retarget",
    "transition-delete",
    "case-output-swap",
    "memory-update-perturb",
)
PSYSTEM_OPERATORS = (
    "rule-delete",
    "rhs-target-swap",
    "symbol-substitute",
    "lhs-multiplicity-change",
)

Model = Union[Sxm, PSystem]


@dataclass(frozen=True)
class Mutant:
    base: str
    operator: str
    location: str
    model: Model

    @property
    def mutant_id(self) -> str:
        return f"{self.operator}:{self.location}"


@dataclass(frozen=True)
class MutantBatch:
    mutants: Tuple[Mutant, ...]
    invalid: int
    duplicates: int

    def __iter__(self):
        return iter(self.mutants)

    def __len__(self):
        return len(self.mutants)


def _model_key(model: Model) -> str:
    if isinstance(model, Sxm):
        return canonical_json(sxm_to_dict(model))
    return canonical_json(psystem_to_dict(model))


def _validate(model: Model) -> bool:
    if isinstance(model, Sxm):
        return not validate_sxm(model)
    return not validate_psystem(model)


# --- machine operators --------------------------------------------------------


def _rebuild_function(fn: CaseFunction, case_idx: int, new_case: Case) -> CaseFunction:
    cases = list(fn.cases)
    cases[case_idx] = new_case
    return CaseFunction(fn.name, cases)


def _sxm_candidates(model: Sxm, operators: Sequence[str]):
    if "transition-retarget" in operators:
        for (q, fn), targets in sorted(model.next_state.items()):
            for pos, old in enumerate(targets):
                for new in sorted(model.states):
                    if new == old:
                        continue
                    next_state = dict(model.next_state)
                    retargeted = list(targets)
                    retargeted[pos] = new
                    next_state[(q, fn)] = tuple(retargeted)
                    yield (
                        "transition-retarget",
                        f"next_state[{q},{fn}].to[{pos}]={new}",
                        replace(model, next_state=next_state),
                    )
    if "transition-delete" in operators:
        for (q, fn) in sorted(model.next_state):
            next_state = dict(model.next_state)
            del next_state[(q, fn)]
            yield (
                "transition-delete",
                f"next_state[{q},{fn}]",
                replace(model, next_state=next_state),
            )
    if "case-output-swap" in operators:
        for name in sorted(model.functions):
            fn = model.functions[name]
            if not isinstance(fn, CaseFunction):
                continue
            for idx, case in enumerate(fn.cases):
                for output in sorted(model.outputs):
                    if output == case.output:
                        continue
                    new_case = Case.build(case.mem_pattern, case.input, output, case.mem_next)
                    functions = dict(model.functions)
                    functions[name] = _rebuild_function(fn, idx, new_case)
                    yield (
                        "case-output-swap",
                        f"functions[{name}].cases[{idx}].output={output}",
                        replace(model, functions=functions),
                    )
    if "memory-update-perturb" in operators:
        for name in sorted(model.functions):
            fn = model.functions[name]
            if not isinstance(fn, CaseFunction):
                continue
            for idx, case in enumerate(fn.cases):
                for delta, tag in ((1, "+1"), (-1, "-1")):
                    source = f"({case.mem_next}) + {delta}" if delta > 0 else f"({case.mem_next}) - 1"
                    try:
                        new_case = Case.build(case.mem_pattern, case.input, case.output, source)
                    except TermError:
                        continue
                    functions = dict(model.functions)
                    functions[name] = _rebuild_function(fn, idx, new_case)
                    yield (
                        "memory-update-perturb",
                        f"functions[{name}].cases[{idx}].mem_next{tag}",
                        replace(model, functions=functions),
                    )


# --- P-system operators ---------------------------------------------------------


def _replace_rule(ps: PSystem, old: PRule, new: Optional[PRule]) -> PSystem:
    rules = tuple(r for r in ps.rules if r.name != old.name)
    if new is not None:
        rules = rules + (new,)
    rules = tuple(sorted(rules, key=lambda r: (r.compartment, r.name)))
    return replace(ps, rules=rules)


def _psystem_candidates(ps: PSystem, operators: Sequence[str]):
    rules = sorted(ps.rules, key=lambda r: (r.compartment, r.name))
    if "rule-delete" in operators:
        for rule in rules:
            yield ("rule-delete", rule.name, _replace_rule(ps, rule, None))
    if "rhs-target-swap" in operators:
        for rule in rules:
            legal = ps.legal_targets(rule.compartment)
            for pos, (sym, target) in enumerate(rule.rhs):
                swaps = legal if target == HERE else (HERE,)
                for new_target in swaps:
                    rhs = list(rule.rhs)
                    rhs[pos] = (sym, new_target)
                    yield (
                        "rhs-target-swap",
                        f"{rule.name}.rhs[{pos}]->{new_target}",
                        _replace_rule(ps, rule, replace(rule, rhs=tuple(rhs))),
                    )
    if "symbol-substitute" in operators:
        alphabet = sorted(ps.alphabet)
        for rule in rules:
            for pos, (sym, target) in enumerate(rule.rhs):
                for new_sym in alphabet:
                    if new_sym == sym:
                        continue
                    rhs = list(rule.rhs)
                    rhs[pos] = (new_sym, target)
                    yield (
                        "symbol-substitute",
                        f"{rule.name}.rhs[{pos}]={new_sym}",
                        _replace_rule(ps, rule, replace(rule, rhs=tuple(rhs))),
                    )
            for lhs_sym, _ in rule.lhs.items():
                for new_sym in alphabet:
                    if new_sym == lhs_sym:
                        continue
                    counts = dict(rule.lhs.items())
                    moved = counts.pop(lhs_sym)
                    counts[new_sym] = counts.get(new_sym, 0) + moved
                    yield (
                        "symbol-substitute",
                        f"{rule.name}.lhs:{lhs_sym}->{new_sym}",
                        _replace_rule(ps, rule, replace(rule, lhs=Multiset(counts))),
                    )
    if "lhs-multiplicity-change" in operators:
        for rule in rules:
            for sym, count in rule.lhs.items():
                for delta in (1, -1):
                    new_count = count + delta
                    if new_count < 0:
                        continue
                    counts = dict(rule.lhs.items())
                    counts[sym] = new_count
                    if new_count == 0:
                        del counts[sym]
                    yield (
                        "lhs-multiplicity-change",
                        f"{rule.name}.lhs[{sym}]={new_count}",
                        _replace_rule(ps, rule, replace(rule, lhs=Multiset(counts))),
                    )


def enumerate_mutants(model: Model, operators: Optional[Sequence[str]] = None) -> MutantBatch:
    """Every valid, distinct single-operator mutant in deterministic order."""
    if isinstance(model, Sxm):
        operators = tuple(operators) if operators else SXM_OPERATORS
        candidates = _sxm_candidates(model, operators)
    else:
        operators = tuple(operators) if operators else PSYSTEM_OPERATORS
        candidates = _psystem_candidates(model, operators)

    base_key = _model_key(model)
    seen = {base_key}
    mutants: list[Mutant] = []
    invalid = 0
    duplicates = 0
    for operator, location, mutated in candidates:
        if not _validate(mutated):
            invalid += 1
            continue
        key = _model_key(mutated)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        mutants.append(Mutant(model.name, operator, location, mutated))
    mutants.sort(key=lambda m: m.mutant_id)
    return MutantBatch(tuple(mutants), invalid, duplicates)


def mutate_model(
    model: Model,
    operators: Optional[Sequence[str]] = None,
    seed: int = 0,
    count: int = 10,
) -> MutantBatch:
    """A seeded, reproducible sample of ``count`` mutants.

    Raises :class:`NoValidMutants` when every candidate was filtered out.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    batch = enumerate_mutants(model, operators)
    if not batch.mutants:
        raise NoValidMutants(f"no valid mutants for {model.name!r}")
    if count >= len(batch.mutants):
        return batch
    rng = random.Random(seed)
    sample = rng.sample(list(batch.mutants), count)
    sample.sort(key=lambda m: m.mutant_id)
    return MutantBatch(tuple(sample), batch.invalid, batch.duplicates)


# --- scoring --------------------------------------------------------------------


@dataclass(frozen=True)
class MutantVerdict:
    mutant_id: str
    operator: str
    verdict: str  # "killed" | "survived-bounded" | "survived-identical"
    witness: Optional[str] = None


@dataclass(frozen=True)
class ScoreReport:
    total: int
    killed: int
    survived: int
    invalid: int
    identical: int
    non_equivalent_score: Optional[float]
    per_mutant: Tuple[MutantVerdict, ...]

    @property
    def score(self) -> float:
        return self.killed / self.total if self.total else 0.0


def _reachable_within(ps: PSystem, depth: int) -> set:
    """Canonical forms of every configuration on any branch within depth."""
    from .psystem import is_halting, step_choices

    seen = {config_canonical(tuple(ps.initial))}
    frontier = [tuple(ps.initial)]
    for _ in range(depth):
        next_frontier = []
        for cfg in frontier:
            if is_halting(ps, cfg):
                continue
            for _, successor in step_choices(ps, cfg):
                key = config_canonical(successor)
                if key not in seen:
                    seen.add(key)
                    next_frontier.append(successor)
        frontier = next_frontier
    return seen


def score_sxm_suite(
    spec: Sxm,
    mutants: Union[MutantBatch, Iterable[Mutant]],
    suite: TestSuite,
    branch_bound: int = 256,
) -> ScoreReport:
    """A mutant is killed when some case's observed outputs differ from the
    expected outputs recorded in the suite."""
    batch = mutants if isinstance(mutants, MutantBatch) else MutantBatch(tuple(mutants), 0, 0)
    if not batch.mutants:
        raise EmptyMutantSet("no mutants to score")
    spec_key = _model_key(spec)
    verdicts = []
    killed = identical = 0
    for mutant in sorted(batch.mutants, key=lambda m: m.mutant_id):
        if _model_key(mutant.model) == spec_key:
            identical += 1
            verdicts.append(
                MutantVerdict(mutant.mutant_id, mutant.operator, "survived-identical")
            )
            continue
        witness = None
        for case in suite.cases:
            observed = run_outputs(mutant.model, case.input, branch_bound)
            if observed != case.expected_outputs:
                witness = " ".join(case.input) if case.input else "<empty input>"
                break
        if witness is not None:
            killed += 1
            verdicts.append(MutantVerdict(mutant.mutant_id, mutant.operator, "killed", witness))
        else:
            verdicts.append(MutantVerdict(mutant.mutant_id, mutant.operator, "survived-bounded"))
    total = len(batch.mutants)
    denominator = total - identical
    return ScoreReport(
        total=total,
        killed=killed,
        survived=total - killed - identical,
        invalid=batch.invalid,
        identical=identical,
        non_equivalent_score=(killed / denominator) if denominator else None,
        per_mutant=tuple(verdicts),
    )


def score_psystem_testset(
    spec: PSystem,
    mutants: Union[MutantBatch, Iterable[Mutant]],
    members: Sequence[PConfiguration],
    depth: int,
) -> ScoreReport:
    """A mutant is killed when some test-set configuration is unreachable in
    it within the generation depth."""
    batch = mutants if isinstance(mutants, MutantBatch) else MutantBatch(tuple(mutants), 0, 0)
    if not batch.mutants:
        raise EmptyMutantSet("no mutants to score")
    spec_key = _model_key(spec)
    member_keys = [config_canonical(tuple(m)) for m in members]
    verdicts = []
    killed = identical = 0
    for mutant in sorted(batch.mutants, key=lambda m: m.mutant_id):
        if _model_key(mutant.model) == spec_key:
            identical += 1
            verdicts.append(
                MutantVerdict(mutant.mutant_id, mutant.operator, "survived-identical")
            )
            continue
        reachable = _reachable_within(mutant.model, depth)
        witness = None
        for key in member_keys:
            if key not in reachable:
                witness = "(" + ",".join(key) + ")"
                break
        if witness is not None:
            killed += 1
            verdicts.append(MutantVerdict(mutant.mutant_id, mutant.operator, "killed", witness))
        else:
            verdicts.append(MutantVerdict(mutant.mutant_id, mutant.operator, "survived-bounded"))
    total = len(batch.mutants)
    denominator = total - identical
    return ScoreReport(
        total=total,
        killed=killed,
        survived=total - killed - identical,
        invalid=batch.invalid,
        identical=identical,
        non_equivalent_score=(killed / denominator) if denominator else None,
        per_mutant=tuple(verdicts),
    )


def mutation_score(
    spec: Model,
    mutants: Union[MutantBatch, Iterable[Mutant]],
    suite,
    depth: int = 3,
    branch_bound: int = 256,
) -> ScoreReport:
    """Dispatch on the suite kind: machine suites replay input sequences,
    P-system coverage sets check member reachability."""
    if isinstance(spec, Sxm):
        return score_sxm_suite(spec, mutants, suite, branch_bound)
    return score_psystem_testset(spec, mutants, suite, depth)


def score_to_dict(report: ScoreReport) -> Dict[str, object]:
    return {
        "schema": 1,
        "total": report.total,
        "killed": report.killed,
        "survived": report.survived,
        "invalid": report.invalid,
        "identical": report.identical,
        "score": report.score,
        "non_equivalent_score": report.non_equivalent_score,
        "per_mutant": [
            {
                "id": v.mutant_id,
                "operator": v.operator,
                "verdict": v.verdict,
                "witness": v.witness,
            }
            for v in report.per_mutant
        ],
    }


def mutants_to_dict(kind: str, batch: MutantBatch) -> Dict[str, object]:
    serialise = sxm_to_dict if kind == "sxm" else psystem_to_dict
    return {
        "schema": 1,
        "kind": kind,
        "invalid": batch.invalid,
        "duplicates": batch.duplicates,
        "mutants": [
            {
                "id": m.mutant_id,
                "base": m.base,
                "operator": m.operator,
                "location": m.location,
                "model": serialise(m.model),
            }
            for m in batch.mutants
        ],
    }


def mutants_from_dict(d) -> Tuple[str, MutantBatch]:
    kind = d.get("kind")
    if kind not in ("sxm", "psystem"):
        raise EmptyMutantSet("mutants file does not declare a known model kind")
    build = sxm_from_dict if kind == "sxm" else psystem_from_dict
    mutants = tuple(
        Mutant(entry["base"], entry["operator"], entry["location"], build(entry["model"]))
        for entry in d["mutants"]
    )
    return kind, MutantBatch(mutants, int(d.get("invalid", 0)), int(d.get("duplicates", 0)))
