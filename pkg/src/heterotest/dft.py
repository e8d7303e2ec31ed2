"""Design-for-test checks: determinism, completeness and output
distinguishability, decided by enumeration over the declared memory domain
(or sample) and attached concrete witnesses on failure.

A sampled (non-exhaustive) pass means "no violation found (sampled)" and is
never a proof; the report's ``exhaustive`` flag records which it was.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

from .sxm import Sxm, associated_automaton
from .values import Value, render, sort_key


@dataclass(frozen=True)
class DeterminismWitness:
    state: str
    fn1: str
    fn2: str
    memory: Value
    input: str

    def describe(self) -> str:
        return (
            f"state {self.state}: {self.fn1} and {self.fn2} both defined at "
            f"memory {render(self.memory)}, input {self.input!r}"
        )


@dataclass(frozen=True)
class CompletenessWitness:
    fn: str
    memory: Value

    def describe(self) -> str:
        return f"{self.fn} is undefined at memory {render(self.memory)} for every input"


@dataclass(frozen=True)
class DistinguishabilityWitness:
    fn1: str
    fn2: str
    memory: Value
    memory1: Value
    memory2: Value
    input: str
    output: str

    def describe(self) -> str:
        return (
            f"{self.fn1} and {self.fn2} both map memory {render(self.memory)}, "
            f"input {self.input!r} to output {self.output!r} "
            f"(memories {render(self.memory1)} / {render(self.memory2)})"
        )


@dataclass
class DftReport:
    deterministic: bool
    determinism_witnesses: Tuple[DeterminismWitness, ...]
    structural_issues: Tuple[str, ...]
    complete: bool
    complete_per_function: Dict[str, bool]
    completeness_witnesses: Tuple[CompletenessWitness, ...]
    output_distinguishable: bool
    distinguishability_witnesses: Tuple[DistinguishabilityWitness, ...]
    exhaustive: bool

    def all_pass(self) -> bool:
        return self.deterministic and self.complete and self.output_distinguishable

    def summary_lines(self) -> list[str]:
        scope = "exhaustive" if self.exhaustive else "sampled"
        lines = []

        def verdict(ok):
            if ok:
                return "pass" if self.exhaustive else "no violation found (sampled)"
            return "FAIL"

        lines.append(f"determinism: {verdict(self.deterministic)}")
        for issue in self.structural_issues:
            lines.append(f"  {issue}")
        for w in self.determinism_witnesses:
            lines.append(f"  {w.describe()}")
        lines.append(f"completeness: {verdict(self.complete)}")
        for w in self.completeness_witnesses:
            lines.append(f"  {w.describe()}")
        lines.append(f"output distinguishability: {verdict(self.output_distinguishable)}")
        for w in self.distinguishability_witnesses:
            lines.append(f"  {w.describe()}")
        lines.append(f"scope: {scope}")
        return lines


def check_dft(model: Sxm, witness_limit: int = 16) -> DftReport:
    """Check the three design-for-test conditions over the declared domain.

    Witnesses are capped at ``witness_limit`` per condition; each witness
    replays as a genuine violation through the case tables.
    """
    values, exhaustive = model.memory_values()
    inputs = sorted(model.inputs)
    fn_names = sorted(model.functions)

    structural: list[str] = []
    if len(model.initial_states) != 1:
        structural.append(
            f"initial-state set {sorted(model.initial_states)} is not a singleton"
        )
    automaton = associated_automaton(model)
    seen_arcs = {}
    for src, label, dst in sorted(automaton.arcs):
        if (src, label) in seen_arcs and seen_arcs[(src, label)] != dst:
            structural.append(
                f"associated automaton has two {label}-arcs from state {src}"
            )
        seen_arcs[(src, label)] = dst

    # Determinism: functions attached to a common state must have disjoint
    # domains over (memory, input).
    det_witnesses: list[DeterminismWitness] = []
    attached: Dict[str, list[str]] = {}
    for (q, fn) in model.next_state:
        attached.setdefault(q, []).append(fn)
    for q in sorted(attached):
        fns = sorted(set(attached[q]))
        for i in range(len(fns)):
            for j in range(i + 1, len(fns)):
                f1 = model.functions.get(fns[i])
                f2 = model.functions.get(fns[j])
                if f1 is None or f2 is None:
                    continue
                for m in values:
                    for sym in inputs:
                        if len(det_witnesses) >= witness_limit:
                            break
                        if f1.evaluate(m, sym) is not None and f2.evaluate(m, sym) is not None:
                            det_witnesses.append(
                                DeterminismWitness(q, fns[i], fns[j], m, sym)
                            )

    # Completeness: every function must fire from every memory by some input.
    comp_witnesses: list[CompletenessWitness] = []
    complete_per_function: Dict[str, bool] = {}
    for name in fn_names:
        fn = model.functions[name]
        ok = True
        for m in values:
            if not any(fn.evaluate(m, sym) is not None for sym in inputs):
                ok = False
                if len(comp_witnesses) < witness_limit:
                    comp_witnesses.append(CompletenessWitness(name, m))
        complete_per_function[name] = ok

    # Output distinguishability: an output identifies the fired function.
    dist_witnesses: list[DistinguishabilityWitness] = []
    for i in range(len(fn_names)):
        for j in range(i + 1, len(fn_names)):
            f1 = model.functions[fn_names[i]]
            f2 = model.functions[fn_names[j]]
            for m in values:
                for sym in inputs:
                    if len(dist_witnesses) >= witness_limit:
                        break
                    r1 = f1.evaluate(m, sym)
                    r2 = f2.evaluate(m, sym)
                    if r1 is not None and r2 is not None and r1[0] == r2[0]:
                        dist_witnesses.append(
                            DistinguishabilityWitness(
                                fn_names[i], fn_names[j], m, r1[1], r2[1], sym, r1[0]
                            )
                        )

    det_witnesses.sort(key=lambda w: (w.state, w.fn1, w.fn2, sort_key(w.memory), w.input))
    comp_witnesses.sort(key=lambda w: (w.fn, sort_key(w.memory)))
    dist_witnesses.sort(
        key=lambda w: (w.fn1, w.fn2, sort_key(w.memory), w.input, w.output)
    )

    return DftReport(
        deterministic=not det_witnesses and not structural,
        determinism_witnesses=tuple(det_witnesses),
        structural_issues=tuple(structural),
        complete=not comp_witnesses,
        complete_per_function=complete_per_function,
        completeness_witnesses=tuple(comp_witnesses),
        output_distinguishable=not dist_witnesses,
        distinguishability_witnesses=tuple(dist_witnesses),
        exhaustive=exhaustive,
    )


def replay_determinism_witness(model: Sxm, w: DeterminismWitness) -> bool:
    f1, f2 = model.functions[w.fn1], model.functions[w.fn2]
    if (w.state, w.fn1) not in model.next_state or (w.state, w.fn2) not in model.next_state:
        return False
    return f1.evaluate(w.memory, w.input) is not None and f2.evaluate(w.memory, w.input) is not None


def replay_completeness_witness(model: Sxm, w: CompletenessWitness) -> bool:
    fn = model.functions[w.fn]
    return all(fn.evaluate(w.memory, sym) is None for sym in sorted(model.inputs))


def replay_distinguishability_witness(model: Sxm, w: DistinguishabilityWitness) -> bool:
    if w.fn1 == w.fn2:
        return False
    r1 = model.functions[w.fn1].evaluate(w.memory, w.input)
    r2 = model.functions[w.fn2].evaluate(w.memory, w.input)
    return (
        r1 is not None
        and r2 is not None
        and r1[0] == w.output
        and r2[0] == w.output
        and r1[1] == w.memory1
        and r2[1] == w.memory2
    )
