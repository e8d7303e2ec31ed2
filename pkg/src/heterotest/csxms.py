"""Communicating stream X-machine systems.

Each component machine carries one input port and one output port; states
and functions are partitioned into ordinary (local computation) and
communicating (port-to-port transfer) kinds.  An ordinary step may consume
the in-port value or ignore it; a communicating step moves the sender's
out-port value into another component's empty in-port and always lands in
an ordinary state.

For test generation the system is first *extended*: every communicating
function is redefined to consume a fresh input symbol and emit a
component/function-identifying output symbol, making communication
observable.  The extended system is then folded into a single product
machine whose step relation mirrors the system's.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Mapping, Optional, Sequence, Tuple

from .dft import (
    CompletenessWitness,
    DeterminismWitness,
    DftReport,
    DistinguishabilityWitness,
)
from .errors import AlphabetCollision, DftFailure, NondeterministicProduct, UnextendedSystem
from .sxm import (
    MemoryDomain,
    ProcessingFunction,
    Sxm,
    Violation,
    associated_automaton,
)
from .terms import Expr, Pattern, parse_expr, parse_pattern
from .testgen import TestSuite, build_w_suite
from .values import BOTTOM_M, NULL, RESERVED_ATOMS, Value, render, sort_key

DEFAULT_COMM_SYMBOL = "a"

ORDINARY = "ordinary"
COMMUNICATING = "communicating"


@dataclass(frozen=True)
class CsxmResult:
    """Outcome of applying a communicating-machine function."""

    memory: Value
    output: str  # NULL for unextended communicating functions
    set_out_port: bool = False
    out_port: Optional[Value] = None
    send_to: Optional[int] = None  # 1-based component index


class CsxmFunction:
    """A named partial function (input symbol, in-port value, memory) ->
    result.  ``kind`` is "ordinary" or "communicating"."""

    name: str
    kind: str

    def evaluate(self, input_symbol: str, in_port: Value, memory: Value) -> Optional[CsxmResult]:
        raise NotImplementedError


@dataclass(frozen=True)
class CsxmCase:
    mem_pattern: str
    port_pattern: str
    input: str
    output: str
    mem_next: str
    out_port: Optional[str] = None  # expression; None leaves the port alone
    send_to: Optional[int] = None
    pattern: Pattern = field(compare=False, repr=False, default=None)
    port_pat: Pattern = field(compare=False, repr=False, default=None)
    update: Expr = field(compare=False, repr=False, default=None)
    out_expr: Optional[Expr] = field(compare=False, repr=False, default=None)

    @classmethod
    def build(cls, mem_pattern, port_pattern, input, output, mem_next,
              out_port=None, send_to=None) -> "CsxmCase":
        return cls(
            mem_pattern, port_pattern, input, output, mem_next, out_port, send_to,
            pattern=parse_pattern(mem_pattern),
            port_pat=parse_pattern(port_pattern),
            update=parse_expr(mem_next),
            out_expr=parse_expr(out_port) if out_port is not None else None,
        )


class CsxmCaseFunction(CsxmFunction):
    """Case-table implementation; memory and port patterns bind separate
    variable sets and the guards of each pattern see only its own."""

    def __init__(self, name: str, kind: str, cases: Sequence[CsxmCase]):
        self.name = name
        self.kind = kind
        self.cases = tuple(cases)

    def evaluate(self, input_symbol, in_port, memory):
        for case in self.cases:
            if case.input != input_symbol:
                continue
            env = case.pattern.match(memory)
            if env is None:
                continue
            port_env = case.port_pat.match(in_port)
            if port_env is None:
                continue
            merged = dict(env)
            merged.update(port_env)
            out_value = case.out_expr.evaluate(merged) if case.out_expr is not None else None
            return CsxmResult(
                memory=case.update.evaluate(merged),
                output=case.output,
                set_out_port=case.out_expr is not None,
                out_port=out_value,
                send_to=case.send_to,
            )
        return None

    def __repr__(self):
        return f"CsxmCaseFunction({self.name!r}, {self.kind}, {len(self.cases)} cases)"


class ExtendedCommFunction(CsxmFunction):
    """A communicating function redefined for testing: it consumes the
    communication input symbol and emits its identifying output symbol."""

    kind = COMMUNICATING

    def __init__(self, inner: CsxmFunction, comm_symbol: str, output_symbol: str):
        self.inner = inner
        self.name = inner.name
        self.comm_symbol = comm_symbol
        self.output_symbol = output_symbol

    def evaluate(self, input_symbol, in_port, memory):
        if input_symbol != self.comm_symbol:
            return None
        result = self.inner.evaluate(NULL, in_port, memory)
        if result is None:
            return None
        return replace(result, output=self.output_symbol)

    def __repr__(self):
        return f"ExtendedCommFunction({self.name!r} -> {self.output_symbol!r})"


@dataclass(frozen=True)
class Csxm:
    """One communicating component.  Port domains are finite value sets;
    the undefined port value is implicitly part of both."""

    name: str
    inputs: FrozenSet[str]
    outputs: FrozenSet[str]
    states: FrozenSet[str]
    initial_states: FrozenSet[str]
    terminal_states: FrozenSet[str]
    memory_domain: MemoryDomain
    initial_memory: Value
    functions: Mapping[str, CsxmFunction]
    next_state: Mapping[Tuple[str, str], Tuple[str, ...]]
    in_port_domain: Tuple[Value, ...]
    out_port_domain: Tuple[Value, ...]
    ordinary_states: FrozenSet[str]
    communicating_states: FrozenSet[str]
    ordinary_functions: FrozenSet[str]
    communicating_functions: FrozenSet[str]


@dataclass(frozen=True)
class CsxmSystem:
    name: str
    components: Tuple[Csxm, ...]
    extended: bool = False
    comm_symbol: str = DEFAULT_COMM_SYMBOL

    def component(self, index: int) -> Csxm:
        """1-based component access."""
        return self.components[index - 1]


@dataclass(frozen=True)
class ComponentConfiguration:
    memory: Value
    state: str
    remaining_input: Tuple[str, ...]
    output_so_far: Tuple[str, ...]
    in_port: Value
    out_port: Value

    def core(self):
        return (self.memory, self.state, self.in_port, self.out_port)

    def key(self):
        return (
            sort_key(self.memory),
            self.state,
            self.remaining_input,
            self.output_so_far,
            sort_key(self.in_port),
            sort_key(self.out_port),
        )


SystemConfiguration = Tuple[ComponentConfiguration, ...]


def initial_system_configuration(
    sys: CsxmSystem, streams: Sequence[Sequence[str]] | None = None
) -> SystemConfiguration:
    """Initial configuration: both ports undefined everywhere, so the first
    move of every component must be ordinary."""
    if streams is None:
        streams = [() for _ in sys.components]
    return tuple(
        ComponentConfiguration(
            memory=comp.initial_memory,
            state=sorted(comp.initial_states)[0],
            remaining_input=tuple(stream),
            output_so_far=(),
            in_port=BOTTOM_M,
            out_port=BOTTOM_M,
        )
        for comp, stream in zip(sys.components, streams)
    )


def validate_csxm(comp: Csxm) -> list[Violation]:
    out: list[Violation] = []
    name = comp.name

    if comp.ordinary_states & comp.communicating_states:
        shared = sorted(comp.ordinary_states & comp.communicating_states)
        out.append(Violation(f"{name}.states", f"states in both partitions: {shared}"))
    if (comp.ordinary_states | comp.communicating_states) != comp.states:
        out.append(Violation(f"{name}.states", "state partition does not cover the state set"))
    if comp.ordinary_functions & comp.communicating_functions:
        shared = sorted(comp.ordinary_functions & comp.communicating_functions)
        out.append(Violation(f"{name}.functions", f"functions in both partitions: {shared}"))
    if (comp.ordinary_functions | comp.communicating_functions) != frozenset(comp.functions):
        out.append(Violation(f"{name}.functions", "function partition does not cover the function set"))

    for q in sorted(comp.initial_states - comp.ordinary_states):
        out.append(Violation(f"{name}.initial_states", f"initial state {q!r} is not ordinary"))

    for (q, fn), targets in sorted(comp.next_state.items()):
        where = f"{name}.next_state[{q},{fn}]"
        ordinary_pair = q in comp.ordinary_states and fn in comp.ordinary_functions
        comm_pair = q in comp.communicating_states and fn in comp.communicating_functions
        if not (ordinary_pair or comm_pair):
            out.append(
                Violation(where, "ordinary states support ordinary functions and "
                                 "communicating states communicating functions")
            )
        if comm_pair:
            for t in targets:
                if t not in comp.ordinary_states:
                    out.append(
                        Violation(where, f"communicating function targets non-ordinary state {t!r}")
                    )

    for fname in sorted(comp.functions):
        fn = comp.functions[fname]
        expected = ORDINARY if fname in comp.ordinary_functions else COMMUNICATING
        if fn.kind != expected:
            out.append(
                Violation(f"{name}.functions[{fname}]", f"declared {expected} but built {fn.kind}")
            )
        if isinstance(fn, CsxmCaseFunction):
            for idx, case in enumerate(fn.cases):
                where = f"{name}.functions[{fname}].cases[{idx}]"
                if fn.kind == ORDINARY:
                    if case.input not in comp.inputs:
                        out.append(Violation(where, f"input {case.input!r} not in the alphabet"))
                    if case.output not in comp.outputs:
                        out.append(Violation(where, f"output {case.output!r} not in the alphabet"))
                    if case.send_to is not None:
                        out.append(Violation(where, "ordinary functions cannot send"))
                else:
                    if case.input != NULL:
                        out.append(Violation(where, "communicating cases consume no input symbol"))
                    if case.output != NULL:
                        out.append(Violation(where, "communicating cases emit no output symbol"))
                    if case.send_to is None:
                        out.append(Violation(where, "communicating case declares no target"))
                    if case.out_port is not None:
                        out.append(Violation(where, "communicating cases cannot set the out-port"))

    for port_name, domain in (("in_port_domain", comp.in_port_domain),
                              ("out_port_domain", comp.out_port_domain)):
        for v in domain:
            if v == BOTTOM_M:
                continue
            if comp.memory_domain.contains(v) is False:
                out.append(
                    Violation(f"{name}.{port_name}",
                              f"port value {render(v)} outside the memory domain")
                )

    for atom in sorted(RESERVED_ATOMS & comp.inputs):
        out.append(Violation(f"{name}.inputs", f"reserved atom {atom!r} in input alphabet"))
    for atom in sorted(RESERVED_ATOMS & comp.outputs):
        out.append(Violation(f"{name}.outputs", f"reserved atom {atom!r} in output alphabet"))
    for atom in sorted(comp.inputs | comp.outputs):
        if TUPLE_SEPARATOR in atom:
            out.append(
                Violation(f"{name}", f"symbol {atom!r} contains the reserved separator "
                                     f"{TUPLE_SEPARATOR!r}")
            )
    return out


def validate_system(sys: CsxmSystem) -> list[Violation]:
    out: list[Violation] = []
    if not sys.components:
        out.append(Violation(sys.name, "a system needs at least one component"))
        return out
    n = len(sys.components)
    for comp in sys.components:
        out.extend(validate_csxm(comp))
    for idx, comp in enumerate(sys.components, start=1):
        for fname in sorted(comp.communicating_functions):
            fn = comp.functions[fname]
            targets = set()
            if isinstance(fn, CsxmCaseFunction):
                targets = {case.send_to for case in fn.cases if case.send_to is not None}
            elif isinstance(fn, ExtendedCommFunction) and isinstance(fn.inner, CsxmCaseFunction):
                targets = {case.send_to for case in fn.inner.cases if case.send_to is not None}
            for k in sorted(targets):
                where = f"{comp.name}.functions[{fname}]"
                if not 1 <= k <= n:
                    out.append(Violation(where, f"send target {k} outside 1..{n}"))
                elif k == idx:
                    out.append(Violation(where, "component cannot send to itself"))
    return out


def _ordinary_modes(in_port: Value):
    """(port value passed to the function, resulting in-port) per Def.-3
    mode: consume the in-port value, or proceed ignoring it."""
    modes = []
    if in_port != BOTTOM_M:
        modes.append((in_port, BOTTOM_M))
    modes.append((BOTTOM_M, in_port))
    return modes


def system_step(sys: CsxmSystem, cfg: SystemConfiguration) -> list[SystemConfiguration]:
    """All configurations reachable in one ordinary or communicating change.

    Empty exactly when the system is deadlocked.  Results are sorted for a
    deterministic merge order.
    """
    successors: list[SystemConfiguration] = []
    for i, comp in enumerate(sys.components):
        cc = cfg[i]
        for (q, fname), targets in sorted(comp.next_state.items()):
            if q != cc.state:
                continue
            fn = comp.functions[fname]
            if fname in comp.ordinary_functions:
                if not cc.remaining_input:
                    continue
                head, rest = cc.remaining_input[0], cc.remaining_input[1:]
                for port_arg, new_in in _ordinary_modes(cc.in_port):
                    result = fn.evaluate(head, port_arg, cc.memory)
                    if result is None:
                        continue
                    new_out = result.out_port if result.set_out_port else cc.out_port
                    moved = ComponentConfiguration(
                        memory=result.memory,
                        state="",
                        remaining_input=rest,
                        output_so_far=cc.output_so_far + (result.output,),
                        in_port=new_in,
                        out_port=new_out,
                    )
                    for target in targets:
                        succ = list(cfg)
                        succ[i] = replace(moved, state=target)
                        successors.append(tuple(succ))
            else:
                # Communicating change: the sender's out-port value moves into
                # another component's empty in-port; streams stay untouched in
                # unextended systems, while extended functions consume the
                # communication symbol and emit their identifying output.
                if cc.out_port == BOTTOM_M:
                    continue
                if sys.extended:
                    if not cc.remaining_input:
                        continue
                    head, rest = cc.remaining_input[0], cc.remaining_input[1:]
                else:
                    head, rest = NULL, cc.remaining_input
                for port_arg, new_in in _ordinary_modes(cc.in_port):
                    result = fn.evaluate(head, port_arg, cc.memory)
                    if result is None:
                        continue
                    k = result.send_to
                    if k is None or k - 1 == i or not 1 <= k <= len(sys.components):
                        continue
                    if cfg[k - 1].in_port != BOTTOM_M:
                        continue
                    new_output = cc.output_so_far
                    if sys.extended:
                        new_output = new_output + (result.output,)
                    for target in targets:
                        assert target in comp.ordinary_states, (
                            "communicating change must land in an ordinary state"
                        )
                        succ = list(cfg)
                        succ[i] = ComponentConfiguration(
                            memory=result.memory,
                            state=target,
                            remaining_input=rest,
                            output_so_far=new_output,
                            in_port=new_in,
                            out_port=BOTTOM_M,
                        )
                        succ[k - 1] = replace(cfg[k - 1], in_port=cc.out_port)
                        if not sys.extended:
                            assert succ[i].remaining_input == cc.remaining_input
                            assert succ[i].output_so_far == cc.output_so_far
                        successors.append(tuple(succ))
    unique = sorted(set(successors), key=lambda s: tuple(c.key() for c in s))
    return unique


def comm_output_symbol(component_index: int, function_position: int) -> str:
    """The identifying output symbol for communicating function number
    ``function_position`` (1-based, by name order) of component
    ``component_index`` (1-based)."""
    return f"[{component_index},{function_position}]"


def extend_for_testing(sys: CsxmSystem, comm_symbol: str = DEFAULT_COMM_SYMBOL) -> CsxmSystem:
    """Make communication observable.

    Every communicating function of component i gains the fresh input symbol
    and the output symbol naming it; ordinary functions are untouched.
    Systems with no communicating functions come back structurally unchanged.
    """
    if sys.extended:
        return sys
    used_symbols = []
    for idx, comp in enumerate(sys.components, start=1):
        for pos, _ in enumerate(sorted(comp.communicating_functions), start=1):
            used_symbols.append(comm_output_symbol(idx, pos))
    for comp in sys.components:
        if comm_symbol in comp.inputs or comm_symbol in comp.outputs:
            raise AlphabetCollision(
                f"communication symbol {comm_symbol!r} already in {comp.name}'s alphabets"
            )
        for sym in used_symbols:
            if sym in comp.inputs or sym in comp.outputs:
                raise AlphabetCollision(
                    f"extension symbol {sym!r} already in {comp.name}'s alphabets"
                )

    new_components = []
    for idx, comp in enumerate(sys.components, start=1):
        if not comp.communicating_functions:
            new_components.append(comp)
            continue
        functions: Dict[str, CsxmFunction] = dict(comp.functions)
        added_outputs = set()
        for pos, fname in enumerate(sorted(comp.communicating_functions), start=1):
            symbol = comm_output_symbol(idx, pos)
            functions[fname] = ExtendedCommFunction(comp.functions[fname], comm_symbol, symbol)
            added_outputs.add(symbol)
        new_components.append(
            replace(
                comp,
                inputs=comp.inputs | {comm_symbol},
                outputs=comp.outputs | added_outputs,
                functions=functions,
            )
        )
    return replace(sys, components=tuple(new_components), extended=True, comm_symbol=comm_symbol)


# --- the product machine ----------------------------------------------------


# The per-component separator must not occur in any component symbol; the
# bracketed communication outputs [i,j] rule out the comma.
TUPLE_SEPARATOR = "|"


def encode_tuple_atom(parts: Sequence[str]) -> str:
    return "(" + TUPLE_SEPARATOR.join(parts) + ")"


def decode_tuple_atom(atom: str, n: int) -> Optional[Tuple[str, ...]]:
    if not (atom.startswith("(") and atom.endswith(")")):
        return None
    parts = tuple(atom[1:-1].split(TUPLE_SEPARATOR))
    return parts if len(parts) == n else None


class ProductFunction(ProcessingFunction):
    """One component's function lifted to the product machine; all other
    components run the identity and consume the do-nothing symbol."""

    def __init__(self, index: int, inner: CsxmFunction, n: int):
        self.index = index  # 0-based component slot
        self.inner = inner
        self.n = n
        parts = ["id"] * n
        parts[index] = inner.name
        self.name = encode_tuple_atom(parts)

    def evaluate(self, memory, input_symbol):
        parts = decode_tuple_atom(input_symbol, self.n)
        if parts is None:
            return None
        if any(part != NULL for j, part in enumerate(parts) if j != self.index):
            return None
        symbol = parts[self.index]
        if symbol == NULL:
            return None
        if not isinstance(memory, tuple) or len(memory) != self.n:
            return None
        in_port, local_memory, out_port = memory[self.index]

        # Consume the in-port value when the function accepts it, otherwise
        # fall back to the ignoring mode.  Functions defined on both modes are
        # under-approximated here (the ignoring move is dropped); keeping
        # port-reading and port-ignoring cases disjoint avoids that.
        result = None
        new_in = in_port
        if in_port != BOTTOM_M:
            result = self.inner.evaluate(symbol, in_port, local_memory)
            if result is not None:
                new_in = BOTTOM_M
        if result is None:
            result = self.inner.evaluate(symbol, BOTTOM_M, local_memory)
            new_in = in_port
        if result is None:
            return None

        triples = list(memory)
        if self.inner.kind == ORDINARY:
            new_out = result.out_port if result.set_out_port else out_port
            triples[self.index] = (new_in, result.memory, new_out)
        else:
            if out_port == BOTTOM_M:
                return None
            k = result.send_to
            if k is None or k - 1 == self.index or not 1 <= k <= self.n:
                return None
            if memory[k - 1][0] != BOTTOM_M:
                return None
            triples[self.index] = (new_in, result.memory, BOTTOM_M)
            _, target_mem, target_out = memory[k - 1]
            triples[k - 1] = (out_port, target_mem, target_out)

        output_parts = [NULL] * self.n
        output_parts[self.index] = result.output
        return encode_tuple_atom(output_parts), tuple(triples)


def _product_values(per_component: Sequence[Sequence[Value]]) -> list[Tuple[Value, ...]]:
    combos: list[tuple] = [()]
    for values in per_component:
        combos = [prefix + (v,) for prefix in combos for v in values]
    return combos


def build_product_sxm(sys: CsxmSystem) -> Sxm:
    """Fold an extended system into a single stream X-machine.

    Input symbols are tuples over each component's alphabet plus the
    communication and do-nothing symbols (never all do-nothing); memory
    collects every component's (in-port, memory, out-port) triple.  Only
    function tuples with exactly one active component are realisable, so
    only those appear.
    """
    if not sys.extended:
        raise UnextendedSystem("run extend_for_testing before building the product")
    n = len(sys.components)

    input_parts = []
    output_parts = []
    for comp in sys.components:
        input_parts.append(sorted(comp.inputs | {sys.comm_symbol, NULL}))
        output_parts.append(sorted(comp.outputs | {NULL}))
    inputs = {
        encode_tuple_atom(parts)
        for parts in _product_values(input_parts)
        if any(p != NULL for p in parts)
    }
    outputs = {
        encode_tuple_atom(parts)
        for parts in _product_values(output_parts)
        if any(p != NULL for p in parts)
    }

    state_parts = [sorted(comp.states) for comp in sys.components]
    states = {encode_tuple_atom(parts) for parts in _product_values(state_parts)}
    initial = {
        encode_tuple_atom(parts)
        for parts in _product_values([sorted(c.initial_states) for c in sys.components])
    }
    terminal = {
        encode_tuple_atom(parts)
        for parts in _product_values([sorted(c.terminal_states) for c in sys.components])
    }

    memory_parts = []
    exhaustive = True
    for comp in sys.components:
        mem_values, comp_exhaustive = comp.memory_domain.enumerate()
        exhaustive = exhaustive and comp_exhaustive
        ports_in = [BOTTOM_M] + [v for v in comp.in_port_domain if v != BOTTOM_M]
        ports_out = [BOTTOM_M] + [v for v in comp.out_port_domain if v != BOTTOM_M]
        triples = [
            (pi, m, po) for pi in ports_in for m in mem_values for po in ports_out
        ]
        memory_parts.append(triples)
    memory_values = tuple(tuple(t) for t in _product_values(memory_parts))
    domain = MemoryDomain(
        kind="set" if exhaustive else "open",
        values=memory_values if exhaustive else (),
        sample=() if exhaustive else memory_values,
    )

    initial_memory = tuple(
        (BOTTOM_M, comp.initial_memory, BOTTOM_M) for comp in sys.components
    )

    functions: Dict[str, ProcessingFunction] = {}
    next_state: Dict[Tuple[str, str], Tuple[str, ...]] = {}
    for i, comp in enumerate(sys.components):
        other_states = [
            sorted(c.states) if j != i else [None]
            for j, c in enumerate(sys.components)
        ]
        for (q, fname), targets in sorted(comp.next_state.items()):
            pf = ProductFunction(i, comp.functions[fname], n)
            functions.setdefault(pf.name, pf)
            for combo in _product_values(other_states):
                src_parts = [q if j == i else combo[j] for j in range(n)]
                src = encode_tuple_atom(src_parts)
                dsts = []
                for t in targets:
                    dst_parts = [t if j == i else combo[j] for j in range(n)]
                    dsts.append(encode_tuple_atom(dst_parts))
                key = (src, pf.name)
                existing = next_state.get(key, ())
                next_state[key] = tuple(sorted(set(existing) | set(dsts)))

    return Sxm(
        name=f"{sys.name}-product",
        inputs=frozenset(inputs),
        outputs=frozenset(outputs),
        states=frozenset(states),
        initial_states=frozenset(initial),
        terminal_states=frozenset(terminal),
        memory_domain=domain,
        initial_memory=initial_memory,
        functions=functions,
        next_state=next_state,
    )


# --- per-component design-for-test checks -----------------------------------


def check_csxm_dft(comp: Csxm, witness_limit: int = 16) -> DftReport:
    """The three design-for-test conditions for one component.

    The component is a machine over the paired input alphabet (symbol,
    in-port value), so completeness quantifies existentially over pairs and
    witnesses carry (memory, port) in their memory slot.
    """
    mem_values, exhaustive = comp.memory_domain.enumerate()
    port_values = [BOTTOM_M] + [v for v in comp.in_port_domain if v != BOTTOM_M]
    inputs = sorted(comp.inputs)
    fn_names = sorted(comp.functions)

    # Set-valued next-state entries are left to the product arc scan, which
    # reports them as product nondeterminism; here only the initial-state
    # count is structural.
    structural: list[str] = []
    if len(comp.initial_states) != 1:
        structural.append(f"initial-state set {sorted(comp.initial_states)} is not a singleton")

    def observable(result: CsxmResult):
        out_effect = result.out_port if result.set_out_port else "<keep>"
        return (result.output, out_effect, result.send_to)

    det: list[DeterminismWitness] = []
    attached: Dict[str, list[str]] = {}
    for (q, fname) in comp.next_state:
        attached.setdefault(q, []).append(fname)
    for q in sorted(attached):
        fns = sorted(set(attached[q]))
        for i in range(len(fns)):
            for j in range(i + 1, len(fns)):
                f1, f2 = comp.functions[fns[i]], comp.functions[fns[j]]
                for m in mem_values:
                    for p in port_values:
                        for sym in inputs:
                            if len(det) >= witness_limit:
                                break
                            if (
                                f1.evaluate(sym, p, m) is not None
                                and f2.evaluate(sym, p, m) is not None
                            ):
                                det.append(DeterminismWitness(q, fns[i], fns[j], (m, p), sym))

    comp_witnesses: list[CompletenessWitness] = []
    complete_per_function: Dict[str, bool] = {}
    for fname in fn_names:
        fn = comp.functions[fname]
        ok = True
        for m in mem_values:
            defined = any(
                fn.evaluate(sym, p, m) is not None for sym in inputs for p in port_values
            )
            if not defined:
                ok = False
                if len(comp_witnesses) < witness_limit:
                    comp_witnesses.append(CompletenessWitness(fname, m))
        complete_per_function[fname] = ok

    dist: list[DistinguishabilityWitness] = []
    for i in range(len(fn_names)):
        for j in range(i + 1, len(fn_names)):
            f1, f2 = comp.functions[fn_names[i]], comp.functions[fn_names[j]]
            for m in mem_values:
                for p in port_values:
                    for sym in inputs:
                        if len(dist) >= witness_limit:
                            break
                        r1 = f1.evaluate(sym, p, m)
                        r2 = f2.evaluate(sym, p, m)
                        if r1 is not None and r2 is not None and observable(r1) == observable(r2):
                            dist.append(
                                DistinguishabilityWitness(
                                    fn_names[i], fn_names[j], (m, p),
                                    r1.memory, r2.memory, sym, r1.output,
                                )
                            )

    return DftReport(
        deterministic=not det and not structural,
        determinism_witnesses=tuple(det),
        structural_issues=tuple(structural),
        complete=not comp_witnesses,
        complete_per_function=complete_per_function,
        completeness_witnesses=tuple(comp_witnesses),
        output_distinguishable=not dist,
        distinguishability_witnesses=tuple(dist),
        exhaustive=exhaustive,
    )


def generate_csxms_test_suite(sys: CsxmSystem, k: int, branch_bound: int = 256) -> TestSuite:
    """Extend, fold into the product machine, and run W-method generation.

    Per-component design-for-test failures raise :class:`DftFailure`; a
    nondeterministic product raises :class:`NondeterministicProduct` naming
    the conflicting state and label (test generation for nondeterministic
    machines is out of scope).  The product machine itself is gated on its
    associated automaton only: its memory domain deliberately includes
    port states the communication protocol never reaches, so component-level
    checks are the meaningful ones.
    """
    extended = extend_for_testing(sys)
    for comp in extended.components:
        report = check_csxm_dft(comp)
        if not report.all_pass():
            raise DftFailure(f"component {comp.name!r} fails design-for-test checks", report)

    product = build_product_sxm(extended)
    automaton = associated_automaton(product)
    witness = automaton.nondeterministic_witness()
    if witness is not None:
        raise NondeterministicProduct(
            f"product automaton nondeterministic at state {witness[0]}, label {witness[1]}",
            state=witness[0],
            label=witness[1],
        )
    metadata = {
        "system": sys.name,
        "components": [comp.name for comp in sys.components],
        "tuple_order": [comp.name for comp in sys.components],
        "comm_symbol": extended.comm_symbol,
        "null_symbol": NULL,
    }
    return build_w_suite(product, k, branch_bound, metadata=metadata)


# --- step-graph faithfulness helpers ----------------------------------------

SystemCore = Tuple[Tuple[Value, str, Value, Value], ...]


def system_core(cfg: SystemConfiguration) -> SystemCore:
    return tuple(cc.core() for cc in cfg)


def initial_system_core(sys: CsxmSystem) -> SystemCore:
    return system_core(initial_system_configuration(sys))


def system_core_successors(sys: CsxmSystem, core: SystemCore):
    """Single-step core transitions with the input streams abstracted away:
    each labelled edge ((component, function, symbol), successor core)
    assumes the driver supplies the symbol the move needs."""
    edges = set()
    for i, comp in enumerate(sys.components):
        memory, state, in_port, out_port = core[i]
        for (q, fname), targets in sorted(comp.next_state.items()):
            if q != state:
                continue
            fn = comp.functions[fname]
            if fname in comp.ordinary_functions:
                symbols = sorted(comp.inputs)
            else:
                symbols = [sys.comm_symbol] if sys.extended else [NULL]
            for symbol in symbols:
                for port_arg, new_in in _ordinary_modes(in_port):
                    result = fn.evaluate(symbol, port_arg, memory)
                    if result is None:
                        continue
                    if fname in comp.ordinary_functions:
                        new_out = result.out_port if result.set_out_port else out_port
                        for target in targets:
                            succ = list(core)
                            succ[i] = (result.memory, target, new_in, new_out)
                            edges.add(((i + 1, fname, symbol), tuple(succ)))
                    else:
                        if out_port == BOTTOM_M:
                            continue
                        k = result.send_to
                        if k is None or k - 1 == i or not 1 <= k <= len(sys.components):
                            continue
                        if core[k - 1][2] != BOTTOM_M:
                            continue
                        for target in targets:
                            succ = list(core)
                            succ[i] = (result.memory, target, new_in, BOTTOM_M)
                            km, kq, _, ko = core[k - 1]
                            succ[k - 1] = (km, kq, out_port, ko)
                            edges.add(((i + 1, fname, symbol), tuple(succ)))
    return edges


ProductCore = Tuple[Value, str]  # (product memory, product state atom)


def core_to_product(core: SystemCore) -> ProductCore:
    memory = tuple((in_port, m, out_port) for (m, _, in_port, out_port) in core)
    state = encode_tuple_atom(tuple(q for (_, q, _, _) in core))
    return memory, state


def product_core_successors(product: Sxm, core: ProductCore):
    """Edges ((component, function, symbol), core') of the product machine,
    enumerating only the single-active-component input tuples."""
    memory, state = core
    n = len(memory)
    per_slot_symbols: list[set] = [set() for _ in range(n)]
    for atom in product.inputs:
        parts = decode_tuple_atom(atom, n)
        if parts is None:
            continue
        active = [(j, p) for j, p in enumerate(parts) if p != NULL]
        if len(active) == 1:
            per_slot_symbols[active[0][0]].add(active[0][1])
    edges = set()
    for (q, pf_name), targets in sorted(product.next_state.items()):
        if q != state:
            continue
        pf = product.functions[pf_name]
        assert isinstance(pf, ProductFunction)
        i = pf.index
        for symbol in sorted(per_slot_symbols[i]):
            parts = [NULL] * n
            parts[i] = symbol
            result = pf.evaluate(memory, encode_tuple_atom(parts))
            if result is None:
                continue
            _, new_memory = result
            for target in targets:
                edges.add(((i + 1, pf.inner.name, symbol), (new_memory, target)))
    return edges
