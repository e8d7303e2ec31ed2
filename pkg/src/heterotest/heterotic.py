"""Two-layer heterotic systems: a wrapped P system as the Base component and
an ordinary machine as Control, exchanging configurations through ports.

The Base wrapper holds a whole P-system configuration in memory: one
ordinary function advances it by one maximally parallel step (seeded, so
the machine stays deterministic), a second moves the halted configuration
to the out-port, a communicating function ships it to Control, and a final
ordinary function accepts Control's re-initialisation from the in-port.

An external oracle can replace the in-process simulation: the driver then
injects the oracle's final configuration instead of stepping, leaving the
recorded trace identical for identical answers.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

from .csxms import (
    COMMUNICATING,
    Csxm,
    CsxmFunction,
    CsxmResult,
    CsxmSystem,
    ORDINARY,
    generate_csxms_test_suite,
    initial_system_core,
    system_core_successors,
)
from .errors import (
    DeadlockError,
    DepthCapExceeded,
    OracleInvalidResult,
    OracleTimeout,
    PortIncompatibility,
)
from .multiset import Multiset
from .psystem import (
    PConfiguration,
    PSystem,
    config_canonical,
    is_halting,
    seeded_choice_index,
    step_choices,
)
from .sxm import MemoryDomain
from .testgen import TestSuite
from .values import BOTTOM_M, NULL, Value, sort_key

BASE_INPUTS = ("emit", "load", "step")
ADVANCE, EMIT, LOAD, SEND = "advance", "emit_result", "load_config", "send_result"
RUNNING, FORKING, SENDING, WAITING = "running", "forking", "sending", "waiting"


def config_value(cfg: PConfiguration) -> Value:
    return tuple(cfg)


def is_config_for(ps: PSystem, value: Value) -> bool:
    if not isinstance(value, tuple) or len(value) != ps.n_compartments:
        return False
    for part in value:
        if not isinstance(part, Multiset):
            return False
        if any(sym not in ps.alphabet for sym, _ in part.items()):
            return False
    return True


def simulate_to_halt(
    ps: PSystem, start: PConfiguration, seed: int, depth_cap: int
) -> Tuple[PConfiguration, int, Tuple[PConfiguration, ...]]:
    """Seeded single-branch run to a halting configuration.

    Returns (final, steps, visited configurations).  Raises
    :class:`DepthCapExceeded` when no halt is reached within the cap.
    """
    cfg = start
    visited = [cfg]
    for steps in range(depth_cap + 1):
        if is_halting(ps, cfg):
            return cfg, steps, tuple(visited)
        choices = step_choices(ps, cfg)
        cfg = choices[seeded_choice_index(seed, cfg, len(choices))][1]
        visited.append(cfg)
    raise DepthCapExceeded(
        f"{ps.name} did not halt within {depth_cap} steps from "
        f"{'|'.join(config_canonical(start))}"
    )


class AdvanceFunction(CsxmFunction):
    """One seeded maximally parallel step; stutters at halting configurations
    so the function stays total over the sampled memory."""

    kind = ORDINARY

    def __init__(self, ps: PSystem, seed: int):
        self.name = ADVANCE
        self.ps = ps
        self.seed = seed

    def evaluate(self, input_symbol, in_port, memory):
        if input_symbol != "step" or in_port != BOTTOM_M:
            return None
        if not is_config_for(self.ps, memory):
            return None
        cfg = tuple(memory)
        if is_halting(self.ps, cfg):
            return CsxmResult(memory=memory, output="ran")
        choices = step_choices(self.ps, cfg)
        successor = choices[seeded_choice_index(self.seed, cfg, len(choices))][1]
        return CsxmResult(memory=config_value(successor), output="ran")


class EmitFunction(CsxmFunction):
    """Move the current configuration to the out-port."""

    kind = ORDINARY

    def __init__(self, ps: PSystem):
        self.name = EMIT
        self.ps = ps

    def evaluate(self, input_symbol, in_port, memory):
        if input_symbol != "emit" or in_port != BOTTOM_M:
            return None
        if not is_config_for(self.ps, memory):
            return None
        return CsxmResult(memory=memory, output="put", set_out_port=True, out_port=memory)


class LoadFunction(CsxmFunction):
    """Adopt the configuration found on the in-port as the new memory."""

    kind = ORDINARY

    def __init__(self, ps: PSystem):
        self.name = LOAD
        self.ps = ps

    def evaluate(self, input_symbol, in_port, memory):
        if input_symbol != "load" or in_port == BOTTOM_M:
            return None
        if not is_config_for(self.ps, in_port):
            return None
        return CsxmResult(memory=in_port, output="got")


class SendFunction(CsxmFunction):
    """Ship the out-port value to the partner component."""

    kind = COMMUNICATING

    def __init__(self, target: int):
        self.name = SEND
        self.target = target

    def evaluate(self, input_symbol, in_port, memory):
        if input_symbol != NULL or in_port != BOTTOM_M:
            return None
        return CsxmResult(memory=memory, output=NULL, send_to=self.target)


def wrap_psystem_as_csxm(
    ps: PSystem,
    depth_cap: int,
    seed: int = 0,
    initial_configs: Sequence[PConfiguration] = (),
    branch_mode: str = "seeded",
    target_index: int = 2,
    name: str = "base",
) -> Csxm:
    """Wrap a P system as a communicating component.

    The memory sample holds every configuration on the seeded trajectory
    from the P system's own initial configuration and from each declared
    re-initialisation in ``initial_configs``; each trajectory must halt
    within ``depth_cap`` steps.  ``branch_mode="all"`` marks unresolved
    branching structurally (a duplicated run state reached by the same
    function) so downstream test generation rejects the machine instead of
    silently picking branches.
    """
    if branch_mode not in ("seeded", "all"):
        raise ValueError(f"unknown branch mode {branch_mode!r}")

    sample: list[Value] = []
    finals: list[Value] = []
    seen = set()
    starts = [tuple(ps.initial)] + [tuple(c) for c in initial_configs]
    for start in starts:
        final, _, visited = simulate_to_halt(ps, start, seed, depth_cap)
        for cfg in visited:
            key = config_canonical(cfg)
            if key not in seen:
                seen.add(key)
                sample.append(config_value(cfg))
        if config_value(final) not in finals:
            finals.append(config_value(final))
    sample.sort(key=sort_key)
    finals.sort(key=sort_key)

    functions: Dict[str, CsxmFunction] = {
        ADVANCE: AdvanceFunction(ps, seed),
        EMIT: EmitFunction(ps),
        LOAD: LoadFunction(ps),
        SEND: SendFunction(target_index),
    }
    states = {RUNNING, SENDING, WAITING}
    next_state: Dict[Tuple[str, str], Tuple[str, ...]] = {
        (RUNNING, ADVANCE): (RUNNING,),
        (RUNNING, EMIT): (SENDING,),
        (SENDING, SEND): (WAITING,),
        (WAITING, LOAD): (RUNNING,),
    }
    if branch_mode == "all":
        states.add(FORKING)
        next_state[(RUNNING, ADVANCE)] = (FORKING, RUNNING)
        next_state[(FORKING, ADVANCE)] = (FORKING, RUNNING)
        next_state[(FORKING, EMIT)] = (SENDING,)

    return Csxm(
        name=name,
        inputs=frozenset(BASE_INPUTS),
        outputs=frozenset({"ran", "put", "got"}),
        states=frozenset(states),
        initial_states=frozenset({RUNNING}),
        terminal_states=frozenset(states),
        memory_domain=MemoryDomain(kind="open", sample=tuple(sample)),
        initial_memory=config_value(tuple(ps.initial)),
        functions=functions,
        next_state=next_state,
        in_port_domain=tuple(sorted({config_value(tuple(c)) for c in initial_configs}, key=sort_key)),
        out_port_domain=tuple(finals),
        ordinary_states=frozenset(states - {SENDING}),
        communicating_states=frozenset({SENDING}),
        ordinary_functions=frozenset({ADVANCE, EMIT, LOAD}),
        communicating_functions=frozenset({SEND}),
    )


@dataclass(frozen=True)
class HeteroticSystem:
    base: Csxm
    control: Csxm
    psystem: PSystem
    seed: int
    depth_cap: int
    as_system: CsxmSystem


def build_heterotic_system(
    base: Csxm,
    control: Csxm,
    ps: PSystem,
    seed: int = 0,
    depth_cap: int = 32,
    name: str = "heterotic",
) -> HeteroticSystem:
    """Pair a wrapped Base with a Control component and validate the port
    wiring: whatever Base emits must be readable by Control, and whatever
    Control emits must be a valid Base configuration it can accept."""
    control_in = set(map(sort_key, control.in_port_domain))
    for v in base.out_port_domain:
        if sort_key(v) not in control_in:
            raise PortIncompatibility(
                f"base emits a configuration outside {control.name}'s in-port domain"
            )
    base_in = set(map(sort_key, base.in_port_domain))
    for v in control.out_port_domain:
        if not is_config_for(ps, v):
            raise PortIncompatibility(
                f"{control.name} emits a value that is not a configuration of {ps.name}"
            )
        if sort_key(v) not in base_in:
            raise PortIncompatibility(
                f"{control.name} emits a configuration outside {base.name}'s in-port domain"
            )
    system = CsxmSystem(name=name, components=(base, control))
    return HeteroticSystem(base, control, ps, seed, depth_cap, system)


# --- the round driver --------------------------------------------------------


@dataclass(frozen=True)
class Exchange:
    round: int
    direction: str  # "base_to_control" | "control_to_base"
    configuration: Tuple[str, ...]  # canonical multiset strings
    steps: Optional[int] = None  # base-phase step count, base_to_control only


@dataclass(frozen=True)
class HeteroticTrace:
    system: str
    seed: int
    rounds_requested: int
    exchanges: Tuple[Exchange, ...]

    @property
    def rounds_completed(self) -> int:
        return sum(1 for e in self.exchanges if e.direction == "base_to_control")


@dataclass(frozen=True)
class OracleBinding:
    """External-executor contract: initial configuration in, final
    configuration (plus optional step count) out."""

    run: Callable[[PConfiguration], Tuple[PConfiguration, Optional[int]]]
    timeout_ms: Optional[int] = None
    retries: int = 0


def simulator_oracle(ps: PSystem, seed: int, depth_cap: int) -> OracleBinding:
    """The built-in simulator packaged behind the oracle contract."""

    def run(initial: PConfiguration):
        final, steps, _ = simulate_to_halt(ps, initial, seed, depth_cap)
        return final, steps

    return OracleBinding(run=run)


def subprocess_oracle(
    command: Sequence[str], ps: PSystem, timeout_ms: int = 10_000, retries: int = 0
) -> OracleBinding:
    """Child-process oracle: one JSON request line on stdin, one JSON
    response line on stdout, one process invocation per request."""

    def run(initial: PConfiguration):
        request = json.dumps(
            {"initial": {str(i + 1): m.canonical() for i, m in enumerate(initial)}},
            sort_keys=True,
        )
        attempts = retries + 1
        last_error = None
        for _ in range(attempts):
            try:
                proc = subprocess.run(
                    list(command),
                    input=request + "\n",
                    capture_output=True,
                    text=True,
                    timeout=timeout_ms / 1000.0,
                )
            except subprocess.TimeoutExpired as exc:
                last_error = exc
                continue
            try:
                reply = json.loads(proc.stdout.strip().splitlines()[-1])
                final_map = reply["final"]
                final = tuple(
                    Multiset.from_string(final_map[str(i + 1)])
                    for i in range(ps.n_compartments)
                )
                return final, reply.get("steps")
            except (KeyError, IndexError, ValueError, json.JSONDecodeError) as exc:
                raise OracleInvalidResult(f"malformed oracle reply: {exc}") from exc
        raise OracleTimeout(f"oracle timed out after {attempts} attempt(s)") from last_error

    return OracleBinding(run=run, timeout_ms=timeout_ms, retries=retries)


def _invoke_oracle(h: HeteroticSystem, oracle: OracleBinding, cfg: PConfiguration):
    final, steps = oracle.run(cfg)
    final = tuple(final)
    if not is_config_for(h.psystem, final):
        raise OracleInvalidResult(
            "oracle returned a configuration outside the declared alphabet/structure"
        )
    if not is_halting(h.psystem, final):
        raise OracleInvalidResult("oracle returned a non-halting configuration")
    return final, steps


def run_heterotic(
    h: HeteroticSystem, rounds: int, oracle: Optional[OracleBinding] = None
) -> HeteroticTrace:
    """Drive the system for up to ``rounds`` Base phases.

    Moves are chosen communicating-first, then ordinary in (component,
    function, symbol) order, skipping stutters; that realises the intended
    alternation (Base runs to halt, emits, sends; Control inspects and
    replies) without hard-coding either machine.  With an oracle bound the
    Base stepping function is bypassed and the oracle's final configuration
    is injected in its place.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    sys = h.as_system
    core = initial_system_core(sys)
    exchanges: list[Exchange] = []
    steps_this_phase = 0
    b2c = 0
    micro_cap = (h.depth_cap + 8) * (rounds + 1) * (len(sys.components) + 2) * 4

    def edge_key(edge):
        label, successor = edge
        return label, tuple(
            (sort_key(m), q, sort_key(p_in), sort_key(p_out))
            for (m, q, p_in, p_out) in successor
        )

    for _ in range(micro_cap):
        edges = sorted(system_core_successors(sys, core), key=edge_key)
        chosen = None
        for label, succ in edges:
            i, fname, _ = label
            comp = sys.components[i - 1]
            if fname in comp.communicating_functions:
                chosen = (label, succ)
                break
        if chosen is None:
            for label, succ in edges:
                if succ != core:
                    chosen = (label, succ)
                    break
        if chosen is None:
            break

        (i, fname, _), succ = chosen
        comp = sys.components[i - 1]

        if fname in comp.communicating_functions:
            value = core[i - 1][3]
            if i == 1:
                b2c += 1
                exchanges.append(
                    Exchange(b2c, "base_to_control", config_canonical(tuple(value)), steps_this_phase)
                )
                steps_this_phase = 0
            else:
                if b2c >= rounds:
                    break
                exchanges.append(
                    Exchange(b2c, "control_to_base", config_canonical(tuple(value)), None)
                )
            core = succ
            continue

        if i == 1 and fname == ADVANCE:
            if oracle is not None:
                final, steps = _invoke_oracle(h, oracle, tuple(core[0][0]))
                _, state, in_port, out_port = core[0]
                core = ((config_value(final), state, in_port, out_port),) + core[1:]
                steps_this_phase = steps
                continue
            steps_this_phase += 1
            if steps_this_phase > h.depth_cap:
                raise DepthCapExceeded(
                    f"base exceeded {h.depth_cap} steps without halting"
                )
        core = succ
    else:
        raise DeadlockError("driver exceeded its micro-step budget (livelock?)")

    if not exchanges:
        raise DeadlockError("no configuration was ever exchanged")
    for idx, ex in enumerate(exchanges):
        expected = "base_to_control" if idx % 2 == 0 else "control_to_base"
        assert ex.direction == expected, "exchanges must alternate starting base->control"
    return HeteroticTrace(
        system=sys.name,
        seed=h.seed,
        rounds_requested=rounds,
        exchanges=tuple(exchanges),
    )


def generate_integration_tests(h: HeteroticSystem, k: int, branch_bound: int = 256) -> TestSuite:
    """W-method integration suite for the Base/Control pair."""
    suite = generate_csxms_test_suite(h.as_system, k, branch_bound)
    metadata = dict(suite.metadata)
    metadata["roles"] = {"base": h.base.name, "control": h.control.name}
    metadata["seed"] = h.seed
    metadata["depth_cap"] = h.depth_cap
    return TestSuite(suite.cases, metadata)
