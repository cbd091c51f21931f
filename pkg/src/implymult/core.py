"""Serial IMPLY machine: one row of binary memristors, one instruction per step.

Register values are stored as Python ints used as bit masks over *lanes*.  With
``lanes=1`` every register is a plain 0/1 logic level (0 = HRS, 1 = LRS).  With
``lanes=k`` the machine behaves like ``k`` independent rows that receive the same
instruction stream, which is how exhaustive verification and faithful image
convolution stay fast without changing the semantics of a single row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

FALSE = "FALSE"
IMPLY = "IMPLY"


class ImplyError(ValueError):
    """Raised for malformed instructions, programs or machine accesses."""


@dataclass(frozen=True)
class Instruction:
    """A single computational step.

    ``FALSE t`` resets ``t`` to logic 0.  ``IMPLY p q`` stores ``(not p) or q``
    in ``q`` and leaves ``p`` untouched.
    """

    op: str
    target: str
    cond: str | None = None

    def __post_init__(self):
        if self.op not in (FALSE, IMPLY):
            raise ImplyError(f"unknown mnemonic {self.op!r}")
        if self.op == IMPLY:
            if self.cond is None:
                raise ImplyError("IMPLY needs a condition register")
            if self.cond == self.target:
                raise ImplyError(f"IMPLY {self.cond} {self.target}: condition and target must differ")
        elif self.cond is not None:
            raise ImplyError("FALSE takes a single register")

    @property
    def registers(self) -> tuple[str, ...]:
        return (self.target,) if self.cond is None else (self.cond, self.target)

    def rename(self, mapping: Mapping[str, str]) -> "Instruction":
        cond = None if self.cond is None else mapping[self.cond]
        return Instruction(self.op, mapping[self.target], cond)

    def __str__(self):
        if self.op == FALSE:
            return f"FALSE {self.target}"
        return f"IMPLY {self.cond} {self.target}"


def false(target: str) -> Instruction:
    return Instruction(FALSE, target)


def imply(cond: str, target: str) -> Instruction:
    return Instruction(IMPLY, target, cond)


@dataclass(frozen=True)
class Program:
    """An instruction list plus its register bindings.

    :param inputs: input name -> register holding that operand before step 1
    :param outputs: output name -> register holding the result after the last step
    :param work: scratch registers (every one is FALSE'd before it is read)
    """

    name: str
    instructions: tuple[Instruction, ...]
    inputs: Mapping[str, str]
    outputs: Mapping[str, str]
    work: tuple[str, ...]
    constants: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "work", tuple(self.work))
        object.__setattr__(self, "inputs", dict(self.inputs))
        object.__setattr__(self, "outputs", dict(self.outputs))
        object.__setattr__(self, "constants", dict(self.constants))
        known = set(self.registers)
        for step, instr in enumerate(self.instructions, 1):
            for reg in instr.registers:
                if reg not in known:
                    raise ImplyError(f"{self.name}: step {step} ({instr}) uses unbound register {reg!r}")
        for out, reg in self.outputs.items():
            if reg not in known:
                raise ImplyError(f"{self.name}: output {out!r} bound to unknown register {reg!r}")
        for name in self.constants:
            if name not in self.inputs:
                raise ImplyError(f"{self.name}: constant {name!r} is not an input")

    @property
    def steps(self) -> int:
        return len(self.instructions)

    @property
    def input_registers(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.inputs.values()))

    @property
    def registers(self) -> tuple[str, ...]:
        """All registers of the row, inputs first, in declaration order."""
        return tuple(dict.fromkeys([*self.inputs.values(), *self.work]))

    @property
    def free_inputs(self) -> tuple[str, ...]:
        """Input names the caller must supply (constant-tied inputs excluded)."""
        return tuple(name for name in self.inputs if name not in self.constants)

    def written_registers(self) -> set[str]:
        return {instr.target for instr in self.instructions}

    def warnings(self) -> list[str]:
        """Reads of registers that were never loaded, written or FALSE'd."""
        ready = set(self.input_registers)
        out = []
        for step, instr in enumerate(self.instructions, 1):
            if instr.op == IMPLY:
                for reg in instr.registers:
                    if reg not in ready:
                        out.append(f"step {step}: {instr} reads {reg} before it is initialised")
            ready.add(instr.target)
        return out


@dataclass(frozen=True)
class TraceEntry:
    step: int
    instruction: Instruction
    snapshot: Mapping[str, int]


@dataclass
class Trace:
    entries: list[TraceEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


class Machine:
    """One crossbar row of named binary registers.

    :param registers: register names; all start at 0
    :param lanes: number of independent rows simulated in parallel
    :param trace: record a full snapshot after every step
    """

    def __init__(self, registers: Iterable[str], lanes: int = 1, trace: bool = False):
        if lanes < 1:
            raise ImplyError("lanes must be positive")
        self.names = list(dict.fromkeys(registers))
        self.index = {name: i for i, name in enumerate(self.names)}
        self.lanes = lanes
        self.mask = (1 << lanes) - 1
        self.trace_enabled = trace
        self.reset()

    def reset(self):
        self.state = [0] * len(self.names)
        self.step_count = 0
        self.trace = Trace() if self.trace_enabled else None

    def _slot(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise ImplyError(f"unknown register {name!r}") from None

    def load(self, name: str, value: int):
        """Write an operand without consuming a step."""
        if value < 0 or value > self.mask:
            raise ImplyError(f"value {value} does not fit {self.lanes} lane(s)")
        self.state[self._slot(name)] = value

    def read(self, name: str) -> int:
        return self.state[self._slot(name)]

    def snapshot(self) -> dict[str, int]:
        return dict(zip(self.names, self.state))

    def apply(self, instr: Instruction) -> "Machine":
        t = self._slot(instr.target)
        if instr.op == FALSE:
            self.state[t] = 0
        else:
            p = self._slot(instr.cond)
            self.state[t] = (~self.state[p] & self.mask) | self.state[t]
        self.step_count += 1
        if self.trace is not None:
            self.trace.entries.append(TraceEntry(self.step_count, instr, self.snapshot()))
        return self

    def execute(self, instructions: Sequence[Instruction]):
        if self.trace is not None:
            for instr in instructions:
                self.apply(instr)
            return
        ops = _compile(instructions, self.index)
        _run_compiled(ops, self.state, self.mask)
        self.step_count += len(ops)


def _compile(instructions: Sequence[Instruction], index: Mapping[str, int]) -> list[tuple[int, int]]:
    """Lower to (cond_slot, target_slot) pairs; FALSE has cond_slot -1."""
    ops = []
    for instr in instructions:
        try:
            t = index[instr.target]
            p = -1 if instr.cond is None else index[instr.cond]
        except KeyError as exc:
            raise ImplyError(f"unknown register {exc.args[0]!r} in {instr}") from None
        ops.append((p, t))
    return ops


def _run_compiled(ops, state, mask):
    for p, t in ops:
        if p < 0:
            state[t] = 0
        else:
            state[t] = (~state[p] & mask) | state[t]


@dataclass
class RunResult:
    outputs: dict[str, int]
    steps: int
    trace: Trace | None = None


def apply_instruction(machine: Machine, instr: Instruction) -> Machine:
    return machine.apply(instr)


def run_program(program: Program, inputs: Mapping[str, int], trace: bool = False,
                lanes: int = 1) -> RunResult:
    """Load operands, execute every instruction in order and read the outputs.

    Constant-tied inputs of ``program`` are loaded automatically (all lanes set).
    """
    missing = [name for name in program.free_inputs if name not in inputs]
    if missing:
        raise ImplyError(f"{program.name}: missing input(s) {', '.join(missing)}")
    unknown = [name for name in inputs if name not in program.inputs]
    if unknown:
        raise ImplyError(f"{program.name}: unknown input(s) {', '.join(unknown)}")
    machine = Machine(program.registers, lanes=lanes, trace=trace)
    full = machine.mask
    for name, reg in program.inputs.items():
        if name in program.constants:
            machine.load(reg, full if program.constants[name] else 0)
        else:
            machine.load(reg, inputs[name])
    machine.execute(program.instructions)
    outputs = {name: machine.read(reg) for name, reg in program.outputs.items()}
    return RunResult(outputs, machine.step_count, machine.trace)


# -- text formats -------------------------------------------------------------

def _fmt_binding(mapping: Mapping[str, str]) -> str:
    return " ".join(name if name == reg else f"{name}={reg}" for name, reg in mapping.items())


def _parse_binding(text: str) -> dict[str, str]:
    out = {}
    for tok in text.split():
        name, _, reg = tok.partition("=")
        out[name] = reg or name
    return out


def dump_program(program: Program, comments: Sequence[str] = ()) -> str:
    """Serialise ``program`` to the microcode text format."""
    lines = [f"program: {program.name}"]
    lines += [f"# {c}" if c else "#" for c in comments]
    lines.append(f"inputs: {_fmt_binding(program.inputs)}")
    if program.constants:
        lines.append("constants: " + " ".join(f"{k}={v}" for k, v in program.constants.items()))
    lines.append(f"outputs: {_fmt_binding(program.outputs)}")
    lines.append(f"work: {' '.join(program.work)}")
    lines += [str(instr) for instr in program.instructions]
    return "\n".join(lines) + "\n"


def parse_program(text: str, name: str = "program") -> Program:
    """Inverse of :func:`dump_program`; mnemonics are case-insensitive."""
    header: dict[str, str] = {}
    instructions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if sep and key.strip().lower() in ("program", "inputs", "outputs", "work", "constants"):
            header[key.strip().lower()] = rest.strip()
            continue
        parts = line.split()
        op = parts[0].upper()
        if op == FALSE and len(parts) == 2:
            instructions.append(false(parts[1]))
        elif op == IMPLY and len(parts) == 3:
            instructions.append(imply(parts[1], parts[2]))
        else:
            raise ImplyError(f"line {lineno}: cannot parse {raw!r}")
    constants = {k: int(v) for k, v in _parse_binding(header.get("constants", "")).items()}
    return Program(
        name=header.get("program", name),
        instructions=tuple(instructions),
        inputs=_parse_binding(header.get("inputs", "")),
        outputs=_parse_binding(header.get("outputs", "")),
        work=tuple(header.get("work", "").split()),
        constants=constants,
    )


def dump_trace(trace: Trace | None) -> str:
    """One line per step: ``<step> <mnemonic> <args> | <reg>=<bit> ...``."""
    if not trace:
        return ""
    lines = []
    for entry in trace:
        regs = " ".join(f"{k}={entry.snapshot[k]}" for k in sorted(entry.snapshot))
        lines.append(f"{entry.step} {entry.instruction} | {regs}")
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    trace = Trace()
    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        head, _, regs = raw.partition("|")
        parts = head.split()
        step, op = int(parts[0]), parts[1].upper()
        instr = false(parts[2]) if op == FALSE else imply(parts[2], parts[3])
        snapshot = {k: int(v) for k, v in (tok.split("=") for tok in regs.split())}
        trace.entries.append(TraceEntry(step, instr, snapshot))
    return trace


def replay_trace(trace: Trace, initial: Mapping[str, int]) -> dict[str, int]:
    """Re-execute the instructions of ``trace`` from ``initial`` and check each snapshot."""
    machine = Machine(initial.keys())
    for name, value in initial.items():
        machine.load(name, value)
    for entry in trace:
        machine.apply(entry.instruction)
        if machine.step_count != entry.step or machine.snapshot() != dict(entry.snapshot):
            raise ImplyError(f"trace diverges at step {entry.step}")
    return machine.snapshot()
