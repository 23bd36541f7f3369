"""A fixed-width toy monotone machine.

Programs are bit strings cut into 8-bit instructions: a 3-bit opcode
followed by a 5-bit operand that only ``JZ`` reads.  The machine has a
one-way input tape, an append-only output tape and a single work tape of
zeros.  Control wraps from the last instruction back to the first, which
is the only looping mechanism besides the backward ``JZ`` jump.

``run`` and ``run_incremental`` execute through a numba kernel;
``step`` is the slow reference semantics the kernel is tested against.
"""

from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple

import numba
import numpy as np

from .bits import BitString, check_bits

OPCODES = ("OUT0", "OUT1", "LEFT", "RIGHT", "FLIP", "JZ", "READ", "HALT")
OUT0, OUT1, LEFT, RIGHT, FLIP, JZ, READ, HALT = range(8)
WIDTH = 8


class Status(str, enum.Enum):
    HALTED = "Halted"
    FUEL = "FuelExhausted"
    OUTPUT_LIMIT = "OutputLimitReached"
    INPUT = "InputExhausted"
    EMPTY = "EmptyProgram"

    @property
    def terminal(self) -> bool:
        return self in (Status.HALTED, Status.INPUT, Status.EMPTY)

    def __str__(self) -> str:
        return self.value


class Instruction(NamedTuple):
    opcode: int
    operand: int = 0

    @property
    def name(self) -> str:
        return OPCODES[self.opcode]

    def encode(self) -> BitString:
        return format(self.opcode, "03b") + format(self.operand, "05b")


@dataclass(frozen=True)
class Program:
    code: BitString

    def __post_init__(self):
        check_bits(self.code)

    @classmethod
    def from_instructions(cls, instrs) -> Program:
        parts = []
        for ins in instrs:
            if isinstance(ins, str):
                ins = Instruction(OPCODES.index(ins))
            elif isinstance(ins, tuple) and isinstance(ins[0], str):
                ins = Instruction(OPCODES.index(ins[0]), *ins[1:])
            parts.append(Instruction(*ins).encode())
        return cls("".join(parts))

    @property
    def n_instr(self) -> int:
        return len(self.code) // WIDTH

    def __len__(self) -> int:
        return len(self.code)

    @cached_property
    def instructions(self) -> tuple[Instruction, ...]:
        return tuple(decode_instruction(self, i) for i in range(self.n_instr))

    @property
    def canonical(self) -> bool:
        if len(self.code) % WIDTH:
            return False
        return all(ins.opcode == JZ or ins.operand == 0 for ins in self.instructions)

    def canonicalize(self) -> Program:
        """Drop the inert tail and zero every operand that is never read."""
        return Program.from_instructions(
            Instruction(i.opcode, i.operand if i.opcode == JZ else 0)
            for i in self.instructions
        )

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        ops = np.array([i.opcode for i in self.instructions], dtype=np.int64)
        args = np.array([i.operand for i in self.instructions], dtype=np.int64)
        return ops, args

    def disassemble(self) -> str:
        return "\n".join(
            f"{idx} {ins.name} {ins.operand}" for idx, ins in enumerate(self.instructions)
        )

    def __str__(self) -> str:
        return self.code


def decode_instruction(p: Program, i: int) -> Instruction:
    if not 0 <= i < p.n_instr:
        raise ValueError(f"instruction index {i} out of range for {p.n_instr} instructions")
    word = p.code[WIDTH * i : WIDTH * (i + 1)]
    return Instruction(int(word[:3], 2), int(word[3:], 2))


@dataclass(frozen=True)
class VMState:
    """A machine configuration.  ``tape`` holds the cells that contain 1."""

    code: BitString
    input: BitString = ""
    ip: int = 0
    head: int = 0
    tape: frozenset = frozenset()
    cursor: int = 0
    output: BitString = ""
    steps: int = 0
    status: Status | None = None

    @classmethod
    def initial(cls, p: Program, input: BitString = "") -> VMState:
        check_bits(input)
        return cls(code=p.code, input=input)

    @property
    def terminal(self) -> bool:
        return self.status is not None and self.status.terminal


@dataclass(frozen=True)
class RunResult:
    status: Status
    output: BitString
    steps_used: int


@dataclass(frozen=True)
class TimeProfile:
    per_symbol_steps: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.per_symbol_steps)


def step(s: VMState, p: Program) -> VMState:
    """Execute one instruction (reference semantics)."""
    if s.code != p.code:
        raise ValueError("state does not belong to this program")
    if s.terminal:
        return s
    n = p.n_instr
    if n == 0:
        return replace(s, status=Status.EMPTY)
    op, arg = p.instructions[s.ip]
    nxt = (s.ip + 1) % n
    steps = s.steps + 1
    if op in (OUT0, OUT1):
        return replace(s, output=s.output + str(op), ip=nxt, steps=steps, status=None)
    if op == LEFT:
        return replace(s, head=s.head - 1, ip=nxt, steps=steps, status=None)
    if op == RIGHT:
        return replace(s, head=s.head + 1, ip=nxt, steps=steps, status=None)
    if op == FLIP:
        return replace(s, tape=s.tape ^ {s.head}, ip=nxt, steps=steps, status=None)
    if op == JZ:
        ip = (s.ip - (arg + 1)) % n if s.head not in s.tape else nxt
        return replace(s, ip=ip, steps=steps, status=None)
    if op == READ:
        if s.cursor >= len(s.input):
            return replace(s, steps=steps, status=Status.INPUT)
        bit = s.input[s.cursor]
        tape = s.tape | {s.head} if bit == "1" else s.tape - {s.head}
        return replace(s, tape=tape, cursor=s.cursor + 1, ip=nxt, steps=steps, status=None)
    return replace(s, steps=steps, status=Status.HALTED)


# kernel return codes
_GROW, _BUFFER, _HALTED, _FUEL, _OUTLIM, _INPUT = range(6)
_CODE_STATUS = {
    _HALTED: Status.HALTED,
    _FUEL: Status.FUEL,
    _OUTLIM: Status.OUTPUT_LIMIT,
    _INPUT: Status.INPUT,
}


@numba.njit(cache=True)
def _execute(ops, args, inp, cursor, tape, head, ip, steps, fuel_limit, out_limit,
             out, times, n_out):
    n = ops.shape[0]
    n_in = inp.shape[0]
    size = tape.shape[0]
    cap = out.shape[0]
    while True:
        if n_out >= out_limit:
            return 4, ip, head, cursor, steps, n_out
        if steps >= fuel_limit:
            return 3, ip, head, cursor, steps, n_out
        op = ops[ip]
        if op <= 1:
            if n_out >= cap:
                return 1, ip, head, cursor, steps, n_out
            out[n_out] = op
            times[n_out] = steps + 1
            n_out += 1
        elif op == 2:
            if head == 0:
                return 0, ip, head, cursor, steps, n_out
            head -= 1
        elif op == 3:
            if head == size - 1:
                return 0, ip, head, cursor, steps, n_out
            head += 1
        elif op == 4:
            tape[head] ^= 1
        elif op == 5:
            steps += 1
            if tape[head] == 0:
                ip = ip - args[ip] - 1
                while ip < 0:
                    ip += n
            else:
                ip += 1
                if ip == n:
                    ip = 0
            continue
        elif op == 6:
            steps += 1
            if cursor >= n_in:
                return 5, ip, head, cursor, steps, n_out
            tape[head] = inp[cursor]
            cursor += 1
            ip += 1
            if ip == n:
                ip = 0
            continue
        else:
            steps += 1
            return 2, ip, head, cursor, steps, n_out
        steps += 1
        ip += 1
        if ip == n:
            ip = 0


def _bits_array(x: BitString) -> np.ndarray:
    return np.frombuffer(x.encode("ascii"), dtype=np.uint8) - ord("0")


def _drive(p: Program, start: VMState, fuel_limit: int, out_limit: int):
    """Run the kernel from ``start`` until a stop condition; returns the new state
    together with the emission times of the symbols produced during this call."""
    ops, args = p._arrays
    inp = _bits_array(start.input)
    cells = start.tape
    lo = min(min(cells, default=0), start.head)
    hi = max(max(cells, default=0), start.head)
    size = max(64, 2 * (hi - lo + 1))
    origin = size // 4 - lo
    tape = np.zeros(size, dtype=np.uint8)
    for c in cells:
        tape[c + origin] = 1
    head = start.head + origin
    room = max(0, out_limit - len(start.output))
    buf = max(1, min(room, fuel_limit - start.steps, 1024))
    out = np.zeros(buf, dtype=np.uint8)
    times = np.zeros(buf, dtype=np.int64)
    ip, cursor, steps, n_out = start.ip, start.cursor, start.steps, 0
    base_out = len(start.output)
    while True:
        code, ip, head, cursor, steps, n_out = _execute(
            ops, args, inp, cursor, tape, head, ip, steps, fuel_limit,
            out_limit - base_out, out, times, n_out)
        if code == _GROW:
            grown = np.zeros(2 * tape.shape[0], dtype=np.uint8)
            shift = tape.shape[0] // 2
            grown[shift : shift + tape.shape[0]] = tape
            tape, head, origin = grown, head + shift, origin + shift
            continue
        if code == _BUFFER:
            out = np.concatenate([out, np.zeros_like(out)])
            times = np.concatenate([times, np.zeros_like(times)])
            continue
        break
    produced = "".join("1" if b else "0" for b in out[:n_out])
    cells = frozenset((np.flatnonzero(tape) - origin).tolist())
    state = VMState(
        code=start.code, input=start.input, ip=ip, head=head - origin, tape=cells,
        cursor=cursor, output=start.output + produced, steps=steps,
        status=_CODE_STATUS[code],
    )
    return state, times[:n_out].tolist()


def run(p: Program, input: BitString = "", fuel: int = 1000, max_out: int = 1 << 62) -> RunResult:
    if fuel < 0 or max_out < 0:
        raise ValueError("fuel and max_out must be non-negative")
    if p.n_instr == 0:
        return RunResult(Status.EMPTY, "", 0)
    state, _ = _drive(p, VMState.initial(p, input), fuel, max_out)
    return RunResult(state.status, state.output, state.steps)


def run_incremental(snapshot: VMState, p: Program, extra_fuel: int,
                    max_out: int = 1 << 62) -> tuple[RunResult, VMState]:
    """Continue ``snapshot`` for up to ``extra_fuel`` more steps.

    ``max_out`` caps the total output length, counted from the start of the run.
    """
    if snapshot.code != p.code:
        raise ValueError("snapshot was not produced by this program")
    if extra_fuel < 0:
        raise ValueError("extra_fuel must be non-negative")
    if p.n_instr == 0:
        state = replace(snapshot, status=Status.EMPTY)
        return RunResult(Status.EMPTY, "", 0), state
    if snapshot.terminal:
        return RunResult(snapshot.status, snapshot.output, snapshot.steps), snapshot
    state, _ = _drive(p, snapshot, snapshot.steps + extra_fuel, max_out)
    return RunResult(state.status, state.output, state.steps), state


@dataclass
class Trace:
    """Everything known about one run: its stop reason and emission times."""

    status: Status
    output: BitString
    steps: int
    times: list[int]
    fuel: int
    max_out: int
    state: VMState | None = None

    def query(self, fuel: int, max_out: int) -> tuple[RunResult, list[int]] | None:
        """The outcome of a run with other budgets, if this trace determines it."""
        if self.status is Status.EMPTY:
            return RunResult(Status.EMPTY, "", 0), []
        if max_out == 0:
            return RunResult(Status.OUTPUT_LIMIT, "", 0), []
        if max_out <= len(self.output) and self.times[max_out - 1] <= fuel:
            t = self.times[max_out - 1]
            return RunResult(Status.OUTPUT_LIMIT, self.output[:max_out], t), self.times[:max_out]
        if fuel < self.steps or (fuel == self.steps and not self.status.terminal):
            k = bisect_right(self.times, fuel)
            return RunResult(Status.FUEL, self.output[:k], fuel), self.times[:k]
        if self.status.terminal:
            return RunResult(self.status, self.output, self.steps), self.times
        return None


def trace(p: Program, input: BitString = "", fuel: int = 1000, max_out: int = 1 << 62) -> Trace:
    if p.n_instr == 0:
        return Trace(Status.EMPTY, "", 0, [], fuel, max_out)
    return resume(p, VMState.initial(p, input), [], fuel, max_out)


def resume(p: Program, state: VMState, times: list[int], fuel: int, max_out: int) -> Trace:
    """Continue a run whose emission times so far are ``times``."""
    if state.terminal:
        return Trace(state.status, state.output, state.steps, list(times), fuel, max_out, state)
    state, more = _drive(p, state, fuel, max_out)
    return Trace(state.status, state.output, state.steps, times + more, fuel, max_out, state)


class TraceCache:
    """In-memory memo of runs keyed by (program, input).

    One trace per key is kept, the most informative one seen.  An optional
    ``store`` (anything with ``get(key)``/``put(key, trace)``) is consulted on
    misses, which is how the on-disk execution cache plugs in.
    """

    def __init__(self, store=None):
        self._traces: dict[tuple[str, str], Trace] = {}
        self.store = store

    def clear(self):
        self._traces.clear()

    def lookup(self, p: Program, input: BitString, fuel: int, max_out: int):
        key = (p.code, input)
        known = self._traces.get(key)
        run_fuel, run_out = fuel, max_out
        if known is not None:
            hit = known.query(fuel, max_out)
            if hit is not None:
                return hit
            run_fuel, run_out = max(fuel, known.fuel), max(max_out, known.max_out)
        tr = None
        if self.store is not None:
            tr = self.store.get((p.code, input, run_fuel, run_out))
        if tr is None:
            if known is not None and known.state is not None:
                tr = resume(p, known.state, known.times, run_fuel, run_out)
            else:
                tr = trace(p, input, run_fuel, run_out)
            if self.store is not None:
                self.store.put((p.code, input, run_fuel, run_out), tr)
        self._traces[key] = tr
        return tr.query(fuel, max_out)

    def run(self, p: Program, input: BitString = "", fuel: int = 1000,
            max_out: int = 1 << 62) -> RunResult:
        return self.lookup(p, input, fuel, max_out)[0]

    def run_with_times(self, p, input="", fuel=1000, max_out=1 << 62):
        return self.lookup(p, input, fuel, max_out)


TRACES = TraceCache()


def time_profile(p: Program, k: int, fuel: int) -> TimeProfile:
    if k < 1:
        raise ValueError("k must be at least 1")
    _, times = TRACES.run_with_times(p, "", fuel, k)
    return TimeProfile(tuple(times))
