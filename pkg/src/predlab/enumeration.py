"""Length-lexicographic strings, canonical programs, dovetailing, descriptor spaces."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterator, NamedTuple

from .bits import BitString, encode_nat
from .vm import JZ, Instruction, Program, Status, VMState, run_incremental

# every canonical 8-bit word, in numeric order: 7 operand-free opcodes + 32 JZ variants
CANONICAL_WORDS: tuple[str, ...] = tuple(
    sorted(
        Instruction(op, arg).encode()
        for op in range(8)
        for arg in (range(32) if op == JZ else (0,))
    )
)


def lex_string(i: int) -> BitString:
    """The i-th string of the order λ < 0 < 1 < 00 < 01 < ..."""
    if i < 0:
        raise ValueError("lex index must be non-negative")
    # strings of length L occupy indices 2^L - 1 .. 2^(L+1) - 2
    return format(i + 1, "b")[1:]


def lex_index(x: BitString) -> int:
    return int("1" + x, 2) - 1


def strings_up_to(n: int) -> Iterator[BitString]:
    """All strings of length at most n, in length-lex order."""
    for i in range(2 ** (n + 1) - 1):
        yield lex_string(i)


def canonical_programs(max_instr: int) -> Iterator[Program]:
    """Every canonical program with 1..max_instr instructions, shortest first."""
    for k in range(1, max_instr + 1):
        for words in itertools.product(CANONICAL_WORDS, repeat=k):
            yield Program("".join(words))


@lru_cache(maxsize=None)
def canonical_programs_upto_bits(max_bits: int, include_empty: bool = False) -> tuple[Program, ...]:
    progs = tuple(canonical_programs(max_bits // 8))
    return ((Program(""),) if include_empty else ()) + progs


class PoolEntry(NamedTuple):
    program: Program
    state: VMState
    live: bool
    total_steps: int


class PoolEvent(NamedTuple):
    index: int
    new_bits: BitString
    status: Status


@dataclass(frozen=True)
class DovetailPool:
    entries: tuple[PoolEntry, ...]
    quantum: int
    round: int = 0
    max_out: int = 1 << 62

    @classmethod
    def of(cls, programs, quantum: int = 64, input: BitString = "",
           max_out: int = 1 << 62) -> DovetailPool:
        if quantum < 1:
            raise ValueError("quantum must be positive")
        entries = tuple(
            PoolEntry(p, VMState.initial(p, input), True, 0) for p in programs
        )
        return cls(entries, quantum, 0, max_out)

    def outputs(self) -> list[BitString]:
        return [e.state.output for e in self.entries]


def dovetail_round(pool: DovetailPool) -> tuple[DovetailPool, list[PoolEvent]]:
    """Give every live entry ``quantum`` more steps, in entry order."""
    entries = []
    events = []
    for idx, e in enumerate(pool.entries):
        if not e.live:
            entries.append(e)
            continue
        before = len(e.state.output)
        res, state = run_incremental(e.state, e.program, pool.quantum, pool.max_out)
        # output-cap entries have delivered all that was asked of them
        live = res.status is Status.FUEL
        entries.append(PoolEntry(e.program, state, live, state.steps))
        new_bits = state.output[before:]
        if new_bits or not live:
            events.append(PoolEvent(idx, new_bits, res.status))
    return replace(pool, entries=tuple(entries), round=pool.round + 1), events


# -- descriptor codes by exact length -----------------------------------------------
#
# Each helper yields code strings of one exact length in lexicographic order.
# Concatenations stay ordered because every leading component is drawn from a
# prefix-free code, so comparing two concatenations settles inside the first
# component whenever the first components differ.

_GEN_MIN = 3    # Prog(λ) = "00" + "1"
_PRED_MIN = 3   # CopyLast, Speed, LZ78
_CACHE_BITS = 18


def _bit_strings(m: int) -> Iterator[BitString]:
    if m == 0:
        yield ""
        return
    for v in range(2**m):
        yield format(v, f"0{m}b")


def _nat_codes(lmax: int, lo: int, exact: bool) -> Iterator[BitString]:
    """Codewords of n >= lo, in lexicographic order (more leading zeros first)."""
    z = 0
    while 2 * (z + 1) + 2 ** (z + 1) <= lmax:
        z += 1
    for zeros in range(z, -1, -1):
        for width in range(2**zeros, 2 ** (zeros + 1)):
            length = 2 * zeros + width
            if length > lmax:
                break
            if exact and length != lmax:
                continue
            head = "0" * zeros + format(width, "b")
            base = 1 << (width - 1)
            for low in range(max(0, lo - base), base):
                yield head + (format(low, f"0{width - 1}b") if width > 1 else "")


def _len_str_codes(lmax: int, exact: bool, min_payload: int = 0) -> Iterator[BitString]:
    sizes = [m for m in range(min_payload, lmax + 1) if len(encode_nat(m + 1)) + m <= lmax]
    if exact:
        sizes = [m for m in sizes if len(encode_nat(m + 1)) + m == lmax]
    for m in sorted(sizes, key=lambda m: encode_nat(m + 1)):
        head = encode_nat(m + 1)
        for x in _bit_strings(m):
            yield head + x


def _nat_pairs(length: int, lo_a: int, lo_b: int) -> Iterator[BitString]:
    for a in _nat_codes(length - 1, lo_a, exact=False):
        for b in _nat_codes(length - len(a), lo_b, exact=True):
            yield a + b


def _gen_codes(length: int) -> Iterator[BitString]:
    if length <= _CACHE_BITS:
        return iter(_cached_codes("generator", length))
    return _gen_codes_raw(length)


def _pred_codes(length: int) -> Iterator[BitString]:
    if length <= _CACHE_BITS:
        return iter(_cached_codes("predictor", length))
    return _pred_codes_raw(length)


def _gen_codes_raw(length: int) -> Iterator[BitString]:
    rest = length - 2
    if rest < 1:
        return
    for c in _len_str_codes(rest, exact=True):
        yield "00" + c
    for c in _len_str_codes(rest, exact=True, min_payload=1):
        yield "01" + c
    for x in _len_str_codes(rest - _GEN_MIN, exact=False):
        for g in _gen_codes(rest - len(x)):
            yield "10" + x + g
    for p in _pred_codes(rest):
        yield "11" + p


def _pred_codes_raw(length: int) -> Iterator[BitString]:
    if length == 4:
        yield "0000"
        yield "0001"
    if length == 3:
        yield "001"
    for g in _gen_codes(length - 3):
        yield "010" + g
    if length > 3:
        for c in _len_str_codes(length - 3, exact=True):
            yield "011" + c
        for c in _nat_pairs(length - 3, 9, 1):   # Consist: n >= 8, h >= 0
            yield "100" + c
        for c in _nat_pairs(length - 3, 5, 2):   # Meta: n >= 4, fuel >= 1
            yield "101" + c
    if length == 3:
        yield "110"
        yield "111"


@lru_cache(maxsize=None)
def _cached_codes(kind: str, length: int) -> tuple[BitString, ...]:
    raw = _gen_codes_raw if kind == "generator" else _pred_codes_raw
    return tuple(raw(length))


def descriptor_space(kind: str, max_bits: int) -> Iterator:
    """Every well-formed descriptor of at most ``max_bits`` bits, shortest first
    and in code order within a length.  Lazy, so searches may stop early."""
    from . import dsl

    if kind not in ("generator", "predictor"):
        raise ValueError(f"unknown descriptor kind {kind!r}")
    if max_bits < 1:
        raise ValueError("max_bits must be at least 1")
    codes, parse = {
        "generator": (_gen_codes, dsl.parse_gen),
        "predictor": (_pred_codes, dsl.parse_pred),
    }[kind]
    return _walk(codes, parse, max_bits)


def _walk(codes, parse, max_bits: int) -> Iterator:
    for length in range(1, max_bits + 1):
        for code in codes(length):
            yield parse(code)[0]
