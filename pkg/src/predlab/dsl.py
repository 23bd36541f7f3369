"""Generator and predictor descriptors with a prefix-free bit serialization.

The serialized length of a descriptor is the complexity currency of the
package.  Each constructor costs a fixed tag, so wrapping a descriptor in
``Diag`` or ``Replay`` adds exactly 2 or 3 bits.

Tags (frozen, this is the on-disk format)::

    generator  00 Prog   01 Repeat   10 Prefix   11 Diag
    predictor  000 Const 001 CopyLast 010 Replay 011 VMPred
               100 Consist 101 Meta  110 Speed  111 LZ78
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import NamedTuple, Union

from .bits import BitString, DecodeError, check_bits, decode_len_str, decode_nat, encode_len_str, encode_nat
from .vm import TRACES, Program, Status


class ParseError(DecodeError):
    pass


# -- generators ---------------------------------------------------------------

@dataclass(frozen=True)
class Prog:
    code: BitString

    def __post_init__(self):
        check_bits(self.code)

    @property
    def program(self) -> Program:
        return Program(self.code)


@dataclass(frozen=True)
class Repeat:
    x: BitString

    def __post_init__(self):
        check_bits(self.x)
        if not self.x:
            raise ValueError("Repeat needs a non-empty payload")


@dataclass(frozen=True)
class Prefix:
    x: BitString
    g: "Generator"

    def __post_init__(self):
        check_bits(self.x)


@dataclass(frozen=True)
class Diag:
    p: "Predictor"


Generator = Union[Prog, Repeat, Prefix, Diag]


# -- predictors ---------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    b: int

    def __post_init__(self):
        if self.b not in (0, 1):
            raise ValueError("Const takes a bit")


@dataclass(frozen=True)
class CopyLast:
    pass


@dataclass(frozen=True)
class Replay:
    g: Generator


@dataclass(frozen=True)
class VMPred:
    code: BitString

    def __post_init__(self):
        check_bits(self.code)

    @property
    def program(self) -> Program:
        return Program(self.code)


@dataclass(frozen=True)
class Consist:
    n: int
    h: int

    def __post_init__(self):
        if self.n < 8 or self.h < 0:
            raise ValueError("Consist needs n >= 8 and h >= 0")


@dataclass(frozen=True)
class Meta:
    n: int
    fuel: int

    def __post_init__(self):
        if self.n < 4 or self.fuel < 1:
            raise ValueError("Meta needs n >= 4 and fuel >= 1")


@dataclass(frozen=True)
class Speed:
    pass


@dataclass(frozen=True)
class LZ78:
    pass


Predictor = Union[Const, CopyLast, Replay, VMPred, Consist, Meta, Speed, LZ78]

GENERATOR_TYPES = (Prog, Repeat, Prefix, Diag)
PREDICTOR_TYPES = (Const, CopyLast, Replay, VMPred, Consist, Meta, Speed, LZ78)


# -- serialization ------------------------------------------------------------

def serialize_gen(g: Generator) -> BitString:
    match g:
        case Prog(code):
            return "00" + encode_len_str(code)
        case Repeat(x):
            return "01" + encode_len_str(x)
        case Prefix(x, inner):
            return "10" + encode_len_str(x) + serialize_gen(inner)
        case Diag(p):
            return "11" + serialize_pred(p)
    raise TypeError(f"not a generator descriptor: {g!r}")


def serialize_pred(p: Predictor) -> BitString:
    match p:
        case Const(b):
            return "000" + str(b)
        case CopyLast():
            return "001"
        case Replay(g):
            return "010" + serialize_gen(g)
        case VMPred(code):
            return "011" + encode_len_str(code)
        case Consist(n, h):
            return "100" + encode_nat(n + 1) + encode_nat(h + 1)
        case Meta(n, fuel):
            return "101" + encode_nat(n + 1) + encode_nat(fuel + 1)
        case Speed():
            return "110"
        case LZ78():
            return "111"
    raise TypeError(f"not a predictor descriptor: {p!r}")


def serialize(d) -> BitString:
    return serialize_gen(d) if isinstance(d, GENERATOR_TYPES) else serialize_pred(d)


def code_len(d) -> int:
    return len(serialize(d))


def _take(bits: BitString, n: int) -> tuple[BitString, BitString]:
    if len(bits) < n:
        raise ParseError("descriptor truncated")
    return bits[:n], bits[n:]


def _nat(bits):
    try:
        return decode_nat(bits)
    except DecodeError as e:
        raise ParseError(str(e)) from None


def _lstr(bits):
    try:
        return decode_len_str(bits)
    except DecodeError as e:
        raise ParseError(str(e)) from None


def parse_gen(bits: BitString) -> tuple[Generator, BitString]:
    tag, rest = _take(bits, 2)
    try:
        if tag == "00":
            code, rest = _lstr(rest)
            return Prog(code), rest
        if tag == "01":
            x, rest = _lstr(rest)
            return Repeat(x), rest
        if tag == "10":
            x, rest = _lstr(rest)
            inner, rest = parse_gen(rest)
            return Prefix(x, inner), rest
        p, rest = parse_pred(rest)
        return Diag(p), rest
    except ValueError as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(str(e)) from None


def parse_pred(bits: BitString) -> tuple[Predictor, BitString]:
    tag, rest = _take(bits, 3)
    try:
        if tag == "000":
            b, rest = _take(rest, 1)
            return Const(int(b)), rest
        if tag == "001":
            return CopyLast(), rest
        if tag == "010":
            g, rest = parse_gen(rest)
            return Replay(g), rest
        if tag == "011":
            code, rest = _lstr(rest)
            return VMPred(code), rest
        if tag in ("100", "101"):
            a, rest = _nat(rest)
            b, rest = _nat(rest)
            cls = Consist if tag == "100" else Meta
            return cls(a - 1, b - 1), rest
        if tag == "110":
            return Speed(), rest
        return LZ78(), rest
    except ValueError as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(str(e)) from None


def contains(d, kinds) -> bool:
    """Whether the descriptor tree has a node of one of the given types."""
    if isinstance(d, kinds):
        return True
    match d:
        case Prefix(_, g) | Replay(g):
            return contains(g, kinds)
        case Diag(p):
            return contains(p, kinds)
    return False


# -- s-expressions ------------------------------------------------------------

def _bits_token(x: BitString) -> str:
    return x if x else '""'


def to_sexpr(d) -> str:
    match d:
        case Prog(code):
            return f"(prog {_bits_token(code)})"
        case Repeat(x):
            return f"(repeat {x})"
        case Prefix(x, g):
            return f"(prefix {_bits_token(x)} {to_sexpr(g)})"
        case Diag(p):
            return f"(diag {to_sexpr(p)})"
        case Const(b):
            return f"(const {b})"
        case CopyLast():
            return "(copylast)"
        case Replay(g):
            return f"(replay {to_sexpr(g)})"
        case VMPred(code):
            return f"(vmpred {_bits_token(code)})"
        case Consist(n, h):
            return f"(consist {n} {h})"
        case Meta(n, fuel):
            return f"(meta {n} {fuel})"
        case Speed():
            return "(speed)"
        case LZ78():
            return "(lz78)"
    raise TypeError(f"not a descriptor: {d!r}")


def _tokens(text: str) -> list[str]:
    return re.findall(r'\(|\)|""|[^\s()]+', text)


def _read(tokens: list[str], pos: int):
    if pos >= len(tokens) or tokens[pos] != "(":
        raise ParseError("expected '('")
    if pos + 1 >= len(tokens):
        raise ParseError("unexpected end of s-expression")
    head = tokens[pos + 1].lower()
    pos += 2
    args = []
    while pos < len(tokens) and tokens[pos] != ")":
        if tokens[pos] == "(":
            sub, pos = _read(tokens, pos)
            args.append(sub)
        else:
            args.append("" if tokens[pos] == '""' else tokens[pos])
            pos += 1
    if pos >= len(tokens):
        raise ParseError("unbalanced s-expression")
    ctors = {
        "prog": Prog, "repeat": Repeat, "prefix": Prefix, "diag": Diag,
        "const": lambda b: Const(int(b)), "copylast": CopyLast, "replay": Replay,
        "vmpred": VMPred, "consist": lambda n, h: Consist(int(n), int(h)),
        "meta": lambda n, f: Meta(int(n), int(f)), "speed": Speed, "lz78": LZ78,
    }
    if head not in ctors:
        raise ParseError(f"unknown constructor {head!r}")
    try:
        return ctors[head](*args), pos + 1
    except (TypeError, ValueError) as e:
        raise ParseError(f"bad arguments for {head}: {e}") from None


def parse_sexpr(text: str):
    tokens = _tokens(text)
    d, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise ParseError("trailing tokens after s-expression")
    return d


def parse_descriptor(text: str, kind: str):
    """Accept either raw descriptor bits or the s-expression form."""
    text = text.strip()
    if text.startswith("("):
        d = parse_sexpr(text)
        want = GENERATOR_TYPES if kind == "generator" else PREDICTOR_TYPES
        if not isinstance(d, want):
            raise ParseError(f"expected a {kind} descriptor")
        return d
    try:
        check_bits(text)
    except ValueError as e:
        raise ParseError(str(e)) from None
    d, rest = (parse_gen if kind == "generator" else parse_pred)(text)
    if rest:
        raise ParseError(f"{len(rest)} trailing bits after descriptor")
    return d


# -- generator semantics --------------------------------------------------------

class GenStatus(str, enum.Enum):
    COMPLETE = "complete"
    FINITE = "finite"          # the generator stopped producing output
    TRUNCATED = "truncated"    # fuel ran out before k symbols
    DEFAULTED = "defaulted"    # complete, but a diagonal step hit its budget

    def __str__(self) -> str:
        return self.value


class GenResult(NamedTuple):
    bits: BitString
    status: GenStatus


class _DiagRun:
    __slots__ = ("bits", "first_default")

    def __init__(self):
        self.bits: list[str] = []
        self.first_default: int | None = None


_DIAG_RUNS: dict[tuple, _DiagRun] = {}


def clear_caches():
    _DIAG_RUNS.clear()


def _worse(a: GenStatus, b: GenStatus) -> GenStatus:
    order = [GenStatus.COMPLETE, GenStatus.DEFAULTED, GenStatus.FINITE, GenStatus.TRUNCATED]
    return max(a, b, key=order.index)


def eval_gen(g: Generator, k: int, fuel: int) -> GenResult:
    """The first ``k`` symbols of the sequence described by ``g``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    match g:
        case Prog(code):
            res = TRACES.run(Program(code), "", fuel, k)
            if len(res.output) == k:
                return GenResult(res.output, GenStatus.COMPLETE)
            status = GenStatus.TRUNCATED if res.status is Status.FUEL else GenStatus.FINITE
            return GenResult(res.output, status)
        case Repeat(x):
            reps = -(-k // len(x))
            return GenResult((x * reps)[:k], GenStatus.COMPLETE)
        case Prefix(x, inner):
            if k <= len(x):
                return GenResult(x[:k], GenStatus.COMPLETE)
            tail = eval_gen(inner, k - len(x), fuel)
            return GenResult(x + tail.bits, tail.status)
        case Diag(p):
            return _eval_diag(p, k, fuel)
    raise TypeError(f"not a generator descriptor: {g!r}")


def _eval_diag(p: Predictor, k: int, fuel: int) -> GenResult:
    from .predictors import attempt

    run = _DIAG_RUNS.setdefault((p, fuel), _DiagRun())
    while len(run.bits) < k:
        prefix = "".join(run.bits)
        b = attempt(p, prefix, fuel)
        if b is None:
            # predictions must be total here; a budget miss counts as 0
            b = 0
            if run.first_default is None:
                run.first_default = len(run.bits)
        run.bits.append("1" if b == 0 else "0")
    bits = "".join(run.bits[:k])
    defaulted = run.first_default is not None and run.first_default < k
    return GenResult(bits, GenStatus.DEFAULTED if defaulted else GenStatus.COMPLETE)
