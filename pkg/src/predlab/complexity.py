"""Upper-bound estimators for sequence and predictor complexity.

Everything here is a bounded search: an estimate is the shortest witness
found under explicit caps, together with whether the capped space was
searched to the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .bits import BitString
from .dsl import (
    Consist, Diag, Generator, Meta, Predictor, code_len, contains, eval_gen,
    serialize, serialize_pred, to_sexpr,
)
from .enumeration import canonical_programs_upto_bits, descriptor_space, lex_string
from .predictors import BudgetExceeded, learns
from .vm import TRACES, Program, Status, TimeProfile

EXHAUSTED = "exhausted"
TRUNCATED = "truncated"
INCOMPRESSIBLE_CAP = 24


@dataclass(frozen=True)
class ComplexityEstimate:
    measure: str
    target: str
    value_bits: int | None      # None: no witness within the caps
    witness: str | None         # program code or descriptor bits
    search_cap: dict
    status: str
    searched: int

    @property
    def found(self) -> bool:
        return self.value_bits is not None

    def record(self) -> dict:
        return {
            "measure": self.measure,
            "target": self.target,
            "value_bits": self.value_bits,
            "witness": self.witness,
            "status": self.status,
            "searched": self.searched,
            **{f"cap_{k}": v for k, v in self.search_cap.items()},
        }


def _programs(max_len: int) -> tuple[Program, ...]:
    return canonical_programs_upto_bits(max_len, include_empty=True)


def _halts_with(p: Program, x: BitString, fuel: int) -> bool:
    res = TRACES.run(p, "", fuel, len(x) + 1)
    return res.status in (Status.HALTED, Status.EMPTY) and res.output == x


def _emits_prefix(p: Program, x: BitString, fuel: int) -> bool:
    return TRACES.run(p, "", fuel, len(x)).output == x


def _program_search(measure, test, x, max_len, fuel) -> ComplexityEstimate:
    if max_len < 0:
        raise ValueError("max_len must be non-negative")
    cap = {"max_len": max_len, "fuel": fuel}
    for i, p in enumerate(_programs(max_len)):
        if test(p, x, fuel):
            return ComplexityEstimate(measure, x, len(p), p.code, cap, EXHAUSTED, i + 1)
    n = len(_programs(max_len))
    return ComplexityEstimate(measure, x, None, None, cap, TRUNCATED, n)


def khat_halting(x: BitString, max_len: int, fuel: int) -> ComplexityEstimate:
    """Shortest canonical program that halts after writing exactly x."""
    return _program_search("khat_halting", _halts_with, x, max_len, fuel)


def khat_monotone(x: BitString, max_len: int, fuel: int) -> ComplexityEstimate:
    """Shortest canonical program whose output starts with x."""
    return _program_search("khat_monotone", _emits_prefix, x, max_len, fuel)


def khat_dl(x: BitString, max_bits: int, fuel: int) -> ComplexityEstimate:
    """Shortest generator descriptor whose sequence starts with x."""
    cap = {"max_bits": max_bits, "fuel": fuel}
    searched = 0
    for g in descriptor_space("generator", max_bits):
        searched += 1
        if eval_gen(g, len(x), fuel).bits == x:
            return ComplexityEstimate("khat_dl", x, code_len(g), serialize(g), cap,
                                      EXHAUSTED, searched)
    return ComplexityEstimate("khat_dl", x, None, None, cap, TRUNCATED, searched)


def in_universe(p: Predictor, universe: str) -> bool:
    if universe == "all":
        return True
    if universe == "restricted":
        return not contains(p, (Meta, Diag))
    raise ValueError(f"unknown universe {universe!r}")


def kdot_hat(g: Generator, max_bits: int, burn_in: int, horizon: int, fuel: int,
             universe: str = "all") -> ComplexityEstimate:
    """Shortest predictor descriptor that has stopped erring by ``burn_in``."""
    cap = {"max_bits": max_bits, "fuel": fuel, "horizon": horizon,
           "burn_in": burn_in, "universe": universe}
    searched = 0
    for p in descriptor_space("predictor", max_bits):
        if not in_universe(p, universe):
            continue
        searched += 1
        if learns(p, g, burn_in, horizon, fuel).learned_at_horizon:
            return ComplexityEstimate("kdot_hat", to_sexpr(g), code_len(p),
                                      serialize_pred(p), cap, EXHAUSTED, searched)
    return ComplexityEstimate("kdot_hat", to_sexpr(g), None, None, cap, TRUNCATED, searched)


def halting_outputs(max_len: int, fuel: int, max_out: int) -> set[BitString]:
    """Outputs of every canonical program of <= max_len bits that halts
    having written fewer than max_out symbols."""
    found = set()
    for p in _programs(max_len):
        res = TRACES.run(p, "", fuel, max_out)
        if res.status in (Status.HALTED, Status.EMPTY):
            found.add(res.output)
    return found


def find_incompressible(length: int, fuel: int, cap: int = INCOMPRESSIBLE_CAP) -> BitString:
    """First string of the given length (length-lex order) that no halting
    program shorter than it writes."""
    if length > cap:
        raise BudgetExceeded(f"length {length} exceeds the incompressibility cap {cap}")
    if length < 1:
        raise ValueError("length must be positive")
    producible = halting_outputs(length - 1, fuel, length + 1)
    for i in range(2**length - 1, 2 ** (length + 1) - 1):
        x = lex_string(i)
        if x not in producible:
            return x
    raise BudgetExceeded(f"every string of length {length} has a shorter halting program")


@dataclass(frozen=True)
class CatalogEntry:
    program: Program
    prefix: BitString
    profile: TimeProfile

    @property
    def k_hat(self) -> int:
        return len(self.program)

    def fast(self, threshold: int = 4) -> bool:
        """t(k) < 2^k for every k > threshold within the recorded profile."""
        return all(t < 2**k for k, t in enumerate(self.profile.per_symbol_steps, start=1)
                   if k > threshold)

    def record(self) -> dict:
        return {
            "program": self.program.code,
            "k_hat": self.k_hat,
            "prefix": self.prefix,
            "max_step": self.profile.per_symbol_steps[-1],
        }


@dataclass(frozen=True)
class Catalog:
    entries: tuple[CatalogEntry, ...]
    h: int
    n_bits: int
    fuel: int
    horizon: int


def build_catalog(n_bits: int, fuel: int, horizon: int) -> Catalog:
    """Sequences of canonical programs <= n_bits that reach ``horizon`` symbols
    within fuel, one entry per distinct prefix (first program wins)."""
    if n_bits < 8:
        raise ValueError("n_bits must be at least 8")
    seen = set()
    entries = []
    h = 0
    for p in canonical_programs_upto_bits(n_bits):
        res, times = TRACES.run_with_times(p, "", fuel, horizon)
        if len(res.output) < horizon:
            continue
        h += 1
        if res.output in seen:
            continue
        seen.add(res.output)
        entries.append(CatalogEntry(p, res.output, TimeProfile(tuple(times))))
    return Catalog(tuple(entries), h, n_bits, fuel, horizon)


def consist_slack(n: int, h: int) -> float:
    """Code length of Consist(n, h) above n + 2 log2 n."""
    return code_len(Consist(n, h)) - n - 2 * math.log2(n)
