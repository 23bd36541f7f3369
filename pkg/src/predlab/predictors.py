"""Prediction semantics for every predictor descriptor, and learning verdicts.

``attempt`` returns ``None`` when a predictor fails to produce a bit within
its budget; ``predict`` totalizes that to 0, except for ``Consist``, whose
budget failure is an error in its own right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .bits import BitString, encode_predictor_input
from .dsl import (
    Consist, Const, CopyLast, Diag, GenStatus, Generator, LZ78, Meta, Predictor,
    Replay, Speed, VMPred, contains, eval_gen, serialize_pred, to_sexpr,
)
from .enumeration import canonical_programs_upto_bits, descriptor_space, lex_string
from .vm import TRACES, Program, Status

# Speed considers programs of at most min(k, SPEED_MAX_BITS) bits on inputs of length k.
SPEED_MAX_BITS = 16
# steps per dovetailing round inside Consist
CONSIST_QUANTUM = 1
# Meta checks VMPred candidates on every input up to this length, and on the
# observed prefixes beyond it
META_EXHAUSTIVE_LEN = 8


class BudgetExceeded(RuntimeError):
    """Consist could not find h productive programs within its fuel."""


# -- program tables shared by Consist and Speed ----------------------------------

class ProgramTable:
    """Outputs and emission times of every canonical program up to ``max_bits``,
    run on empty input with a fixed fuel.  Grown lazily in output length."""

    def __init__(self, max_bits: int, fuel: int):
        self.programs = canonical_programs_upto_bits(max_bits)
        self.fuel = fuel
        self.limit = 0
        self.outputs: list[BitString] = [""] * len(self.programs)
        self.times: list[list[int]] = [[] for _ in self.programs]
        self._open: list[int] = list(range(len(self.programs)))

    def ensure(self, symbols: int) -> None:
        if symbols <= self.limit:
            return
        limit = max(symbols, 2 * self.limit, 64)
        still_open = []
        for i in self._open:
            res, times = TRACES.run_with_times(self.programs[i], "", self.fuel, limit)
            self.outputs[i] = res.output
            self.times[i] = times
            if res.status is Status.OUTPUT_LIMIT:
                still_open.append(i)
        self._open = still_open
        self.limit = limit

    def count_upto_bits(self, bits: int) -> int:
        k = bits // 8
        return sum(39**j for j in range(1, k + 1))


_TABLES: dict[tuple[int, int], ProgramTable] = {}


def program_table(max_bits: int, fuel: int) -> ProgramTable:
    key = (max_bits, fuel)
    if key not in _TABLES:
        _TABLES[key] = ProgramTable(max_bits, fuel)
    return _TABLES[key]


def clear_caches():
    from . import dsl

    _TABLES.clear()
    _META.clear()
    _VM_EXHAUSTIVE.clear()
    dsl.clear_caches()
    TRACES.clear()


# -- individual predictors ----------------------------------------------------------

def _consist(n: int, h: int, x: BitString, fuel: int) -> int | None:
    """Dovetail all programs of <= n bits until h of them have produced |x|+1
    symbols, then follow the first (in program order) that agrees with x."""
    k = len(x)
    if h == 0:
        return 0
    table = program_table(n, fuel)
    table.ensure(k + 1)
    rounds = [
        -(-t[k] // CONSIST_QUANTUM) if len(t) > k else None for t in table.times
    ]
    finished = sorted(r for r in rounds if r is not None)
    if len(finished) < h:
        return None
    stop = finished[h - 1]
    for i, r in enumerate(rounds):
        if r is not None and r <= stop and table.outputs[i].startswith(x):
            return int(table.outputs[i][k])
    return 0


def _speed(x: BitString, fuel: int) -> int:
    """Run every program of <= |x| bits for 2^(|x|+1) steps; follow the first
    whose output extends x, else predict 1."""
    k = len(x)
    bits = min(k, SPEED_MAX_BITS)
    if bits < 8:
        return 1
    budget = min(2 ** (k + 1), fuel)
    table = program_table(SPEED_MAX_BITS, fuel)
    table.ensure(k + 1)
    for i in range(table.count_upto_bits(bits)):
        t = table.times[i]
        if len(t) > k and t[k] <= budget and table.outputs[i].startswith(x):
            return int(table.outputs[i][k])
    return 1


def _lz78(x: BitString) -> int:
    """Feder-style incremental-parsing predictor.

    The observed string is parsed into LZ78 phrases; the unfinished phrase at
    the end selects a node of the phrase tree and the more often traversed
    child is predicted.
    """
    children: list[dict[str, int]] = [{}]
    visits: list[int] = [0]
    node = 0
    for b in x:
        nxt = children[node].get(b)
        if nxt is None:
            children.append({})
            visits.append(1)
            children[node][b] = len(children) - 1
            node = 0
        else:
            visits[nxt] += 1
            node = nxt
    c0 = visits[children[node]["0"]] if "0" in children[node] else 0
    c1 = visits[children[node]["1"]] if "1" in children[node] else 0
    return 1 if c1 > c0 else 0


def _replay(g: Generator, x: BitString, fuel: int) -> int | None:
    k = len(x)
    res = eval_gen(g, k + 1, fuel)
    if res.status is GenStatus.TRUNCATED:
        return None
    if len(res.bits) < k + 1 or not res.bits.startswith(x):
        return 0
    return int(res.bits[k])


def _vmpred(code: BitString, x: BitString, fuel: int) -> int | None:
    res = TRACES.run(Program(code), encode_predictor_input(x), fuel, 1)
    return int(res.output) if res.output else None


# -- meta-predictor -------------------------------------------------------------------

@lru_cache(maxsize=None)
def meta_candidates(n: int) -> tuple[Predictor, ...]:
    """Predictors shorter than n bits, in code order, without Meta or Diag inside."""
    if n < 2:
        return ()
    return tuple(
        p for p in descriptor_space("predictor", n - 1) if not contains(p, (Meta, Diag))
    )


@dataclass
class CandidateState:
    """Meta's bookkeeping after observing a prefix of length k."""

    errors: tuple[int, ...]            # d^k: mistakes on x_2..x_k
    valid: tuple[bool, ...]            # still producing bits on all of B^{<=k}
    predictions: tuple[int | None, ...]  # each valid candidate's prediction on x


_META: dict[tuple[int, int], dict[BitString, CandidateState]] = {}
_VM_EXHAUSTIVE: dict[tuple[BitString, int, int], bool] = {}


def _always_total(p: Predictor) -> bool:
    return isinstance(p, (Const, CopyLast, LZ78, Speed))


def _vm_total_on_length(code: BitString, length: int, fuel: int) -> bool:
    key = (code, length, fuel)
    if key not in _VM_EXHAUSTIVE:
        start = 2**length - 1
        _VM_EXHAUSTIVE[key] = all(
            _vmpred(code, lex_string(i), fuel) is not None for i in range(start, 2 * start + 1)
        )
    return _VM_EXHAUSTIVE[key]


def _still_valid(p: Predictor, x: BitString, fuel: int) -> bool:
    """Does p produce a bit on every input of length |x|?

    Replay and Consist outcomes depend only on the input length, so testing
    x settles the whole layer; VMPred is checked exhaustively up to
    META_EXHAUSTIVE_LEN and on x beyond it.
    """
    if _always_total(p):
        return True
    if isinstance(p, VMPred) and len(x) <= META_EXHAUSTIVE_LEN:
        return _vm_total_on_length(p.code, len(x), fuel)
    return attempt(p, x, fuel) is not None


def meta_state(n: int, fuel: int, x: BitString) -> CandidateState:
    memo = _META.setdefault((n, fuel), {})
    if x in memo:
        return memo[x]
    cands = meta_candidates(n)
    j = len(x)
    while j > 0 and x[:j] not in memo:
        j -= 1
    if x[:j] in memo:
        state = memo[x[:j]]
    else:
        valid = tuple(_still_valid(c, "", fuel) for c in cands)
        preds = tuple(attempt(c, "", fuel) if v else None for c, v in zip(cands, valid))
        state = CandidateState((0,) * len(cands), valid, preds)
        memo[""] = state
    for i in range(j, len(x)):
        prefix = x[: i + 1]
        nxt = x[i]
        errs = state.errors
        if i >= 1:
            errs = tuple(
                e + (v and str(p) != nxt) for e, v, p in zip(errs, state.valid, state.predictions)
            )
        valid = tuple(v and _still_valid(c, prefix, fuel) for c, v in zip(cands, state.valid))
        preds = tuple(attempt(c, prefix, fuel) if v else None for c, v in zip(cands, valid))
        state = CandidateState(errs, valid, preds)
        memo[prefix] = state
    return state


def _meta(n: int, fuel: int, x: BitString) -> int:
    state = meta_state(n, fuel, x)
    best = None
    for idx, ok in enumerate(state.valid):
        if ok and (best is None or state.errors[idx] < state.errors[best]):
            best = idx
    if best is None:
        return 0
    return state.predictions[best]


def meta_choice(n: int, fuel: int, x: BitString) -> Predictor | None:
    """The candidate Meta follows on x (for inspection)."""
    state = meta_state(n, fuel, x)
    cands = meta_candidates(n)
    live = [i for i, ok in enumerate(state.valid) if ok]
    if not live:
        return None
    return cands[min(live, key=lambda i: (state.errors[i], i))]


# -- dispatch -----------------------------------------------------------------------

def attempt(p: Predictor, x: BitString, fuel: int) -> int | None:
    match p:
        case Const(b):
            return b
        case CopyLast():
            return int(x[-1]) if x else 0
        case Replay(g):
            return _replay(g, x, fuel)
        case VMPred(code):
            return _vmpred(code, x, fuel)
        case Consist(n, h):
            return _consist(n, h, x, fuel)
        case Meta(n, f):
            return _meta(n, f, x)
        case Speed():
            return _speed(x, fuel)
        case LZ78():
            return _lz78(x)
    raise TypeError(f"not a predictor descriptor: {p!r}")


def predict(p: Predictor, x: BitString, fuel: int) -> int:
    b = attempt(p, x, fuel)
    if b is None:
        if isinstance(p, Consist):
            raise BudgetExceeded(
                f"fewer than {p.h} programs of <= {p.n} bits produced {len(x) + 1} symbols "
                f"within {fuel} steps"
            )
        return 0
    return b


# -- verdicts -------------------------------------------------------------------------

@dataclass(frozen=True)
class LearnVerdict:
    predictor: Predictor
    generator: Generator
    error_positions: tuple[int, ...]
    convergence_step: int
    horizon: int
    burn_in: int
    learned_at_horizon: bool
    evaluated: int
    partial: bool
    defaulted: int
    fuel: int
    speed_max_bits: int = SPEED_MAX_BITS

    @property
    def n_errors(self) -> int:
        return len(self.error_positions)

    def record(self) -> dict:
        return {
            "predictor": to_sexpr(self.predictor),
            "predictor_bits": serialize_pred(self.predictor),
            "generator": to_sexpr(self.generator),
            "errors": self.n_errors,
            "error_positions": list(self.error_positions),
            "convergence_step": self.convergence_step,
            "horizon": self.horizon,
            "burn_in": self.burn_in,
            "learned_at_horizon": self.learned_at_horizon,
            "evaluated": self.evaluated,
            "partial": self.partial,
            "defaulted": self.defaulted,
            "fuel": self.fuel,
            "speed_max_bits": self.speed_max_bits,
        }


def errors(p: Predictor, g: Generator, horizon: int, fuel: int,
           burn_in: int | None = None) -> LearnVerdict:
    """Where p mispredicts the first ``horizon`` symbols of g's sequence.

    Budget misses are scored with the totalized prediction 0 (the same rule
    the diagonal construction uses) and counted in ``defaulted``.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if burn_in is None:
        burn_in = horizon // 2
    seq, status = eval_gen(g, horizon, fuel)
    n_eval = min(horizon, len(seq))
    wrong = []
    defaulted = 0
    for n in range(n_eval):
        b = attempt(p, seq[:n], fuel)
        if b is None:
            b = 0
            defaulted += 1
        if str(b) != seq[n]:
            wrong.append(n)
    conv = wrong[-1] + 1 if wrong else 0
    return LearnVerdict(
        predictor=p, generator=g, error_positions=tuple(wrong), convergence_step=conv,
        horizon=horizon, burn_in=burn_in,
        learned_at_horizon=n_eval == horizon and conv <= burn_in,
        evaluated=n_eval, partial=n_eval < horizon, defaulted=defaulted, fuel=fuel,
    )


def learns(p: Predictor, g: Generator, burn_in: int, horizon: int, fuel: int) -> LearnVerdict:
    if not 0 <= burn_in < horizon:
        raise ValueError("need 0 <= burn_in < horizon")
    return errors(p, g, horizon, fuel, burn_in=burn_in)


def compute_h(n: int, fuel: int, probe: int) -> int:
    """Canonical programs of <= n bits that emit >= probe symbols within fuel."""
    return sum(
        len(TRACES.run(q, "", fuel, probe).output) >= probe
        for q in canonical_programs_upto_bits(n)
    )
