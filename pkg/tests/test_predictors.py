import itertools
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from conftest import ref_run
from predlab import predictors
from predlab.dsl import (
    CopyLast, Consist, Const, Diag, LZ78, Meta, Prefix, Prog, Repeat, Replay, Speed, VMPred,
    eval_gen, serialize_pred,
)
from predlab.enumeration import DovetailPool, canonical_programs, dovetail_round, strings_up_to
from predlab.predictors import (
    BudgetExceeded, attempt, compute_h, errors, learns, meta_candidates, meta_choice, predict,
)
from predlab.vm import Program, run

FUEL = 10_000
V16 = 82  # canonical programs of <= 16 bits emitting 32 symbols within 10^4 steps


# -- independent oracles ----------------------------------------------------------

def consist_oracle(n, h, x, fuel):
    """Literal dovetailing with a real pool, one step per program per round."""
    k = len(x)
    if h == 0:
        return 0
    pool = DovetailPool.of(list(canonical_programs(n // 8)), quantum=1, max_out=k + 1)
    for _ in range(fuel):
        pool, _ = dovetail_round(pool)
        outs = pool.outputs()
        done = [o for o in outs if len(o) > k]
        if len(done) >= h:
            for o in outs:
                if len(o) > k and o.startswith(x):
                    return int(o[k])
            return 0
    return None


def speed_oracle(x, fuel):
    k = len(x)
    budget = min(2 ** (k + 1), fuel)
    for p in canonical_programs(min(k, 16) // 8):
        out = run(p, "", budget, k + 1).output
        if len(out) > k and out.startswith(x):
            return int(out[k])
    return 1


def lz78_oracle(x):
    phrases, counts, w = {""}, Counter(), ""
    for b in x:
        w += b
        counts[w] += 1
        if w not in phrases:
            phrases.add(w)
            w = ""
    return 1 if counts[w + "1"] > counts[w + "0"] else 0


def meta_oracle(n, fuel, x):
    """Candidate validity tested on every string of length <= |x|."""
    k = len(x)
    best, best_d = None, None
    for c in meta_candidates(n):
        if any(attempt(c, y, fuel) is None for y in strings_up_to(k)):
            continue
        d = sum(predict(c, x[:i], fuel) != int(x[i]) for i in range(1, k))
        if best is None or d < best_d:
            best, best_d = c, d
    return 0 if best is None else predict(best, x, fuel)


# -- simple predictors ---------------------------------------------------------------

def test_const_and_copylast():
    assert predict(Const(0), "1101", FUEL) == 0
    assert predict(Const(1), "", FUEL) == 1
    assert predict(CopyLast(), "", FUEL) == 0
    assert predict(CopyLast(), "0001", FUEL) == 1


def test_replay_examples():
    assert predict(Replay(Repeat("10")), "10", FUEL) == 1
    assert predict(Replay(Repeat("10")), "11", FUEL) == 0        # disagreement -> 0
    assert predict(Replay(Prog("0010000011100000")), "1", FUEL) == 0  # finite -> 0


def test_vmpred():
    assert predict(VMPred("00100000"), "0110", FUEL) == 1
    assert predict(VMPred("01000000"), "0", FUEL) == 0           # never emits
    assert attempt(VMPred("01000000"), "0", FUEL) is None
    # copy the first input symbol: READ, OUTx depending on the tape
    assert predict(VMPred(""), "1", FUEL) == 0


@settings(max_examples=200, deadline=None)
@given(st.text("01", max_size=60))
def test_lz78_matches_phrase_oracle(x):
    assert predict(LZ78(), x, FUEL) == lz78_oracle(x)


def test_lz78_examples():
    assert predict(LZ78(), "", FUEL) == 0
    assert predict(LZ78(), "1", FUEL) == 1
    assert predict(LZ78(), "0" * 30, FUEL) == 0


# -- counting and the consistency predictor --------------------------------------------

def test_compute_h_one_instruction_by_reference_oracle():
    progs = {Program(format(w, "08b")).canonicalize() for w in range(256)}
    expected = sum(len(ref_run(p, "", FUEL, 32).output) >= 32 for p in progs)
    assert expected == 2
    assert compute_h(8, FUEL, 32) == expected


def test_compute_h_edges():
    assert compute_h(0, FUEL, 32) == 0
    assert compute_h(7, FUEL, 32) == 0


def test_compute_h_two_instructions_dual_route():
    expected = sum(len(ref_run(p, "", 150, 20).output) >= 20 for p in canonical_programs(2))
    assert compute_h(16, 150, 20) == expected


def test_compute_h_regression():
    assert compute_h(16, FUEL, 32) == V16


def test_compute_h_monotone():
    assert compute_h(16, 500, 40) <= compute_h(16, 500, 20) <= compute_h(16, 2000, 20)


def test_consist_example():
    assert predict(Consist(8, 2), "0", FUEL) == 0
    assert predict(Consist(8, 2), "1", FUEL) == 1
    assert predict(Consist(8, 2), "01", FUEL) == 0               # nothing consistent


def test_consist_budget_error():
    with pytest.raises(BudgetExceeded):
        predict(Consist(8, 3), "", FUEL)
    assert attempt(Consist(8, 3), "", FUEL) is None
    assert predict(Consist(8, 0), "1", FUEL) == 0


@pytest.mark.parametrize("x", ["", "0", "1", "10", "01", "110", "0101", "1001", "111111"])
def test_consist_matches_pool_oracle_one_instruction(x):
    assert predict(Consist(8, 2), x, 400) == consist_oracle(8, 2, x, 400)


@pytest.mark.parametrize("h", [1, 10, 40, 60])
@pytest.mark.parametrize("x", ["", "1", "10", "0110", "11011"])
def test_consist_matches_pool_oracle_two_instructions(h, x):
    assert attempt(Consist(16, h), x, 300) == consist_oracle(16, h, x, 300)


# -- speed prior predictor ---------------------------------------------------------------

def test_speed_empty_set_predicts_one():
    assert predict(Speed(), "", FUEL) == 1
    assert predict(Speed(), "0110101", FUEL) == 1


@pytest.mark.parametrize("seed", range(6))
def test_speed_matches_direct_oracle(seed):
    rng = random.Random(seed)
    for g in (Repeat("10"), Repeat("0"), Prog("0010000001100000"), Repeat("110")):
        k = rng.randint(8, 24)
        x = eval_gen(g, k, FUEL).bits
        if rng.random() < 0.3:
            x = x[:-1] + ("1" if x[-1] == "0" else "0")
        assert predict(Speed(), x, FUEL) == speed_oracle(x, FUEL)


def test_speed_learns_alternating_program():
    v = learns(Speed(), Prog("0010000000000000"), 16, 48, FUEL)
    assert v.learned_at_horizon


# -- meta-predictor ----------------------------------------------------------------------

def test_meta_candidates_exclude_meta_and_diag():
    cands = meta_candidates(12)
    assert len(cands) == len(set(cands))
    assert all(len(serialize_pred(c)) <= 11 for c in cands)
    assert not any(isinstance(c, Meta) for c in cands)
    codes = [serialize_pred(c) for c in cands]
    assert codes == sorted(codes, key=lambda c: (len(c), c))


def test_meta_tie_break_is_code_order():
    # nothing observed: every candidate has zero errors, first in code order wins
    assert meta_choice(5, 100, "") == CopyLast()
    assert predict(Meta(5, 100), "", FUEL) == 0
    assert meta_choice(5, 100, "1") == CopyLast()
    assert meta_choice(5, 100, "10") == Const(0)


def test_meta_all_candidates_invalid(monkeypatch):
    predictors.clear_caches()
    monkeypatch.setattr(predictors, "meta_candidates", lambda n: (VMPred("01000000"),))
    assert predict(Meta(12, 50), "0101", FUEL) == 0
    assert meta_choice(12, 50, "0101") is None
    predictors.clear_caches()


@pytest.mark.parametrize("x", [""] + ["".join(t) for k in (1, 3, 5) for t in
                                      itertools.product("01", repeat=k)][::3])
def test_meta_matches_exhaustive_oracle(x):
    assert predict(Meta(12, 300), x, FUEL) == meta_oracle(12, 300, x)


def test_meta_follows_best_candidate():
    seq = eval_gen(Repeat("1"), 40, FUEL).bits
    v = errors(Meta(12, 1000), Repeat("1"), 40, FUEL)
    assert v.convergence_step <= 2
    assert predict(Meta(12, 1000), seq[:30], FUEL) == 1


# -- verdicts ----------------------------------------------------------------------------

def test_errors_example():
    v = errors(Const(0), Prefix("111", Repeat("0")), 64, FUEL)
    assert v.error_positions == (0, 1, 2)
    assert v.convergence_step == 3 and v.learned_at_horizon


def test_learns_examples():
    v = learns(Const(0), Repeat("0"), 0, 64, FUEL)
    assert v.learned_at_horizon and v.convergence_step == 0
    v = learns(Const(0), Diag(Const(0)), 8, 64, FUEL)
    assert not v.learned_at_horizon and v.n_errors == 64
    with pytest.raises(ValueError):
        learns(Const(0), Repeat("0"), 64, 64, FUEL)


@pytest.mark.parametrize("g", [Repeat("1101"), Prefix("000111", Repeat("01")),
                               Prog("0010000001100000"), Diag(LZ78()), Diag(CopyLast())])
def test_replay_never_errs(g):
    v = errors(Replay(g), g, 256, FUEL)
    assert v.error_positions == () and v.convergence_step == 0


def test_partial_verdict_on_finite_generator():
    v = errors(Const(1), Prog("0010000011100000"), 10, FUEL)
    assert v.partial and v.evaluated == 1 and not v.learned_at_horizon


def test_verdict_invariants():
    rng = random.Random(1)
    for _ in range(20):
        g = Repeat("".join(rng.choice("01") for _ in range(rng.randint(1, 5))))
        for p in (Const(0), CopyLast(), LZ78()):
            v = errors(p, g, 50, FUEL, burn_in=20)
            if v.error_positions:
                assert v.convergence_step == 1 + max(v.error_positions)
            assert v.learned_at_horizon == (not v.error_positions or max(v.error_positions) < 20)


def test_prediction_purity():
    x = "0110101110"
    for p in (Consist(16, 40), Speed(), Meta(12, 500), LZ78()):
        first = predict(p, x, FUEL)
        predictors.clear_caches()
        assert predict(p, x, FUEL) == first
