import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import prog, ref_run
from predlab.enumeration import canonical_programs
from predlab.vm import (
    JZ, Instruction, Program, Status, TraceCache, VMState, decode_instruction, run,
    run_incremental, step, time_profile, trace,
)

INPUTS = ["", "0", "1", "10", "0110", "111000"]


def test_decode_instruction():
    assert decode_instruction(Program("00100000"), 0) == Instruction(1, 0)
    ins = decode_instruction(Program("10100011"), 0)
    assert (ins.name, ins.operand) == ("JZ", 3)
    assert decode_instruction(Program("11100000"), 0).name == "HALT"
    with pytest.raises(ValueError):
        decode_instruction(Program("11100000"), 1)


def test_program_shape():
    p = Program("0010000011100000101")
    assert p.n_instr == 2 and not p.canonical
    assert Program("10111111").canonical
    assert not Program("00100001").canonical
    assert Program("00100001").canonicalize() == Program("00100000")


def test_step_examples():
    s = step(VMState.initial(Program("00100000")), Program("00100000"))
    assert (s.output, s.ip) == ("1", 0)
    p = Program("10100000")
    s = step(VMState.initial(p), p)
    assert s.ip == 0 and s.output == "" and not s.terminal
    p = Program("11000000")
    assert step(VMState.initial(p), p).status is Status.INPUT


def test_run_examples():
    r = run(prog("OUT1", "OUT0"), "", 6, 6)
    assert r.output == "101010" and r.status in (Status.FUEL, Status.OUTPUT_LIMIT)
    r = run(prog("OUT1", "HALT"), "", 100)
    assert (r.status, r.output, r.steps_used) == (Status.HALTED, "1", 2)
    assert run(Program(""), "", 100) == run(Program("0010"), "", 5)
    assert run(Program("")).status is Status.EMPTY


def test_kernel_matches_reference_exhaustively():
    """Compiled kernel vs. single-step semantics on every program of <= 2 instructions."""
    for p in canonical_programs(2):
        for inp in ("", "0110"):
            for max_out in (3, 50):
                assert run(p, inp, 40, max_out) == ref_run(p, inp, 40, max_out), p.code


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 255), min_size=1, max_size=6), st.sampled_from(INPUTS),
       st.integers(0, 300), st.integers(0, 40))
def test_kernel_matches_reference_random(words, inp, fuel, max_out):
    p = Program("".join(format(w, "08b") for w in words))
    assert run(p, inp, fuel, max_out) == ref_run(p, inp, fuel, max_out)


def test_tape_growth_both_directions():
    walker = prog("FLIP", "LEFT", "OUT1")
    assert run(walker, "", 3000) == ref_run(walker, "", 3000)
    walker = prog("FLIP", "RIGHT", ("JZ", 1), "OUT0")
    assert run(walker, "", 3000) == ref_run(walker, "", 3000)


def test_determinism():
    rng = random.Random(7)
    for _ in range(50):
        p = Program("".join(rng.choice("01") for _ in range(8 * rng.randint(1, 4))))
        assert run(p, "0101", 500, 100) == run(p, "0101", 500, 100)


def test_monotone_output_in_fuel():
    rng = random.Random(3)
    for _ in range(100):
        p = Program("".join(rng.choice("01") for _ in range(8 * rng.randint(1, 4))))
        outs = [run(p, "", f).output for f in (0, 5, 17, 60, 200)]
        for a, b in zip(outs, outs[1:]):
            assert b.startswith(a)


def test_canonicalization_sound_exhaustive_two_instructions():
    """Inert operand bits never matter: all 256^k raw programs vs their canonical form."""
    behaviour = {}
    for k in (1, 2):
        for words in itertools.product(range(256), repeat=k):
            p = Program("".join(format(w, "08b") for w in words))
            c = p.canonicalize()
            for inp in ("", "1"):
                key = (c.code, inp)
                got = run(p, inp, 30, 20)
                behaviour.setdefault(key, got)
                assert behaviour[key] == got


def test_canonicalization_sound_sampled_three_instructions():
    rng = random.Random(11)
    for _ in range(2000):
        p = Program("".join(format(rng.randrange(256), "08b") for _ in range(3)))
        for inp in ("", "10"):
            assert run(p, inp, 50, 30) == run(p.canonicalize(), inp, 50, 30)


def test_effective_length():
    rng = random.Random(5)
    for _ in range(500):
        length = rng.randint(0, 27)
        p = Program("".join(rng.choice("01") for _ in range(length)))
        q = Program(p.code[: 8 * (length // 8)])
        assert run(p, "1", 40, 20) == run(q, "1", 40, 20)


def test_incremental_equals_single_run():
    rng = random.Random(13)
    for _ in range(100):
        p = Program("".join(rng.choice("01") for _ in range(8 * rng.randint(1, 3))))
        s = VMState.initial(p, "0110")
        r1, s = run_incremental(s, p, 50)
        r2, s = run_incremental(s, p, 50)
        assert r2 == run(p, "0110", 100)


def test_incremental_replay_example():
    p = prog("OUT1", "OUT0")
    r, s = run_incremental(VMState.initial(p), p, 3)
    assert r.output == "101"
    r, s = run_incremental(s, p, 3)
    assert r.output == run(p, "", 6).output == "101010"


def test_incremental_terminal_is_absorbing():
    p = prog("OUT1", "HALT")
    r, s = run_incremental(VMState.initial(p), p, 10)
    assert r.status is Status.HALTED
    assert run_incremental(s, p, 10) == (r, s)


def test_incremental_rejects_foreign_snapshot():
    with pytest.raises(ValueError):
        run_incremental(VMState.initial(prog("OUT1")), prog("OUT0"), 5)


def test_time_profiles():
    assert time_profile(prog("OUT1", "OUT0"), 6, 100).per_symbol_steps == (1, 2, 3, 4, 5, 6)
    assert time_profile(prog("OUT1", "RIGHT"), 5, 100).per_symbol_steps == (1, 3, 5, 7, 9)
    assert time_profile(prog("OUT0", "OUT1"), 4, 100).per_symbol_steps == (1, 2, 3, 4)
    assert len(time_profile(prog("OUT1", "RIGHT"), 50, 10)) == 5


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 255), min_size=0, max_size=3),
       st.lists(st.tuples(st.integers(0, 400), st.integers(0, 60)), min_size=1, max_size=6))
def test_trace_cache_answers_match_direct_runs(words, queries):
    p = Program("".join(format(w, "08b") for w in words))
    cache = TraceCache()
    for fuel, max_out in queries:
        assert cache.run(p, "01", fuel, max_out) == run(p, "01", fuel, max_out)


def test_trace_resume_matches_fresh():
    p = prog("FLIP", "RIGHT", "OUT1", ("JZ", 2))
    cache = TraceCache()
    cache.run(p, "", 100, 5)
    res, times = cache.run_with_times(p, "", 5000, 300)
    fresh = trace(p, "", 5000, 300)
    assert (res.output, res.steps_used, times) == (fresh.output, fresh.steps, fresh.times)
