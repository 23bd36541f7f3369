"""
A tour of the toy monotone machine
==================================

Programs are strings of 8-bit instructions.  Output is append-only, so a
longer run can only extend what a shorter run wrote.
"""

from predlab.enumeration import DovetailPool, canonical_programs, dovetail_round
from predlab.vm import Program, run, run_incremental, time_profile, VMState

# OUT1, OUT0 and wrap around: the alternating sequence, one symbol per step
alt = Program.from_instructions(["OUT1", "OUT0"])
print(alt.disassemble())
print(run(alt, "", fuel=12))

# OUT1, HALT: the shortest program that halts having written "1"
print(run(Program.from_instructions(["OUT1", "HALT"]), "", fuel=100))

# a loop that walks right forever and never writes anything
print(run(Program.from_instructions(["RIGHT"]), "", fuel=1000))

# runs can be split and resumed; the result is the same as one long run
state = VMState.initial(alt)
first, state = run_incremental(state, alt, 3)
second, state = run_incremental(state, alt, 3)
print(first.output, "->", second.output)

# emission times: OUT1, RIGHT spends two steps per symbol
slow = Program.from_instructions(["OUT1", "RIGHT"])
print(time_profile(slow, 8, 1000).per_symbol_steps)

# operand bits of non-jump instructions are inert, so only 39 of the 256
# single-instruction words behave differently
print(len(list(canonical_programs(1))), "canonical 1-instruction programs")
print(len(list(canonical_programs(2))), "canonical programs of at most 2 instructions")

# dovetailing: every program gets the same slice of steps each round
pool = DovetailPool.of(list(canonical_programs(1)), quantum=4)
for _ in range(3):
    pool, events = dovetail_round(pool)
writers = [(pool.entries[e.index].program.disassemble(), e.new_bits) for e in events if e.new_bits]
print("round", pool.round, "writers:", writers)
