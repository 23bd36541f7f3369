"""
Bounded complexity estimates
============================

All numbers here are upper bounds found by exhaustive search under explicit
caps; "exhausted" means the capped space was searched to the end.
"""

from predlab.complexity import (
    build_catalog, consist_slack, find_incompressible, kdot_hat, khat_dl, khat_halting,
    khat_monotone,
)
from predlab.dsl import Consist, Prefix, Prog, Repeat, code_len

FUEL = 10_000

for x in ["1", "11", "1111", "10", "0110"]:
    h = khat_halting(x, 24, FUEL)
    m = khat_monotone(x, 24, FUEL)
    d = khat_dl(x, 12, FUEL)
    print(f"{x:<6} halting={h.value_bits} monotone={m.value_bits} dl={d.value_bits}"
          f" (dl witness {d.witness})")

# the strings with no shorter halting program are all zeros at this scale:
# programs of two instructions cannot halt after writing two symbols
for n in (8, 16, 24):
    print(n, find_incompressible(n, FUEL))

# predictor size does not care how long the prefix is
for n in (16, 24):
    y = find_incompressible(n, FUEL)
    print(n, kdot_hat(Prefix(y, Repeat("0")), 8, 24, 96, FUEL).record())

# catalog of sequences from programs of <= 16 bits
cat = build_catalog(16, 100_000, 65)
print("h =", cat.h, "distinct sequences =", len(cat.entries))
for e in cat.entries:
    print(" ", e.program.disassemble().replace("\n", "; "), e.prefix[:24], "fast" if e.fast() else "")
    print("   smallest learner:", kdot_hat(Prog(e.program.code), 12, 16, 64, 100_000).witness)

print("|CONSIST(16, h)| =", code_len(Consist(16, cat.h)), "bits, slack", consist_slack(16, cat.h))
