"""
Every predictor has a sequence it always gets wrong
===================================================

DIAG(p) builds the sequence whose next bit is the opposite of whatever p
predicts.  REPLAY(g) is the predictor that simply regenerates g.
"""

from predlab.adversary import diag_sequence, verify_defeat
from predlab.dsl import CopyLast, Consist, Const, Diag, LZ78, Meta, Replay, Speed, to_sexpr
from predlab.predictors import compute_h, errors

FUEL = 100_000
h16 = compute_h(16, 10_000, 32)
print("programs of <= 16 bits writing 32 symbols within 10^4 steps:", h16)

contenders = [Const(0), Const(1), CopyLast(), LZ78(), Speed(), Consist(16, h16), Meta(12, 1000)]
for p in contenders:
    r = verify_defeat(p, 256, FUEL)
    print(f"{to_sexpr(p):<22} wrong {r.n_errors}/256   |p| = {r.pred_code_bits:>2}"
          f"   |DIAG(p)| = {r.diag_code_bits:>2}")
    print("   ", diag_sequence(p, 48, FUEL))

# the replay of a diagonal sequence predicts it perfectly, from the first bit
for p in contenders[:5]:
    v = errors(Replay(Diag(p)), Diag(p), 256, FUEL)
    print(f"REPLAY(DIAG({to_sexpr(p)})) errors: {v.n_errors}")

# the diagonal against the consistency predictor is a very simple sequence:
# once no short program agrees with it, the predictor falls back to 0 forever
print(diag_sequence(Consist(16, h16), 64, FUEL))
