"""A desk-scale laboratory for computable sequence prediction.

A toy monotone machine, enumeration of its programs, a small description
language of generators and predictors, diagonal adversaries, and bounded
complexity estimators.
"""

__version__ = "0.1.0"

from .bits import decode_nat, encode_len_str, encode_nat, encode_predictor_input
from .vm import Instruction, Program, RunResult, Status, TimeProfile, VMState, run, run_incremental, step, time_profile
from .enumeration import DovetailPool, canonical_programs, descriptor_space, dovetail_round, lex_index, lex_string
from .dsl import (
    LZ78, Consist, Const, CopyLast, Diag, Meta, Prefix, Prog, Repeat, Replay, Speed, VMPred,
    eval_gen, parse_descriptor, parse_gen, parse_pred, serialize_gen, serialize_pred, to_sexpr,
)
from .predictors import BudgetExceeded, LearnVerdict, compute_h, errors, learns, predict
from .adversary import DefeatReport, diag_sequence, verify_defeat
from .complexity import (
    ComplexityEstimate, build_catalog, find_incompressible, kdot_hat, khat_dl, khat_halting, khat_monotone,
)
