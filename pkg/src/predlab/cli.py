"""Command-line entry point: ``predlab <command> ...``."""

from __future__ import annotations

import argparse
import os
import sys

from .adversary import verify_defeat
from .bits import check_bits, from_hex
from .complexity import build_catalog, kdot_hat, khat_dl, khat_halting, khat_monotone
from .dsl import ParseError, eval_gen, parse_descriptor, serialize, to_sexpr
from .harness import ConfigError, ExecutionCache, ExperimentConfig, Report, run_experiment
from .predictors import BudgetExceeded, learns, predict
from .vm import Program, run

CACHE_ENV = "PREDLAB_CACHE_DIR"


def _bits(text: str) -> str:
    try:
        return check_bits(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _program(text: str) -> Program:
    """ASCII bits, or ``0x<hex>:<bit length>``."""
    if text.startswith("0x"):
        try:
            digits, length = text[2:].split(":")
            return Program(from_hex(digits, int(length)))
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"bad hex program {text!r}: {e}") from None
    return Program(_bits(text))


def _gen(text):
    try:
        return parse_descriptor(text, "generator")
    except ParseError as e:
        raise argparse.ArgumentTypeError(f"bad generator descriptor: {e}") from None


def _pred(text):
    try:
        return parse_descriptor(text, "predictor")
    except ParseError as e:
        raise argparse.ArgumentTypeError(f"bad predictor descriptor: {e}") from None


def _nonneg(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="predlab", description=__doc__)
    ap.add_argument("--format", choices=("text", "jsonl"), default="text")
    sub = ap.add_subparsers(dest="command", required=True)

    vm = sub.add_parser("vm").add_subparsers(dest="vm_command", required=True)
    p = vm.add_parser("run")
    p.add_argument("--program", type=_program, required=True)
    p.add_argument("--input", type=_bits, default="")
    p.add_argument("--fuel", type=_nonneg, required=True)
    p.add_argument("--max-out", type=_nonneg, required=True)
    p = vm.add_parser("disasm")
    p.add_argument("--program", type=_program, required=True)

    seq = sub.add_parser("seq").add_subparsers(dest="seq_command", required=True)
    p = seq.add_parser("eval")
    p.add_argument("--desc", type=_gen, required=True)
    p.add_argument("--len", type=_nonneg, required=True)
    p.add_argument("--fuel", type=_nonneg, required=True)

    p = sub.add_parser("predict")
    p.add_argument("--pred", type=_pred, required=True)
    p.add_argument("--obs", type=_bits, required=True)
    p.add_argument("--fuel", type=_nonneg, required=True)

    p = sub.add_parser("learns")
    p.add_argument("--pred", type=_pred, required=True)
    p.add_argument("--gen", type=_gen, required=True)
    p.add_argument("--burn-in", type=_nonneg, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--fuel", type=_nonneg, required=True)

    p = sub.add_parser("duel")
    p.add_argument("--pred", type=_pred, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--fuel", type=_nonneg, required=True)

    p = sub.add_parser("khat")
    p.add_argument("measure", choices=("halting", "monotone", "dl"))
    p.add_argument("--target", type=_bits, required=True)
    p.add_argument("--max-len", type=_nonneg, required=True)
    p.add_argument("--fuel", type=_nonneg, required=True)

    p = sub.add_parser("kdot")
    p.add_argument("--gen", type=_gen, required=True)
    p.add_argument("--max-bits", type=int, required=True)
    p.add_argument("--burn-in", type=_nonneg, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--fuel", type=_nonneg, required=True)
    p.add_argument("--universe", choices=("restricted", "all"), default="all")

    p = sub.add_parser("catalog")
    p.add_argument("--n-bits", type=int, required=True)
    p.add_argument("--fuel", type=_nonneg, required=True)
    p.add_argument("--horizon", type=_nonneg, required=True)

    exp = sub.add_parser("experiment").add_subparsers(dest="exp_command", required=True)
    p = exp.add_parser("run")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--output-dir", default=None)

    p = sub.add_parser("cache")
    p.add_argument("action", choices=("stats", "verify"))
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--sample", type=int, default=None)
    return ap


def _report(kind, args, rows, claims=()) -> Report:
    cfg = {k: (serialize(v) if hasattr(v, "__dataclass_fields__") and not isinstance(v, Program)
               else str(v) if isinstance(v, Program) else v)
           for k, v in sorted(vars(args).items()) if k != "format"}
    rep = Report(kind, cfg, {"rows": rows})
    for name, ok, extra in claims:
        rep.claim(name, ok, **extra)
    return rep


def _dispatch(args) -> Report:
    cmd = args.command
    if cmd == "vm":
        prog = args.program
        if args.vm_command == "disasm":
            rows = [{"index": i, "opcode": ins.name, "operand": ins.operand}
                    for i, ins in enumerate(prog.instructions)]
            return _report("vm-disasm", args, rows)
        res = run(prog, args.input, args.fuel, args.max_out)
        row = {"status": res.status.value, "output": res.output, "steps_used": res.steps_used}
        return _report("vm-run", args, [row])
    if cmd == "seq":
        res = eval_gen(args.desc, args.len, args.fuel)
        return _report("seq-eval", args, [{"desc": to_sexpr(args.desc), "bits": res.bits,
                                           "status": res.status.value}])
    if cmd == "predict":
        row = {"pred": to_sexpr(args.pred), "obs": args.obs}
        try:
            row["prediction"] = predict(args.pred, args.obs, args.fuel)
        except BudgetExceeded as e:
            row["error"] = str(e)
        return _report("predict", args, [row])
    if cmd == "learns":
        v = learns(args.pred, args.gen, args.burn_in, args.horizon, args.fuel)
        return _report("learns", args, [v.record()])
    if cmd == "duel":
        d = verify_defeat(args.pred, args.horizon, args.fuel)
        return _report("duel", args, [d.record()], [
            ("every position is a prediction error", d.all_wrong,
             {"errors": d.n_errors, "horizon": d.horizon}),
        ])
    if cmd == "khat":
        fn = {"halting": khat_halting, "monotone": khat_monotone, "dl": khat_dl}[args.measure]
        est = fn(args.target, args.max_len, args.fuel)
        return _report("khat", args, [est.record()])
    if cmd == "kdot":
        est = kdot_hat(args.gen, args.max_bits, args.burn_in, args.horizon, args.fuel,
                       args.universe)
        return _report("kdot", args, [est.record()])
    if cmd == "catalog":
        cat = build_catalog(args.n_bits, args.fuel, args.horizon)
        rows = [e.record() for e in cat.entries]
        return _report("catalog", args, rows, [("h", True, {"h": cat.h})])
    if cmd == "experiment":
        cfg = ExperimentConfig.load(args.config)
        overrides = {}
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.cache_dir is not None:
            overrides["cache_dir"] = args.cache_dir
        elif cfg.cache_dir is None and os.environ.get(CACHE_ENV):
            overrides["cache_dir"] = os.environ[CACHE_ENV]
        if args.output_dir is not None:
            overrides["output_dir"] = args.output_dir
        if overrides:
            cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
        return run_experiment(cfg)
    if cmd == "cache":
        root = args.cache_dir or os.environ.get(CACHE_ENV)
        if not root:
            raise ConfigError(f"no cache directory: pass --cache-dir or set {CACHE_ENV}")
        cache = ExecutionCache(root)
        if args.action == "stats":
            return _report("cache-stats", args, [cache.stats()])
        bad = cache.verify(args.sample)
        return _report("cache-verify", args, [{"mismatched": bad}],
                       [("cached runs reproduce", not bad, {"mismatched": len(bad)})])
    raise ConfigError(f"unknown command {cmd}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rep = _dispatch(args)
    except (ConfigError, ValueError, OSError) as e:
        print(f"predlab: error: {e}", file=sys.stderr)
        return 2
    if args.format == "jsonl":
        sys.stdout.write(rep.to_jsonl())
    elif rep.kind == "vm-disasm":
        sys.stdout.write(args.program.disassemble() + "\n")
    else:
        sys.stdout.write(rep.to_text())
    return 0 if rep.passed else 1
