"""Experiment configs, the on-disk execution cache, and reports.

A config is a JSON object::

    {"schema_version": 1, "kind": "duel-suite", "output_dir": "out/duel",
     "workers": 1, "cache_dir": null,
     "params": {"predictors": ["0000", "(speed)"], "horizon": 512, "fuel": 10000}}

Every budget a kind needs must appear in ``params``; nothing is defaulted.
Reports are written as ``report.jsonl``, ``report.txt`` and one CSV per table.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from filelock import FileLock

from . import __version__
from .adversary import verify_defeat
from .complexity import (
    build_catalog, consist_slack, in_universe, kdot_hat, khat_halting, khat_monotone,
)
from .dsl import Consist, Diag, Prog, Speed, code_len, parse_descriptor, to_sexpr
from .enumeration import descriptor_space, lex_string
from .predictors import BudgetExceeded, compute_h, learns, predict
from .vm import TRACES, Program, Status, Trace, VMState, run, trace

CONFIG_SCHEMA = 1
CACHE_SCHEMA = 1
# runs at least this long keep a resumable machine snapshot in the cache
SNAPSHOT_STEPS = 10_000

PARAMS = {
    "duel-suite": ("predictors", "horizon", "fuel"),
    "catalog-build": ("n_bits", "fuel", "horizon"),
    "consist-coverage": ("n_bits", "fuel", "probe", "horizon", "burn_in", "max_c0"),
    "speed-coverage": ("n_bits", "fuel", "catalog_horizon", "horizon", "burn_in"),
    "theorem2-chain": ("n_bits", "h_fuel", "h_probe", "fuel", "horizon", "burn_in", "max_bits"),
    "khat-sweep": ("targets", "max_len", "fuels"),
    "kdot-sweep": ("generators", "max_bits", "burn_in", "horizon", "fuel", "universe"),
}


class ConfigError(ValueError):
    pass


class CacheCorruption(RuntimeError):
    pass


# -- config ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: dict
    output_dir: str | None = None
    workers: int = 1
    cache_dir: str | None = None
    schema_version: int = CONFIG_SCHEMA

    def __post_init__(self):
        if self.schema_version != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported config schema {self.schema_version}")
        if self.kind not in PARAMS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        missing = [k for k in PARAMS[self.kind] if k not in self.params]
        if missing:
            raise ConfigError(f"{self.kind} needs explicit params: {', '.join(missing)}")
        extra = sorted(set(self.params) - set(PARAMS[self.kind]))
        if extra:
            raise ConfigError(f"unexpected params for {self.kind}: {', '.join(extra)}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        with open(path) as f:
            raw = json.load(f)
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        try:
            return cls(**raw)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def resolved(self) -> dict:
        # workers and cache location are deliberately absent: they must not change content
        return {"schema_version": self.schema_version, "kind": self.kind,
                "params": self.params}


# -- cache ----------------------------------------------------------------------------

def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class CacheRecord:
    code: str
    input: str
    fuel: int
    max_out: int
    status: str
    steps: int
    output: str
    times: tuple[int, ...]
    snapshot: dict | None = None

    @property
    def key(self) -> tuple:
        return (self.code, self.input, self.fuel, self.max_out)

    @property
    def key_hash(self) -> str:
        return key_hash(self.key)

    def payload(self) -> dict:
        return {
            "schema": CACHE_SCHEMA,
            "key_hash": self.key_hash,
            "code": self.code,
            "input": self.input,
            "fuel": self.fuel,
            "max_out": self.max_out,
            "status": self.status,
            "steps": self.steps,
            "output": self.output,
            "times": list(self.times),
            "snapshot": self.snapshot,
        }

    def to_line(self) -> str:
        body = self.payload()
        body["checksum"] = _digest(body)
        return json.dumps(body, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_line(cls, line: str) -> CacheRecord:
        try:
            body = json.loads(line)
        except json.JSONDecodeError as e:
            raise CacheCorruption(f"unreadable cache line: {e}") from None
        checksum = body.pop("checksum", None)
        if checksum != _digest(body):
            raise CacheCorruption("cache record checksum mismatch")
        if body.get("schema") != CACHE_SCHEMA:
            raise CacheCorruption(f"cache record has schema {body.get('schema')}")
        rec = cls(body["code"], body["input"], body["fuel"], body["max_out"],
                  body["status"], body["steps"], body["output"], tuple(body["times"]),
                  body["snapshot"])
        if rec.key_hash != body["key_hash"]:
            raise CacheCorruption("cache record key hash mismatch")
        return rec

    @classmethod
    def from_trace(cls, key, tr: Trace, snapshot_steps: int = SNAPSHOT_STEPS) -> CacheRecord:
        code, inp, fuel, max_out = key
        snap = None
        st = tr.state
        if st is not None and not st.terminal and tr.steps >= snapshot_steps:
            snap = {"ip": st.ip, "head": st.head, "tape": sorted(st.tape),
                    "cursor": st.cursor}
        return cls(code, inp, fuel, max_out, tr.status.value, tr.steps, tr.output,
                   tuple(tr.times), snap)

    def to_trace(self) -> Trace:
        status = Status(self.status)
        state = None
        if self.snapshot is not None:
            s = self.snapshot
            state = VMState(code=self.code, input=self.input, ip=s["ip"], head=s["head"],
                            tape=frozenset(s["tape"]), cursor=s["cursor"],
                            output=self.output, steps=self.steps, status=status)
        return Trace(status, self.output, self.steps, list(self.times), self.fuel,
                     self.max_out, state)


def key_hash(key) -> str:
    return _digest(list(key))


class ExecutionCache:
    """Append-only record files, one per key-hash prefix, under ``root/v<schema>``."""

    def __init__(self, root):
        self.dir = Path(root) / f"v{CACHE_SCHEMA}"
        self.dir.mkdir(parents=True, exist_ok=True)
        self._shards: dict[str, tuple[int, dict[str, CacheRecord]]] = {}

    def _path(self, shard: str) -> Path:
        return self.dir / f"{shard}.jsonl"

    def _load(self, shard: str) -> dict[str, CacheRecord]:
        path = self._path(shard)
        size = path.stat().st_size if path.exists() else 0
        cached = self._shards.get(shard)
        if cached is not None and cached[0] == size:
            return cached[1]
        records: dict[str, CacheRecord] = {}
        if size:
            text = path.read_text()
            # a line without its newline is a write still in flight
            for line in text.split("\n")[:-1]:
                if not line:
                    continue
                rec = CacheRecord.from_line(line)
                old = records.get(rec.key_hash)
                if old is not None and old != rec:
                    raise CacheCorruption(f"conflicting records for key {rec.key_hash}")
                records[rec.key_hash] = rec
        self._shards[shard] = (size, records)
        return records

    def get(self, key) -> CacheRecord | None:
        h = key_hash(key)
        return self._load(h[:2]).get(h)

    def put(self, record: CacheRecord) -> None:
        h = record.key_hash
        with FileLock(str(self._path(h[:2])) + ".lock"):
            existing = self._load(h[:2]).get(h)
            if existing is not None:
                if existing != record:
                    raise CacheCorruption(f"refusing to overwrite key {h} with a different value")
                return
            with open(self._path(h[:2]), "a") as f:
                f.write(record.to_line() + "\n")
        self._shards.pop(h[:2], None)

    def records(self):
        for path in sorted(self.dir.glob("*.jsonl")):
            yield from self._load(path.stem).values()

    def stats(self) -> dict:
        files = sorted(self.dir.glob("*.jsonl"))
        return {
            "schema": CACHE_SCHEMA,
            "shards": len(files),
            "records": sum(len(self._load(p.stem)) for p in files),
            "bytes": sum(p.stat().st_size for p in files),
        }

    def verify(self, sample: int | None = None, seed: int = 0) -> list[str]:
        """Re-execute (a sample of) the records bypassing every cache."""
        recs = sorted(self.records(), key=lambda r: r.key_hash)
        if sample is not None and sample < len(recs):
            recs = random.Random(seed).sample(recs, sample)
        problems = []
        for rec in recs:
            fresh = trace(Program(rec.code), rec.input, rec.fuel, rec.max_out)
            if (fresh.status.value, fresh.output, fresh.steps, tuple(fresh.times)) != (
                rec.status, rec.output, rec.steps, rec.times
            ):
                problems.append(rec.key_hash)
        return problems


class CacheStore:
    """Adapts an :class:`ExecutionCache` to the trace-store protocol of ``TraceCache``."""

    def __init__(self, cache: ExecutionCache):
        self.cache = cache

    def get(self, key) -> Trace | None:
        rec = self.cache.get(key)
        return None if rec is None else rec.to_trace()

    def put(self, key, tr: Trace) -> None:
        self.cache.put(CacheRecord.from_trace(key, tr))


# -- reports ----------------------------------------------------------------------------

@dataclass
class Report:
    kind: str
    config: dict
    tables: dict[str, list[dict]] = field(default_factory=dict)
    claims: list[dict] = field(default_factory=list)
    versions: dict = field(default_factory=lambda: {"predlab": __version__,
                                                    "cache_schema": CACHE_SCHEMA})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.claims)

    def claim(self, name: str, passed: bool, **measured) -> None:
        self.claims.append({"claim": name, "passed": bool(passed), **measured})

    def to_jsonl(self) -> str:
        dump = lambda obj: json.dumps(obj, sort_keys=True)
        lines = [dump({"type": "header", "kind": self.kind, "config": self.config,
                       "versions": self.versions})]
        for name, rows in self.tables.items():
            lines += [dump({"type": "row", "table": name, **row}) for row in rows]
        lines += [dump({"type": "claim", **c}) for c in self.claims]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> Report:
        rep = None
        for line in text.splitlines():
            obj = json.loads(line)
            kind = obj.pop("type")
            if kind == "header":
                rep = cls(obj["kind"], obj["config"], versions=obj["versions"])
            elif kind == "row":
                rep.tables.setdefault(obj.pop("table"), []).append(obj)
            else:
                rep.claims.append(obj)
        return rep

    def table_csv(self, name: str) -> str:
        rows = self.tables[name]
        cols = list(dict.fromkeys(k for row in rows for k in row))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in cols])
        return buf.getvalue()

    def to_text(self) -> str:
        out = [f"report: {self.kind}",
               f"config: {json.dumps(self.config, sort_keys=True)}", ""]
        for name, rows in self.tables.items():
            out.append(f"[{name}]")
            out.append(format_table(rows))
            out.append("")
        out.append("[claims]")
        for c in self.claims:
            extra = ", ".join(f"{k}={_cell(v)}" for k, v in c.items() if k not in ("claim", "passed"))
            out.append(f"{'PASS' if c['passed'] else 'FAIL'}  {c['claim']}  {extra}".rstrip())
        return "\n".join(out) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.jsonl").write_text(self.to_jsonl())
        (out / "report.txt").write_text(self.to_text())
        for name in self.tables:
            (out / f"{name}.csv").write_text(self.table_csv(name))
        return out


def _cell(v) -> str:
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    if v is None:
        return ""
    return str(v)


def format_table(rows: list[dict], max_width: int = 48) -> str:
    if not rows:
        return "(empty)"
    cols = list(dict.fromkeys(k for row in rows for k in row))
    cells = [[_cell(row.get(c)) for c in cols] for row in rows]
    cells = [[v if len(v) <= max_width else v[: max_width - 3] + "..." for v in r] for r in cells]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(cols)]
    fmt = lambda vals: "  ".join(v.ljust(w) for v, w in zip(vals, widths)).rstrip()
    return "\n".join([fmt(cols), fmt(["-" * w for w in widths])] + [fmt(r) for r in cells])


# -- experiments ------------------------------------------------------------------------

def _desc(text, kind):
    return parse_descriptor(text, kind) if isinstance(text, str) else text


def _learn_row(p, g, burn_in, horizon, fuel) -> dict:
    try:
        return learns(p, g, burn_in, horizon, fuel).record()
    except BudgetExceeded as e:
        return {"predictor": to_sexpr(p), "generator": to_sexpr(g), "error": str(e)}


def _row_duel(params, ctx, item):
    return verify_defeat(_desc(item, "predictor"), params["horizon"], params["fuel"]).record()


def _row_catalog(params, ctx, entry):
    rec = entry.record()
    res = run(entry.program, "", params["fuel"], params["horizon"])
    rec["reverified"] = res.output == entry.prefix
    return rec


def _row_consist(params, ctx, entry):
    row = _learn_row(Consist(params["n_bits"], ctx["h"]), Prog(entry.program.code),
                     params["burn_in"], params["horizon"], params["fuel"])
    row["program"] = entry.program.code
    return row


def _row_speed(params, ctx, entry):
    row = _learn_row(Speed(), Prog(entry.program.code), params["burn_in"],
                     params["horizon"], params["fuel"])
    row["program"] = entry.program.code
    row["fast"] = entry.fast()
    return row


def _row_short_learner(params, ctx, p):
    return _learn_row(p, ctx["target"], params["burn_in"], params["horizon"], params["fuel"])


def _row_khat(params, ctx, x):
    row = {"target": x}
    for fuel in params["fuels"]:
        for name, fn in (("halting", khat_halting), ("monotone", khat_monotone)):
            est = fn(x, params["max_len"], fuel)
            ok = True
            if est.found:
                res = run(Program(est.witness), "", fuel, len(x) + (name == "halting"))
                ok = res.output == x and (
                    name == "monotone" or res.status in (Status.HALTED, Status.EMPTY))
            row[f"{name}_f{fuel}"] = est.value_bits
            row[f"{name}_f{fuel}_witness"] = est.witness
            row[f"{name}_f{fuel}_ok"] = ok
    return row


def _row_kdot(params, ctx, item):
    g = _desc(item, "generator")
    est = kdot_hat(g, params["max_bits"], params["burn_in"], params["horizon"],
                   params["fuel"], params["universe"])
    row = est.record()
    if est.found:
        p = parse_descriptor(est.witness, "predictor")
        row["reverified"] = learns(p, g, params["burn_in"], params["horizon"],
                                   params["fuel"]).learned_at_horizon
    return row


def _khat_targets(targets) -> list[str]:
    if isinstance(targets, int):
        return [lex_string(i) for i in range(1, targets + 1)]
    return list(targets)


def _prepare(kind: str, params: dict):
    """Work items and shared context for a kind."""
    if kind == "duel-suite":
        return list(params["predictors"]), {}
    if kind == "catalog-build":
        cat = build_catalog(params["n_bits"], params["fuel"], params["horizon"])
        return list(cat.entries), {"h": cat.h}
    if kind == "consist-coverage":
        h = compute_h(params["n_bits"], params["fuel"], params["probe"])
        cat = build_catalog(params["n_bits"], params["fuel"], params["probe"])
        return list(cat.entries), {"h": h}
    if kind == "speed-coverage":
        cat = build_catalog(params["n_bits"], params["fuel"], params["catalog_horizon"])
        return list(cat.entries), {}
    if kind == "theorem2-chain":
        h = compute_h(params["n_bits"], params["h_fuel"], params["h_probe"])
        target = Diag(Consist(params["n_bits"], h))
        universe = [p for p in descriptor_space("predictor", params["max_bits"])
                    if in_universe(p, "restricted")]
        return universe, {"h": h, "target": target}
    if kind == "khat-sweep":
        return _khat_targets(params["targets"]), {}
    if kind == "kdot-sweep":
        return list(params["generators"]), {}
    raise ConfigError(kind)


_ROWS = {
    "duel-suite": _row_duel,
    "catalog-build": _row_catalog,
    "consist-coverage": _row_consist,
    "speed-coverage": _row_speed,
    "theorem2-chain": _row_short_learner,
    "khat-sweep": _row_khat,
    "kdot-sweep": _row_kdot,
}


def _claims(rep: Report, params: dict, ctx: dict, rows: list[dict]) -> None:
    kind = rep.kind
    if kind == "duel-suite":
        rep.claim("every position is a prediction error",
                  all(r["all_wrong"] for r in rows), rows=len(rows))
        rep.claim("diagonal code = predictor code + 2 bits",
                  all(r["diag_code_bits"] - r["pred_code_bits"] == 2 for r in rows))
    elif kind == "catalog-build":
        rep.claim("every entry re-verifies", all(r["reverified"] for r in rows),
                  entries=len(rows), h=ctx["h"])
    elif kind == "consist-coverage":
        n, h = params["n_bits"], ctx["h"]
        conv = [r.get("convergence_step") for r in rows]
        rep.claim("Consist learns every catalog sequence",
                  all(r.get("learned_at_horizon") for r in rows),
                  h=h, entries=len(rows), max_convergence=max(conv, default=None))
        slack = consist_slack(n, h)
        rep.claim("Consist code within n + 2 log2 n + c0", slack <= params["max_c0"],
                  code_bits=code_len(Consist(n, h)), c0=round(slack, 6))
    elif kind == "speed-coverage":
        fast = [r for r in rows if r["fast"]]
        rep.claim("Speed learns every fast catalog sequence",
                  all(r.get("learned_at_horizon") for r in fast),
                  fast=len(fast), entries=len(rows),
                  max_convergence=max((r.get("convergence_step") for r in fast), default=None))
        rep.claim("Speed predicts 1 with no candidates", predict(Speed(), "", params["fuel"]) == 1)
    elif kind == "theorem2-chain":
        target = ctx["target"]
        p = target.p
        defeat = verify_defeat(p, params["horizon"], params["fuel"])
        rep.tables["defeat"] = [defeat.record()]
        rep.claim("(a) generating predictor errs everywhere", defeat.all_wrong,
                  errors=defeat.n_errors, horizon=params["horizon"])
        rep.claim("(b) diagonal code = predictor code + 2",
                  code_len(target) == code_len(p) + 2,
                  diag_bits=code_len(target), pred_bits=code_len(p))
        learners = [r["predictor"] for r in rows if r.get("learned_at_horizon")]
        rep.claim("(c) no short restricted predictor learns the diagonal", not learners,
                  searched=len(rows), max_bits=params["max_bits"], learners=learners)
    elif kind == "khat-sweep":
        fuels = sorted(params["fuels"])
        ok = all(v for r in rows for k, v in r.items() if k.endswith("_ok"))
        rep.claim("witnesses re-verify", ok, targets=len(rows))
        inf = float("inf")
        val = lambda v: inf if v is None else v
        rep.claim("khat_monotone <= khat_halting",
                  all(val(r[f"monotone_f{f}"]) <= val(r[f"halting_f{f}"]) for r in rows for f in fuels))
        rep.claim("khat nonincreasing in fuel",
                  all(val(r[f"{m}_f{b}"]) <= val(r[f"{m}_f{a}"])
                      for r in rows for m in ("halting", "monotone")
                      for a, b in zip(fuels, fuels[1:])))
    elif kind == "kdot-sweep":
        rep.claim("witnesses re-verify", all(r.get("reverified", True) for r in rows),
                  generators=len(rows))


def _init_worker(cache_dir):
    if cache_dir:
        # start cold in memory so every run this experiment needs reaches the store
        TRACES.clear()
        TRACES.store = CacheStore(ExecutionCache(cache_dir))
    else:
        TRACES.store = None


def _task(args):
    kind, params, ctx, item = args
    return _ROWS[kind](params, ctx, item)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> Report:
    """Run one experiment.  Content depends only on ``cfg.resolved()``."""
    saved = TRACES.store
    _init_worker(cfg.cache_dir)
    try:
        params = cfg.params
        items, ctx = _prepare(cfg.kind, params)
        tasks = [(cfg.kind, params, ctx, it) for it in items]
        if cfg.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(cfg.workers, initializer=_init_worker,
                                     initargs=(cfg.cache_dir,)) as pool:
                rows = list(pool.map(_task, tasks))
        else:
            rows = [_task(t) for t in tasks]
        rep = Report(cfg.kind, cfg.resolved())
        rep.tables["rows"] = rows
        _claims(rep, params, ctx, rows)
    finally:
        TRACES.store = saved
    if write and cfg.output_dir:
        rep.write(cfg.output_dir)
    return rep
