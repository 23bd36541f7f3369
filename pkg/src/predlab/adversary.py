"""Diagonal sequences against a predictor, and checks that they defeat it."""

from __future__ import annotations

from dataclasses import dataclass

from .bits import BitString
from .dsl import Diag, Predictor, eval_gen, serialize_gen, serialize_pred, to_sexpr
from .predictors import errors


@dataclass(frozen=True)
class DefeatReport:
    predictor: Predictor
    horizon: int
    fuel: int
    all_wrong: bool
    n_errors: int
    diag_code_bits: int
    pred_code_bits: int
    defaulted: int

    def record(self) -> dict:
        return {
            "predictor": to_sexpr(self.predictor),
            "predictor_bits": serialize_pred(self.predictor),
            "horizon": self.horizon,
            "fuel": self.fuel,
            "all_wrong": self.all_wrong,
            "errors": self.n_errors,
            "diag_code_bits": self.diag_code_bits,
            "pred_code_bits": self.pred_code_bits,
            "defaulted": self.defaulted,
        }


def diag_sequence(p: Predictor, horizon: int, fuel: int) -> BitString:
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    return eval_gen(Diag(p), horizon, fuel).bits


def verify_defeat(p: Predictor, horizon: int, fuel: int) -> DefeatReport:
    verdict = errors(p, Diag(p), horizon, fuel)
    return DefeatReport(
        predictor=p,
        horizon=horizon,
        fuel=fuel,
        all_wrong=verdict.n_errors == horizon,
        n_errors=verdict.n_errors,
        diag_code_bits=len(serialize_gen(Diag(p))),
        pred_code_bits=len(serialize_pred(p)),
        defaulted=verdict.defaulted,
    )
