"""Model search and diagnostics: stepwise selection, LR tests, VIF."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .assoc import chi_sq_sf
from .errors import DataError, ItemGaugeError
from .items import Dataset, encode_design, variable_spec
from .polr import FittedModel, K_CONVENTIONS, fit, log_likelihood

VIF_FLAG_THRESHOLD = 5.0

CRITERIA = ("aic", "bic")
DIRECTIONS = ("forward", "both")


@dataclass(frozen=True)
class SelectionStep:
    variables: tuple[str, ...]
    action: str  # "initial" | "added" | "removed"
    changed: str | None
    deviance: float
    aic: float
    bic: float


@dataclass(frozen=True)
class CandidateFailure:
    step: int
    variable: str
    message: str


@dataclass(frozen=True)
class SelectionTrace:
    criterion: str
    k_convention: str
    steps: tuple[SelectionStep, ...]
    failures: tuple[CandidateFailure, ...]
    chosen: tuple[str, ...]


def _criterion_value(model: FittedModel, criterion: str) -> float:
    return model.aic if criterion == "aic" else model.bic


def _fit_moves(data, moves, k_convention, threads):
    """Fit every candidate move, preserving move order in the results.

    Fits are pure, so evaluating them on a thread pool cannot change any
    result; results are collected in submission order either way.
    """
    def one(move):
        _, _, variables = move
        try:
            return fit(data, variables, k_convention=k_convention)
        except ItemGaugeError as exc:
            return exc

    if threads > 1 and len(moves) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, moves))
    return [one(move) for move in moves]


def stepwise_select(
    data: Dataset,
    candidates: Sequence[str],
    *,
    criterion: str = "aic",
    direction: str = "forward",
    k_convention: str = "all_params",
    threads: int = 1,
) -> SelectionTrace:
    """Greedy stepwise search from the intercepts-only model.

    Each step evaluates adding any unused candidate (and, with
    direction="both", removing any included variable) and accepts the move
    with the lowest criterion value, provided it strictly improves on the
    current model. Ties resolve to the earliest move in candidate order, so
    the trace is deterministic. Candidates whose fit fails are recorded and
    skipped for that step.
    """
    candidates = tuple(candidates)
    if criterion not in CRITERIA:
        raise DataError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    if direction not in DIRECTIONS:
        raise DataError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if threads < 1:
        raise DataError(f"threads must be >= 1, got {threads}")
    seen: set[str] = set()
    for name in candidates:
        variable_spec(name)
        if name in seen:
            raise DataError(f"duplicate candidate {name!r}")
        seen.add(name)

    current_model = fit(data, (), k_convention=k_convention)
    current_value = _criterion_value(current_model, criterion)
    current: tuple[str, ...] = ()
    steps = [
        SelectionStep(
            variables=(),
            action="initial",
            changed=None,
            deviance=current_model.deviance,
            aic=current_model.aic,
            bic=current_model.bic,
        )
    ]
    failures: list[CandidateFailure] = []

    step_no = 0
    while True:
        step_no += 1
        moves: list[tuple[str, str, tuple[str, ...]]] = []
        for name in candidates:
            if name not in current:
                moves.append(("added", name, current + (name,)))
        if direction == "both":
            for name in current:
                moves.append(
                    ("removed", name, tuple(v for v in current if v != name))
                )
        best: tuple[float, str, str, tuple[str, ...], FittedModel] | None = None
        results = _fit_moves(data, moves, k_convention, threads)
        for (action, name, variables), model in zip(moves, results):
            if isinstance(model, ItemGaugeError):
                failures.append(CandidateFailure(step_no, name, str(model)))
                continue
            if not model.converged:
                failures.append(
                    CandidateFailure(step_no, name, "fit did not converge")
                )
                continue
            value = _criterion_value(model, criterion)
            if best is None or value < best[0]:
                best = (value, action, name, variables, model)
        if best is None or best[0] >= current_value:
            break
        current_value, action, name, current, current_model = best
        steps.append(
            SelectionStep(
                variables=current,
                action=action,
                changed=name,
                deviance=current_model.deviance,
                aic=current_model.aic,
                bic=current_model.bic,
            )
        )
    return SelectionTrace(
        criterion=criterion,
        k_convention=k_convention,
        steps=tuple(steps),
        failures=tuple(failures),
        chosen=current,
    )


@dataclass(frozen=True)
class SubsetScore:
    index: int
    variables: tuple[str, ...]
    deviance: float
    aic: float
    bic: float
    converged: bool


def evaluate_subsets(
    data: Dataset,
    subsets: Sequence[Sequence[str]],
    *,
    k_convention: str = "all_params",
    threads: int = 1,
) -> tuple[SubsetScore, ...]:
    """Fit and score an explicit list of variable subsets, in order."""
    if threads < 1:
        raise DataError(f"threads must be >= 1, got {threads}")
    moves = [(None, None, tuple(subset)) for subset in subsets]
    results = _fit_moves(data, moves, k_convention, threads)
    scores = []
    for index, model in enumerate(results, start=1):
        if isinstance(model, ItemGaugeError):
            raise model
        scores.append(
            SubsetScore(
                index=index,
                variables=model.variables,
                deviance=model.deviance,
                aic=model.aic,
                bic=model.bic,
                converged=model.converged,
            )
        )
    return tuple(scores)


@dataclass(frozen=True)
class LrTestResult:
    lr_statistic: float
    df: int
    p_value: float


def lr_test(reduced: FittedModel, full: FittedModel, data: Dataset) -> LrTestResult:
    """Likelihood-ratio test of a nested pair fitted on the same data."""
    if not set(reduced.variables) <= set(full.variables):
        raise DataError("models are not nested: reduced variables must be a subset of full")
    if not data.labeled:
        raise DataError("lr_test requires a fully labeled dataset")
    if reduced.n_train != len(data) or full.n_train != len(data):
        raise DataError("both models must be fitted on the supplied dataset")
    y = [item.D for item in data.items]
    for model in (reduced, full):
        recomputed = log_likelihood(
            model.a1, model.a2, model.b, encode_design(data, model.variables), y
        )
        if abs(recomputed - model.loglik) > 1e-6 * (1.0 + abs(model.loglik)):
            raise DataError("model log-likelihood does not match the supplied dataset")
    df = len(full.variables) - len(reduced.variables)
    stat = reduced.deviance - full.deviance
    if stat < 0.0:
        if stat < -1e-8:
            raise DataError("full model fits worse than reduced: refit before testing")
        stat = 0.0
    p = 1.0 if df == 0 else chi_sq_sf(stat, df)
    return LrTestResult(lr_statistic=stat, df=df, p_value=p)


@dataclass(frozen=True)
class VifRow:
    variable: str
    vif: float
    flagged: bool


@dataclass(frozen=True)
class VifReport:
    rows: tuple[VifRow, ...]

    def value(self, name: str) -> float:
        for row in self.rows:
            if row.variable == name:
                return row.vif
        raise DataError(f"no VIF row for {name!r}")


def vif(data: Dataset, variables: Sequence[str]) -> VifReport:
    """Variance inflation factors: regress each variable on the others.

    VIF_j = 1 / (1 - R^2_j) from an intercept-included least-squares fit of
    variable j on the remaining variables. Values above 5 are flagged. An
    exactly collinear design raises an error naming the dependent column.
    """
    variables = tuple(variables)
    if len(variables) < 2:
        raise DataError("vif requires at least two variables")
    seen: set[str] = set()
    for name in variables:
        variable_spec(name)
        if name in seen:
            raise DataError(f"duplicate variable {name!r}")
        seen.add(name)
    X = encode_design(data, variables)
    n = X.shape[0]
    if n < len(variables) + 1:
        raise DataError("vif needs more items than variables")
    rows = []
    for j, name in enumerate(variables):
        target = X[:, j]
        others = np.delete(X, j, axis=1)
        design = np.column_stack([np.ones(n), others])
        coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
        residual = target - design @ coef
        ssr = float(residual @ residual)
        centered = target - target.mean()
        sst = float(centered @ centered)
        if sst == 0.0:
            raise DataError(f"variable {name} is constant; VIF is undefined")
        r_squared = 1.0 - ssr / sst
        if r_squared > 1.0 - 1e-10:
            raise DataError(
                f"design is singular: {name} is an exact linear combination of the others"
            )
        value = 1.0 / (1.0 - r_squared)
        rows.append(VifRow(variable=name, vif=value, flagged=value > VIF_FLAG_THRESHOLD))
    return VifReport(rows=tuple(rows))


def trace_to_dict(trace: SelectionTrace) -> dict:
    return {
        "schema": "itemgauge-selection/1",
        "criterion": trace.criterion,
        "k_convention": trace.k_convention,
        "steps": [
            {
                "variables": list(s.variables),
                "action": s.action,
                "changed": s.changed,
                "deviance": s.deviance,
                "aic": s.aic,
                "bic": s.bic,
            }
            for s in trace.steps
        ],
        "failures": [
            {"step": f.step, "variable": f.variable, "message": f.message}
            for f in trace.failures
        ],
        "chosen": list(trace.chosen),
    }


def trace_from_dict(payload: Mapping) -> SelectionTrace:
    if not isinstance(payload, Mapping) or payload.get("schema") != "itemgauge-selection/1":
        raise DataError("not an itemgauge-selection/1 payload")
    steps = tuple(
        SelectionStep(
            variables=tuple(s["variables"]),
            action=str(s["action"]),
            changed=s["changed"],
            deviance=float(s["deviance"]),
            aic=float(s["aic"]),
            bic=float(s["bic"]),
        )
        for s in payload["steps"]
    )
    failures = tuple(
        CandidateFailure(step=int(f["step"]), variable=str(f["variable"]),
                         message=str(f["message"]))
        for f in payload["failures"]
    )
    return SelectionTrace(
        criterion=str(payload["criterion"]),
        k_convention=str(payload["k_convention"]),
        steps=steps,
        failures=failures,
        chosen=tuple(payload["chosen"]),
    )


def subsets_to_dict(scores: Sequence[SubsetScore]) -> dict:
    return {
        "schema": "itemgauge-subsets/1",
        "rows": [
            {
                "model": s.index,
                "variables": list(s.variables),
                "deviance": s.deviance,
                "aic": s.aic,
                "bic": s.bic,
                "converged": s.converged,
            }
            for s in scores
        ],
    }


def subsets_from_dict(payload: Mapping) -> tuple[SubsetScore, ...]:
    if not isinstance(payload, Mapping) or payload.get("schema") != "itemgauge-subsets/1":
        raise DataError("not an itemgauge-subsets/1 payload")
    return tuple(
        SubsetScore(
            index=int(r["model"]),
            variables=tuple(r["variables"]),
            deviance=float(r["deviance"]),
            aic=float(r["aic"]),
            bic=float(r["bic"]),
            converged=bool(r["converged"]),
        )
        for r in payload["rows"]
    )


def diagnostics_to_dict(vif_report: VifReport, lr: LrTestResult, mcfadden: float,
                        variables: Sequence[str], full_variables: Sequence[str]) -> dict:
    return {
        "schema": "itemgauge-diagnostics/1",
        "variables": list(variables),
        "full_variables": list(full_variables),
        "vif": [
            {"variable": r.variable, "vif": r.vif, "flagged": r.flagged}
            for r in vif_report.rows
        ],
        "lr_vs_full": {"lr_statistic": lr.lr_statistic, "df": lr.df, "p": lr.p_value},
        "mcfadden": mcfadden,
    }


def diagnostics_from_dict(payload: Mapping) -> tuple[VifReport, LrTestResult, float]:
    if not isinstance(payload, Mapping) or payload.get("schema") != "itemgauge-diagnostics/1":
        raise DataError("not an itemgauge-diagnostics/1 payload")
    report = VifReport(
        rows=tuple(
            VifRow(variable=str(r["variable"]), vif=float(r["vif"]),
                   flagged=bool(r["flagged"]))
            for r in payload["vif"]
        )
    )
    lr = LrTestResult(
        lr_statistic=float(payload["lr_vs_full"]["lr_statistic"]),
        df=int(payload["lr_vs_full"]["df"]),
        p_value=float(payload["lr_vs_full"]["p"]),
    )
    return report, lr, float(payload["mcfadden"])
