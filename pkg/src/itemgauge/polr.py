"""Proportional-odds model for three ordered difficulty levels.

The latent form orders the levels Low < Moderate < High through two shared
intercepts and one slope per variable:

    P(High)     = sigmoid(a2 + eta)
    P(Moderate) = sigmoid(a1 + eta) - P(High)
    P(Low)      = 1 - sigmoid(a1 + eta)

with eta the linear predictor over the item's integer codes and a1 > a2.
Internally the equivalent cumulative parameterization with thresholds
theta_j = -a_j (theta1 < theta2) keeps the likelihood algebra conventional.
Fitting is a Newton-Raphson climb on the analytic gradient and Hessian with
step halving; the observed information at the optimum supplies standard
errors for Wald tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import jsonfmt
from .errors import DataError, NumericalError
from .items import (
    Dataset,
    DifficultyLevel,
    ItemCoding,
    LEVEL_NAMES,
    encode_design,
    validate_coding,
    variable_spec,
)

K_CONVENTIONS = ("all_params", "slopes_only")
MODEL_SCHEMA = "itemgauge-model/1"

# Fitting control; values are part of the documented convergence contract.
GRADIENT_TOL = 1e-6
LOGLIK_TOL = 1e-10
MAX_ITER = 100
MAX_HALVINGS = 30
SEPARATION_BOUND = 30.0


@dataclass(frozen=True)
class PredictedProbabilities:
    """Class probabilities for one item, ordered Low, Moderate, High."""

    p_low: float
    p_moderate: float
    p_high: float

    def __post_init__(self) -> None:
        for name, p in self.as_mapping().items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} out of [0, 1]: {p}")
        if abs(self.p_low + self.p_moderate + self.p_high - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_low, self.p_moderate, self.p_high)

    def as_mapping(self) -> dict[str, float]:
        return {
            "p_low": self.p_low,
            "p_moderate": self.p_moderate,
            "p_high": self.p_high,
        }


@dataclass(frozen=True)
class ModelCriteria:
    deviance: float
    aic: float
    bic: float
    mcfadden: float
    k_convention: str


@dataclass(frozen=True)
class WaldRow:
    term: str
    estimate: float
    odds_ratio: float
    std_error: float
    z: float
    p_value: float


@dataclass(frozen=True)
class FittedModel:
    """A proportional-odds difficulty model, fitted or directly constructed.

    `vcov` (parameter order: slopes in `variables` order, then a1, a2) is the
    inverse observed information; it is present only on freshly fitted models
    and is excluded from equality and serialization.
    """

    variables: tuple[str, ...]
    b: tuple[float, ...]
    a1: float
    a2: float
    n_train: int
    loglik: float
    converged: bool
    k_convention: str
    deviance: float
    aic: float
    bic: float
    mcfadden: float
    vcov: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        seen = set()
        for name in self.variables:
            variable_spec(name)
            if name in seen:
                raise DataError(f"duplicate model variable {name!r}")
            seen.add(name)
        if len(self.b) != len(self.variables):
            raise DataError("coefficient count must match variable count")
        if not self.a1 > self.a2:
            raise DataError(
                f"intercepts violate ordering a1 > a2: a1={self.a1}, a2={self.a2}"
            )
        if self.k_convention not in K_CONVENTIONS:
            raise DataError(f"unknown k_convention {self.k_convention!r}")
        if self.n_train < 1:
            raise DataError("n_train must be positive")

    def coefficient(self, name: str) -> float:
        return self.b[self.variables.index(name)]


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    # log(sigmoid(x)) without overflow on either tail.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = -np.log1p(np.exp(-x[pos]))
    out[~pos] = x[~pos] - np.log1p(np.exp(x[~pos]))
    return out


def _log_expm1(delta: float) -> float:
    # log(exp(delta) - 1) for delta > 0.
    if delta > 33.0:
        return delta + math.log1p(-math.exp(-delta))
    return math.log(math.expm1(delta))


def _outcome_array(outcomes: Sequence) -> np.ndarray:
    values = np.array([int(DifficultyLevel.from_value(o)) for o in outcomes], dtype=int)
    return values


def _loglik_core(theta1: float, theta2: float, beta: np.ndarray,
                 design: np.ndarray, y: np.ndarray) -> float:
    eta = design @ beta
    z1 = theta1 - eta
    z2 = theta2 - eta
    delta = theta2 - theta1
    lp = np.empty(len(y))
    m1 = y == 1
    m2 = y == 2
    m3 = y == 3
    lp[m1] = _log_sigmoid(z1[m1])
    lp[m3] = _log_sigmoid(-z2[m3])
    lp[m2] = _log_sigmoid(z1[m2]) + _log_sigmoid(-z2[m2]) + _log_expm1(delta)
    return float(lp.sum())


def _loglik_grad_hess(theta1: float, theta2: float, beta: np.ndarray,
                      design: np.ndarray, y: np.ndarray):
    """Log-likelihood with analytic gradient and Hessian.

    Parameter order everywhere: (theta1, theta2, beta...). Derivatives are
    assembled from per-item derivatives with respect to z_j = theta_j - eta;
    the middle-category ratios f_j / p2 are evaluated in log space so extreme
    linear predictors cannot overflow.
    """
    n, k = design.shape
    eta = design @ beta
    z1 = theta1 - eta
    z2 = theta2 - eta
    delta = theta2 - theta1
    log_e = _log_expm1(delta)

    ls_z1 = _log_sigmoid(z1)
    ls_nz1 = _log_sigmoid(-z1)
    ls_z2 = _log_sigmoid(z2)
    ls_nz2 = _log_sigmoid(-z2)

    f1 = np.exp(ls_z1 + ls_nz1)
    f2 = np.exp(ls_z2 + ls_nz2)
    F1 = np.exp(ls_z1)
    F2 = np.exp(ls_z2)

    m1 = y == 1
    m2 = y == 2
    m3 = y == 3

    lp = np.empty(n)
    lp[m1] = ls_z1[m1]
    lp[m3] = ls_nz2[m3]
    lp[m2] = ls_z1[m2] + ls_nz2[m2] + log_e
    loglik = float(lp.sum())

    # Per-item first and second derivatives of log p w.r.t. (z1, z2).
    L1 = np.zeros(n)
    L2 = np.zeros(n)
    L11 = np.zeros(n)
    L22 = np.zeros(n)
    L12 = np.zeros(n)

    L1[m1] = 1.0 - F1[m1]
    L11[m1] = -f1[m1]

    L2[m3] = -F2[m3]
    L22[m3] = -f2[m3]

    # ratios r1 = f1/p2, r2 = f2/p2 via logs: p2 = sig(z1) sig(-z2) expm1(delta)
    r1 = np.exp(ls_nz1[m2] - ls_nz2[m2] - log_e)
    r2 = np.exp(ls_z2[m2] - ls_z1[m2] - log_e)
    L1[m2] = -r1
    L2[m2] = r2
    L11[m2] = -r1 * (1.0 - 2.0 * F1[m2]) - r1 * r1
    L22[m2] = r2 * (1.0 - 2.0 * F2[m2]) - r2 * r2
    L12[m2] = r1 * r2

    grad = np.empty(k + 2)
    grad[0] = L1.sum()
    grad[1] = L2.sum()
    grad[2:] = design.T @ (-(L1 + L2))

    hess = np.empty((k + 2, k + 2))
    hess[0, 0] = L11.sum()
    hess[1, 1] = L22.sum()
    hess[0, 1] = hess[1, 0] = L12.sum()
    h1b = design.T @ (-(L11 + L12))
    h2b = design.T @ (-(L12 + L22))
    hess[0, 2:] = h1b
    hess[2:, 0] = h1b
    hess[1, 2:] = h2b
    hess[2:, 1] = h2b
    hess[2:, 2:] = design.T @ (design * (L11 + 2.0 * L12 + L22)[:, None])
    return loglik, grad, hess


def log_likelihood(a1: float, a2: float, b: Sequence[float],
                   design: np.ndarray, outcomes: Sequence) -> float:
    """Joint log-likelihood of `outcomes` given design rows and coefficients."""
    if not a1 > a2:
        raise DataError(f"intercepts violate ordering a1 > a2: a1={a1}, a2={a2}")
    X = np.asarray(design, dtype=float)
    if X.ndim != 2:
        raise DataError("design must be a 2-D array")
    beta = np.asarray(b, dtype=float)
    if beta.shape != (X.shape[1],):
        raise DataError("coefficient count must match design columns")
    y = _outcome_array(outcomes)
    if len(y) != X.shape[0]:
        raise DataError("outcome count must match design rows")
    return _loglik_core(-a1, -a2, beta, X, y)


def _null_loglik(y: np.ndarray) -> float:
    n = len(y)
    total = 0.0
    for level in (1, 2, 3):
        c = int((y == level).sum())
        if c > 0:
            total += c * math.log(c / n)
    return total


def information_criteria(loglik: float, n_train: int, n_slopes: int,
                         k_convention: str) -> tuple[float, float, float]:
    """(deviance, aic, bic) for a fit; k counts slopes plus, under
    all_params, the two intercepts."""
    if k_convention not in K_CONVENTIONS:
        raise DataError(f"unknown k_convention {k_convention!r}")
    k = n_slopes + (2 if k_convention == "all_params" else 0)
    deviance = -2.0 * loglik
    aic = deviance + 2.0 * k
    bic = deviance + k * math.log(n_train)
    return deviance, aic, bic


def fit(data: Dataset, variables: Sequence[str], *,
        k_convention: str = "all_params",
        tol: float = GRADIENT_TOL,
        max_iter: int = MAX_ITER) -> FittedModel:
    """Maximum-likelihood fit of the proportional-odds model.

    Newton-Raphson from intercepts matching the marginal level shares and
    zero slopes. A step is accepted only if it keeps theta1 < theta2 and
    increases the log-likelihood, halving up to 30 times; convergence means
    gradient max-norm < tol and the last improvement < 1e-10. A slope
    escaping |b| > 30 aborts as complete separation.
    """
    variables = tuple(variables)
    if not data.labeled:
        raise DataError("fit requires a fully labeled dataset")
    y = np.array([int(item.D) for item in data.items], dtype=int)
    n = len(y)
    counts = [int((y == level).sum()) for level in (1, 2, 3)]
    if min(counts) == 0:
        missing = LEVEL_NAMES[counts.index(0)]
        raise DataError(f"fewer than 3 outcome levels present (no {missing} items)")
    n_params = len(variables) + 2
    if n < n_params + 1:
        raise DataError(f"need at least {n_params + 1} items to fit {n_params} parameters, got {n}")
    X = encode_design(data, variables)

    c1 = counts[0] / n
    c12 = (counts[0] + counts[1]) / n
    theta = np.array([math.log(c1 / (1.0 - c1)), math.log(c12 / (1.0 - c12))])
    beta = np.zeros(len(variables))

    params = np.concatenate([theta, beta])
    ll, grad, hess = _loglik_grad_hess(params[0], params[1], params[2:], X, y)
    delta_ll = 0.0
    converged = False
    for _ in range(max_iter):
        if np.max(np.abs(grad)) < tol and abs(delta_ll) < LOGLIK_TOL:
            converged = True
            break
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            raise NumericalError("singular Hessian during fit") from None
        scale = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            cand = params + scale * step
            if cand[0] < cand[1]:
                ll_cand = _loglik_core(cand[0], cand[1], cand[2:], X, y)
                if ll_cand > ll:
                    accepted = True
                    break
            scale /= 2.0
        if not accepted:
            # No step improves the log-likelihood: the last change is 0 for
            # the purposes of the |delta loglik| criterion.
            delta_ll = 0.0
            break
        delta_ll = ll_cand - ll
        params = cand
        ll = ll_cand
        if len(variables) and np.max(np.abs(params[2:])) > SEPARATION_BOUND:
            raise NumericalError(
                "complete separation suspected: a coefficient exceeded |b| > 30"
            )
        ll, grad, hess = _loglik_grad_hess(params[0], params[1], params[2:], X, y)
    if not converged and np.max(np.abs(grad)) < tol and abs(delta_ll) < LOGLIK_TOL:
        converged = True

    theta1, theta2 = float(params[0]), float(params[1])
    beta = params[2:]

    vcov = None
    if converged:
        try:
            vcov_internal = np.linalg.inv(-hess)
        except np.linalg.LinAlgError:
            raise NumericalError("singular Hessian at the optimum") from None
        k = len(variables)
        jac = np.zeros((k + 2, k + 2))
        for j in range(k):
            jac[j, 2 + j] = 1.0
        jac[k, 0] = -1.0
        jac[k + 1, 1] = -1.0
        vcov = jac @ vcov_internal @ jac.T

    deviance, aic, bic = information_criteria(ll, n, len(variables), k_convention)
    if variables:
        mcfadden = max(0.0, 1.0 - ll / _null_loglik(y))
    else:
        mcfadden = 0.0
    return FittedModel(
        variables=variables,
        b=tuple(float(v) for v in beta),
        a1=-theta1,
        a2=-theta2,
        n_train=n,
        loglik=ll,
        converged=converged,
        k_convention=k_convention,
        deviance=deviance,
        aic=aic,
        bic=bic,
        mcfadden=mcfadden,
        vcov=vcov,
    )


def predict_from_codes(model: FittedModel, codes: Mapping[str, int]) -> PredictedProbabilities:
    """Predicted probabilities from a name -> code mapping.

    The mapping must cover every model variable; extra keys are ignored.
    """
    eta = 0.0
    for name, coeff in zip(model.variables, model.b):
        if name not in codes:
            raise DataError(f"missing code for model variable {name}")
        eta += coeff * float(codes[name])
    s1 = _sigmoid(model.a1 + eta)
    s2 = _sigmoid(model.a2 + eta)
    return PredictedProbabilities(p_low=1.0 - s1, p_moderate=s1 - s2, p_high=s2)


def predict_probs(model: FittedModel, item: ItemCoding) -> PredictedProbabilities:
    """Predicted probabilities for a coded item (coding validated first)."""
    problems = validate_coding(item)
    if problems:
        raise DataError("; ".join(problems))
    return predict_from_codes(model, item.codes())


def classify_probs(probs: PredictedProbabilities) -> DifficultyLevel:
    """Argmax level for a probability triple; ties resolve toward the lower level."""
    best = DifficultyLevel.LOW
    best_p = probs.p_low
    for level, p in (
        (DifficultyLevel.MODERATE, probs.p_moderate),
        (DifficultyLevel.HIGH, probs.p_high),
    ):
        if p > best_p:
            best = level
            best_p = p
    return best


def classify(model: FittedModel, item: ItemCoding) -> DifficultyLevel:
    """Predicted difficulty level of `item`: the most probable of the three."""
    return classify_probs(predict_probs(model, item))


def criteria(model: FittedModel, data: Dataset) -> ModelCriteria:
    """Model criteria for `model` against its training data."""
    if not data.labeled:
        raise DataError("criteria requires a fully labeled dataset")
    if len(data) != model.n_train:
        raise DataError(
            f"dataset size {len(data)} does not match the model's n_train {model.n_train}"
        )
    y = np.array([int(item.D) for item in data.items], dtype=int)
    deviance, aic, bic = information_criteria(
        model.loglik, model.n_train, len(model.variables), model.k_convention
    )
    if model.variables:
        mcfadden = max(0.0, 1.0 - model.loglik / _null_loglik(y))
    else:
        mcfadden = 0.0
    return ModelCriteria(
        deviance=deviance,
        aic=aic,
        bic=bic,
        mcfadden=mcfadden,
        k_convention=model.k_convention,
    )


def coefficient_table(model: FittedModel) -> list[WaldRow]:
    """Wald rows (estimate, odds ratio, SE, z, p) for slopes and intercepts."""
    if not model.converged or model.vcov is None:
        raise DataError("coefficient table requires a converged fit with a covariance matrix")
    se = np.sqrt(np.diag(model.vcov))
    terms = list(model.variables) + ["a1", "a2"]
    estimates = list(model.b) + [model.a1, model.a2]
    rows = []
    for i, (term, est) in enumerate(zip(terms, estimates)):
        s = float(se[i])
        z = est / s if s > 0 else math.inf if est > 0 else -math.inf
        p = 2.0 * (0.5 * math.erfc(abs(z) / math.sqrt(2.0)))
        rows.append(
            WaldRow(
                term=term,
                estimate=float(est),
                odds_ratio=math.exp(est),
                std_error=s,
                z=float(z),
                p_value=min(1.0, p),
            )
        )
    return rows


def model_to_dict(model: FittedModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "variables": list(model.variables),
        "coefficients": {name: coeff for name, coeff in zip(model.variables, model.b)},
        "intercepts": {"a1": model.a1, "a2": model.a2},
        "levels": list(LEVEL_NAMES),
        "n_train": model.n_train,
        "loglik": model.loglik,
        "deviance": model.deviance,
        "aic": model.aic,
        "bic": model.bic,
        "mcfadden": model.mcfadden,
        "k_convention": model.k_convention,
        "converged": model.converged,
    }


def serialize_model(model: FittedModel) -> str:
    """Canonical JSON for a model; stable bytes for equal models."""
    return jsonfmt.dumps(model_to_dict(model))


_MODEL_KEYS = (
    "schema", "variables", "coefficients", "intercepts", "levels", "n_train",
    "loglik", "deviance", "aic", "bic", "mcfadden", "k_convention", "converged",
)


def _require_number(payload: Mapping, key: str) -> float:
    value = payload[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"model field {key!r} must be a number")
    return float(value)


def model_from_dict(payload: Mapping) -> FittedModel:
    if not isinstance(payload, Mapping):
        raise DataError("model payload must be a JSON object")
    missing = [key for key in _MODEL_KEYS if key not in payload]
    if missing:
        raise DataError(f"model payload missing key {missing[0]!r}")
    extra = [key for key in payload if key not in _MODEL_KEYS]
    if extra:
        raise DataError(f"model payload has unknown key {extra[0]!r}")
    if payload["schema"] != MODEL_SCHEMA:
        raise DataError(f"unsupported model schema {payload['schema']!r}")
    variables = payload["variables"]
    if not isinstance(variables, list) or not all(isinstance(v, str) for v in variables):
        raise DataError("model variables must be a list of names")
    coefficients = payload["coefficients"]
    if not isinstance(coefficients, Mapping):
        raise DataError("model coefficients must be an object")
    if set(coefficients) != set(variables):
        raise DataError("model coefficients must cover exactly the model variables")
    intercepts = payload["intercepts"]
    if not isinstance(intercepts, Mapping) or set(intercepts) != {"a1", "a2"}:
        raise DataError("model intercepts must be an object with keys a1, a2")
    if list(payload["levels"]) != list(LEVEL_NAMES):
        raise DataError(f"model levels must be {list(LEVEL_NAMES)}")
    n_train = payload["n_train"]
    if isinstance(n_train, bool) or not isinstance(n_train, int):
        raise DataError("model n_train must be an integer")
    loglik = _require_number(payload, "loglik")
    if loglik > 0:
        raise DataError("model loglik must be <= 0")
    if not isinstance(payload["converged"], bool):
        raise DataError("model converged must be a boolean")
    b = tuple(_require_number(coefficients, name) for name in variables)
    return FittedModel(
        variables=tuple(variables),
        b=b,
        a1=_require_number(intercepts, "a1"),
        a2=_require_number(intercepts, "a2"),
        n_train=n_train,
        loglik=loglik,
        converged=payload["converged"],
        k_convention=str(payload["k_convention"]),
        deviance=_require_number(payload, "deviance"),
        aic=_require_number(payload, "aic"),
        bic=_require_number(payload, "bic"),
        mcfadden=_require_number(payload, "mcfadden"),
    )


def deserialize_model(text: str) -> FittedModel:
    """Parse canonical model JSON; validates schema and a1 > a2."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid model JSON: {exc}") from None
    return model_from_dict(payload)


def predictions_to_dict(model: FittedModel,
                        rows: Sequence[tuple[str, PredictedProbabilities, DifficultyLevel]]) -> dict:
    return {
        "schema": "itemgauge-predictions/1",
        "model_variables": list(model.variables),
        "items": [
            {
                "item_id": item_id,
                "p_low": probs.p_low,
                "p_moderate": probs.p_moderate,
                "p_high": probs.p_high,
                "level": level.label,
            }
            for item_id, probs, level in rows
        ],
    }


def predictions_from_dict(payload: Mapping) -> list[tuple[str, PredictedProbabilities, DifficultyLevel]]:
    if not isinstance(payload, Mapping) or payload.get("schema") != "itemgauge-predictions/1":
        raise DataError("not an itemgauge-predictions/1 payload")
    rows = []
    for entry in payload["items"]:
        probs = PredictedProbabilities(
            p_low=float(entry["p_low"]),
            p_moderate=float(entry["p_moderate"]),
            p_high=float(entry["p_high"]),
        )
        rows.append(
            (str(entry["item_id"]), probs, DifficultyLevel.from_value(entry["level"]))
        )
    return rows


REFERENCE_VARIABLES = ("T2", "C2", "C3", "S1", "S4", "S6")


def reference_model() -> FittedModel:
    """The bundled six-variable reference model.

    Coefficients and fit statistics are the published values for this model
    family (slopes_only criteria convention; BIC recomputed from the actual
    training size). No covariance matrix is available for it, so Wald tables
    require a fresh fit.
    """
    loglik = -426.835
    deviance, aic, bic = information_criteria(loglik, 300, 6, "slopes_only")
    return FittedModel(
        variables=REFERENCE_VARIABLES,
        b=(0.28, 0.54, 0.47, 0.51, 0.23, -0.48),
        a1=-3.2,
        a2=-5.8,
        n_train=300,
        loglik=loglik,
        converged=True,
        k_convention="slopes_only",
        deviance=deviance,
        aic=aic,
        bic=bic,
        mcfadden=0.32,
    )
