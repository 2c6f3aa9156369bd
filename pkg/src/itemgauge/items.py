"""Item data model: difficulty levels, coded item variables, datasets.

An assessment item is described by fifteen nonnegative integer codes in three
families (T = stated variables, C = concept/computation variables, S =
structure variables) plus an optional difficulty label D. Ten of the codes are
open-ended counts; five are ordinal categories with fixed domains. The module
owns parsing and serialization of the CSV exchange format, descriptive
statistics, design-matrix encoding, and the seeded synthetic generator.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import numbers
from dataclasses import dataclass, field, fields
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

LEVEL_NAMES = ("Low", "Moderate", "High")


class DifficultyLevel(enum.IntEnum):
    """Ordered difficulty label. The integer codes 1 < 2 < 3 carry the order."""

    LOW = 1
    MODERATE = 2
    HIGH = 3

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_value(cls, value: object) -> "DifficultyLevel":
        """Accept a level name ("Low"), an integer code, or a DifficultyLevel."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            for member in cls:
                if value == member.label:
                    return member
            raise DataError(f"unknown difficulty level {value!r}")
        if isinstance(value, numbers.Integral) and not isinstance(value, bool):
            if int(value) in (1, 2, 3):
                return cls(int(value))
            raise DataError(f"unknown difficulty level {value!r}")
        raise DataError(f"unknown difficulty level {value!r}")


@dataclass(frozen=True)
class VariableSpec:
    """Static description of one item variable."""

    name: str
    kind: str  # "count" | "ordinal"
    description: str
    domain: tuple[int, ...] = ()
    labels: Mapping[int, str] = field(default_factory=dict)


# The fifteen predictors in canonical (CSV header) order.
VARIABLES: tuple[VariableSpec, ...] = (
    VariableSpec("T1", "count", "number of unknown quantities"),
    VariableSpec("T2", "count", "number of operations stated in the task"),
    VariableSpec(
        "T3", "ordinal", "language complexity of the statement",
        domain=(1, 2, 3), labels={1: "Simple", 2: "Moderate", 3: "Complex"},
    ),
    VariableSpec("C1", "count", "number of distinct concepts involved"),
    VariableSpec("C2", "count", "number of solution steps"),
    VariableSpec("C3", "count", "number of computations required"),
    VariableSpec(
        "C4", "ordinal", "knowledge forms exercised (facts F, procedures P, concepts C)",
        domain=(1, 2, 3, 4, 5, 6, 7),
        labels={1: "F", 2: "P", 3: "C", 4: "F-P", 5: "F-C", 6: "C-P", 7: "F-C-P"},
    ),
    VariableSpec("C5", "count", "number of prerequisite concepts"),
    VariableSpec(
        "S1", "ordinal", "structural complexity of the expected solution",
        domain=(1, 2), labels={1: "Simple", 2: "Complex"},
    ),
    VariableSpec("S2", "count", "number of diagrams or figures"),
    VariableSpec(
        "S3", "ordinal", "dependency on earlier solution parts",
        domain=(1, 2), labels={1: "Not dependent", 2: "Dependent"},
    ),
    VariableSpec(
        "S4", "ordinal", "technical notations in the statement",
        domain=(1, 2), labels={1: "Present", 2: "Absent"},
    ),
    VariableSpec("S5", "count", "number of given quantities reused across parts"),
    VariableSpec("S6", "count", "number of hints or cues provided"),
    VariableSpec("S7", "count", "number of distinct answer units expected"),
)

VARIABLE_NAMES: tuple[str, ...] = tuple(v.name for v in VARIABLES)
VARIABLE_BY_NAME: Mapping[str, VariableSpec] = {v.name: v for v in VARIABLES}

CSV_HEADER = ("item_id",) + VARIABLE_NAMES + ("D",)


def variable_spec(name: str) -> VariableSpec:
    try:
        return VARIABLE_BY_NAME[name]
    except KeyError:
        raise DataError(f"unknown variable name {name!r}") from None


@dataclass(frozen=True)
class ItemCoding:
    """One coded assessment item. Field names mirror the CSV columns."""

    item_id: str
    T1: int
    T2: int
    T3: int
    C1: int
    C2: int
    C3: int
    C4: int
    C5: int
    S1: int
    S2: int
    S3: int
    S4: int
    S5: int
    S6: int
    S7: int
    D: DifficultyLevel | None = None

    def code(self, name: str) -> int:
        variable_spec(name)
        return getattr(self, name)

    def codes(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in VARIABLE_NAMES}

    def replace_codes(self, **codes: int) -> "ItemCoding":
        for name in codes:
            variable_spec(name)
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs.update(codes)
        return ItemCoding(**kwargs)


def validate_coding(item: ItemCoding) -> list[str]:
    """Return all domain violations for `item`, one message per violation.

    An empty list means the coding is valid. Messages name the offending
    field so callers can surface field-level errors.
    """
    violations: list[str] = []
    for spec in VARIABLES:
        value = getattr(item, spec.name)
        if isinstance(value, bool) or not isinstance(value, int):
            violations.append(f"{spec.name} must be an integer, got {value!r}")
            continue
        if spec.kind == "count":
            if value < 0:
                violations.append(f"{spec.name} must be a nonnegative integer")
        else:
            if value not in spec.domain:
                domain = ",".join(str(v) for v in spec.domain)
                violations.append(f"{spec.name} out of domain {{{domain}}}")
    if item.D is not None and not isinstance(item.D, DifficultyLevel):
        violations.append(f"D must be a DifficultyLevel or None, got {item.D!r}")
    return violations


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of items with an optional course tag per item."""

    items: tuple[ItemCoding, ...]
    courses: tuple[str | None, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if not self.courses:
            object.__setattr__(self, "courses", (None,) * len(self.items))
        else:
            object.__setattr__(self, "courses", tuple(self.courses))
        if len(self.courses) != len(self.items):
            raise DataError("courses must align one-to-one with items")
        seen: set[str] = set()
        for item in self.items:
            if item.item_id in seen:
                raise DataError(f"duplicate item_id {item.item_id!r}")
            seen.add(item.item_id)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def labeled(self) -> bool:
        return len(self.items) > 0 and all(item.D is not None for item in self.items)

    def column(self, name: str) -> np.ndarray:
        if name == "D":
            if not self.labeled:
                raise DataError("dataset is not fully labeled")
            return np.array([int(item.D) for item in self.items], dtype=float)
        variable_spec(name)
        return np.array([getattr(item, name) for item in self.items], dtype=float)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(
            tuple(self.items[i] for i in indices),
            tuple(self.courses[i] for i in indices),
        )


def _parse_int(text: str, row: int, column: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise DataError(f"row {row}, column {column}: not an integer: {text!r}") from None


def parse_dataset(text: str) -> Dataset:
    """Parse the CSV exchange format into a Dataset.

    The header must be exactly `item_id,T1,...,S7,D`, optionally followed by a
    `course` column. D may be a level name, a code 1..3, or empty (unlabeled).
    Row numbers in error messages count data rows from 1.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty input: missing CSV header") from None
    base = list(CSV_HEADER)
    has_course = False
    if header == base:
        pass
    elif header == base + ["course"]:
        has_course = True
    else:
        raise DataError(
            "bad CSV header: expected " + ",".join(base) + " (optionally + course), got "
            + ",".join(header)
        )

    items: list[ItemCoding] = []
    courses: list[str | None] = []
    expected_len = len(base) + (1 if has_course else 0)
    for row_no, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != expected_len:
            raise DataError(f"row {row_no}: expected {expected_len} fields, got {len(row)}")
        item_id = row[0]
        if not item_id:
            raise DataError(f"row {row_no}, column item_id: must not be empty")
        codes = {
            name: _parse_int(row[i + 1], row_no, name)
            for i, name in enumerate(VARIABLE_NAMES)
        }
        for name, value in codes.items():
            spec = variable_spec(name)
            if spec.kind == "count":
                if value < 0:
                    raise DataError(
                        f"row {row_no}, column {name}: count must be nonnegative, got {value}"
                    )
            elif value not in spec.domain:
                lo, hi = spec.domain[0], spec.domain[-1]
                raise DataError(
                    f"row {row_no}, column {name}: ordinal code out of domain {lo}..{hi}, got {value}"
                )
        d_text = row[16]
        if d_text == "":
            d = None
        else:
            try:
                d = DifficultyLevel.from_value(
                    int(d_text) if d_text.lstrip("-").isdigit() else d_text
                )
            except DataError as exc:
                raise DataError(f"row {row_no}, column D: {exc}") from None
        item = ItemCoding(item_id=item_id, D=d, **codes)
        items.append(item)
        courses.append(row[17] or None if has_course else None)
    return Dataset(tuple(items), tuple(courses))


def serialize_dataset(data: Dataset) -> str:
    """Serialize to the CSV exchange format (byte-stable for equal inputs)."""
    has_course = any(c is not None for c in data.courses)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = list(CSV_HEADER) + (["course"] if has_course else [])
    writer.writerow(header)
    for item, course in zip(data.items, data.courses):
        row = [item.item_id]
        row += [str(getattr(item, name)) for name in VARIABLE_NAMES]
        row.append(item.D.label if item.D is not None else "")
        if has_course:
            row.append(course or "")
        writer.writerow(row)
    return out.getvalue()


def dataset_to_dict(data: Dataset) -> dict:
    rows = []
    for item, course in zip(data.items, data.courses):
        entry: dict[str, object] = {"item_id": item.item_id}
        entry.update(item.codes())
        entry["D"] = item.D.label if item.D is not None else None
        entry["course"] = course
        rows.append(entry)
    return {"schema": "itemgauge-dataset/1", "items": rows}


def dataset_from_dict(payload: Mapping) -> Dataset:
    if not isinstance(payload, Mapping) or payload.get("schema") != "itemgauge-dataset/1":
        raise DataError("not an itemgauge-dataset/1 payload")
    items: list[ItemCoding] = []
    courses: list[str | None] = []
    for row_no, entry in enumerate(payload.get("items", ()), start=1):
        try:
            codes = {name: entry[name] for name in VARIABLE_NAMES}
            d_raw = entry.get("D")
            item = ItemCoding(
                item_id=entry["item_id"],
                D=None if d_raw is None else DifficultyLevel.from_value(d_raw),
                **codes,
            )
        except KeyError as exc:
            raise DataError(f"item {row_no}: missing field {exc.args[0]!r}") from None
        problems = validate_coding(item)
        if problems:
            raise DataError(f"item {row_no}: " + "; ".join(problems))
        items.append(item)
        courses.append(entry.get("course"))
    return Dataset(tuple(items), tuple(courses))


@dataclass(frozen=True)
class NumericSummary:
    mean: float
    sd: float


@dataclass(frozen=True)
class DescriptiveReport:
    """Per-variable summaries: mean/sd for counts, category shares for ordinals.

    `ordinal` includes an entry for "D" (keyed by level name) when the dataset
    is fully labeled.
    """

    numeric: dict[str, NumericSummary]
    ordinal: dict[str, dict[object, float]]


def _sample_sd(values: Sequence[float], mean: float) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


def describe(data: Dataset) -> DescriptiveReport:
    if len(data) == 0:
        raise DataError("dataset is empty")
    numeric: dict[str, NumericSummary] = {}
    ordinal: dict[str, dict[object, float]] = {}
    n = len(data)
    for spec in VARIABLES:
        values = [getattr(item, spec.name) for item in data.items]
        if spec.kind == "count":
            mean = math.fsum(values) / n
            numeric[spec.name] = NumericSummary(mean=mean, sd=_sample_sd(values, mean))
        else:
            ordinal[spec.name] = {
                code: sum(v == code for v in values) / n for code in spec.domain
            }
    if data.labeled:
        labels = [item.D for item in data.items]
        ordinal["D"] = {
            level.label: sum(d == level for d in labels) / n for level in DifficultyLevel
        }
    return DescriptiveReport(numeric=numeric, ordinal=ordinal)


def describe_to_dict(report: DescriptiveReport) -> dict:
    return {
        "schema": "itemgauge-describe/1",
        "numeric": {
            name: {"mean": s.mean, "sd": s.sd} for name, s in report.numeric.items()
        },
        "ordinal": {
            name: {str(key): share for key, share in shares.items()}
            for name, shares in report.ordinal.items()
        },
    }


def describe_from_dict(payload: Mapping) -> DescriptiveReport:
    if not isinstance(payload, Mapping) or payload.get("schema") != "itemgauge-describe/1":
        raise DataError("not an itemgauge-describe/1 payload")
    numeric = {
        name: NumericSummary(mean=float(s["mean"]), sd=float(s["sd"]))
        for name, s in payload["numeric"].items()
    }
    ordinal: dict[str, dict[object, float]] = {}
    for name, shares in payload["ordinal"].items():
        if name == "D":
            ordinal[name] = {key: float(v) for key, v in shares.items()}
        else:
            ordinal[name] = {int(key): float(v) for key, v in shares.items()}
    return DescriptiveReport(numeric=numeric, ordinal=ordinal)


def encode_design(data: Dataset, variables: Sequence[str]) -> np.ndarray:
    """Stack the named variables into an (n, k) float design matrix.

    Ordinal variables enter as their integer codes; no dummy expansion.
    """
    for name in variables:
        variable_spec(name)
    n = len(data)
    design = np.empty((n, len(variables)), dtype=float)
    for j, name in enumerate(variables):
        design[:, j] = [getattr(item, name) for item in data.items]
    return design


# Weights chosen to keep every variable inside its published range while the
# bundled reference model maps the implied linear predictor onto all three
# difficulty levels with useful frequency.
DEFAULT_MARGINALS: Mapping[str, Mapping[int, float]] = {
    "T1": {1: 0.35, 2: 0.40, 3: 0.20, 4: 0.05},
    "T2": {0: 0.45, 1: 0.40, 2: 0.15},
    "T3": {1: 0.28, 2: 0.50, 3: 0.22},
    "C1": {2: 0.10, 3: 0.25, 4: 0.35, 5: 0.20, 6: 0.10},
    "C2": {2: 0.10, 3: 0.15, 4: 0.20, 5: 0.25, 6: 0.15, 7: 0.10, 8: 0.05},
    "C3": {1: 0.15, 2: 0.20, 3: 0.25, 4: 0.20, 5: 0.15, 6: 0.05},
    "C4": {1: 0.06, 2: 0.03, 3: 0.04, 4: 0.11, 5: 0.25, 6: 0.04, 7: 0.47},
    "C5": {1: 0.20, 2: 0.25, 3: 0.25, 4: 0.20, 5: 0.10},
    "S1": {1: 0.50, 2: 0.50},
    "S2": {0: 0.70, 1: 0.22, 2: 0.08},
    "S3": {1: 0.33, 2: 0.67},
    "S4": {1: 0.52, 2: 0.48},
    "S5": {0: 0.45, 1: 0.30, 2: 0.15, 3: 0.10},
    "S6": {0: 0.25, 1: 0.60, 2: 0.15},
    "S7": {0: 0.40, 1: 0.40, 2: 0.15, 3: 0.05},
}


def _normalized_marginal(name: str, table: Mapping[int, float]) -> tuple[np.ndarray, np.ndarray]:
    spec = variable_spec(name)
    if not table:
        raise DataError(f"marginal for {name} is empty")
    support = []
    weights = []
    for code in sorted(table):
        w = float(table[code])
        if isinstance(code, bool) or not isinstance(code, int):
            raise DataError(f"marginal for {name}: support value {code!r} is not an integer")
        if w < 0:
            raise DataError(f"marginal for {name}: negative probability for code {code}")
        if spec.kind == "count":
            if code < 0:
                raise DataError(f"marginal for {name}: count support must be nonnegative")
        elif code not in spec.domain:
            raise DataError(f"marginal for {name}: code {code} outside ordinal domain")
        support.append(code)
        weights.append(w)
    total = math.fsum(weights)
    if total <= 0:
        raise DataError(f"marginal for {name}: weights sum to zero")
    return np.array(support, dtype=int), np.array(weights, dtype=float) / total


def _sample_categorical(rng: np.random.Generator, support: np.ndarray,
                        probs: np.ndarray, n: int) -> np.ndarray:
    # Inverse-CDF over the raw uniform stream keeps output identical wherever
    # the PCG64 bit stream is identical, independent of Generator.choice details.
    edges = np.cumsum(probs)
    edges[-1] = 1.0
    u = rng.random(n)
    return support[np.searchsorted(edges, u, side="right")]


def generate_synthetic(
    marginals: Mapping[str, Mapping[int, float]] | None = None,
    model=None,
    n: int = 100,
    seed: int = 0,
) -> Dataset:
    """Draw n items with independent variables from the given marginals.

    When `model` (a fitted difficulty model) is supplied, each item receives a
    D label sampled from the model's predicted level probabilities; otherwise
    the dataset is unlabeled. Same arguments and seed give an identical
    dataset, hence byte-identical CSV serialization.
    """
    if n < 0:
        raise DataError("n must be nonnegative")
    tables = dict(DEFAULT_MARGINALS)
    if marginals:
        for name in marginals:
            variable_spec(name)
        tables.update(marginals)
    rng = np.random.Generator(np.random.PCG64(seed))
    columns: dict[str, np.ndarray] = {}
    for name in VARIABLE_NAMES:
        support, probs = _normalized_marginal(name, tables[name])
        columns[name] = _sample_categorical(rng, support, probs, n)

    labels: list[DifficultyLevel | None]
    if model is not None:
        from .polr import predict_from_codes

        u = rng.random(n)
        labels = []
        for i in range(n):
            codes = {name: int(columns[name][i]) for name in model.variables}
            probs_i = predict_from_codes(model, codes)
            if u[i] < probs_i.p_low:
                labels.append(DifficultyLevel.LOW)
            elif u[i] < probs_i.p_low + probs_i.p_moderate:
                labels.append(DifficultyLevel.MODERATE)
            else:
                labels.append(DifficultyLevel.HIGH)
    else:
        labels = [None] * n

    width = max(6, len(str(n)))
    items = tuple(
        ItemCoding(
            item_id=f"syn{i + 1:0{width}d}",
            D=labels[i],
            **{name: int(columns[name][i]) for name in VARIABLE_NAMES},
        )
        for i in range(n)
    )
    return Dataset(items)


def example_item() -> ItemCoding:
    """The worked sample item used throughout the docs (a labeled adder task)."""
    return ItemCoding(
        item_id="adder", T1=3, T2=1, T3=2, C1=1, C2=3, C3=4, C4=7, C5=2,
        S1=1, S2=1, S3=2, S4=2, S5=0, S6=1, S7=1, D=DifficultyLevel.MODERATE,
    )
