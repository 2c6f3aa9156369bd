"""Holdout evaluation: dataset splitting, confusion matrices, accuracy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .items import Dataset, DifficultyLevel, LEVEL_NAMES
from .polr import FittedModel, classify


@dataclass(frozen=True)
class ConfusionMatrix:
    """3x3 counts, rows = actual level, columns = predicted level."""

    counts: tuple[tuple[int, int, int], ...]
    course: str | None = None

    def __post_init__(self) -> None:
        counts = tuple(tuple(int(c) for c in row) for row in self.counts)
        if len(counts) != 3 or any(len(row) != 3 for row in counts):
            raise DataError("confusion matrix must be 3x3")
        if any(c < 0 for row in counts for c in row):
            raise DataError("confusion matrix counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def row_total(self, level: DifficultyLevel) -> int:
        return sum(self.counts[int(level) - 1])


def accuracy(matrix: ConfusionMatrix) -> float:
    """Trace over total; the share of items classified at their actual level."""
    total = matrix.total
    if total == 0:
        raise DataError("confusion matrix is empty")
    trace = sum(matrix.counts[i][i] for i in range(3))
    return trace / total


def confusion(model: FittedModel, data: Dataset, course: str | None = None) -> ConfusionMatrix:
    """Confusion matrix of the model's classifications on labeled data."""
    if len(data) == 0:
        raise DataError("dataset is empty")
    if not data.labeled:
        raise DataError("confusion requires a fully labeled dataset")
    grid = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    for item in data.items:
        predicted = classify(model, item)
        grid[int(item.D) - 1][int(predicted) - 1] += 1
    return ConfusionMatrix(counts=tuple(tuple(row) for row in grid), course=course)


def confusion_by_course(model: FittedModel, data: Dataset) -> tuple[ConfusionMatrix, ...]:
    """One confusion matrix per course tag, in order of first appearance.

    Items without a course tag are grouped under course None.
    """
    if len(data) == 0:
        raise DataError("dataset is empty")
    if not data.labeled:
        raise DataError("confusion requires a fully labeled dataset")
    order: list[str | None] = []
    groups: dict[str | None, list[int]] = {}
    for i, course in enumerate(data.courses):
        if course not in groups:
            order.append(course)
            groups[course] = []
        groups[course].append(i)
    return tuple(
        confusion(model, data.subset(groups[course]), course=course) for course in order
    )


def split(data: Dataset, test_fraction: float, seed: int,
          stratify: bool = True) -> tuple[Dataset, Dataset]:
    """Deterministic train/test split; stratified on D by default.

    Stratification draws round(fraction * count) test items per level, so
    each level's share is preserved within one item.
    """
    if not 0.0 <= test_fraction <= 1.0:
        raise DataError(f"test_fraction must be in [0, 1], got {test_fraction}")
    n = len(data)
    rng = np.random.Generator(np.random.PCG64(seed))
    test_indices: list[int] = []
    if stratify:
        if not data.labeled:
            raise DataError("stratified split requires a fully labeled dataset")
        for level in DifficultyLevel:
            level_idx = [i for i, item in enumerate(data.items) if item.D == level]
            k = int(round(test_fraction * len(level_idx)))
            # Order by fresh uniforms: only the PCG64 stream determines the draw.
            order = np.argsort(rng.random(len(level_idx)), kind="stable")
            test_indices.extend(level_idx[j] for j in order[:k])
    else:
        k = int(round(test_fraction * n))
        order = np.argsort(rng.random(n), kind="stable")
        test_indices.extend(int(j) for j in order[:k])
    test_set = set(test_indices)
    train_idx = [i for i in range(n) if i not in test_set]
    test_idx = sorted(test_set)
    return data.subset(train_idx), data.subset(test_idx)


def evaluation_to_dict(matrices: Sequence[ConfusionMatrix]) -> dict:
    reports = []
    for m in matrices:
        reports.append(
            {
                "course": m.course,
                "levels": list(LEVEL_NAMES),
                "counts": [list(row) for row in m.counts],
                "accuracy": accuracy(m),
            }
        )
    payload: dict = {"schema": "itemgauge-evaluation/1", "reports": reports}
    if len(matrices) > 1:
        payload["mean_accuracy"] = sum(accuracy(m) for m in matrices) / len(matrices)
    return payload


def evaluation_from_dict(payload: Mapping) -> tuple[ConfusionMatrix, ...]:
    if not isinstance(payload, Mapping) or payload.get("schema") != "itemgauge-evaluation/1":
        raise DataError("not an itemgauge-evaluation/1 payload")
    matrices = []
    for report in payload["reports"]:
        matrices.append(
            ConfusionMatrix(
                counts=tuple(tuple(int(c) for c in row) for row in report["counts"]),
                course=report["course"],
            )
        )
    return tuple(matrices)
