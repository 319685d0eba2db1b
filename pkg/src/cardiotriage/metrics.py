"""Classification metrics and inter-rater agreement statistics.

Zero-denominator metrics are reported as None ("undefined"), never
silently coerced to 0: on six-case test sets an empty predicted-positive
column is a real possibility and a fake 0.0 would mislead.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from pathlib import Path


class MetricsError(ValueError):
    """Inconsistent metric inputs (length mismatch, non-binary values, ...)."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary confusion counts; the positive class is high risk (1)."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise MetricsError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(preds: list[int], labels: list[int]) -> ConfusionMatrix:
    if len(preds) != len(labels):
        raise MetricsError(f"{len(preds)} predictions vs {len(labels)} labels")
    if len(preds) == 0:
        raise MetricsError("need at least one prediction")
    tp = fp = fn = tn = 0
    for p, t in zip(preds, labels):
        if p not in (0, 1) or t not in (0, 1):
            raise MetricsError(f"non-binary value in predictions/labels: ({p!r}, {t!r})")
        if p == 1 and t == 1:
            tp += 1
        elif p == 1 and t == 0:
            fp += 1
        elif p == 0 and t == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total < 1:
        raise MetricsError("accuracy of an empty confusion matrix is undefined")
    return (cm.tp + cm.tn) / cm.total


def precision(cm: ConfusionMatrix) -> float | None:
    denom = cm.tp + cm.fp
    return None if denom == 0 else cm.tp / denom


def recall(cm: ConfusionMatrix) -> float | None:
    denom = cm.tp + cm.fn
    return None if denom == 0 else cm.tp / denom


def f1(precision_value: float | None, recall_value: float | None) -> float | None:
    """Harmonic mean of precision and recall; None if either is undefined
    or both are zero."""
    if precision_value is None or recall_value is None:
        return None
    if precision_value + recall_value == 0.0:
        return None
    return 2.0 * precision_value * recall_value / (precision_value + recall_value)


def roc_points(scores: list[float], labels: list[int]) -> list[tuple[float, float]]:
    """ROC curve points (fpr, tpr) swept over distinct score thresholds,
    from (0, 0) to (1, 1). Equal scores move as one block."""
    if len(scores) != len(labels):
        raise MetricsError(f"{len(scores)} scores vs {len(labels)} labels")
    n_pos = sum(1 for v in labels if v == 1)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("ROC requires both classes present")
    pairs = sorted(zip(scores, labels), key=lambda sl: -sl[0])
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(pairs):
        j = i
        while j < len(pairs) and pairs[j][0] == pairs[i][0]:
            tp += pairs[j][1]
            fp += 1 - pairs[j][1]
            j += 1
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return points


def roc_auc(scores: list[float], labels: list[int]) -> float:
    """Area under the ROC curve by trapezoidal integration; equals the
    probability that a random positive outscores a random negative with
    ties counted one half."""
    points = roc_points(scores, labels)
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y1 + y0) / 2.0
    return area


def cohen_kappa(a: list[int], b: list[int]) -> float | None:
    """Chance-corrected agreement between two binary judgment vectors.

    kappa = (p_o - p_e) / (1 - p_e). When chance agreement p_e is exactly
    1 the statistic degenerates: returns 1.0 for perfect agreement and
    None otherwise.
    """
    if len(a) != len(b):
        raise MetricsError(f"judgment vectors differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise MetricsError("need at least one paired judgment")
    for v in itertools.chain(a, b):
        if v not in (0, 1):
            raise MetricsError(f"non-binary judgment {v!r}")
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    p_e = 0.0
    for c in (0, 1):
        p_e += (sum(1 for x in a if x == c) / n) * (sum(1 for y in b if y == c) / n)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else None
    return (p_o - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class EvaluationReport:
    """Confusion counts plus the derived metric set for one test run."""

    cm: ConfusionMatrix
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None
    auroc: float | None
    n_test: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auroc": self.auroc,
            "tp": self.cm.tp,
            "fp": self.cm.fp,
            "fn": self.cm.fn,
            "tn": self.cm.tn,
            "n_test": self.n_test,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, obj: dict) -> "EvaluationReport":
        cm = ConfusionMatrix(tp=obj["tp"], fp=obj["fp"], fn=obj["fn"], tn=obj["tn"])
        return cls(
            cm=cm,
            accuracy=obj["accuracy"],
            precision=obj["precision"],
            recall=obj["recall"],
            f1=obj["f1"],
            auroc=obj["auroc"],
            n_test=obj["n_test"],
        )


def evaluate(preds: list[int], labels: list[int], scores: list[float] | None = None) -> EvaluationReport:
    """Full report from parallel prediction/label (and optional score) lists.
    AUROC is included when scores are given and both classes appear."""
    cm = confusion(preds, labels)
    p = precision(cm)
    r = recall(cm)
    auroc = None
    if scores is not None and 0 < sum(labels) < len(labels):
        auroc = roc_auc(scores, labels)
    return EvaluationReport(
        cm=cm,
        accuracy=accuracy(cm),
        precision=p,
        recall=r,
        f1=f1(p, r),
        auroc=auroc,
        n_test=cm.total,
    )


@dataclass(frozen=True)
class RaterEntry:
    case_id: str
    likert: int
    risk_judgment: int

    def __post_init__(self):
        if not 1 <= self.likert <= 5:
            raise MetricsError(f"likert rating must be 1..5, got {self.likert}")
        if self.risk_judgment not in (0, 1):
            raise MetricsError(f"risk judgment must be 0 or 1, got {self.risk_judgment}")


@dataclass(frozen=True)
class RaterSheet:
    """One expert's Likert ratings and risk judgments over a case set."""

    rater: str
    entries: tuple[RaterEntry, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for entry in self.entries:
            if entry.case_id in seen:
                raise MetricsError(f"rater {self.rater!r}: duplicate case id {entry.case_id!r}")
            seen.add(entry.case_id)

    @property
    def case_ids(self) -> frozenset[str]:
        return frozenset(entry.case_id for entry in self.entries)

    def judgment_for(self, case_id: str) -> int:
        for entry in self.entries:
            if entry.case_id == case_id:
                return entry.risk_judgment
        raise KeyError(case_id)


def load_rater_sheets(path: str | Path) -> list[RaterSheet]:
    """Parse a ratings CSV (header rater,case_id,likert,risk_judgment);
    one file may carry several raters."""
    grouped: dict[str, list[RaterEntry]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"rater", "case_id", "likert", "risk_judgment"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise MetricsError(f"{path}: ratings CSV header must contain {sorted(required)}")
        for row in reader:
            where = f"{path}:{reader.line_num}"
            try:
                entry = RaterEntry(
                    case_id=row["case_id"],
                    likert=int(row["likert"]),
                    risk_judgment=int(row["risk_judgment"]),
                )
            except (TypeError, ValueError) as exc:
                raise MetricsError(f"{where}: {exc}") from None
            grouped.setdefault(row["rater"], []).append(entry)
    return [RaterSheet(rater=r, entries=tuple(entries)) for r, entries in grouped.items()]


def review_summary(sheets: list[RaterSheet], model_preds: dict[str, int] | None = None) -> dict:
    """Aggregate an expert review: grand-mean Likert rating plus Cohen's
    kappa for every rater pair and their arithmetic mean.

    All sheets must cover the same case ids; model_preds, when given, must
    cover them too (it carries no weight in the statistics).
    """
    if len(sheets) < 2:
        raise MetricsError(f"need at least 2 rater sheets, got {len(sheets)}")
    case_ids = sheets[0].case_ids
    for sheet in sheets[1:]:
        if sheet.case_ids != case_ids:
            missing = sorted(case_ids ^ sheet.case_ids)
            raise MetricsError(f"rater {sheet.rater!r} covers different case ids: {missing}")
    if model_preds is not None:
        uncovered = sorted(case_ids - set(model_preds))
        if uncovered:
            raise MetricsError(f"predictions missing for case ids: {uncovered}")

    ordered_cases = sorted(case_ids)
    ratings = [entry.likert for sheet in sheets for entry in sheet.entries]
    mean_likert = sum(ratings) / len(ratings)

    pairwise = []
    for sa, sb in itertools.combinations(sorted(sheets, key=lambda s: s.rater), 2):
        kappa = cohen_kappa(
            [sa.judgment_for(c) for c in ordered_cases],
            [sb.judgment_for(c) for c in ordered_cases],
        )
        pairwise.append({"rater_a": sa.rater, "rater_b": sb.rater, "kappa": kappa})
    defined = [p["kappa"] for p in pairwise if p["kappa"] is not None]
    mean_kappa = sum(defined) / len(defined) if defined else None
    return {
        "n_raters": len(sheets),
        "n_cases": len(case_ids),
        "mean_likert": mean_likert,
        "pairwise_kappas": pairwise,
        "mean_kappa": mean_kappa,
    }
