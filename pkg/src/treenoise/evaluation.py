"""Before/after comparison of trees grown on original and perturbed data."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .dataset import Dataset, DatasetError, split_train_test
from .perturb import PerturbConfig, PerturbReport, pipeline
from .tree import BuildParams, DecisionTree, ThresholdMode, build, similarity


def accuracy(tree: DecisionTree, ds: Dataset) -> float:
    """Fraction of records whose predicted class equals the recorded one."""
    if ds.n == 0:
        raise DatasetError("accuracy of an empty dataset")
    return float(np.mean(tree.predict(ds) == ds.labels))


@dataclass(frozen=True)
class AttributeDistortion:
    changed_fraction: float
    mean_delta: float | None = None
    mean_abs_delta: float | None = None
    max_abs_delta: float | None = None


def distortion(original: Dataset, perturbed: Dataset) -> dict[str, AttributeDistortion]:
    """Per-attribute change statistics between row-aligned datasets.

    Numeric attributes report mean, mean absolute and max absolute deltas
    (perturbed minus original); every attribute reports the fraction of
    changed cells.
    """
    if original.schema != perturbed.schema or original.n != perturbed.n:
        raise DatasetError("distortion needs datasets with identical schema and row count")
    out = {}
    for attr in original.schema.attributes:
        a, b = original.column(attr.name), perturbed.column(attr.name)
        changed = float(np.mean(a != b))
        if attr.is_numeric:
            delta = b - a
            out[attr.name] = AttributeDistortion(
                changed, float(delta.mean()), float(np.abs(delta).mean()), float(np.abs(delta).max())
            )
        else:
            out[attr.name] = AttributeDistortion(changed)
    return out


@dataclass
class EvalReport:
    accuracy_original_train: float
    accuracy_original_test: float
    accuracy_perturbed_train: float
    accuracy_perturbed_test: float
    tree_similarity: float
    distortion: dict[str, AttributeDistortion]
    config: dict = field(default_factory=dict)
    perturb_report: PerturbReport | None = None

    @property
    def test_gap(self) -> float:
        return abs(self.accuracy_original_test - self.accuracy_perturbed_test)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["test_gap"] = self.test_gap
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self) -> str:
        """Plain-text Before/After table of classifier accuracies."""
        rows = [
            ("Training data", self.accuracy_original_train, self.accuracy_perturbed_train),
            ("Test data", self.accuracy_original_test, self.accuracy_perturbed_test),
        ]
        lines = [f"{'':<16}{'Before Perturbation':>22}{'After Perturbation':>22}"]
        for name, before, after in rows:
            lines.append(f"{name:<16}{before * 100:>21.2f}%{after * 100:>21.2f}%")
        lines.append(f"Tree similarity: {self.tree_similarity:.3f}")
        return "\n".join(lines) + "\n"


def compare_runs(
    ds: Dataset,
    build_params: BuildParams | None = None,
    cfg: PerturbConfig | None = None,
    test_fraction: float = 0.3,
    seed: int = 42,
    domain_overrides: Mapping[str, tuple[float, float]] | None = None,
) -> EvalReport:
    """Split, perturb the training part, grow both trees and score them.

    Both trees are scored on the original training and test records; the
    test partition is never perturbed.
    """
    cfg = cfg or PerturbConfig()
    train, test = split_train_test(ds, test_fraction, seed)
    result = pipeline(train, build_params, cfg, domain_overrides)
    original_tree = result.tree
    perturbed_tree = build(result.perturbed, build_params)
    return EvalReport(
        accuracy_original_train=accuracy(original_tree, train),
        accuracy_original_test=accuracy(original_tree, test),
        accuracy_perturbed_train=accuracy(perturbed_tree, train),
        accuracy_perturbed_test=accuracy(perturbed_tree, test),
        tree_similarity=similarity(original_tree, perturbed_tree, ThresholdMode.IGNORE),
        distortion=distortion(train, result.perturbed),
        config={
            "perturb": cfg.to_dict(),
            "build": {
                "min_records_to_split": (build_params or BuildParams()).min_records_to_split,
                "criterion": (build_params or BuildParams()).criterion.value,
                "max_depth": (build_params or BuildParams()).max_depth,
            },
            "test_fraction": test_fraction,
            "seed": seed,
            "stratified": bool(train.meta.get("stratified", True)),
        },
        perturb_report=result.report,
    )
