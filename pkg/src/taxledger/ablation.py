"""Four-way modality ablation: hashtags / comments / images / multi-modal.

All four models share the training protocol and differ only in which
feature branches are active; per-branch RNG streams derive from the
master seed so the runs are independent yet reproducible, and could be
trained in parallel.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Callable

import numpy as np

from .domain import AnnotatedPost
from .fusion import (
    BRANCH_NAMES,
    FeatureBundle,
    FusionConfig,
    FusionParams,
    TrainReport,
    branch_config,
    featurize_posts,
    forward,
    train_matrices,
)
from .ingestion import DatasetSplit
from .metrics import EvalReport, evaluate_scores
from .rng import derive_seed

logger = logging.getLogger(__name__)

ABLATION_BRANCHES = (*BRANCH_NAMES, "multi-modal")


def _column_range(dims: tuple[int, int, int], branch: str) -> slice:
    if branch == "multi-modal":
        return slice(0, sum(dims))
    i = BRANCH_NAMES.index(branch)
    start = sum(dims[:i])
    return slice(start, start + dims[i])


def run_ablation(
    split: DatasetSplit,
    config: FusionConfig,
    bundle_fn: Callable[[AnnotatedPost], FeatureBundle],
) -> dict[str, tuple[EvalReport, TrainReport, FusionParams]]:
    """Train the three single-modality models and the fused model.

    Features are computed once over the full joint space and sliced per
    branch. Returns per-branch (eval report on the test split, training
    report, final parameters), keyed by branch name.
    """
    x_train, y_train = featurize_posts(split.train, bundle_fn, config.dims)
    x_val, y_val = featurize_posts(split.validation, bundle_fn, config.dims)
    x_test, y_test = featurize_posts(split.test, bundle_fn, config.dims)

    results: dict[str, tuple[EvalReport, TrainReport, FusionParams]] = {}
    for index, branch in enumerate(ABLATION_BRANCHES):
        cols = _column_range(config.dims, branch)
        cfg = replace(
            branch_config(config, branch),
            seed=derive_seed(config.seed, "ablation", index),
        )
        report, params = train_matrices(
            x_train[:, cols], y_train, x_val[:, cols], y_val, cfg
        )
        scores = np.asarray(forward(params, x_test[:, cols]))
        pairs = [(float(s), int(t)) for s, t in zip(scores, y_test)]
        eval_report = evaluate_scores(pairs, threshold=cfg.threshold)
        logger.info(
            "ablation %-12s P=%.3f R=%.3f F1=%.3f AUC=%.3f",
            branch, eval_report.precision, eval_report.recall, eval_report.f1, eval_report.auc,
        )
        results[branch] = (eval_report, report, params)
    return results


def ablation_table(results: dict[str, tuple[EvalReport, TrainReport, FusionParams]]) -> dict:
    """Rows of the per-modality performance table, evaluation order fixed."""
    rows = []
    for branch in ABLATION_BRANCHES:
        eval_report, _train_report, _params = results[branch]
        rows.append(
            {
                "input": branch,
                "precision": eval_report.precision,
                "recall": eval_report.recall,
                "f1": eval_report.f1,
                "auc": eval_report.auc,
            }
        )
    return {"rows": rows}
