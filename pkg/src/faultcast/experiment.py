"""Full-protocol evaluation: repeated grouped CV with nested grid search.

Each (seed, fold) execution selects the transform hyperparameters and the
ridge alpha jointly on an inner grouped 5-fold over the training machines,
refits on the full training split (timed), and evaluates on the held-out
machines.  Summaries report mean and standard deviation per metric over all
executions.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from .dataset import DatasetManifest, flatten_tabular
from .folds import FoldPlan, assign_machines, plan_folds
from .metrics import MetricsRecord, compute_metrics
from .ridge import ALPHA_GRID_DEFAULT, fit_ridge_path, select_alpha
from .transforms import HydraTransform, MiniRocketTransform, RocketTransform

TRANSFORM_CLASSES = {
    "rocket": RocketTransform,
    "minirocket": MiniRocketTransform,
    "hydra": HydraTransform,
}

DEFAULT_GRIDS = {
    "hydra": {
        "n_groups": [4, 8, 16, 32],
        "kernels_per_group": [2, 4, 8],
        "alpha": list(ALPHA_GRID_DEFAULT),
    },
    "minirocket": {
        "num_features": [250, 500, 1000, 2000, 4000],
        "alpha": list(ALPHA_GRID_DEFAULT),
    },
    "rocket": {
        "num_features": [250, 500, 1000, 2000, 4000],
        "alpha": list(ALPHA_GRID_DEFAULT),
    },
    "ridge-tabular": {"alpha": list(ALPHA_GRID_DEFAULT)},
}


@dataclass
class MethodSpec:
    """A named method: a transform class plus fixed constructor arguments."""

    name: str
    fixed_params: dict = field(default_factory=dict)

    def make_transform(self, seed, **params):
        cls = TRANSFORM_CLASSES[self.name]
        kwargs = dict(self.fixed_params)
        kwargs.update(params)
        if self.name == "rocket" and "num_features" in kwargs:
            # the grid counts output columns; ROCKET emits 2 per kernel
            kwargs["n_kernels"] = max(1, kwargs.pop("num_features") // 2)
        return cls(random_state=seed, **kwargs)


def derive_seed(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _split_grid(grid):
    grid = dict(grid)
    alphas = grid.pop("alpha", list(ALPHA_GRID_DEFAULT))
    names = sorted(grid)
    combos = [
        dict(zip(names, values))
        for values in product(*(grid[n] for n in names))
    ] or [{}]
    return combos, list(alphas)


def _inner_plan(machines, labels, inner_k, seed):
    stats = {}
    for m, y in zip(machines, labels):
        pos, tot = stats.get(m, (0, 0))
        stats[m] = (pos + int(y), tot + 1)
    k = min(inner_k, len(stats))
    rng = np.random.default_rng(seed)
    return assign_machines(stats, k, rng)


def _evaluate_combo(tensor, labels, machines, inner_folds, method, combo,
                    alphas, seed, balanced):
    """Mean inner-fold balanced accuracy per alpha for one combo."""
    scores = np.zeros(len(alphas))
    used = 0
    for fold_idx, test_machines in enumerate(inner_folds):
        mask = np.isin(machines, list(test_machines))
        y_tr, y_te = labels[~mask], labels[mask]
        if len(np.unique(y_tr)) < 2 or len(np.unique(y_te)) < 2:
            continue
        transform = method.make_transform(
            derive_seed(seed, fold_idx), **combo
        )
        transform.fit(tensor[~mask])
        f_tr = transform.transform(tensor[~mask])
        f_te = transform.transform(tensor[mask])
        models = fit_ridge_path(f_tr, y_tr, alphas, balanced=balanced)
        for i, model in enumerate(models):
            pred = model.predict(f_te)
            scores[i] += compute_metrics(y_te, pred).balanced_accuracy
        used += 1
    if used == 0:
        raise ValueError("all inner folds were single-class")
    return scores / used


def run_fold(manifest_arrays, method, grid, assignment, inner_k=5,
             auc_mode="hard", balanced=False) -> MetricsRecord:
    """One (seed, fold) execution of the protocol."""
    tensor, labels, machines, scores_needed = manifest_arrays
    train_mask = np.isin(machines, list(assignment.train_machines))
    test_mask = np.isin(machines, list(assignment.test_machines))
    x_tr, y_tr, m_tr = tensor[train_mask], labels[train_mask], machines[
        train_mask
    ]
    x_te, y_te = tensor[test_mask], labels[test_mask]

    combos, alphas = _split_grid(grid)
    cell_seed = derive_seed(assignment.seed, assignment.fold)

    if len(combos) == 1 and len(alphas) == 1:
        # degenerate grid: nothing to select, skip the inner search
        combo, alpha = combos[0], alphas[0]
    else:
        inner_folds = _inner_plan(m_tr, y_tr, inner_k, cell_seed)
        best = None  # (score, combo_index, alpha_index)
        for ci, combo in enumerate(combos):
            combo_scores = _evaluate_combo(
                x_tr, y_tr, m_tr, inner_folds, method, combo, alphas,
                cell_seed, balanced,
            )
            for ai, score in enumerate(combo_scores):
                # ties resolved toward the larger alpha, then the earlier combo
                key = (score, -ci, ai)
                if best is None or key >= best[0]:
                    best = (key, ci, ai)
        combo, alpha = combos[best[1]], alphas[best[2]]

    start = time.perf_counter()
    transform = method.make_transform(derive_seed(cell_seed, 1), **combo)
    transform.fit(x_tr)
    f_tr = transform.transform(x_tr)
    model = fit_ridge_path(f_tr, y_tr, [alpha], balanced=balanced)[0]
    fit_time = time.perf_counter() - start

    f_te = transform.transform(x_te)
    pred = model.predict(f_te)
    scores = model.decision_function(f_te) if scores_needed else None
    return compute_metrics(
        y_te,
        pred,
        scores=scores,
        auc_mode=auc_mode,
        fit_time_seconds=fit_time,
        method=method.name,
        seed=assignment.seed,
        fold=assignment.fold,
    )


def run_experiment(
    manifest: DatasetManifest,
    method: MethodSpec,
    grid: Optional[dict] = None,
    plan: Optional[FoldPlan] = None,
    inner_k: int = 5,
    auc_mode: str = "hard",
    balanced: bool = False,
):
    """Run the full repeated-CV protocol for one method.

    Returns ``(records, summary)`` where ``summary`` maps metric name to
    ``(mean, std)`` over the executions.  A failing fold aborts the whole
    experiment.
    """
    grid = grid if grid is not None else DEFAULT_GRIDS[method.name]
    labels = manifest.labels()
    machines = manifest.machines()
    if plan is None:
        plan = plan_folds(machines, labels)
    tensor = manifest.tensor()
    arrays = (tensor, labels, machines, auc_mode == "score")
    records = [
        run_fold(
            arrays, method, grid, assignment,
            inner_k=inner_k, auc_mode=auc_mode, balanced=balanced,
        )
        for assignment in plan
    ]
    return records, summarize(records)


def run_nontemporal_baseline(
    manifest: DatasetManifest,
    grid: Optional[dict] = None,
    plan: Optional[FoldPlan] = None,
    inner_k: int = 5,
    auc_mode: str = "hard",
    balanced: bool = False,
    per_day_vote: bool = False,
):
    """Ridge on the flattened N*L x D table under the same grouped CV.

    Predictions are evaluated per row by default; with ``per_day_vote``
    each day's label is the majority vote of its 144 row predictions.
    """
    grid = grid if grid is not None else DEFAULT_GRIDS["ridge-tabular"]
    alphas = list(grid.get("alpha", ALPHA_GRID_DEFAULT))
    x, y, groups, sample_index = flatten_tabular(manifest)
    day_labels = manifest.labels()
    if plan is None:
        plan = plan_folds(manifest.machines(), day_labels)

    records = []
    for assignment in plan:
        train_mask = np.isin(groups, list(assignment.train_machines))
        test_mask = np.isin(groups, list(assignment.test_machines))
        cell_seed = derive_seed(assignment.seed, assignment.fold)
        alpha = select_alpha(
            x[train_mask], y[train_mask], groups[train_mask],
            alphas=alphas, inner_k=inner_k, seed=cell_seed,
            balanced=balanced,
        )
        start = time.perf_counter()
        model = fit_ridge_path(
            x[train_mask], y[train_mask], [alpha], balanced=balanced
        )[0]
        fit_time = time.perf_counter() - start

        row_pred = model.predict(x[test_mask])
        row_scores = model.decision_function(x[test_mask])
        if per_day_vote:
            idx = sample_index[test_mask]
            day_ids = np.unique(idx)
            pred = np.array(
                [int(row_pred[idx == d].mean() > 0.5) for d in day_ids]
            )
            scores = np.array(
                [row_scores[idx == d].mean() for d in day_ids]
            )
            y_te = day_labels[day_ids]
        else:
            pred, scores, y_te = row_pred, row_scores, y[test_mask]
        records.append(
            compute_metrics(
                y_te,
                pred,
                scores=scores if auc_mode == "score" else None,
                auc_mode=auc_mode,
                fit_time_seconds=fit_time,
                method="ridge-tabular",
                seed=assignment.seed,
                fold=assignment.fold,
            )
        )
    return records, summarize(records)


def permute_labels_within_machines(
    manifest: DatasetManifest, seed=0
) -> DatasetManifest:
    """Label-permutation control: shuffle labels within each machine."""
    rng = np.random.default_rng(seed)
    machines = manifest.machines()
    labels = manifest.labels().copy()
    for machine in np.unique(machines):
        idx = np.flatnonzero(machines == machine)
        labels[idx] = labels[rng.permutation(idx)]
    samples = []
    for sample, label in zip(manifest.samples, labels):
        clone = type(sample)(
            machine_id=sample.machine_id,
            date=sample.date,
            cycle_id=sample.cycle_id,
            series=sample.series,
            label=int(label),
            days_to_failure=sample.days_to_failure,
        )
        samples.append(clone)
    return DatasetManifest(
        samples=samples,
        vocabulary=manifest.vocabulary,
        policy=manifest.policy,
        raw_counts=manifest.raw_counts,
    )


def summarize(records):
    """Per-metric (mean, std) over executions, in fixed sorted order."""
    order = np.lexsort(
        (
            [r.fold or 0 for r in records],
            [r.seed or 0 for r in records],
        )
    )
    records = [records[i] for i in order]
    summary = {}
    for name in MetricsRecord.METRIC_NAMES:
        values = np.array([getattr(r, name) for r in records])
        summary[name] = (float(values.mean()), float(values.std()))
    times = np.array(
        [r.fit_time_seconds for r in records if r.fit_time_seconds is not None]
    )
    if times.size:
        summary["fit_time_seconds"] = (float(times.mean()), float(times.std()))
    return summary


METRIC_LABELS = {
    "accuracy": "Accuracy",
    "balanced_accuracy": "Bal-Accuracy",
    "f1_macro": "F1",
    "auc": "AUC",
    "min_sensitivity": "MS",
    "fit_time_seconds": "Time (s)",
}


def format_summary_table(summaries: dict) -> str:
    """Aligned text table: one row per method, mean+-std per metric."""
    columns = list(METRIC_LABELS.values())
    name_width = max([len(m) for m in summaries] + [6]) + 2
    lines = [
        "Method".ljust(name_width)
        + "".join(f"{c:>22}" for c in columns)
    ]
    for method, summary in summaries.items():
        cells = []
        for key in METRIC_LABELS:
            if key in summary:
                mean, std = summary[key]
                cells.append(f"{mean:.4f} +- {std:.4f}".rjust(22))
            else:
                cells.append("-".rjust(22))
        lines.append(method.ljust(name_width) + "".join(cells))
    return "\n".join(lines)


def summary_csv(summaries: dict) -> str:
    """Machine-readable rows: method, metric, mean, std."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "metric", "mean", "std"])
    for method, summary in summaries.items():
        for metric, (mean, std) in summary.items():
            writer.writerow([method, metric, repr(mean), repr(std)])
    return buf.getvalue()


def records_csv(records) -> str:
    """Per-execution rows for downstream statistics."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["method", "seed", "fold", *MetricsRecord.METRIC_NAMES,
         "fit_time_seconds"]
    )
    for r in records:
        writer.writerow(
            [
                r.method,
                r.seed,
                r.fold,
                *[repr(getattr(r, n)) for n in MetricsRecord.METRIC_NAMES],
                repr(r.fit_time_seconds)
                if r.fit_time_seconds is not None
                else "",
            ]
        )
    return buf.getvalue()
