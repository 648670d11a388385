"""Grouped stratified cross-validation plans.

Machines are the grouping unit: every sample of a machine lands in exactly
one test fold per seed, so no machine contributes to both train and test.
Stratification is greedy bin-packing on per-machine positive counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FoldAssignment:
    seed: int
    fold: int
    train_machines: frozenset
    test_machines: frozenset


@dataclass
class FoldPlan:
    k: int
    seeds: tuple
    assignments: list  # FoldAssignment, ordered by (seed, fold)

    def __iter__(self):
        return iter(self.assignments)

    def __len__(self):
        return len(self.assignments)


def _machine_stats(machines, labels):
    stats = {}
    for m, y in zip(machines, labels):
        pos, tot = stats.get(m, (0, 0))
        stats[m] = (pos + int(y), tot + 1)
    return stats


def assign_machines(stats, k, rng):
    """Greedy stratified assignment of machines to k folds.

    Machines are shuffled, then processed by positive count descending
    (the shuffle breaks ties); each goes to the fold whose positive count
    after the addition deviates least (squared) from the count implied by
    the global positive ratio at the fold's new size, ties to the smallest
    fold and then the lowest fold index.  Returns k machine-id lists.
    """
    machines = sorted(stats)
    if len(machines) < k:
        raise ValueError(f"need at least {k} machines, got {len(machines)}")
    order = list(rng.permutation(len(machines)))
    machines = [machines[i] for i in order]
    machines.sort(key=lambda m: -stats[m][0])  # stable: keeps shuffle in ties

    total_pos = sum(p for p, _ in stats.values())
    total = sum(t for _, t in stats.values())
    global_ratio = total_pos / total if total else 0.0

    folds = [[] for _ in range(k)]
    fold_pos = [0] * k
    fold_tot = [0] * k
    for m in machines:
        pos, tot = stats[m]
        best = None
        for j in range(k):
            new_pos = fold_pos[j] + pos
            new_tot = fold_tot[j] + tot
            deviation = (new_pos - new_tot * global_ratio) ** 2
            key = (deviation, new_tot, j)
            if best is None or key < best[0]:
                best = (key, j)
        j = best[1]
        folds[j].append(m)
        fold_pos[j] += pos
        fold_tot[j] += tot

    # every fold must receive at least one machine
    for j in range(k):
        if not folds[j]:
            donor = max(range(k), key=lambda i: len(folds[i]))
            moved = folds[donor].pop()
            folds[j].append(moved)
    return folds


def plan_folds(machines, labels, k=5, seeds=(0, 1, 2, 3, 4, 5)) -> FoldPlan:
    """Build the repeated grouped stratified CV plan.

    ``machines`` and ``labels`` are per-sample arrays.  Each seed produces
    an independent k-fold partition of the machine set; the plan therefore
    holds ``k * len(seeds)`` executions.
    """
    machines = np.asarray(machines)
    labels = np.asarray(labels)
    if machines.shape != labels.shape:
        raise ValueError("machines and labels must align")
    if labels.size and len(np.unique(labels)) < 2:
        raise ValueError("both classes must be present to stratify")
    stats = _machine_stats(machines, labels)
    all_machines = frozenset(stats)

    assignments = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        folds = assign_machines(stats, k, rng)
        for fold, test in enumerate(folds):
            test_set = frozenset(test)
            assignments.append(
                FoldAssignment(
                    seed=seed,
                    fold=fold,
                    train_machines=all_machines - test_set,
                    test_machines=test_set,
                )
            )
    return FoldPlan(k=k, seeds=tuple(seeds), assignments=assignments)
