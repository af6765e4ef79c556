"""Subject-grouped cross-validation plans."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Fold:
    train_ids: list[str]
    test_ids: list[str]
    train_subjects: list[str]
    test_subjects: list[str]
    replication: int = 0
    name: str = ""


@dataclass
class CvPlan:
    kind: str  # "losocv" | "5x2"
    folds: list[Fold] = field(default_factory=list)
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


def _by_subject(instances) -> dict[str, list[str]]:
    groups: dict[str, list[str]] = {}
    for inst in instances:
        groups.setdefault(inst.subject_id, []).append(inst.instance_id)
    return dict(sorted(groups.items()))


def _fold(groups, train_s, test_s, rep, name) -> Fold:
    train_ids = sorted(i for s in train_s for i in groups[s])
    test_ids = sorted(i for s in test_s for i in groups[s])
    return Fold(train_ids, test_ids, sorted(train_s), sorted(test_s), rep, name)


def losocv_plan(instances) -> CvPlan:
    """One fold per subject, testing on all of that subject's instances."""
    groups = _by_subject(instances)
    if len(groups) < 2:
        raise ValueError("leave-one-subject-out needs at least two subjects")
    subjects = list(groups)
    folds = [
        _fold(groups, [s for s in subjects if s != held], [held], 0, f"loso-{held}")
        for held in subjects
    ]
    return CvPlan("losocv", folds)


def five_by_two_plan(instances, seed: int = 0, replications: int = 5) -> CvPlan:
    """Five seeded subject-level halvings, each used in both directions (10 folds)."""
    groups = _by_subject(instances)
    if len(groups) < 2:
        raise ValueError("5x2 cross-validation needs at least two subjects")
    subjects = list(groups)
    rng = np.random.default_rng(seed)
    folds = []
    for rep in range(replications):
        perm = [subjects[i] for i in rng.permutation(len(subjects))]
        half = len(perm) // 2
        a, b = perm[:half], perm[half:]
        folds.append(_fold(groups, a, b, rep, f"5x2-r{rep}-a"))
        folds.append(_fold(groups, b, a, rep, f"5x2-r{rep}-b"))
    return CvPlan("5x2", folds, seed)


def make_plan(kind: str, instances, seed: int = 0) -> CvPlan:
    if kind == "losocv":
        return losocv_plan(instances)
    if kind in ("5x2", "five_by_two"):
        return five_by_two_plan(instances, seed)
    raise ValueError(f"unknown plan kind {kind!r}; expected 'losocv' or '5x2'")
