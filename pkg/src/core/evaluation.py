"""
5x2 cross-validation of the k-NN disclosure predictor.

Each replication shuffles the users with its own stream spawned from the
seed, splits them in two halves (the extra user of an odd count goes to
fold A), then trains on A / tests on B and trains on B / tests on A. A test
user's prediction is the fraction p of its k neighbours that disclose the
target; p > 1/2 predicts Disclosed, a tie predicts NotDisclosed.
"""
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.errors import ConfigurationError, InvalidInputError
from src.core.ingest import Dataset
from src.core.profile_model import DisclosureAttribute, UserVector, is_disclosed
from src.core.recommend import DEFAULT_K, DistanceConfig, NeighborIndex
from src.utils.logger import get_logger

logger = get_logger(__name__)

REPLICATIONS = 5
FOLD_NAMES = ("A->B", "B->A")


def classification_metrics(predictions: Sequence[Tuple[Real, int]]) -> Tuple[float, float]:
    """Accuracy and mean absolute error of vote fractions against 0/1 truth."""
    if not predictions:
        raise InvalidInputError("Cannot score an empty prediction list")
    correct = 0
    error = Fraction(0)
    for p, y in predictions:
        p = Fraction(p)
        if not 0 <= p <= 1 or y not in (0, 1):
            raise InvalidInputError(f"Invalid prediction pair ({p}, {y})")
        predicted = 1 if p > Fraction(1, 2) else 0
        correct += predicted == y
        error += abs(p - y)
    n = len(predictions)
    return correct / n, float(error / n)


@dataclass(frozen=True)
class FoldResult:
    replication: int
    fold: int
    test_ids: Tuple[str, ...]
    accuracy: float
    mae: float

    def to_dict(self) -> Dict[str, Any]:
        return {"replication": self.replication, "fold": self.fold, "test_ids": list(self.test_ids),
                "accuracy": self.accuracy, "mae": self.mae}


@dataclass(frozen=True)
class CvResult:
    target: DisclosureAttribute
    k: int
    seed: int
    mode: str
    folds: Tuple[FoldResult, ...]
    degenerate: bool = False

    @property
    def fold_accuracies(self) -> List[float]:
        return [f.accuracy for f in self.folds]

    @property
    def fold_maes(self) -> List[float]:
        return [f.mae for f in self.folds]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def accuracy_variance(self) -> float:
        return float(np.var(self.fold_accuracies, ddof=1))

    @property
    def mean_mae(self) -> float:
        return float(np.mean(self.fold_maes))

    @property
    def replication_accuracies(self) -> List[float]:
        by_rep: Dict[int, List[float]] = {}
        for f in self.folds:
            by_rep.setdefault(f.replication, []).append(f.accuracy)
        return [float(np.mean(by_rep[r])) for r in sorted(by_rep)]

    @property
    def replication_accuracy_variance(self) -> float:
        return float(np.var(self.replication_accuracies, ddof=1))

    def test_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for f in self.folds:
            for user_id in f.test_ids:
                counts[user_id] = counts.get(user_id, 0) + 1
        return counts

    def to_dict(self) -> Dict[str, Any]:
        return {
            "target": self.target.value,
            "k": self.k,
            "seed": self.seed,
            "mode": self.mode,
            "degenerate": self.degenerate,
            "fold_accuracies": self.fold_accuracies,
            "fold_maes": self.fold_maes,
            "mean_accuracy": self.mean_accuracy,
            "accuracy_variance": self.accuracy_variance,
            "mean_mae": self.mean_mae,
            "replication_accuracies": self.replication_accuracies,
            "replication_mean_accuracy": float(np.mean(self.replication_accuracies)),
            "replication_accuracy_variance": self.replication_accuracy_variance,
            "folds": [f.to_dict() for f in self.folds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def render(self, reference: Optional[Mapping[str, float]] = None) -> str:
        lines = [
            f"5x2 cross-validation (target={self.target.value}, k={self.k}, mode={self.mode}, seed={self.seed})",
            f"{'rep':<5}{'fold':<7}{'accuracy':>10}{'mae':>10}",
        ]
        for f in self.folds:
            lines.append(f"{f.replication + 1:<5}{FOLD_NAMES[f.fold]:<7}{f.accuracy:>10.4f}{f.mae:>10.4f}")
        lines += [
            "",
            f"{'Correctly classified instances':<34}{self.mean_accuracy * 100:.2f}%",
            f"{'Mean absolute error':<34}{self.mean_mae:.4f}",
            f"{'Accuracy variance (10 folds)':<34}{self.accuracy_variance:.6f}",
            f"{'Mean of replication means':<34}{np.mean(self.replication_accuracies) * 100:.2f}%",
            f"{'Variance of replication means':<34}{self.replication_accuracy_variance:.6f}",
        ]
        if self.degenerate:
            lines.append("Warning: only one class present for the target attribute")
        if reference:
            lines.append(f"{'Published reference (not reproducible)':<34}"
                         f"{reference['accuracy'] * 100:.0f}% / {reference['mae']:.4f}")
        return "\n".join(lines) + "\n"


def _evaluate_fold(replication: int, fold: int,
                   train: Sequence[UserVector], test: Sequence[UserVector],
                   target: DisclosureAttribute, k: int, cfg: DistanceConfig) -> FoldResult:
    index = NeighborIndex(train)
    predictions = []
    for user in test:
        neighbors = index.query(user, k, cfg)
        p = Fraction(sum(1 for n in neighbors if n.target_disclosed), k)
        predictions.append((p, int(is_disclosed(user, target))))
    accuracy, mae = classification_metrics(predictions)
    logger.debug(f"rep {replication} fold {fold}: accuracy {accuracy:.4f}, mae {mae:.4f}")
    return FoldResult(replication, fold, tuple(u.user_id for u in test), accuracy, mae)


def five_by_two_cv(d: Dataset,
                   target: Union[DisclosureAttribute, str],
                   k: int = DEFAULT_K,
                   cfg: Optional[DistanceConfig] = None,
                   seed: int = 42,
                   workers: int = 1) -> CvResult:
    if not isinstance(target, DisclosureAttribute):
        target = DisclosureAttribute.parse(target)
    if k < 1:
        raise InvalidInputError(f"k must be positive, got {k}")
    if len(d) < 2 * k:
        raise InvalidInputError(f"Dataset of {len(d)} users is too small for k={k} (need {2 * k})")
    if seed < 0:
        raise InvalidInputError(f"Seed must be non-negative, got {seed}")
    if workers < 1:
        raise ConfigurationError(f"workers must be positive, got {workers}")

    users = list(d.users)
    # One age scale for every fold, taken from the whole dataset
    cfg = (cfg or DistanceConfig()).excluding(target).resolved(users)
    n = len(users)
    half = (n + 1) // 2

    tasks = []
    for replication, stream in enumerate(np.random.SeedSequence(seed).spawn(REPLICATIONS)):
        order = np.random.Generator(np.random.PCG64(stream)).permutation(n)
        fold_a = [users[i] for i in order[:half]]
        fold_b = [users[i] for i in order[half:]]
        tasks.append((replication, 0, fold_a, fold_b))
        tasks.append((replication, 1, fold_b, fold_a))

    def run(task):
        replication, fold, train, test = task
        return _evaluate_fold(replication, fold, train, test, target, k, cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(task) for task in tasks]
    results.sort(key=lambda f: (f.replication, f.fold))

    classes = {is_disclosed(u, target) for u in users}
    degenerate = len(classes) < 2
    if degenerate:
        logger.warning(f"Target {target.value} has a single class in the dataset")

    result = CvResult(target, k, seed, cfg.mode.value, tuple(results), degenerate)
    logger.info(f"5x2 CV on {target.value}: accuracy {result.mean_accuracy:.4f}, mae {result.mean_mae:.4f}")
    return result


def load_reference(path: Union[str, Path]) -> Dict[DisclosureAttribute, Dict[str, float]]:
    """Published per-attribute accuracy/MAE values, keyed by attribute."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return {DisclosureAttribute.parse(name): values for name, values in data.get("results", {}).items()}
