"""Stratified random train/test splits."""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np

from qdaphase.config_manager import get_config
from qdaphase.errors import DataError, ParameterError
from qdaphase.rng import stream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitPlan:
    """n_splits stratified splits holding out `fraction` of each class."""

    n_splits: int = 15
    fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.n_splits < 1:
            raise ParameterError(f"n_splits must be at least 1, got {self.n_splits}")
        if not 0.0 < self.fraction < 1.0:
            raise ParameterError(f"fraction must lie in (0, 1), got {self.fraction}")
        if self.seed < 0:
            raise ParameterError(f"seed must be non-negative, got {self.seed}")

    @classmethod
    def from_settings(cls, seed: int = 0, n_splits: Optional[int] = None) -> "SplitPlan":
        config = get_config()
        return cls(n_splits=n_splits or config.bench_n_splits, fraction=config.bench_fraction,
                   seed=seed)

    def test_size(self, class_size: int) -> int:
        """Round-half-up of fraction * class_size."""
        return int(np.floor(self.fraction * class_size + 0.5))


class Split(NamedTuple):
    train: np.ndarray
    test: np.ndarray


def make_splits(labels, plan: SplitPlan) -> List[Split]:
    """Stratified splits of a label vector (or anything with a `y` attribute).

    Split s draws from stream ("splits", s); index arrays are sorted.

    Raises:
        DataError: a class too small to leave samples on both sides
    """
    y = np.asarray(getattr(labels, "y", labels))
    classes = np.unique(y)
    members = {k: np.flatnonzero(y == k) for k in classes}
    sizes = {k: plan.test_size(len(idx)) for k, idx in members.items()}
    for k, idx in members.items():
        if sizes[k] < 1 or sizes[k] >= len(idx):
            raise DataError(f"class {k} with {len(idx)} samples is too small to split "
                            f"at fraction {plan.fraction}")

    splits = []
    for s in range(plan.n_splits):
        rng = stream(plan.seed, "splits", s)
        test_parts = [rng.permutation(members[k])[:sizes[k]] for k in classes]
        test = np.sort(np.concatenate(test_parts))
        mask = np.ones(y.shape[0], dtype=bool)
        mask[test] = False
        splits.append(Split(train=np.flatnonzero(mask), test=test))
    logger.info(f"{plan.n_splits} stratified splits, test sizes "
                + ", ".join(f"class {k}: {sizes[k]}" for k in classes))
    return splits
