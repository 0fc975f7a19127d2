"""
The QDA-vs-LDA benchmark: for every stratified split, grid-search both
methods on the training part with identical grids and score the winners on
the held-out part.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from qdaphase.classify import predict_batch
from qdaphase.config_manager import get_config
from qdaphase.errors import ExportError, ParameterError, QdaPhaseError
from qdaphase.realdata.corpus import Corpus
from qdaphase.realdata.search import METHODS, PcsCache, SearchSpace, grid_search_methods
from qdaphase.realdata.splits import SplitPlan, make_splits

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["split", "method", "q1", "q2", "delta", "L", "t", "C", "train_err", "test_err"]


@dataclass(frozen=True)
class BenchRow:
    split: int
    method: str
    q1: float
    q2: float
    delta: float
    L: int
    t: float
    C: float
    train_err: float
    test_err: float


@dataclass(frozen=True)
class BenchSummary:
    """Head-to-head counts of the first method against the second."""

    methods: Tuple[str, str]
    wins: Tuple[int, int]
    ties: int
    mean_test_err: Tuple[float, float]
    failed_splits: int

    def __str__(self) -> str:
        a, b = self.methods
        lines = [
            f"{a.upper()} wins: {self.wins[0]}",
            f"{b.upper()} wins: {self.wins[1]}",
            f"Ties: {self.ties}",
            f"Mean test error {a.upper()}: {self.mean_test_err[0]:.4f}",
            f"Mean test error {b.upper()}: {self.mean_test_err[1]:.4f}",
        ]
        if self.failed_splits:
            lines.append(f"Failed splits: {self.failed_splits}")
        return "\n".join(lines)


@dataclass(frozen=True)
class BenchReport:
    """Benchmark rows, ordered by split then method."""

    rows: Tuple[BenchRow, ...]
    methods: Tuple[str, ...]
    failed_splits: Tuple[int, ...] = ()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.__dict__ for r in self.rows], columns=REPORT_COLUMNS)

    def test_errors(self, method: str) -> List[float]:
        return [r.test_err for r in self.rows if r.method == method]

    def summary(self) -> BenchSummary:
        first, second = (self.methods + self.methods)[:2]
        by_split = {}
        for row in self.rows:
            by_split.setdefault(row.split, {})[row.method] = row.test_err
        wins = [0, 0]
        ties = 0
        for errs in by_split.values():
            a, b = errs[first], errs[second]
            if a < b:
                wins[0] += 1
            elif b < a:
                wins[1] += 1
            else:
                ties += 1
        means = tuple(float(np.mean(self.test_errors(m))) if self.test_errors(m) else math.nan
                      for m in (first, second))
        return BenchSummary(methods=(first, second), wins=(wins[0], wins[1]), ties=ties,
                            mean_test_err=means, failed_splits=len(self.failed_splits))

    def write_csv(self, path) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            self.to_frame().to_csv(path, index=False, float_format="%.10g", lineterminator="\n",
                                   encoding="utf-8")
        except OSError as e:
            logger.error(f"Error writing report {path}: {e}")
            raise ExportError(f"cannot write benchmark report ({e})", path=str(path)) from e
        return path


def _run_split(split_id: int, split, dataset, space: SearchSpace, methods: Tuple[str, ...],
               cache: PcsCache, threads: int) -> List[BenchRow]:
    train = dataset.subset(split.train)
    test = dataset.subset(split.test)
    results = grid_search_methods(train, space, methods, cache=cache,
                                  train_key=PcsCache.key_for(split.train), threads=threads)
    rows = []
    for method in methods:
        result = results[method]
        labels, _ = predict_batch(result.model, test.X)
        test_err = float(np.mean(labels != test.y))
        rows.append(BenchRow(split=split_id, method=method, q1=result.config.q1,
                             q2=result.config.q2, delta=result.config.delta_screen,
                             L=result.config.L, t=result.t, C=result.C,
                             train_err=result.train_err, test_err=test_err))
    logger.info(f"Split {split_id}: " + ", ".join(f"{r.method} test error {r.test_err:.4f}" for r in rows))
    return rows


def run_benchmark(corpus: Corpus, plan: SplitPlan, space: SearchSpace,
                  methods: Sequence[str] = METHODS, threads: Optional[int] = None) -> BenchReport:
    """Grid-search and test every method on every split.

    A split whose search fails is logged and listed in failed_splits.
    """
    methods = tuple(methods)
    if not methods:
        raise ParameterError("at least one method is required")
    threads = threads or get_config().threads
    dataset = corpus.to_dataset()
    splits = make_splits(corpus.y, plan)
    cache = PcsCache()
    distinct = tuple(dict.fromkeys(methods))

    split_threads = min(threads, len(splits))
    inner_threads = 1 if split_threads > 1 else threads

    def work(indexed):
        split_id, split = indexed
        try:
            rows = _run_split(split_id, split, dataset, space, distinct, cache, inner_threads)
        except QdaPhaseError as e:
            logger.warning(f"Split {split_id} failed: {e}")
            return split_id, None
        return split_id, rows

    indexed = list(enumerate(splits))
    if split_threads > 1:
        with ThreadPoolExecutor(max_workers=split_threads) as pool:
            outcomes = list(pool.map(work, indexed))
    else:
        outcomes = [work(item) for item in indexed]

    rows: List[BenchRow] = []
    failed = []
    for split_id, split_rows in sorted(outcomes, key=lambda item: item[0]):
        if split_rows is None:
            failed.append(split_id)
            continue
        rows.extend(split_rows)
    return BenchReport(rows=tuple(rows), methods=distinct, failed_splits=tuple(failed))
