"""
Training-error grid search over (q1, q2, delta, L) x t x C for the
real-data QDA rule and its LDA baseline.

The forward PCS paths of each class are computed once per training set
(PcsCache) and cut for every (q1, q2, delta, L). For each of those a single
Algorithm2Base is built, and the whole (t, C) plane is scored without
refitting: with features sorted by |d|, the linear term at threshold t is a
prefix sum, so every t costs one column lookup.

Ties in training error break on smallest t, then smallest |C|, then
smaller C, then smallest (q1, q2, delta, L), so the result does not depend
on enumeration order.
"""

import hashlib
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from qdaphase.arw.sampling import LabeledDataset
from qdaphase.classify import Algorithm2Base, TrainedClassifier, predict_batch, prior_offset
from qdaphase.config_manager import get_config
from qdaphase.errors import EstimationError, NumericFailure, ParameterError
from qdaphase.linalg import quadratic_rows
from qdaphase.precision import PcsConfig, PcsScreen

logger = logging.getLogger(__name__)

METHODS = ("qda", "lda")


@dataclass(frozen=True)
class SearchSpace:
    """Hyperparameter grid.

    t runs over [0, max_j |d_j|] in steps of t_step (unless t_values is
    given) and C over [-c_max, c_max] in steps of c_step (unless c_values is
    given). (q1, q2) is the product of q_grid with itself unless q_pairs is
    given; every pair is combined with every (delta, L) in screen_pairs.
    """

    t_step: float = 0.1
    c_max: float = 50.0
    c_step: float = 1.0
    q_grid: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    screen_pairs: Tuple[Tuple[float, int], ...] = ((0.1, 30), (0.1, 50))
    t_values: Optional[Tuple[float, ...]] = None
    c_values: Optional[Tuple[float, ...]] = None
    q_pairs: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if self.t_step <= 0 or self.c_step <= 0 or self.c_max < 0:
            raise ParameterError("t_step and c_step must be positive and c_max non-negative")
        if not self.screen_pairs:
            raise ParameterError("screen_pairs must not be empty")
        if self.q_pairs is None and not self.q_grid:
            raise ParameterError("q_grid must not be empty")
        if self.q_pairs is not None and not self.q_pairs:
            raise ParameterError("q_pairs must not be empty")
        for name in ("t_values", "c_values"):
            values = getattr(self, name)
            if values is not None and len(values) == 0:
                raise ParameterError(f"{name} must not be empty")
        if self.t_values is not None and min(self.t_values) < 0:
            raise ParameterError("thresholds must be non-negative")

    @classmethod
    def from_settings(cls, c_max: Optional[float] = None) -> "SearchSpace":
        config = get_config()
        return cls(
            t_step=config.bench_t_step,
            c_max=config.bench_c_max if c_max is None else c_max,
            c_step=config.bench_c_step,
            q_grid=tuple(config.bench_q_grid),
            screen_pairs=tuple((float(d), int(L)) for d, L in config.bench_screen_pairs),
        )

    def c_grid(self) -> np.ndarray:
        if self.c_values is not None:
            return np.asarray(sorted(self.c_values), dtype=float)
        steps = int(np.floor(self.c_max / self.c_step + 1e-9))
        return np.arange(-steps, steps + 1) * self.c_step

    def t_grid(self, d: np.ndarray) -> np.ndarray:
        if self.t_values is not None:
            return np.asarray(sorted(self.t_values), dtype=float)
        top = float(np.max(np.abs(d))) if d.size else 0.0
        steps = int(np.floor(top / self.t_step + 1e-9))
        return np.arange(steps + 1) * self.t_step

    def pcs_configs(self) -> List[PcsConfig]:
        pairs = self.q_pairs
        if pairs is None:
            pairs = tuple((q1, q2) for q1 in self.q_grid for q2 in self.q_grid)
        configs = [PcsConfig(q1=float(q1), q2=float(q2), delta_screen=float(delta), L=int(L))
                   for q1, q2 in pairs for delta, L in self.screen_pairs]
        return sorted(configs, key=_config_key)

    @property
    def size(self) -> int:
        pairs = len(self.q_pairs) if self.q_pairs is not None else len(self.q_grid) ** 2
        return pairs * len(self.screen_pairs)


def _config_key(config: PcsConfig) -> Tuple[float, float, float, int]:
    return (config.q1, config.q2, config.delta_screen, config.L)


class PcsCache:
    """Forward PCS paths per (training set, class), shared across grid points.

    Keys are content hashes: `key_for` hashes a training index set and
    `key_for_data` the training matrix itself.
    """

    def __init__(self):
        self._screens: Dict[tuple, PcsScreen] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key_for(indices) -> str:
        idx = np.sort(np.asarray(indices, dtype=np.int64))
        return hashlib.sha1(idx.tobytes()).hexdigest()

    @staticmethod
    def key_for_data(data: LabeledDataset) -> str:
        digest = hashlib.sha1(np.ascontiguousarray(data.X).tobytes())
        digest.update(np.ascontiguousarray(data.y).tobytes())
        return digest.hexdigest()

    def __len__(self) -> int:
        return len(self._screens)

    def screens(self, key: str, data: LabeledDataset, configs: Sequence[PcsConfig],
                threads: Optional[int] = None) -> Tuple[PcsScreen, PcsScreen]:
        """Paths for both classes, long enough and deep enough for every config."""
        max_L = max(c.L for c in configs)
        result = []
        for k in (0, 1):
            X = data.class_samples(k)
            n, p = X.shape
            floor = min(c.entry_gate(p, n) for c in configs) if n > 0 and p > 1 else 0.0
            slot = (key, k, max_L, round(floor, 12))
            with self._lock:
                screen = self._screens.get(slot)
            if screen is None:
                screen = PcsScreen(X, max_L=max_L, floor=floor, threads=threads)
                with self._lock:
                    self._screens[slot] = screen
            result.append(screen)
        return result[0], result[1]


@dataclass(frozen=True, eq=False)
class SearchResult:
    """Best grid point of one method."""

    method: str
    config: PcsConfig
    t: float
    C: float
    train_err: float
    model: TrainedClassifier
    n_configs: int
    n_failed: int


def error_surface(base: Algorithm2Base, data: LabeledDataset, method: str,
                  t_values: np.ndarray, c_values: np.ndarray, lda_mode: Optional[str] = None,
                  scaled_linear: Optional[bool] = None, q: Optional[float] = None) -> np.ndarray:
    """Training error counts for every (t, C), shape (len(t_values), len(c_values))."""
    if method not in METHODS:
        raise ParameterError(f"method must be one of {', '.join(METHODS)}, got {method!r}")
    config = get_config()
    lda_mode = lda_mode or config.lda_threshold_mode
    scaled_linear = config.algorithm2_scaled_linear if scaled_linear is None else scaled_linear
    t_values = np.asarray(t_values, dtype=float)
    c_values = np.asarray(c_values, dtype=float)

    X, y = data.X, data.y
    xs = base.scaling.apply(X)
    xl = xs if scaled_linear else X
    if method == "qda":
        quad = quadratic_rows(xs, base.omega_diff)
    else:
        quad = np.zeros(X.shape[0])

    d = base.d
    order = np.argsort(-np.abs(d), kind="stable")
    abs_sorted = np.abs(d)[order]
    # number of features with |d_j| >= t, for every t
    k = np.searchsorted(-abs_sorted, -t_values, side="right")
    prefix = np.zeros((X.shape[0], d.shape[0] + 1))
    np.cumsum(xl[:, order] * d[order], axis=1, out=prefix[:, 1:])

    if method == "lda" and lda_mode == "clip":
        signs = np.zeros_like(prefix)
        np.cumsum(xl[:, order] * np.sign(d[order]), axis=1, out=signs[:, 1:])
        total = prefix[:, -1:]
        linear = 2.0 * (t_values[None, :] * signs[:, k] + total - prefix[:, k])
        linear[:, t_values == 0.0] = 2.0 * total
    else:
        linear = 2.0 * prefix[:, k]

    scores = quad[:, None] + linear + prior_offset(q)
    predicted = (scores[:, :, None] + c_values[None, None, :]) > 0.0
    return np.sum(predicted != (y[:, None, None] == 1), axis=0)


def _best_cell(errors: np.ndarray, t_values: np.ndarray, c_values: np.ndarray):
    """(count, t, C) of the minimum, breaking ties by t, |C|, C."""
    ti, ci = np.nonzero(errors == errors.min())
    order = np.lexsort((c_values[ci], np.abs(c_values[ci]), t_values[ti]))
    pick = order[0]
    return int(errors.min()), float(t_values[ti[pick]]), float(c_values[ci[pick]])


def grid_search_methods(train: LabeledDataset, space: SearchSpace,
                        methods: Sequence[str] = METHODS, cache: Optional[PcsCache] = None,
                        train_key: Optional[str] = None, threads: Optional[int] = None,
                        ) -> Dict[str, SearchResult]:
    """Run the grid once and pick the best point for each method.

    Both methods see identical (q1, q2, delta, L), t and C grids.

    Raises:
        EstimationError: every grid point failed
    """
    methods = tuple(dict.fromkeys(methods))
    for method in methods:
        if method not in METHODS:
            raise ParameterError(f"method must be one of {', '.join(METHODS)}, got {method!r}")
    threads = threads or get_config().threads
    cache = cache if cache is not None else PcsCache()
    key = train_key or PcsCache.key_for_data(train)
    configs = space.pcs_configs()
    c_values = space.c_grid()

    screen0, screen1 = cache.screens(key, train, configs, threads=threads)

    def evaluate(config: PcsConfig):
        try:
            base = Algorithm2Base.from_estimates(train, screen0.estimate(config), screen1.estimate(config))
            t_values = space.t_grid(base.d)
            best = {}
            for method in methods:
                errors = error_surface(base, train, method, t_values, c_values)
                count, t, C = _best_cell(errors, t_values, c_values)
                best[method] = (count, t, abs(C), C) + _config_key(config)
            return config, best
        except NumericFailure as e:
            logger.warning(f"Grid point {_config_key(config)} failed: {e}")
            return config, None

    if threads > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(evaluate, configs))
    else:
        outcomes = [evaluate(config) for config in configs]

    failed = sum(1 for _, best in outcomes if best is None)
    if failed == len(configs):
        raise EstimationError(f"all {len(configs)} grid points failed")

    results = {}
    for method in methods:
        winner_key, winner_config = min((best[method], config) for config, best in outcomes
                                        if best is not None)
        _, t, _, C = winner_key[:4]
        base = Algorithm2Base.from_estimates(train, screen0.estimate(winner_config),
                                             screen1.estimate(winner_config))
        model = base.classifier(t, C, lda=method == "lda")
        labels, _ = predict_batch(model, train.X)
        train_err = float(np.mean(labels != train.y))
        logger.info(f"{method.upper()} best: q1={winner_config.q1:g} q2={winner_config.q2:g} "
                    f"delta={winner_config.delta_screen:g} L={winner_config.L} t={t:g} C={C:g} "
                    f"train error {train_err:.4f}")
        results[method] = SearchResult(method=method, config=winner_config, t=t, C=C,
                                       train_err=train_err, model=model,
                                       n_configs=len(configs), n_failed=failed)
    return results


def grid_search(train: LabeledDataset, space: SearchSpace, method: str = "qda",
                cache: Optional[PcsCache] = None, train_key: Optional[str] = None,
                threads: Optional[int] = None) -> SearchResult:
    """Minimum-training-error grid point of one method (real-data rule or LDA)."""
    return grid_search_methods(train, space, (method,), cache, train_key, threads)[method]
