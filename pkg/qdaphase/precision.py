"""
Sparse precision-matrix estimation by partial-correlation screening (PCS),
plus the diagonal truncations applied to estimates before classification.

PCS works node by node. For node i a forward screen adds, one stage at a
time, the node with the largest absolute partial correlation with i given
the nodes already chosen. Screening stops at L members or once that
partial correlation drops below the entry gate (1+q1)*sqrt(2 ln p / n) or
below delta_screen. The chosen set is then pruned once: members whose
partial correlation with i, given the other members, is below the retention
gate (1+q2)*sqrt(2 ln p / n) are dropped. A least-squares fit of node i on
the survivors gives the precision row
    omega_ii = 1 / sigma^2,   omega_ij = -beta_j / sigma^2
and the rows are symmetrized as (W + W')/2.

The forward path does not depend on the gates, so PcsScreen computes it once
and PcsScreen.estimate() cuts it for any (q1, q2, delta_screen, L).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from qdaphase.arw.sampling import PrecisionMatrix
from qdaphase.config_manager import get_config
from qdaphase.errors import EstimationError, ParameterError, PositiveDefiniteError
from qdaphase.linalg import as_dense, cholesky_lower

logger = logging.getLogger(__name__)

# Residual variances below this are treated as exact collinearity
_TINY = 1e-12

# Nodes per worker task
_NODE_BLOCK = 64


@dataclass(frozen=True)
class PcsConfig:
    """Tuning of the PCS estimator."""

    q1: float
    q2: float
    delta_screen: float = 0.1
    L: int = 30
    ridge: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.q1 <= 1.0 or not 0.0 < self.q2 <= 1.0:
            raise ParameterError(f"q1, q2 must lie in (0, 1], got q1={self.q1}, q2={self.q2}")
        if self.L < 1:
            raise ParameterError(f"L must be at least 1, got {self.L}")
        if self.delta_screen < 0.0 or self.ridge < 0.0:
            raise ParameterError("delta_screen and ridge must be non-negative")

    @classmethod
    def from_settings(cls) -> "PcsConfig":
        config = get_config()
        return cls(q1=config.pcs_q1, q2=config.pcs_q2, delta_screen=config.delta_screen,
                   L=config.neighbourhood_size, ridge=config.ridge)

    def noise_level(self, p: int, n: int) -> float:
        return math.sqrt(2.0 * math.log(p) / n) if p > 1 else 0.0

    def entry_gate(self, p: int, n: int) -> float:
        return max((1.0 + self.q1) * self.noise_level(p, n), self.delta_screen)

    def retention_gate(self, p: int, n: int) -> float:
        return (1.0 + self.q2) * self.noise_level(p, n)


@dataclass(frozen=True, eq=False)
class PrecisionEstimate:
    """Symmetric sparse estimate of a precision matrix.

    `support` is a (K, 2) array of recovered off-diagonal pairs (i < j).
    """

    entries: sp.csr_matrix
    support: np.ndarray
    config: PcsConfig
    n: int

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    def dense(self) -> np.ndarray:
        return self.entries.toarray()

    def support_set(self) -> set:
        return {(int(i), int(j)) for i, j in self.support}


@dataclass(frozen=True)
class _NodePath:
    members: Tuple[int, ...]
    strengths: Tuple[float, ...]


class PcsScreen:
    """Forward-screening paths for every node of one sample matrix.

    Args:
        data: n x p samples of a single class (centered internally)
        max_L: Longest path to compute
        floor: Smallest gate any later estimate will use; screening stops below it
        threads: Worker threads across nodes (default from settings)
    """

    def __init__(self, data: np.ndarray, max_L: int, floor: float,
                 threads: Optional[int] = None):
        X = np.asarray(data, dtype=float)
        if X.ndim != 2:
            raise ParameterError(f"data must be two-dimensional, got shape {X.shape}")
        self.n, self.p = X.shape
        config = get_config()
        if self.n < max(config.min_samples, 2):
            raise EstimationError(f"PCS needs at least {config.min_samples} samples, got {self.n}")

        self.max_L = min(int(max_L), self.n // 2, max(self.p - 1, 0))
        if self.max_L < max_L:
            logger.warning(f"Neighbourhood size capped at {self.max_L} (n={self.n}, p={self.p}, L={max_L})")
        self.floor = float(floor)
        self.threads = threads or config.threads

        self.centered = X - X.mean(axis=0)
        sd = self.centered.std(axis=0, ddof=1)
        self.constant = sd <= _TINY * max(1.0, float(np.max(np.abs(X))) if X.size else 1.0)
        if np.any(self.constant):
            logger.warning(f"{int(self.constant.sum())} constant feature(s) left unconnected")
        safe_sd = np.where(self.constant, 1.0, sd)
        self.standardized = np.where(self.constant, 0.0, self.centered / safe_sd)

        self.paths: List[_NodePath] = self._screen_all()

    def _corr_rows(self, nodes: Sequence[int]) -> np.ndarray:
        Z = self.standardized
        return (Z[:, list(nodes)].T @ Z) / (self.n - 1)

    def _screen_all(self) -> List[_NodePath]:
        blocks = [range(start, min(start + _NODE_BLOCK, self.p))
                  for start in range(0, self.p, _NODE_BLOCK)]
        if self.threads > 1 and len(blocks) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(self._screen_block, blocks))
        else:
            results = [self._screen_block(block) for block in blocks]
        return [path for block in results for path in block]

    def _screen_block(self, nodes: range) -> List[_NodePath]:
        rows = self._corr_rows(nodes)
        return [self._screen_node(i, rows[k]) for k, i in enumerate(nodes)]

    def _screen_node(self, i: int, r_i: np.ndarray) -> _NodePath:
        if self.constant[i] or self.max_L == 0:
            return _NodePath((), ())
        blocked = self.constant.copy()
        blocked[i] = True
        members: List[int] = []
        strengths: List[float] = []
        member_rows = np.empty((0, self.p))

        while len(members) < self.max_L:
            if members:
                R_SS = member_rows[:, members]
                try:
                    W = np.linalg.solve(R_SS, member_rows)
                except np.linalg.LinAlgError:
                    logger.warning(f"Node {i}: singular screening system, using pseudo-inverse")
                    W = np.linalg.pinv(R_SS) @ member_rows
                a = r_i[members]
                numer = r_i - a @ W
                resid_i = 1.0 - float(a @ W[:, i])
                resid = 1.0 - np.einsum("sj,sj->j", member_rows, W)
            else:
                numer = r_i
                resid_i = 1.0
                resid = np.ones(self.p)

            if resid_i <= _TINY:
                break
            denom = np.sqrt(resid_i * np.clip(resid, 0.0, None))
            with np.errstate(divide="ignore", invalid="ignore"):
                partial = np.where(denom > _TINY, np.abs(numer) / denom, 0.0)
            partial[blocked] = -1.0
            j = int(np.argmax(partial))
            strength = float(partial[j])
            if strength < self.floor or strength <= 0.0:
                break

            members.append(j)
            strengths.append(min(strength, 1.0))
            blocked[j] = True
            member_rows = np.vstack([member_rows, self._corr_rows([j])])

        return _NodePath(tuple(members), tuple(strengths))

    def estimate(self, config: PcsConfig) -> PrecisionEstimate:
        """Precision estimate for one tuning point, reusing the stored paths."""
        entry = config.entry_gate(self.p, self.n)
        retain = config.retention_gate(self.p, self.n)
        if entry < self.floor - 1e-15:
            raise ParameterError(f"entry gate {entry:.4g} is below the screen floor {self.floor:.4g}")
        limit = min(config.L, self.max_L)

        rows, cols, vals = [], [], []
        for i, path in enumerate(self.paths):
            if self.constant[i]:
                rows.append(i)
                cols.append(i)
                vals.append(1.0)
                continue
            chosen = []
            for j, strength in zip(path.members[:limit], path.strengths[:limit]):
                if strength < entry:
                    break
                chosen.append(j)
            kept = self._retain(i, chosen, retain)
            diag, coef = self._regress(i, kept, config.ridge)
            rows.append(i)
            cols.append(i)
            vals.append(diag)
            rows.extend([i] * len(kept))
            cols.extend(kept)
            vals.extend(coef)

        W = sp.csr_matrix((vals, (rows, cols)), shape=(self.p, self.p))
        sym = ((W + W.T) / 2.0).tocsr()
        sym.eliminate_zeros()
        upper = sp.triu(sym, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        support = np.column_stack([upper.row[order], upper.col[order]]).astype(np.int64)
        return PrecisionEstimate(entries=sym, support=support, config=config, n=self.n)

    def _retain(self, i: int, chosen: List[int], gate: float) -> List[int]:
        if not chosen:
            return []
        nodes = [i] + chosen
        Z = self.standardized[:, nodes]
        R = (Z.T @ Z) / (self.n - 1)
        try:
            P = np.linalg.inv(R)
        except np.linalg.LinAlgError:
            P = np.linalg.pinv(R)
        with np.errstate(divide="ignore", invalid="ignore"):
            partial = np.abs(P[0, 1:]) / np.sqrt(np.abs(P[0, 0] * np.diag(P)[1:]))
        return [j for j, r in zip(chosen, partial) if np.isfinite(r) and r >= gate]

    def _regress(self, i: int, kept: List[int], ridge: float) -> Tuple[float, List[float]]:
        x = self.centered[:, i]
        if kept:
            A = self.centered[:, kept]
            G = (A.T @ A) / (self.n - 1)
            b = (A.T @ x) / (self.n - 1)
            try:
                L = cholesky_lower(G)
            except PositiveDefiniteError:
                logger.warning(f"Node {i}: singular nodewise system, adding ridge {ridge:g}")
                L = cholesky_lower(G + ridge * np.eye(len(kept)))
            beta = np.linalg.solve(L.T, np.linalg.solve(L, b))
            resid = x - A @ beta
        else:
            beta = np.empty(0)
            resid = x
        sigma2 = float(resid @ resid) / (self.n - 1)
        if sigma2 <= _TINY:
            logger.warning(f"Node {i}: residual variance {sigma2:.3g} floored at ridge")
            sigma2 = max(ridge, _TINY)
        return 1.0 / sigma2, list(-beta / sigma2)


def pcs_estimate(data: np.ndarray, config: Optional[PcsConfig] = None,
                 threads: Optional[int] = None) -> PrecisionEstimate:
    """Estimate the precision matrix of one class sample by PCS.

    Args:
        data: n x p matrix of one class (need n >= 10; L is capped at n/2)
        config: Tuning; defaults to the settings file
        threads: Worker threads across nodes

    Raises:
        EstimationError: too few samples
    """
    config = config or PcsConfig.from_settings()
    X = np.asarray(data, dtype=float)
    n, p = X.shape
    screen = PcsScreen(X, max_L=config.L, floor=config.entry_gate(p, n), threads=threads)
    return screen.estimate(config)


def truncate_diagonal(M, t: float):
    """Zero the diagonal entries with |M_ii| <= t; off-diagonals are untouched.

    Works on dense arrays and scipy sparse matrices; returns the same kind.
    """
    if t < 0:
        raise ParameterError(f"threshold must be non-negative, got {t}")
    if sp.issparse(M):
        out = M.tocsr(copy=True)
        diag = out.diagonal()
        out.setdiag(np.where(np.abs(diag) <= t, 0.0, diag))
        return out
    out = np.array(M, dtype=float, copy=True)
    idx = np.arange(out.shape[0])
    diag = out[idx, idx]
    out[idx, idx] = np.where(np.abs(diag) <= t, 0.0, diag)
    return out


def single_band(p: int, n: int, scale: Optional[float] = None) -> float:
    """scale * sqrt(2 ln p / n), scale defaulting to settings (1.0)."""
    scale = get_config().single_band_scale if scale is None else scale
    return scale * math.sqrt(2.0 * math.log(p) / n)


def diff_band(p: int, n: int, scale: Optional[float] = None) -> float:
    """scale * sqrt(2 ln p / n), scale defaulting to settings (2.0)."""
    scale = get_config().diff_band_scale if scale is None else scale
    return scale * math.sqrt(2.0 * math.log(p) / n)


def adjust_single(omega_hat, p: int, n: int, scale: Optional[float] = None) -> PrecisionMatrix:
    """T(omega_hat - I; band) + I: snap diagonals within the band of 1 to 1.

    Accepts a PrecisionEstimate, PrecisionMatrix or plain matrix. The result is
    not checked for positive definiteness; consumers needing a log-determinant
    report that failure themselves.
    """
    if isinstance(omega_hat, (PrecisionEstimate, PrecisionMatrix)):
        M = as_dense(omega_hat.entries)
    else:
        M = as_dense(omega_hat)
    if M.shape != (p, p):
        raise ParameterError(f"estimate has shape {M.shape}, expected ({p}, {p})")
    band = single_band(p, n, scale)
    idx = np.arange(p)
    diag = M[idx, idx]
    M[idx, idx] = np.where(np.abs(diag - 1.0) <= band, 1.0, diag)
    return PrecisionMatrix.from_dense(M, check=False)


def diff_threshold(omega0_hat, omega1_hat, p: int, n: int, scale: Optional[float] = None):
    """T(omega0_hat - omega1_hat; 2 sqrt(2 ln p / n)), kept sparse when inputs are."""
    E0 = getattr(omega0_hat, "entries", omega0_hat)
    E1 = getattr(omega1_hat, "entries", omega1_hat)
    if E0.shape != E1.shape or E0.shape != (p, p):
        raise ParameterError(f"dimension mismatch: {E0.shape} vs {E1.shape} for p={p}")
    if sp.issparse(E0) or sp.issparse(E1):
        D = (sp.csr_matrix(E0) - sp.csr_matrix(E1)).tocsr()
    else:
        D = np.asarray(E0, dtype=float) - np.asarray(E1, dtype=float)
    return truncate_diagonal(D, diff_band(p, n, scale))


def log_det(M) -> float:
    """log|M| through a Cholesky factor.

    Raises:
        PositiveDefiniteError: naming the failing pivot
    """
    L = cholesky_lower(as_dense(M))
    return float(2.0 * np.sum(np.log(np.diag(L))))
