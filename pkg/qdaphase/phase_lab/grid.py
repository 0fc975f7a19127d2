"""
Monte Carlo phase grids over two ARW exponents.

Every (cell, replicate) pair draws its model and training set from its own
stream ("phase", i1, i2, ip, rep) and its test points from
("phase-test", i1, i2, ip, rep), so every classifier in a replicate sees
the same data and results do not depend on worker count or scheduling.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from qdaphase.arw.params import EXPONENT_NAMES, ArwParams, derive_scales
from qdaphase.arw.regions import region_classify
from qdaphase.arw.sampling import (
    PrecisionMatrix,
    sample_dataset,
    sample_mu,
    sample_precision,
    whitening_transform,
)
from qdaphase.classify import (
    Algorithm2Base,
    QdaPcsMode,
    Variant,
    ideal_qda,
    train_plain_qda,
    train_qda_pcs,
    train_qda_pcs_known_mu,
    train_qdafs,
    train_qdaw,
)
from qdaphase.config_manager import get_config, read_key_value_file
from qdaphase.errors import ParameterError, QdaPhaseError
from qdaphase.moments import MrEstimate, estimate_mr
from qdaphase.phase_lab.boundaries import BOUNDARY_NAMES, BoundaryCurve, plane_of, theoretical_boundary
from qdaphase.rng import stream

logger = logging.getLogger(__name__)

# Rules that assume Omega0 = I; a sampled Omega0 is whitened away first
KNOWN_OMEGA0 = frozenset({
    Variant.QDAW,
    Variant.QDAFS,
    Variant.PLAIN_QDA,
    Variant.QDAW_PCS,
    Variant.QDAFS_PCS_KNOWN0,
    Variant.QDA_PCS_KNOWN_MU,
})

GRID_KEYS = ("axis1", "axis2", "p_list", "classifiers", "reps", "n_test", "seed",
             "omega0", "t", "c", "q") + EXPONENT_NAMES

# Region column for cells whose exponents violate the model constraints
INVALID_REGION = "Invalid"


@dataclass(frozen=True)
class AxisSpec:
    """One grid axis: `steps` evenly spaced values of an exponent."""

    name: str
    lo: float
    hi: float
    steps: int

    def __post_init__(self):
        if self.name not in EXPONENT_NAMES:
            raise ParameterError(f"axis name {self.name!r} must be one of {', '.join(EXPONENT_NAMES)}")
        if self.steps < 2:
            raise ParameterError(f"axis {self.name} needs at least 2 steps, got {self.steps}")
        if not self.lo < self.hi:
            raise ParameterError(f"axis {self.name} range [{self.lo}, {self.hi}] is empty")

    @classmethod
    def parse(cls, text: str) -> "AxisSpec":
        """Parse 'name:min:max:steps', e.g. 'zeta:0.05:0.95:19'."""
        parts = text.strip().split(":")
        if len(parts) != 4:
            raise ParameterError(f"axis spec {text!r} must look like name:min:max:steps")
        try:
            return cls(parts[0].strip(), float(parts[1]), float(parts[2]), int(parts[3]))
        except ValueError as e:
            raise ParameterError(f"axis spec {text!r}: {e}") from e

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)

    def __str__(self) -> str:
        return f"{self.name}:{self.lo:g}:{self.hi:g}:{self.steps}"


@dataclass(frozen=True)
class GridSpec:
    """A phase experiment.

    Attributes:
        axis1, axis2: The two swept exponents
        fixed: Values of the remaining exponents (and optionally q)
        classifiers: Variants to fit in every replicate
        p_list: Dimensions to run
        reps: Replicates per cell
        n_test: Test points per replicate
        seed: Master seed
        omega0: 'identity' or 'sampled' (drawn like Omega1)
        t: Threshold override for selection rules (None = adaptive, 0 for LDA)
        c: QDAw exponent (None = settings)
    """

    axis1: AxisSpec
    axis2: AxisSpec
    fixed: Mapping[str, float]
    classifiers: Tuple[Variant, ...]
    p_list: Tuple[int, ...]
    reps: int
    n_test: int
    seed: int = 0
    omega0: str = "identity"
    t: Optional[float] = None
    c: Optional[float] = None

    def __post_init__(self):
        if self.axis1.name == self.axis2.name:
            raise ParameterError(f"axes must differ, both are {self.axis1.name}")
        missing = [n for n in EXPONENT_NAMES
                   if n not in (self.axis1.name, self.axis2.name) and n not in self.fixed]
        if missing:
            raise ParameterError(f"grid needs fixed values for {', '.join(missing)}")
        clash = [n for n in (self.axis1.name, self.axis2.name) if n in self.fixed]
        if clash:
            raise ParameterError(f"{', '.join(clash)} is both swept and fixed")
        if self.reps < 1:
            raise ParameterError(f"reps must be at least 1, got {self.reps}")
        if self.n_test < 2:
            raise ParameterError(f"n_test must be at least 2, got {self.n_test}")
        if not self.classifiers:
            raise ParameterError("at least one classifier is required")
        if not self.p_list or any(p < 4 for p in self.p_list):
            raise ParameterError(f"p_list must hold dimensions >= 4, got {self.p_list}")
        if self.omega0 not in ("identity", "sampled"):
            raise ParameterError(f"omega0 must be 'identity' or 'sampled', got {self.omega0!r}")
        if self.seed < 0:
            raise ParameterError(f"seed must be non-negative, got {self.seed}")

    @property
    def n_cells(self) -> int:
        return self.axis1.steps * self.axis2.steps * len(self.p_list)

    def cell_params(self, i1: int, i2: int, ip: int) -> ArwParams:
        """ArwParams of one cell; raises ParameterError for invalid exponents."""
        values = dict(self.fixed)
        values[self.axis1.name] = float(self.axis1.values[i1])
        values[self.axis2.name] = float(self.axis2.values[i2])
        values["p"] = self.p_list[ip]
        return ArwParams(**values)


def _parse_variants(text: str) -> Tuple[Variant, ...]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    try:
        return tuple(Variant(name) for name in names)
    except ValueError as e:
        known = ", ".join(v.value for v in Variant)
        raise ParameterError(f"{e}; known classifiers: {known}") from e


def load_grid_file(path, seed: Optional[int] = None, reps: Optional[int] = None) -> GridSpec:
    """Read a key=value grid file.

    Keys: axis1, axis2 (name:min:max:steps), p_list (comma separated),
    classifiers (comma separated variant names), reps, n_test, seed, omega0,
    t, c, q and the fixed exponents. `seed`/`reps` arguments override the file.
    """
    values = read_key_value_file(path)
    unknown = sorted(set(values) - set(GRID_KEYS) - {"p"})
    if unknown:
        raise ParameterError(f"Unknown grid keys: {', '.join(unknown)}")
    for key in ("axis1", "axis2"):
        if key not in values:
            raise ParameterError(f"grid file is missing {key}")
    config = get_config()
    try:
        p_text = values.get("p_list", values.get("p", ""))
        p_list = tuple(int(v) for v in p_text.split(",") if v.strip())
        fixed = {name: float(values[name]) for name in EXPONENT_NAMES + ("q",) if name in values}
        return GridSpec(
            axis1=AxisSpec.parse(values["axis1"]),
            axis2=AxisSpec.parse(values["axis2"]),
            fixed=fixed,
            classifiers=_parse_variants(values.get("classifiers", Variant.QDAFS.value)),
            p_list=p_list,
            reps=reps if reps is not None else int(values.get("reps", config.phase_reps)),
            n_test=int(values.get("n_test", config.phase_n_test)),
            seed=seed if seed is not None else int(values.get("seed", 0)),
            omega0=values.get("omega0", "identity").strip(),
            t=float(values["t"]) if "t" in values else None,
            c=float(values["c"]) if "c" in values else None,
        )
    except ValueError as e:
        if isinstance(e, ParameterError):
            raise
        raise ParameterError(f"bad grid value: {e}") from e


@dataclass(frozen=True)
class PhaseCell:
    """Aggregated result of one (cell, classifier).

    mr and se are NaN when no replicate succeeded (reps_ok == 0), which also
    covers every cell of region INVALID_REGION. Otherwise mr lies in [0, 1].
    """

    axis1: float
    axis2: float
    classifier: Variant
    p: int
    mr: float
    se: float
    reps_ok: int
    reps_failed: int
    region: str


@dataclass(frozen=True)
class PhaseResult:
    spec: GridSpec
    cells: Tuple[PhaseCell, ...]
    boundaries: Tuple[BoundaryCurve, ...] = field(default_factory=tuple)

    @property
    def empty(self) -> bool:
        return len(self.cells) == 0


def _fit(variant: Variant, spec: GridSpec, train, mu, omega0, omega1, white):
    """Fit one variant; returns the model and the (mu, omega0, omega1) to test it against."""
    if variant in KNOWN_OMEGA0:
        if white is not None:
            train, mu, omega1 = white
        omega0 = PrecisionMatrix.identity(mu.p)
    if variant == Variant.IDEAL:
        model = ideal_qda(mu, omega0, omega1)
    elif variant == Variant.QDAW:
        model = train_qdaw(train, omega1, spec.c)
    elif variant == Variant.QDAFS:
        model = train_qdafs(train, omega1, spec.t)
    elif variant == Variant.PLAIN_QDA:
        model = train_plain_qda(train, omega1)
    elif variant == Variant.QDAW_PCS:
        model = train_qda_pcs(train, QdaPcsMode.weak(spec.c), threads=1)
    elif variant == Variant.QDAFS_PCS:
        model = train_qda_pcs(train, QdaPcsMode.strong(spec.t), threads=1)
    elif variant == Variant.QDAFS_PCS_KNOWN0:
        model = train_qda_pcs(train, QdaPcsMode.strong(spec.t), omega0_known=True, threads=1)
    elif variant == Variant.QDA_PCS_KNOWN_MU:
        model = train_qda_pcs_known_mu(train, mu, threads=1)
    else:
        base = Algorithm2Base.fit(train, threads=1)
        model = base.classifier(spec.t or 0.0, 0.0, lda=variant == Variant.LDA)
    return model, (mu, omega0, omega1)


def _run_replicate(spec: GridSpec, params: ArwParams, key: Tuple[int, int, int], rep: int
                   ) -> Dict[Variant, Optional[MrEstimate]]:
    """One replicate of one cell; None marks a failed classifier."""
    outcome: Dict[Variant, Optional[MrEstimate]] = {v: None for v in spec.classifiers}
    try:
        rng = stream(spec.seed, "phase", *key, rep)
        scales = derive_scales(params)
        mu = sample_mu(scales, params.p, rng)
        omega1 = sample_precision(scales, params.p, rng)
        if spec.omega0 == "sampled":
            omega0 = sample_precision(scales, params.p, rng)
        else:
            omega0 = PrecisionMatrix.identity(params.p)
        train = sample_dataset(mu, omega0, omega1, scales.n, params.q, rng)
        white = None
        if spec.omega0 == "sampled" and any(v in KNOWN_OMEGA0 for v in spec.classifiers):
            transform = whitening_transform(omega0)
            white = (transform.apply_dataset(train), transform.apply_mean(mu),
                     transform.apply_precision(omega1))
    except QdaPhaseError as e:
        logger.warning(f"Cell {key} replicate {rep}: model draw failed: {e}")
        return outcome

    for variant in spec.classifiers:
        try:
            model, (mu_t, omega0_t, omega1_t) = _fit(variant, spec, train, mu, omega0, omega1, white)
            test_rng = stream(spec.seed, "phase-test", *key, rep)
            outcome[variant] = estimate_mr(model, mu_t, omega0_t, omega1_t, spec.n_test, test_rng,
                                           q=params.q)
        except QdaPhaseError as e:
            logger.warning(f"Cell {key} replicate {rep}: {variant.value} failed: {e}")
    return outcome


def _cell_region(params: Optional[ArwParams], spec: GridSpec) -> str:
    if params is None:
        return INVALID_REGION
    return region_classify(params, c=spec.c).verdict.value


def grid_boundaries(spec: GridSpec, samples: int = 101) -> Tuple[BoundaryCurve, ...]:
    """Every named boundary that can be drawn in the grid's plane."""
    axes = (spec.axis1.name, spec.axis2.name)
    curves = []
    for name in BOUNDARY_NAMES:
        if plane_of(name, axes) is None:
            continue
        try:
            curve = theoretical_boundary(name, spec.fixed, samples, plane=axes)
        except ParameterError:
            continue
        if not curve.empty:
            curves.append(curve)
    return tuple(curves)


def run_phase_grid(spec: GridSpec, threads: Optional[int] = None) -> PhaseResult:
    """Run every (cell, replicate), then aggregate MR per (cell, classifier).

    Failed replicates are counted in reps_failed; a (cell, classifier) whose
    replicates all failed has NaN mr and se. Cells whose exponents are
    invalid are reported with region 'Invalid' and every replicate failed.
    """
    threads = threads or get_config().threads
    keys = [(i1, i2, ip) for ip in range(len(spec.p_list))
            for i1 in range(spec.axis1.steps) for i2 in range(spec.axis2.steps)]

    cell_params: Dict[Tuple[int, int, int], Optional[ArwParams]] = {}
    for key in keys:
        try:
            cell_params[key] = spec.cell_params(*key)
        except ParameterError as e:
            logger.warning(f"Cell {key} skipped: {e}")
            cell_params[key] = None

    tasks = [(key, rep) for key in keys if cell_params[key] is not None for rep in range(spec.reps)]
    logger.info(f"Phase grid: {len(keys)} cells, {len(tasks)} replicates, "
                f"{len(spec.classifiers)} classifier(s), {threads} thread(s)")

    def work(task):
        key, rep = task
        return task, _run_replicate(spec, cell_params[key], key, rep)

    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = dict(pool.map(work, tasks))
    else:
        outcomes = dict(work(task) for task in tasks)

    cells: List[PhaseCell] = []
    for variant in spec.classifiers:
        for key in keys:
            i1, i2, ip = key
            params = cell_params[key]
            rates = []
            if params is not None:
                rates = [outcomes[(key, rep)][variant] for rep in range(spec.reps)]
            ok = [r.mr for r in rates if r is not None]
            if ok:
                mr = float(np.mean(ok))
                se = math.sqrt(mr * (1.0 - mr) / (len(ok) * spec.n_test))
            else:
                mr = se = float("nan")
            cells.append(PhaseCell(
                axis1=float(spec.axis1.values[i1]), axis2=float(spec.axis2.values[i2]),
                classifier=variant, p=spec.p_list[ip], mr=mr, se=se,
                reps_ok=len(ok), reps_failed=spec.reps - len(ok),
                region=_cell_region(params, spec),
            ))

    failed = sum(c.reps_failed for c in cells)
    if failed:
        logger.warning(f"{failed} classifier replicate(s) failed across the grid")
    return PhaseResult(spec=spec, cells=tuple(cells), boundaries=grid_boundaries(spec))
