"""
Possibility / impossibility regions of the ARW exponent space.

Each known result is encoded as a Clause: a precondition on the exponents
(when the result applies) and a condition (when it fires). region_classify
evaluates every clause and folds the fired ones into a single verdict:
Impossible beats PossibleQDAfs beats PossibleQDAw beats Indeterminate.
Clauses of kind "note" are reported but never change the verdict.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional, Tuple

from qdaphase.arw.params import ArwParams
from qdaphase.config_manager import get_config
from qdaphase.errors import ParameterError


class Verdict(str, Enum):
    POSSIBLE_QDAW = "PossibleQDAw"
    POSSIBLE_QDAFS = "PossibleQDAfs"
    IMPOSSIBLE = "Impossible"
    INDETERMINATE = "Indeterminate"


# Verdict precedence when several clause kinds fire
_PRECEDENCE = {
    "impossible": Verdict.IMPOSSIBLE,
    "qdafs": Verdict.POSSIBLE_QDAFS,
    "qdaw": Verdict.POSSIBLE_QDAW,
}


def rho_delta(zeta: float, delta: float) -> float:
    """Detection boundary for the mean signal at sample-size exponent delta.

    1/2 - zeta on (0, (1-delta)/2], delta/2 on ((1-delta)/2, 1-delta],
    (1-zeta)/2 on (1-delta, 1).
    """
    if not 0.0 < zeta < 1.0 or not 0.0 < delta < 1.0:
        raise ParameterError(f"rho_delta needs 0<zeta<1 and 0<delta<1, got zeta={zeta}, delta={delta}")
    if zeta <= (1.0 - delta) / 2.0:
        return 0.5 - zeta
    if zeta <= 1.0 - delta:
        return delta / 2.0
    return (1.0 - zeta) / 2.0


@dataclass(frozen=True)
class RegionContext:
    """Derived quantities shared by the clauses."""

    params: ArwParams
    c: float

    @property
    def rho(self) -> float:
        return rho_delta(self.params.zeta, self.params.delta)

    @property
    def strong(self) -> bool:
        """Strong-mean regime theta < delta/2 (feature selection pays off)."""
        return self.params.theta < self.params.delta / 2.0

    @property
    def pcs_regime(self) -> bool:
        """alpha < delta/2 and 1 - delta/2 < beta < 2: PCS recovers Omega."""
        a = self.params
        return a.alpha < a.delta / 2.0 and 1.0 - a.delta / 2.0 < a.beta < 2.0

    @property
    def frobenius_exponent(self) -> float:
        """||Omega1 - I||_F^2 grows like p to this power."""
        return max(1.0 - 2.0 * self.params.gamma, self.params.kappa1)

    @property
    def kappa(self) -> float:
        return max(self.params.kappa1, self.params.kappa2)

    @property
    def offdiag_index(self) -> float:
        """2*alpha + beta - 1."""
        return 2.0 * self.params.alpha + self.params.beta - 1.0


@dataclass(frozen=True)
class Clause:
    key: str
    group: str
    kind: str  # "qdaw", "qdafs", "impossible" or "note"
    text: str
    applies: Callable[[RegionContext], bool]
    holds: Callable[[RegionContext], bool]

    def fires(self, ctx: RegionContext) -> bool:
        return self.applies(ctx) and self.holds(ctx)


def _always(ctx: RegionContext) -> bool:
    return True


def _weak(ctx: RegionContext) -> bool:
    return not ctx.strong


def _strong(ctx: RegionContext) -> bool:
    return ctx.strong


CLAUSES: Tuple[Clause, ...] = (
    # Omega known, Omega0 = I
    Clause("known.w.a", "known-omega", "qdaw", "||Omega1-I||_F^2 >> p^c",
           _weak, lambda x: x.frobenius_exponent > x.c),
    Clause("known.w.b", "known-omega", "qdaw", "theta<rho_delta(zeta)",
           _weak, lambda x: x.params.theta < x.rho),
    Clause("known.fs.a", "known-omega", "qdafs", "||Omega1-I||_F^2 -> inf",
           _strong, lambda x: x.frobenius_exponent > 0.0),
    Clause("known.fs.b", "known-omega", "qdafs", "theta<rho_delta(zeta)",
           _strong, lambda x: x.params.theta < x.rho),
    Clause("known.lower", "known-omega", "impossible", "||Omega1-I||_F -> 0 and theta>rho_delta(zeta)",
           _always, lambda x: x.frobenius_exponent < 0.0 and x.params.theta > x.rho),

    # Ideal rule, everything known
    Clause("ideal.beta", "ideal", "note", "beta<2-2*alpha",
           _always, lambda x: x.params.kappa1 > 0.0),
    Clause("ideal.gamma", "ideal", "note", "gamma<1/2",
           _always, lambda x: x.params.gamma < 0.5),
    Clause("ideal.zeta", "ideal", "note", "zeta<1-2*theta",
           _always, lambda x: x.params.kappa2 > 0.0),
    Clause("ideal.lower", "ideal", "impossible", "2-2*alpha-beta<0, 1-2*theta-zeta<0, gamma>1/2",
           _always, lambda x: x.params.kappa1 < 0.0 and x.params.kappa2 < 0.0 and x.params.gamma > 0.5),

    # PCS with mu known, Omega0 = I
    Clause("pcs-mu.a", "pcs-known-mu", "note", "gamma<delta/2",
           lambda x: x.pcs_regime, lambda x: x.params.gamma < x.params.delta / 2.0),
    Clause("pcs-mu.b", "pcs-known-mu", "note", "gamma>(2*alpha+beta-1)/2 and 2*alpha+beta-2<0",
           lambda x: x.pcs_regime,
           lambda x: x.params.gamma > x.offdiag_index / 2.0 and x.params.kappa1 > 0.0),
    Clause("pcs-mu.c", "pcs-known-mu", "note", "gamma>min(1,2*alpha+beta-1)/2 and 2*theta+zeta-1<0",
           lambda x: x.pcs_regime,
           lambda x: x.params.gamma > min(1.0, x.offdiag_index) / 2.0 and x.params.kappa2 > 0.0),

    # PCS estimate of Omega1, Omega0 = I
    Clause("pcs.w.a", "pcs-known-omega0", "qdaw", "gamma<delta/2",
           lambda x: x.pcs_regime and _weak(x), lambda x: x.params.gamma < x.params.delta / 2.0),
    Clause("pcs.w.b", "pcs-known-omega0", "qdaw", "gamma>(2*alpha+beta-1)/2 and 2-2*alpha-beta>c",
           lambda x: x.pcs_regime and _weak(x),
           lambda x: x.params.gamma > x.offdiag_index / 2.0 and x.params.kappa1 > x.c),
    Clause("pcs.w.c", "pcs-known-omega0", "qdaw", "gamma>min(1,2*alpha+beta-1)/2 and theta<rho_delta(zeta)",
           lambda x: x.pcs_regime and _weak(x),
           lambda x: x.params.gamma > min(1.0, x.offdiag_index) / 2.0 and x.params.theta < x.rho),
    Clause("pcs.fs.a", "pcs-known-omega0", "qdafs", "gamma<delta/2",
           lambda x: x.pcs_regime and _strong(x), lambda x: x.params.gamma < x.params.delta / 2.0),
    Clause("pcs.fs.b", "pcs-known-omega0", "qdafs", "gamma>(2*alpha+beta-1)/2 and 2*alpha+beta-2<0",
           lambda x: x.pcs_regime and _strong(x),
           lambda x: x.params.gamma > x.offdiag_index / 2.0 and x.params.kappa1 > 0.0),
    Clause("pcs.fs.c", "pcs-known-omega0", "qdafs", "gamma>min(1,2*alpha+beta-1)/2 and theta<rho_delta(zeta)",
           lambda x: x.pcs_regime and _strong(x),
           lambda x: x.params.gamma > min(1.0, x.offdiag_index) / 2.0 and x.params.theta < x.rho),
    Clause("pcs.lower", "pcs-known-omega0", "impossible", "gamma>1/2, 2*alpha+beta-2>0, theta>rho_delta(zeta)",
           lambda x: x.pcs_regime,
           lambda x: x.params.gamma > 0.5 and x.params.kappa1 < 0.0 and x.params.theta > x.rho),

    # PCS estimates of both precision matrices, diagonal signal too weak to use
    Clause("unknown.fs.a", "pcs-all-unknown", "qdafs", "2-2*alpha-beta>0",
           lambda x: x.pcs_regime and x.params.gamma > 0.5 and _strong(x),
           lambda x: x.params.kappa1 > 0.0),
    Clause("unknown.fs.b", "pcs-all-unknown", "qdafs", "1-2*theta-zeta>0",
           lambda x: x.pcs_regime and x.params.gamma > 0.5 and _strong(x),
           lambda x: x.params.kappa2 > 0.0),
    Clause("unknown.lower", "pcs-all-unknown", "impossible", "2-2*alpha-beta<0 and 1-2*theta-zeta<0",
           lambda x: x.pcs_regime and x.params.gamma > 0.5 and _strong(x),
           lambda x: x.params.kappa1 < 0.0 and x.params.kappa2 < 0.0),

    # Plain QDA (no feature selection) against kappa = max(kappa1, kappa2)
    Clause("plain.w", "plain-qda", "note", "kappa>(1-delta)/2",
           lambda x: x.params.gamma > 0.5 and _weak(x),
           lambda x: x.kappa > (1.0 - x.params.delta) / 2.0),
    Clause("plain.w.fail", "plain-qda", "note", "kappa<(1-delta)/2, plain QDA error bounded away from 0",
           lambda x: x.params.gamma > 0.5 and _weak(x),
           lambda x: x.kappa < (1.0 - x.params.delta) / 2.0),
    Clause("plain.fs", "plain-qda", "qdafs", "kappa>0",
           lambda x: x.params.gamma > 0.5 and _strong(x), lambda x: x.kappa > 0.0),
    Clause("plain.lower", "plain-qda", "impossible", "kappa<0",
           lambda x: x.params.gamma > 0.5 and _strong(x), lambda x: x.kappa < 0.0),
)


@dataclass(frozen=True)
class RegionLabel:
    verdict: Verdict
    reasons: Tuple[str, ...]
    clauses: Tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.reasons:
            return self.verdict.value
        return f"{self.verdict.value}: " + "; ".join(self.reasons)


def region_classify(params: ArwParams, c: Optional[float] = None,
                    clauses: Iterable[Clause] = CLAUSES) -> RegionLabel:
    """Classify an exponent point into its theoretical region.

    Args:
        params: Model point
        c: Exponent of the QDAw constant vector; defaults to settings (0.5)
        clauses: Clause set to evaluate; order does not matter

    Returns:
        RegionLabel whose reasons name every fired clause, as "group: text"
    """
    ctx = RegionContext(params=params, c=get_config().qdaw_c if c is None else float(c))
    fired = sorted((cl for cl in clauses if cl.fires(ctx)), key=lambda cl: cl.key)
    kinds = {cl.kind for cl in fired}

    verdict = Verdict.INDETERMINATE
    for kind in ("impossible", "qdafs", "qdaw"):
        if kind in kinds:
            verdict = _PRECEDENCE[kind]
            break

    reasons = tuple(f"{cl.group}: {cl.text}" for cl in fired)
    return RegionLabel(verdict=verdict, reasons=reasons, clauses=tuple(cl.key for cl in fired))
