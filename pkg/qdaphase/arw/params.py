"""
ARW exponents and the scales they induce.

Every model quantity is a power of the dimension p:
n = round(p^delta), eps = p^-zeta, tau = p^-theta,
eta = p^-alpha, nu = p^-beta, xi = p^-gamma.
"""

import math
from dataclasses import asdict, dataclass, replace
from typing import Dict, Mapping, Optional, Tuple

from qdaphase.config_manager import read_key_value_file
from qdaphase.errors import ParameterError

# Key names accepted in parameter files
PARAM_KEYS = ("p", "delta", "zeta", "theta", "alpha", "beta", "gamma", "q", "seed")
EXPONENT_NAMES = ("delta", "zeta", "theta", "alpha", "beta", "gamma")

# Open intervals for each exponent
EXPONENT_RANGES = {
    "delta": (0.0, 1.0),
    "zeta": (0.0, 1.0),
    "theta": (0.0, 1.0),
    "alpha": (0.0, 1.0),
    "beta": (0.0, 2.0),
    "gamma": (0.0, 1.0),
}


@dataclass(frozen=True)
class ArwParams:
    """Exponent parameterization of one ARW model point."""

    p: int
    delta: float
    zeta: float
    theta: float
    alpha: float
    beta: float
    gamma: float
    q: float = 0.5

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ParameterError(f"p must be a positive integer, got {self.p}")
        for name in EXPONENT_NAMES:
            lo, hi = EXPONENT_RANGES[name]
            value = getattr(self, name)
            if not lo < value < hi:
                raise ParameterError(f"{name}={value} outside ({lo}, {hi})")
        if not 0.0 < self.q < 1.0:
            raise ParameterError(f"q={self.q} outside (0, 1)")
        # keeps the sampled precision matrices positive definite w.h.p.
        if not self.beta > 1.0 - 2.0 * self.alpha:
            raise ParameterError(
                f"beta={self.beta} must exceed 1 - 2*alpha = {1.0 - 2.0 * self.alpha:.6g}"
            )

    @property
    def kappa1(self) -> float:
        """Signal index of the precision difference, 2 - 2*alpha - beta."""
        return 2.0 - 2.0 * self.alpha - self.beta

    @property
    def kappa2(self) -> float:
        """Signal index of the mean, 1 - 2*theta - zeta."""
        return 1.0 - 2.0 * self.theta - self.zeta

    def with_values(self, **changes) -> "ArwParams":
        """Copy with some fields replaced (validation re-runs)."""
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "ArwParams":
        """Build from string key/values such as those read from a parameter file.

        Unknown keys raise ParameterError; 'seed' is accepted and ignored here.
        """
        unknown = sorted(set(values) - set(PARAM_KEYS))
        if unknown:
            raise ParameterError(f"Unknown parameter keys: {', '.join(unknown)}")
        missing = [k for k in ("p",) + EXPONENT_NAMES if k not in values]
        if missing:
            raise ParameterError(f"Missing parameter keys: {', '.join(missing)}")
        try:
            p_value = float(values["p"])
            kwargs = {name: float(values[name]) for name in EXPONENT_NAMES}
            q = float(values.get("q", 0.5))
        except ValueError as e:
            raise ParameterError(f"Non-numeric parameter value: {e}") from e
        if not p_value.is_integer():
            raise ParameterError(f"p must be an integer, got {values['p']}")
        return cls(p=int(p_value), q=q, **kwargs)


@dataclass(frozen=True)
class ScaleSet:
    """Scales induced by ArwParams at a given p.

    Zero scales are accepted so that degenerate models (no signal, no
    off-diagonals) can be built directly.
    """

    n: int
    eps: float
    tau: float
    eta: float
    nu: float
    xi: float

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError(f"sample size n={self.n} must be at least 2")
        for name in ("eps", "tau", "eta", "nu", "xi"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"scale {name}={value} outside [0, 1]")


def derive_scales(params: ArwParams) -> ScaleSet:
    """Evaluate every scale as an exact power of p.

    Raises:
        ParameterError: for p < 4 or a sample size below 2
    """
    p = params.p
    if p < 4:
        raise ParameterError(f"p={p} is degenerate; need p >= 4")
    n = int(math.floor(p ** params.delta + 0.5))
    return ScaleSet(
        n=n,
        eps=p ** -params.zeta,
        tau=p ** -params.theta,
        eta=p ** -params.alpha,
        nu=p ** -params.beta,
        xi=p ** -params.gamma,
    )


def delta_for_sample_size(p: int, n: int) -> float:
    """Exponent delta with p^delta = n, e.g. (8491, 181) -> 0.5749."""
    if p < 2 or n < 1:
        raise ParameterError(f"need p >= 2 and n >= 1, got p={p}, n={n}")
    return math.log(n) / math.log(p)


def load_params_file(path) -> Tuple[ArwParams, Optional[int]]:
    """Read a key=value parameter file.

    Returns:
        (params, seed) where seed is None if the file has no 'seed' key
    """
    values = read_key_value_file(path)
    params = ArwParams.from_mapping(values)
    seed = None
    if "seed" in values:
        try:
            seed = int(values["seed"])
        except ValueError as e:
            raise ParameterError(f"seed must be an integer, got {values['seed']!r}") from e
    return params, seed
