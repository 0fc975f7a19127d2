"""
Configuration Manager for qdaphase

Handles loading and saving of library settings, plus the flat key=value
files used for model parameters and phase grids.
- settings.json: estimator gates, thresholds, replicate budgets, flags
- *.txt parameter files: p=1000, delta=0.7, ... (read by read_key_value_file)
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from qdaphase.errors import DataError, ParameterError

logger = logging.getLogger(__name__)


class ConfigManager:
    """Manages library configuration using a JSON settings file."""

    # Default settings structure
    DEFAULT_SETTINGS = {
        "model": {
            "diagonal_law": "plus",  # "plus" -> 1+xi, "symmetric" -> 1 +/- xi
            "pd_max_attempts": 20,
            "label_max_attempts": 100
        },
        "precision": {
            "q1": 0.5,
            "q2": 0.5,
            "delta_screen": 0.1,
            "L": 30,
            "ridge": 1e-8,
            "single_band_scale": 1.0,  # multiplies sqrt(2 ln p / n)
            "diff_band_scale": 2.0,
            "min_samples": 10
        },
        "classify": {
            "prior_q": 0.5,
            "lda_threshold_mode": "clip",  # "clip" or "hard"
            "algorithm2_scaled_linear": False,
            "qdaw_c": 0.5
        },
        "phase": {
            "reps": 50,
            "n_test": 200,
            "threads": 1
        },
        "bench": {
            "n_splits": 15,
            "fraction": 0.25,
            "t_step": 0.1,
            "c_max": 50,
            "c_step": 1,
            "q_grid": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            "screen_pairs": [[0.1, 30], [0.1, 50]]
        }
    }

    DIAGONAL_LAWS = ("plus", "symmetric")
    LDA_MODES = ("clip", "hard")

    def __init__(self, config_dir: str = "config"):
        """Initialize the config manager.

        Args:
            config_dir: Directory where settings.json is stored
        """
        self.config_dir = Path(config_dir)
        self.settings_path = self.config_dir / "settings.json"
        self._settings: dict = {}
        self._load_settings()

    def _load_settings(self):
        """Load settings from JSON file."""
        if self.settings_path.exists():
            try:
                with open(self.settings_path, 'r', encoding='utf-8') as f:
                    loaded = json.load(f)
                # Merge with defaults to handle any new settings
                self._settings = self._merge_with_defaults(loaded, self.DEFAULT_SETTINGS)
            except (OSError, json.JSONDecodeError) as e:
                logger.warning(f"Error loading settings from {self.settings_path}: {e}")
                self._settings = self._deep_copy(self.DEFAULT_SETTINGS)
        else:
            self._settings = self._deep_copy(self.DEFAULT_SETTINGS)

    def _merge_with_defaults(self, loaded: dict, defaults: dict) -> dict:
        """Recursively merge loaded config with defaults to fill in missing keys."""
        result = self._deep_copy(defaults)
        for key, value in loaded.items():
            if key in result and isinstance(value, dict) and isinstance(result[key], dict):
                result[key] = self._merge_with_defaults(value, result[key])
            else:
                result[key] = value
        return result

    def _deep_copy(self, obj: Any) -> Any:
        """Create a deep copy of a nested dict/list structure."""
        if isinstance(obj, dict):
            return {k: self._deep_copy(v) for k, v in obj.items()}
        elif isinstance(obj, list):
            return [self._deep_copy(item) for item in obj]
        else:
            return obj

    def save_settings(self):
        """Save settings to JSON file."""
        try:
            self.config_dir.mkdir(parents=True, exist_ok=True)
            with open(self.settings_path, 'w', encoding='utf-8') as f:
                json.dump(self._settings, f, indent=2, ensure_ascii=False)
        except OSError as e:
            logger.error(f"Error saving settings: {e}")
            raise

    # ========== Model ==========

    @property
    def diagonal_law(self) -> str:
        """Diagonal law for sampled precision matrices: 'plus' or 'symmetric'."""
        return self._settings["model"]["diagonal_law"]

    @diagonal_law.setter
    def diagonal_law(self, value: str):
        if value not in self.DIAGONAL_LAWS:
            raise ParameterError(f"diagonal_law must be one of {self.DIAGONAL_LAWS}, got {value!r}")
        self._settings["model"]["diagonal_law"] = value

    @property
    def pd_max_attempts(self) -> int:
        return int(self._settings["model"]["pd_max_attempts"])

    @pd_max_attempts.setter
    def pd_max_attempts(self, value: int):
        self._settings["model"]["pd_max_attempts"] = int(value)

    @property
    def label_max_attempts(self) -> int:
        return int(self._settings["model"]["label_max_attempts"])

    @label_max_attempts.setter
    def label_max_attempts(self, value: int):
        self._settings["model"]["label_max_attempts"] = int(value)

    # ========== Precision ==========

    @property
    def pcs_q1(self) -> float:
        return float(self._settings["precision"]["q1"])

    @pcs_q1.setter
    def pcs_q1(self, value: float):
        self._settings["precision"]["q1"] = float(value)

    @property
    def pcs_q2(self) -> float:
        return float(self._settings["precision"]["q2"])

    @pcs_q2.setter
    def pcs_q2(self, value: float):
        self._settings["precision"]["q2"] = float(value)

    @property
    def delta_screen(self) -> float:
        return float(self._settings["precision"]["delta_screen"])

    @delta_screen.setter
    def delta_screen(self, value: float):
        self._settings["precision"]["delta_screen"] = float(value)

    @property
    def neighbourhood_size(self) -> int:
        """Maximum PCS neighbourhood size L."""
        return int(self._settings["precision"]["L"])

    @neighbourhood_size.setter
    def neighbourhood_size(self, value: int):
        self._settings["precision"]["L"] = int(value)

    @property
    def ridge(self) -> float:
        return float(self._settings["precision"]["ridge"])

    @ridge.setter
    def ridge(self, value: float):
        self._settings["precision"]["ridge"] = float(value)

    @property
    def single_band_scale(self) -> float:
        """Multiplier on sqrt(2 ln p / n) for the single-class diagonal snap."""
        return float(self._settings["precision"]["single_band_scale"])

    @single_band_scale.setter
    def single_band_scale(self, value: float):
        self._settings["precision"]["single_band_scale"] = float(value)

    @property
    def diff_band_scale(self) -> float:
        """Multiplier on sqrt(2 ln p / n) for the two-class difference threshold."""
        return float(self._settings["precision"]["diff_band_scale"])

    @diff_band_scale.setter
    def diff_band_scale(self, value: float):
        self._settings["precision"]["diff_band_scale"] = float(value)

    @property
    def min_samples(self) -> int:
        return int(self._settings["precision"]["min_samples"])

    # ========== Classify ==========

    @property
    def prior_q(self) -> float:
        return float(self._settings["classify"]["prior_q"])

    @prior_q.setter
    def prior_q(self, value: float):
        if not 0.0 < float(value) < 1.0:
            raise ParameterError(f"prior_q must lie in (0, 1), got {value}")
        self._settings["classify"]["prior_q"] = float(value)

    @property
    def lda_threshold_mode(self) -> str:
        """How LDA thresholds d: 'clip' (magnitude clipping) or 'hard'."""
        return self._settings["classify"]["lda_threshold_mode"]

    @lda_threshold_mode.setter
    def lda_threshold_mode(self, value: str):
        if value not in self.LDA_MODES:
            raise ParameterError(f"lda_threshold_mode must be one of {self.LDA_MODES}, got {value!r}")
        self._settings["classify"]["lda_threshold_mode"] = value

    @property
    def algorithm2_scaled_linear(self) -> bool:
        """Use the standardized x (instead of raw X) in the real-data rule's linear term."""
        return bool(self._settings["classify"]["algorithm2_scaled_linear"])

    @algorithm2_scaled_linear.setter
    def algorithm2_scaled_linear(self, value: bool):
        self._settings["classify"]["algorithm2_scaled_linear"] = bool(value)

    @property
    def qdaw_c(self) -> float:
        return float(self._settings["classify"]["qdaw_c"])

    @qdaw_c.setter
    def qdaw_c(self, value: float):
        self._settings["classify"]["qdaw_c"] = float(value)

    # ========== Phase lab ==========

    @property
    def phase_reps(self) -> int:
        return int(self._settings["phase"]["reps"])

    @phase_reps.setter
    def phase_reps(self, value: int):
        self._settings["phase"]["reps"] = int(value)

    @property
    def phase_n_test(self) -> int:
        return int(self._settings["phase"]["n_test"])

    @phase_n_test.setter
    def phase_n_test(self, value: int):
        self._settings["phase"]["n_test"] = int(value)

    @property
    def threads(self) -> int:
        return max(1, int(self._settings["phase"]["threads"]))

    @threads.setter
    def threads(self, value: int):
        self._settings["phase"]["threads"] = max(1, int(value))

    # ========== Benchmark ==========

    @property
    def bench_n_splits(self) -> int:
        return int(self._settings["bench"]["n_splits"])

    @property
    def bench_fraction(self) -> float:
        return float(self._settings["bench"]["fraction"])

    @property
    def bench_t_step(self) -> float:
        return float(self._settings["bench"]["t_step"])

    @property
    def bench_c_max(self) -> float:
        return float(self._settings["bench"]["c_max"])

    @bench_c_max.setter
    def bench_c_max(self, value: float):
        self._settings["bench"]["c_max"] = float(value)

    @property
    def bench_c_step(self) -> float:
        return float(self._settings["bench"]["c_step"])

    @property
    def bench_q_grid(self) -> List[float]:
        return [float(q) for q in self._settings["bench"]["q_grid"]]

    @property
    def bench_screen_pairs(self) -> List[Tuple[float, int]]:
        """(delta_screen, L) pairs searched by the benchmark."""
        return [(float(d), int(l)) for d, l in self._settings["bench"]["screen_pairs"]]


def read_key_value_file(path) -> Dict[str, str]:
    """Read a flat key=value text file.

    Blank lines and lines starting with '#' are skipped; the value is
    everything after the first '='.

    Args:
        path: File to read

    Returns:
        Mapping of stripped keys to stripped string values

    Raises:
        DataError: if the file cannot be read, a line has no '=' or a key repeats
    """
    values: Dict[str, str] = {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = f.readlines()
    except OSError as e:
        raise DataError(f"Cannot read key=value file: {e.strerror}", path=str(path)) from e

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            raise DataError("Expected key=value", path=str(path), row=lineno)
        key, value = line.split('=', 1)
        key = key.strip()
        if key in values:
            raise DataError(f"Duplicate key {key!r}", path=str(path), row=lineno)
        values[key] = value.strip()
    return values


# Global config manager instance (singleton pattern)
_config_manager: Optional[ConfigManager] = None


def get_config() -> ConfigManager:
    """Get the global config manager instance."""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager


def set_config(manager: ConfigManager):
    """Install a specific config manager (used by the CLI --settings flag)."""
    global _config_manager
    _config_manager = manager


def reset_config():
    """Reset the global config manager (useful for testing)."""
    global _config_manager
    _config_manager = None
