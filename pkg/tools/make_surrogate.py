#!/usr/bin/env python3
"""
Write a synthetic two-class corpus shaped like the rats microarray data
(120 + 61 samples, 8491 features) for the `bench` command.

Class 0 is N(-mu, I) and class 1 is N(mu, Omega1^-1), with mu and Omega1
drawn from the ARW model at a point where the precision difference carries
the signal (2 - 2 alpha - beta > 0, theta < delta/2).

Usage:
    python tools/make_surrogate.py --out surrogate.csv [--seed 1] [--p 8491]
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

# Add the project root to the path so the package imports without installing
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from qdaphase.arw import (  # noqa: E402
    ArwParams,
    PrecisionMatrix,
    delta_for_sample_size,
    derive_scales,
    sample_gaussian,
    sample_mu,
    sample_precision,
)
from qdaphase.errors import QdaPhaseError  # noqa: E402
from qdaphase.rng import stream  # noqa: E402

logger = logging.getLogger("make_surrogate")

# Exponents of the planted signal
SIGNAL = {"zeta": 0.3, "theta": 0.25, "alpha": 0.2, "beta": 1.2, "gamma": 0.6}


def make_surrogate(p: int, n0: int, n1: int, seed: int) -> pd.DataFrame:
    """Draw the corpus as a DataFrame with id, label and x1..xp columns."""
    delta = delta_for_sample_size(p, n0 + n1)
    params = ArwParams(p=p, delta=delta, **SIGNAL)
    scales = derive_scales(params)
    rng = stream(seed, "surrogate")

    mu = sample_mu(scales, p, rng)
    omega0 = PrecisionMatrix.identity(p)
    omega1 = sample_precision(scales, p, rng)
    logger.info(f"delta={delta:.4f}, {mu.support.size} mean signals, "
                f"{omega1.offdiag_support.shape[0]} off-diagonal pairs")

    X = np.vstack([sample_gaussian(-mu.values, omega0, n0, rng),
                   sample_gaussian(mu.values, omega1, n1, rng)])
    y = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    order = rng.permutation(n0 + n1)

    frame = pd.DataFrame(X[order], columns=[f"x{j + 1}" for j in range(p)])
    frame.insert(0, "label", y[order])
    frame.insert(0, "id", [f"S{i + 1:03d}" for i in range(n0 + n1)])
    return frame


def main():
    parser = argparse.ArgumentParser(description="Write a rats-shaped surrogate corpus")
    parser.add_argument("--out", type=Path, required=True, help="CSV file to write")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--p", type=int, default=8491, help="number of features")
    parser.add_argument("--n0", type=int, default=120, help="class-0 samples")
    parser.add_argument("--n1", type=int, default=61, help="class-1 samples")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    try:
        frame = make_surrogate(args.p, args.n0, args.n1, args.seed)
    except QdaPhaseError as e:
        print(f"Error: {e}")
        return False

    args.out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(args.out, index=False, float_format="%.8g", lineterminator="\n")
    print(f"Wrote {len(frame)} x {args.p} surrogate corpus to {args.out}")
    return True


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
