"""
Model files: a numpy .npz archive holding every TrainedClassifier field
plus a JSON header with the format and library versions.
"""

import json
import logging
import zipfile
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp
from packaging import version

from qdaphase import __version__
from qdaphase.classify.model import FeatureScaling, TrainedClassifier, Variant
from qdaphase.errors import DataError, ExportError

logger = logging.getLogger(__name__)

FORMAT_VERSION = "1.0"

_MATRICES = ("quad", "omega0", "omega1", "omega_diff")
_VECTORS = ("d", "d_sel", "weights", "mu0_hat", "mu1_hat")


def _pack_matrix(name: str, M, arrays: Dict[str, np.ndarray]) -> Optional[str]:
    if M is None:
        return None
    if sp.issparse(M):
        csr = sp.csr_matrix(M)
        arrays[f"{name}.data"] = csr.data
        arrays[f"{name}.indices"] = csr.indices
        arrays[f"{name}.indptr"] = csr.indptr
        arrays[f"{name}.shape"] = np.asarray(csr.shape, dtype=np.int64)
        return "csr"
    arrays[name] = np.ascontiguousarray(M, dtype=float)
    return "dense"


def _unpack_matrix(name: str, kind: Optional[str], archive):
    if kind is None:
        return None
    if kind == "csr":
        shape = tuple(int(s) for s in archive[f"{name}.shape"])
        return sp.csr_matrix((archive[f"{name}.data"], archive[f"{name}.indices"],
                              archive[f"{name}.indptr"]), shape=shape)
    if kind == "dense":
        return archive[name]
    raise DataError(f"unknown storage kind {kind!r} for {name}")


def save_model(model: TrainedClassifier, path) -> Path:
    """Write a model file; returns the path actually written (.npz appended if missing).

    Raises:
        ExportError: the file could not be written
    """
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_name(path.name + ".npz")

    arrays: Dict[str, np.ndarray] = {}
    storage = {name: _pack_matrix(name, getattr(model, name), arrays) for name in _MATRICES}
    present = []
    for name in _VECTORS:
        value = getattr(model, name)
        if value is not None:
            arrays[name] = np.asarray(value)
            present.append(name)
    if model.scale is not None:
        arrays["scale.center"] = model.scale.center
        arrays["scale.scale"] = model.scale.scale
        arrays["scale.keep"] = np.asarray(model.scale.keep, dtype=bool)

    header = {
        "format_version": FORMAT_VERSION,
        "library_version": __version__,
        "variant": model.variant.value,
        "t": model.t,
        "C": model.C,
        "prior_offset": model.prior_offset,
        "linear_on_scaled": model.linear_on_scaled,
        "storage": storage,
        "vectors": present,
        "scaled": model.scale is not None,
    }
    arrays["header"] = np.array(json.dumps(header, sort_keys=True))

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)
    except OSError as e:
        logger.error(f"Error writing model file {path}: {e}")
        raise ExportError(f"cannot write model file: {e}", path=path) from e
    logger.info(f"Saved {model.variant.value} model (p={model.p}) to {path}")
    return path


def load_model(path) -> TrainedClassifier:
    """Read a model file written by save_model.

    Raises:
        DataError: missing or corrupt file, or a format newer than this library reads
    """
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as archive:
            header = json.loads(str(archive["header"][()]))
            file_version = version.parse(header["format_version"])
            if file_version.major > version.parse(FORMAT_VERSION).major:
                raise DataError(f"model format {file_version} is newer than supported "
                                f"{FORMAT_VERSION}", path=path)
            storage = header["storage"]
            matrices = {name: _unpack_matrix(name, storage.get(name), archive)
                        for name in _MATRICES}
            vectors = {name: archive[name] if name in header["vectors"] else None
                       for name in _VECTORS}
            scale = None
            if header["scaled"]:
                scale = FeatureScaling(center=archive["scale.center"],
                                       scale=archive["scale.scale"],
                                       keep=archive["scale.keep"])
    except FileNotFoundError as e:
        raise DataError("model file not found", path=path) from e
    except (OSError, ValueError, KeyError, zipfile.BadZipFile, json.JSONDecodeError) as e:
        raise DataError(f"corrupt model file: {e}", path=path) from e

    return TrainedClassifier(
        variant=Variant(header["variant"]),
        quad=matrices["quad"],
        d=vectors["d"],
        d_sel=vectors["d_sel"],
        weights=vectors["weights"],
        t=float(header["t"]),
        C=float(header["C"]),
        prior_offset=float(header["prior_offset"]),
        omega0=matrices["omega0"],
        omega1=matrices["omega1"],
        omega_diff=matrices["omega_diff"],
        mu0_hat=vectors["mu0_hat"],
        mu1_hat=vectors["mu1_hat"],
        scale=scale,
        linear_on_scaled=bool(header["linear_on_scaled"]),
    )
