"""
Loading labeled two-class corpora from CSV/TSV files.

Rows are samples, columns features; one column holds the class label and
an optional column holds sample ids. Row numbers in error messages are
1-based file lines (the header is line 1).
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from qdaphase.arw.sampling import LabeledDataset
from qdaphase.errors import DataError, ParameterError

logger = logging.getLogger(__name__)

_SEPARATORS = {"csv": ",", "tsv": "\t"}

_LINE_IN_MESSAGE = re.compile(r"line (\d+)")


@dataclass(frozen=True, eq=False)
class Corpus:
    """A two-class data matrix.

    Attributes:
        X: n x p features
        y: labels in {0, 1}
        feature_names: Column names of X
        sample_ids: Sample ids, if the file had an id column
        label_map: Original label -> {0, 1}
        rejected_rows: File lines dropped for missing values
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: Tuple[str, ...]
    sample_ids: Optional[Tuple[str, ...]] = None
    label_map: Dict[str, int] = field(default_factory=dict)
    rejected_rows: Tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def class_counts(self) -> Tuple[int, int]:
        return int(np.sum(self.y == 0)), int(np.sum(self.y == 1))

    def to_dataset(self) -> LabeledDataset:
        return LabeledDataset(X=self.X, y=self.y)


def infer_format(path, fmt: Optional[str] = None) -> str:
    if fmt is not None:
        if fmt not in _SEPARATORS:
            raise ParameterError(f"format must be csv or tsv, got {fmt!r}")
        return fmt
    return "tsv" if Path(path).suffix.lower() in (".tsv", ".tab", ".txt") else "csv"


def _read_table(path: Path, fmt: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path, sep=_SEPARATORS[fmt], dtype=str, keep_default_na=True,
                           encoding="utf-8")
    except FileNotFoundError as e:
        raise DataError("file not found", path=str(path)) from e
    except pd.errors.EmptyDataError as e:
        raise DataError("file is empty", path=str(path)) from e
    except pd.errors.ParserError as e:
        match = _LINE_IN_MESSAGE.search(str(e))
        row = int(match.group(1)) if match else None
        raise DataError(f"cannot parse {fmt.upper()}: {e}", path=str(path), row=row) from e
    except (UnicodeDecodeError, OSError) as e:
        raise DataError(f"cannot read file: {e}", path=str(path)) from e


def _numeric_block(frame: pd.DataFrame, path: Path) -> np.ndarray:
    """Convert string cells to floats, reporting the first non-numeric cell."""
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna() & frame.notna()
    if bad.to_numpy().any():
        r, c = np.argwhere(bad.to_numpy())[0]
        raise DataError(f"non-numeric value {frame.iat[r, c]!r}", path=str(path),
                        row=int(frame.index[r]) + 2, column=frame.columns[c])
    return numeric.to_numpy(dtype=float)


def _label_mapping(labels: pd.Series, positive_label: Optional[str], path: Path) -> Dict[str, int]:
    classes = sorted(labels.unique())
    numeric = pd.to_numeric(pd.Series(classes), errors="coerce")
    if numeric.notna().all():
        classes = [classes[i] for i in np.argsort(numeric.to_numpy(), kind="stable")]
    if len(classes) > 2:
        raise DataError(f"expected two classes, found {len(classes)}: {', '.join(classes[:5])}",
                        path=str(path))
    if len(classes) < 2:
        raise DataError(f"one class is empty (only {classes[0] if classes else 'none'} present)",
                        path=str(path))
    if positive_label is not None:
        if positive_label not in classes:
            raise DataError(f"positive label {positive_label!r} not among {classes}", path=str(path))
        negative = classes[0] if classes[1] == positive_label else classes[1]
        return {negative: 0, positive_label: 1}
    if set(classes) == {"0", "1"}:
        return {"0": 0, "1": 1}
    return {classes[0]: 0, classes[1]: 1}


def load_corpus(path, fmt: Optional[str] = None, label_column: str = "label",
                id_column: Optional[str] = None, positive_label: Optional[str] = None) -> Corpus:
    """Read a two-class corpus.

    Rows with any missing value are rejected and reported; labels are mapped
    to {0, 1} (sorted order, or `positive_label` -> 1) and the mapping logged.

    Raises:
        DataError: unreadable file, parse error (with row), non-numeric cell
            (with row and column), missing label column, not exactly two
            classes, or duplicate sample ids
    """
    path = Path(path)
    fmt = infer_format(path, fmt)
    frame = _read_table(path, fmt)

    for name, role in ((label_column, "label"), (id_column, "id")):
        if name is not None and name not in frame.columns:
            raise DataError(f"{role} column not found", path=str(path), column=name)

    feature_cols = [c for c in frame.columns if c not in (label_column, id_column)]
    if not feature_cols:
        raise DataError("no feature columns", path=str(path))

    na_rows = frame[feature_cols + [label_column]].isna().any(axis=1)
    rejected = tuple(int(i) + 2 for i in frame.index[na_rows])
    if rejected:
        logger.warning(f"Rejected {len(rejected)} row(s) with missing values in {path}: "
                       f"lines {', '.join(map(str, rejected[:10]))}{' ...' if len(rejected) > 10 else ''}")
        frame = frame.loc[~na_rows]
    if frame.empty:
        raise DataError("no complete rows", path=str(path))

    sample_ids = None
    if id_column is not None:
        ids = frame[id_column].astype(str)
        dup = ids.duplicated()
        if dup.any():
            first = int(np.flatnonzero(dup.to_numpy())[0])
            raise DataError(f"duplicate sample id {ids.iloc[first]!r}", path=str(path),
                            row=int(frame.index[first]) + 2, column=id_column)
        sample_ids = tuple(ids)

    labels = frame[label_column].astype(str).str.strip()
    mapping = _label_mapping(labels, positive_label, path)
    y = labels.map(mapping).to_numpy(dtype=np.int8)
    X = _numeric_block(frame[feature_cols], path)

    logger.info(f"Loaded {X.shape[0]} x {X.shape[1]} corpus from {path}; labels "
                + ", ".join(f"{k!r} -> {v}" for k, v in mapping.items()))
    return Corpus(X=X, y=y, feature_names=tuple(str(c) for c in feature_cols),
                  sample_ids=sample_ids, label_map=mapping, rejected_rows=rejected)


def load_feature_matrix(path, fmt: Optional[str] = None, id_column: Optional[str] = None,
                        drop_columns: Tuple[str, ...] = ()) -> Tuple[np.ndarray, Optional[Tuple[str, ...]]]:
    """Read an unlabeled feature file for prediction.

    Returns:
        (X, sample_ids); missing values are errors here since every row needs a label
    """
    path = Path(path)
    fmt = infer_format(path, fmt)
    frame = _read_table(path, fmt)
    if id_column is not None and id_column not in frame.columns:
        raise DataError("id column not found", path=str(path), column=id_column)
    feature_cols = [c for c in frame.columns if c != id_column and c not in drop_columns]
    missing = frame[feature_cols].isna()
    if missing.to_numpy().any():
        r, c = np.argwhere(missing.to_numpy())[0]
        raise DataError("missing value", path=str(path), row=int(r) + 2, column=feature_cols[c])
    ids = tuple(frame[id_column].astype(str)) if id_column is not None else None
    return _numeric_block(frame[feature_cols], path), ids
