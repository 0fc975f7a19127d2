"""
Command-line interface.

Subcommands:
    simulate   Draw one ARW data set and write it as CSV
    phase      Run a phase grid and export CSV/SVG (optionally PNG)
    fit        Train a classifier on a corpus and save the model
    predict    Apply a saved model to a feature file
    bench      Run the split/grid-search QDA-vs-LDA benchmark
    regions    Print the theoretical region of a parameter file

Exit codes: 0 success, 1 usage or parameter error, 2 data or export error,
3 numeric failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from qdaphase import __version__
from qdaphase.arw import (
    MeanVector,
    PrecisionMatrix,
    derive_scales,
    load_params_file,
    region_classify,
    sample_dataset,
    sample_mu,
    sample_precision,
)
from qdaphase.classify import (
    Algorithm2Base,
    QdaPcsMode,
    Variant,
    ideal_qda,
    load_model,
    predict_batch,
    save_model,
    train_plain_qda,
    train_qda_pcs,
    train_qda_pcs_known_mu,
    train_qdafs,
    train_qdaw,
)
from qdaphase.config_manager import ConfigManager, get_config, set_config
from qdaphase.errors import DataError, ExportError, NumericFailure, ParameterError
from qdaphase.phase_lab import export_results, load_grid_file, run_phase_grid
from qdaphase.precision import PcsConfig
from qdaphase.realdata import (
    SearchSpace,
    SplitPlan,
    grid_search,
    load_corpus,
    infer_format,
    load_feature_matrix,
    run_benchmark,
)
from qdaphase.rng import stream

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="master seed (overrides any seed in the input files)")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads")
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS,
                        help="key=value parameter file")
    common.add_argument("--settings", type=Path, default=argparse.SUPPRESS,
                        help="directory holding settings.json")
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS,
                        help="-v for progress, -vv for debug output")
    return common


def _corpus_flags(parser: argparse.ArgumentParser, labelled: bool = True):
    parser.add_argument("--data", type=Path, required=True, help="CSV or TSV file")
    parser.add_argument("--format", choices=("csv", "tsv"), default=None,
                        help="file format (default: from the extension)")
    parser.add_argument("--id-column", default=None, help="sample id column")
    if labelled:
        parser.add_argument("--label-column", default="label", help="class label column")
        parser.add_argument("--positive-label", default=None, help="label value mapped to class 1")


def build_parser() -> CliParser:
    common = _common_flags()
    parser = CliParser(prog="qda_phase", description="High-dimensional QDA under the ARW model",
                       parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=CliParser)
    sub.required = True

    p = sub.add_parser("simulate", parents=[common], help="draw one ARW data set")
    p.add_argument("--out", type=Path, required=True, help="CSV to write (label + features)")
    p.add_argument("--n", type=int, default=None, help="sample size (default: round(p^delta))")
    p.add_argument("--out-mu", type=Path, default=None, help="also write mu as a one-column CSV")

    p = sub.add_parser("phase", parents=[common], help="run a phase grid")
    p.add_argument("--grid", type=Path, required=True, help="key=value grid file")
    p.add_argument("--out-csv", type=Path, required=True)
    p.add_argument("--out-svg", type=Path, required=True)
    p.add_argument("--out-png", type=Path, default=None)
    p.add_argument("--reps", type=int, default=None, help="replicates per cell (overrides the grid file)")

    p = sub.add_parser("fit", parents=[common], help="train a classifier and save it")
    _corpus_flags(p)
    p.add_argument("--variant", default=Variant.ALGORITHM2.value,
                   choices=[v.value for v in Variant])
    p.add_argument("--out", type=Path, required=True, help="model file (.npz)")
    p.add_argument("--t", type=float, default=None, help="threshold (default: adaptive or searched)")
    p.add_argument("--C", type=float, default=None, help="constant for Algorithm2/LDA (default: searched)")
    p.add_argument("--c", type=float, default=None, help="QDAw exponent")
    p.add_argument("--q1", type=float, default=None)
    p.add_argument("--q2", type=float, default=None)
    p.add_argument("--delta-screen", type=float, default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--omega0", type=Path, default=None, help="headerless CSV of the class-0 precision")
    p.add_argument("--omega1", type=Path, default=None, help="headerless CSV of the class-1 precision")
    p.add_argument("--mu", type=Path, default=None, help="headerless one-column CSV of mu")

    p = sub.add_parser("predict", parents=[common], help="apply a saved model")
    _corpus_flags(p, labelled=False)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--label-column", default=None,
                   help="label column to drop (and score against when it holds 0/1)")
    p.add_argument("--out", type=Path, required=True, help="CSV of labels and scores")

    p = sub.add_parser("bench", parents=[common], help="QDA-vs-LDA benchmark")
    _corpus_flags(p)
    p.add_argument("--out", type=Path, required=True, help="report CSV")
    p.add_argument("--splits", type=int, default=None, help="number of splits (default 15)")
    p.add_argument("--c-max", type=float, default=None, help="C grid half-width (default 50)")
    p.add_argument("--methods", default="qda,lda", help="comma separated methods to compare")

    p = sub.add_parser("regions", parents=[common], help="theoretical region of a parameter point")
    p.add_argument("--c", type=float, default=None, help="QDAw exponent")

    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, force=True,
                        format="%(levelname)s %(name)s: %(message)s")


def _require_config(args) -> Path:
    path = getattr(args, "config", None)
    if path is None:
        raise ParameterError(f"{args.command} needs --config <parameter file>")
    return path


def _read_matrix(path: Path) -> np.ndarray:
    try:
        frame = pd.read_csv(path, header=None)
    except FileNotFoundError as e:
        raise DataError("file not found", path=str(path)) from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, OSError) as e:
        raise DataError(f"cannot read matrix: {e}", path=str(path)) from e
    values = frame.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataError("matrix has missing or non-numeric entries", path=str(path))
    return values


def cmd_simulate(args, seed: int) -> int:
    params, file_seed = load_params_file(_require_config(args))
    seed = seed if seed is not None else (file_seed or 0)
    scales = derive_scales(params)
    rng = stream(seed, "simulate")
    mu = sample_mu(scales, params.p, rng)
    omega0 = PrecisionMatrix.identity(params.p)
    omega1 = sample_precision(scales, params.p, rng)
    n = args.n or scales.n
    data = sample_dataset(mu, omega0, omega1, n, params.q, rng)

    frame = pd.DataFrame(data.X, columns=[f"x{j + 1}" for j in range(params.p)])
    frame.insert(0, "label", data.y.astype(int))
    try:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(args.out, index=False, float_format="%.17g", lineterminator="\n")
        if args.out_mu is not None:
            pd.DataFrame({"mu": mu.values}).to_csv(args.out_mu, index=False, header=False,
                                                   float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise ExportError(f"cannot write simulated data ({e})", path=str(args.out)) from e
    print(f"Wrote {n} samples (n0={data.n0}, n1={data.n1}) with p={params.p} to {args.out}")
    return EXIT_OK


def cmd_phase(args, seed: Optional[int], threads: Optional[int]) -> int:
    spec = load_grid_file(args.grid, seed=seed, reps=args.reps)
    result = run_phase_grid(spec, threads=threads)
    export_results(result, args.out_csv, args.out_svg, args.out_png)
    failed = sum(c.reps_failed for c in result.cells)
    print(f"Wrote {len(result.cells)} cells to {args.out_csv} and {args.out_svg}"
          + (f" ({failed} failed replicates)" if failed else ""))
    return EXIT_OK


def _pcs_config(args) -> PcsConfig:
    base = PcsConfig.from_settings()
    return PcsConfig(
        q1=args.q1 if args.q1 is not None else base.q1,
        q2=args.q2 if args.q2 is not None else base.q2,
        delta_screen=args.delta_screen if args.delta_screen is not None else base.delta_screen,
        L=args.L if args.L is not None else base.L,
        ridge=base.ridge,
    )


def _precision_arg(path: Optional[Path], p: int, name: str) -> PrecisionMatrix:
    if path is None:
        if name == "omega0":
            return PrecisionMatrix.identity(p)
        raise ParameterError(f"this variant needs --{name}")
    matrix = PrecisionMatrix.from_dense(_read_matrix(path))
    if matrix.p != p:
        raise DataError(f"{name} is {matrix.p} x {matrix.p}, corpus has p={p}", path=str(path))
    return matrix


def _mu_arg(path: Optional[Path], p: int) -> MeanVector:
    if path is None:
        raise ParameterError("this variant needs --mu")
    values = _read_matrix(path).ravel()
    if values.shape != (p,):
        raise DataError(f"mu has {values.size} entries, corpus has p={p}", path=str(path))
    return MeanVector.from_values(values)


def cmd_fit(args, threads: Optional[int]) -> int:
    corpus = load_corpus(args.data, args.format, args.label_column, args.id_column,
                         args.positive_label)
    data = corpus.to_dataset()
    variant = Variant(args.variant)
    config = _pcs_config(args)

    if variant == Variant.IDEAL:
        model = ideal_qda(_mu_arg(args.mu, data.p), _precision_arg(args.omega0, data.p, "omega0"),
                          _precision_arg(args.omega1, data.p, "omega1"))
    elif variant == Variant.QDAW:
        model = train_qdaw(data, _precision_arg(args.omega1, data.p, "omega1"), args.c)
    elif variant == Variant.QDAFS:
        model = train_qdafs(data, _precision_arg(args.omega1, data.p, "omega1"), args.t)
    elif variant == Variant.PLAIN_QDA:
        model = train_plain_qda(data, _precision_arg(args.omega1, data.p, "omega1"))
    elif variant == Variant.QDAW_PCS:
        model = train_qda_pcs(data, QdaPcsMode.weak(args.c), config, threads=threads)
    elif variant == Variant.QDAFS_PCS:
        model = train_qda_pcs(data, QdaPcsMode.strong(args.t), config, threads=threads)
    elif variant == Variant.QDAFS_PCS_KNOWN0:
        model = train_qda_pcs(data, QdaPcsMode.strong(args.t), config, omega0_known=True,
                              threads=threads)
    elif variant == Variant.QDA_PCS_KNOWN_MU:
        model = train_qda_pcs_known_mu(data, _mu_arg(args.mu, data.p), config, threads=threads)
    elif args.t is not None and args.C is not None:
        base = Algorithm2Base.fit(data, config, threads=threads)
        model = base.classifier(args.t, args.C, lda=variant == Variant.LDA)
    else:
        method = "lda" if variant == Variant.LDA else "qda"
        space = SearchSpace.from_settings()
        if args.t is not None or args.C is not None:
            space = SearchSpace(t_step=space.t_step, c_max=space.c_max, c_step=space.c_step,
                                q_grid=space.q_grid, screen_pairs=space.screen_pairs,
                                t_values=(args.t,) if args.t is not None else None,
                                c_values=(args.C,) if args.C is not None else None)
        result = grid_search(data, space, method, threads=threads)
        model = result.model
        print(f"Selected q1={result.config.q1:g} q2={result.config.q2:g} "
              f"delta={result.config.delta_screen:g} L={result.config.L} t={result.t:g} "
              f"C={result.C:g} (train error {result.train_err:.4f})")

    path = save_model(model, args.out)
    print(f"Saved {variant.value} model to {path}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    drop = (args.label_column,) if args.label_column else ()
    X, ids = load_feature_matrix(args.data, args.format, args.id_column, drop_columns=drop)
    labels, scores = predict_batch(model, X)

    frame = pd.DataFrame({"label": labels.astype(int), "score": scores.total})
    if ids is not None:
        frame.insert(0, "id", list(ids))
    try:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(args.out, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise ExportError(f"cannot write predictions ({e})", path=str(args.out)) from e

    message = f"Wrote {len(frame)} predictions to {args.out}"
    if args.label_column:
        sep = "\t" if infer_format(args.data, args.format) == "tsv" else ","
        header = pd.read_csv(args.data, sep=sep, nrows=0).columns
        truth = pd.Series(dtype=float)
        if args.label_column in header:
            truth = pd.read_csv(args.data, sep=sep, usecols=[args.label_column])[args.label_column]
            truth = pd.to_numeric(truth, errors="coerce")
        if len(truth) == len(labels) and truth.isin([0, 1]).all():
            message += f" (error rate {float(np.mean(truth.to_numpy() != labels)):.4f})"
    print(message)
    return EXIT_OK


def cmd_bench(args, seed: Optional[int], threads: Optional[int]) -> int:
    corpus = load_corpus(args.data, args.format, args.label_column, args.id_column,
                         args.positive_label)
    plan = SplitPlan.from_settings(seed=seed or 0, n_splits=args.splits)
    space = SearchSpace.from_settings(c_max=args.c_max)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    report = run_benchmark(corpus, plan, space, methods=methods, threads=threads)
    report.write_csv(args.out)
    print(report.summary())
    return EXIT_OK


def cmd_regions(args) -> int:
    params, _ = load_params_file(_require_config(args))
    label = region_classify(params, c=args.c)
    print(label.verdict.value)
    for reason in label.reasons:
        print(f"  {reason}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    _configure_logging(getattr(args, "verbose", 0))
    if getattr(args, "settings", None) is not None:
        set_config(ConfigManager(config_dir=str(args.settings)))
    seed = getattr(args, "seed", None)
    threads = getattr(args, "threads", None)
    if threads is not None:
        if threads < 1:
            print("error: --threads must be at least 1", file=sys.stderr)
            return EXIT_USAGE
        get_config().threads = threads

    try:
        if args.command == "simulate":
            return cmd_simulate(args, seed)
        if args.command == "phase":
            return cmd_phase(args, seed, threads)
        if args.command == "fit":
            return cmd_fit(args, threads)
        if args.command == "predict":
            return cmd_predict(args)
        if args.command == "bench":
            return cmd_bench(args, seed, threads)
        return cmd_regions(args)
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ExportError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericFailure as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
