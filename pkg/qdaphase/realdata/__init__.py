"""
Real-data benchmark: corpora, stratified splits, grid search and reports.

Usage:
    from qdaphase.realdata import load_corpus, SplitPlan, SearchSpace, run_benchmark

    corpus = load_corpus("rats.csv", label_column="label")
    report = run_benchmark(corpus, SplitPlan(seed=1), SearchSpace.from_settings())
    report.write_csv("bench.csv")
    print(report.summary())
"""

from .corpus import Corpus, load_corpus, load_feature_matrix, infer_format
from .splits import SplitPlan, Split, make_splits
from .search import (
    METHODS,
    SearchSpace,
    SearchResult,
    PcsCache,
    error_surface,
    grid_search,
    grid_search_methods,
)
from .bench import REPORT_COLUMNS, BenchRow, BenchSummary, BenchReport, run_benchmark

__all__ = [
    # Corpora
    'Corpus',
    'load_corpus',
    'load_feature_matrix',
    'infer_format',
    # Splits
    'SplitPlan',
    'Split',
    'make_splits',
    # Search
    'METHODS',
    'SearchSpace',
    'SearchResult',
    'PcsCache',
    'error_surface',
    'grid_search',
    'grid_search_methods',
    # Benchmark
    'REPORT_COLUMNS',
    'BenchRow',
    'BenchSummary',
    'BenchReport',
    'run_benchmark',
]
