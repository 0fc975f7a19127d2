import numpy as np
import pytest

from conftest import two_class_data
from qdaphase.classify import Algorithm2Base, predict_batch
from qdaphase.errors import DataError, ParameterError
from qdaphase.precision import PcsConfig
from qdaphase.realdata import (
    REPORT_COLUMNS,
    Corpus,
    PcsCache,
    SearchSpace,
    SplitPlan,
    error_surface,
    grid_search,
    grid_search_methods,
    load_corpus,
    load_feature_matrix,
    make_splits,
    run_benchmark,
)
from qdaphase.realdata.search import _best_cell

TOY = "id,label,f1,f2\na,B,1.0,2.0\nb,A,0.5,1.5\nc,B,,3.0\nd,A,2.0,0.1\n"

SMALL_SPACE = SearchSpace(t_step=0.5, c_max=3.0, c_step=1.0, q_pairs=((0.5, 0.5), (1.0, 1.0)),
                          screen_pairs=((0.1, 5),))


def write(tmp_path, text, name="corpus.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def small_corpus(seed: int = 0, shift: float = 0.6) -> Corpus:
    data = two_class_data(30, 20, 6, shift=shift, seed=seed)
    return Corpus(X=np.array(data.X), y=np.array(data.y),
                  feature_names=tuple(f"x{j + 1}" for j in range(6)))


class TestCorpus:
    def test_toy_file(self, tmp_path):
        corpus = load_corpus(write(tmp_path, TOY), id_column="id")
        assert corpus.rejected_rows == (4,)
        assert corpus.label_map == {"A": 0, "B": 1}
        assert corpus.y.tolist() == [1, 0, 0]
        assert corpus.sample_ids == ("a", "b", "d")
        assert corpus.feature_names == ("f1", "f2")
        assert corpus.X[2].tolist() == [2.0, 0.1]
        assert corpus.class_counts() == (2, 1)

    def test_positive_label(self, tmp_path):
        corpus = load_corpus(write(tmp_path, TOY), id_column="id", positive_label="A")
        assert corpus.label_map == {"B": 0, "A": 1}
        assert corpus.y.tolist() == [0, 1, 1]

    def test_tsv(self, tmp_path):
        corpus = load_corpus(write(tmp_path, TOY.replace(",", "\t"), "corpus.tsv"), id_column="id")
        assert corpus.n == 3 and corpus.p == 2

    def test_three_classes(self, tmp_path):
        with pytest.raises(DataError, match="two classes"):
            load_corpus(write(tmp_path, TOY + "e,C,1.0,1.0\n"), id_column="id")

    def test_single_class(self, tmp_path):
        with pytest.raises(DataError, match="one class"):
            load_corpus(write(tmp_path, "label,f1\nA,1\nA,2\n"))

    def test_duplicate_ids(self, tmp_path):
        with pytest.raises(DataError) as info:
            load_corpus(write(tmp_path, TOY + "a,A,1.0,1.0\n"), id_column="id")
        assert info.value.row == 6
        assert info.value.column == "id"

    def test_non_numeric_cell(self, tmp_path):
        with pytest.raises(DataError) as info:
            load_corpus(write(tmp_path, TOY + "e,A,abc,1.0\n"), id_column="id")
        assert info.value.row == 6
        assert info.value.column == "f1"

    def test_missing_label_column_and_file(self, tmp_path):
        with pytest.raises(DataError):
            load_corpus(write(tmp_path, TOY), label_column="class")
        with pytest.raises(DataError):
            load_corpus(tmp_path / "absent.csv")

    def test_feature_matrix(self, tmp_path):
        X, ids = load_feature_matrix(write(tmp_path, "id,f1,f2\na,1,2\nb,3,4\n"), id_column="id")
        assert ids == ("a", "b")
        assert X.tolist() == [[1.0, 2.0], [3.0, 4.0]]
        with pytest.raises(DataError):
            load_feature_matrix(write(tmp_path, "f1,f2\n1,\n", "gap.csv"))


class TestSplits:
    def test_stratified_sizes(self):
        labels = np.array([0] * 120 + [1] * 61)
        splits = make_splits(labels, SplitPlan(n_splits=15, fraction=0.25, seed=1))
        assert len(splits) == 15
        for split in splits:
            assert np.sum(labels[split.test] == 0) == 30
            assert np.sum(labels[split.test] == 1) == 15
            assert len(np.intersect1d(split.train, split.test)) == 0
            assert len(split.train) + len(split.test) == 181

    def test_deterministic_and_seeded(self):
        labels = np.array([0] * 40 + [1] * 20)
        a = make_splits(labels, SplitPlan(n_splits=3, seed=2))
        b = make_splits(labels, SplitPlan(n_splits=3, seed=2))
        c = make_splits(labels, SplitPlan(n_splits=3, seed=3))
        assert all(np.array_equal(x.test, y.test) for x, y in zip(a, b))
        assert not all(np.array_equal(x.test, y.test) for x, y in zip(a, c))
        assert not np.array_equal(a[0].test, a[1].test)

    def test_plan_validation(self):
        for fraction in (0.0, 1.0):
            with pytest.raises(ParameterError):
                SplitPlan(fraction=fraction)
        with pytest.raises(ParameterError):
            SplitPlan(n_splits=0)

    def test_class_too_small(self):
        with pytest.raises(DataError):
            make_splits(np.array([0] * 10 + [1]), SplitPlan(fraction=0.25))


class TestSearch:
    def test_space_grids(self):
        space = SearchSpace(t_step=0.5, c_max=2.0, c_step=1.0)
        assert space.c_grid().tolist() == [-2.0, -1.0, 0.0, 1.0, 2.0]
        assert space.t_grid(np.array([0.3, -1.2])).tolist() == [0.0, 0.5, 1.0]
        assert space.size == 200
        with pytest.raises(ParameterError):
            SearchSpace(t_step=0.0)

    def test_singleton_grid(self):
        data = small_corpus().to_dataset()
        space = SearchSpace(t_values=(0.0,), c_values=(0.0,), q_pairs=((0.5, 0.5),),
                            screen_pairs=((0.1, 30),))
        result = grid_search(data, space, "qda")
        assert (result.t, result.C) == (0.0, 0.0)
        assert (result.config.q1, result.config.q2, result.config.L) == (0.5, 0.5, 30)
        assert result.n_configs == 1 and result.n_failed == 0

    def test_separable_classes_reach_zero_training_error(self):
        data = small_corpus(shift=2.0).to_dataset()
        results = grid_search_methods(data, SMALL_SPACE)
        assert results["lda"].train_err == 0.0
        assert results["qda"].train_err <= 0.05

    def test_wider_constant_range_never_hurts(self):
        data = small_corpus(seed=1, shift=0.3).to_dataset()
        narrow = grid_search(data, SearchSpace(t_step=0.5, c_max=1.0, q_pairs=((0.5, 0.5),),
                                               screen_pairs=((0.1, 5),)), "qda")
        wide = grid_search(data, SearchSpace(t_step=0.5, c_max=8.0, q_pairs=((0.5, 0.5),),
                                             screen_pairs=((0.1, 5),)), "qda")
        assert wide.train_err <= narrow.train_err

    @pytest.mark.parametrize("method, lda_mode", [("qda", None), ("lda", "clip"), ("lda", "hard")])
    def test_surface_matches_fitted_classifiers(self, method, lda_mode):
        data = small_corpus(seed=2).to_dataset()
        base = Algorithm2Base.fit(data, PcsConfig(q1=0.5, q2=0.5, L=5))
        t_values = np.array([0.0, 0.3, 1.1])
        c_values = np.array([-1.5, 0.5, 2.5])
        surface = error_surface(base, data, method, t_values, c_values, lda_mode=lda_mode)
        for i, t in enumerate(t_values):
            for j, C in enumerate(c_values):
                model = base.classifier(t, C, lda=method == "lda", lda_mode=lda_mode)
                labels, _ = predict_batch(model, data.X)
                assert surface[i, j] == np.sum(labels != data.y)

    def test_ties_break_on_threshold_then_constant(self):
        t_values = np.array([0.0, 0.1, 0.2])
        c_values = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        assert _best_cell(np.zeros((3, 5), dtype=int), t_values, c_values) == (0, 0.0, 0.0)
        errors = np.full((3, 5), 4)
        errors[1, 1] = errors[1, 3] = errors[2, 0] = 1
        assert _best_cell(errors, t_values, c_values) == (1, 0.1, -1.0)

    def test_cache_is_shared_between_searches(self):
        data = small_corpus().to_dataset()
        cache = PcsCache()
        grid_search(data, SMALL_SPACE, "qda", cache=cache)
        grid_search(data, SMALL_SPACE, "lda", cache=cache)
        assert len(cache) == 2

    def test_unknown_method(self):
        with pytest.raises(ParameterError):
            grid_search(small_corpus().to_dataset(), SMALL_SPACE, "svm")


class TestBenchmark:
    def test_report_rows(self):
        report = run_benchmark(small_corpus(), SplitPlan(n_splits=3, seed=1), SMALL_SPACE, threads=1)
        frame = report.to_frame()
        assert list(frame.columns) == REPORT_COLUMNS
        assert len(frame) == 6
        assert frame["split"].tolist() == [0, 0, 1, 1, 2, 2]
        assert frame["method"].tolist() == ["qda", "lda"] * 3
        assert frame["test_err"].between(0.0, 1.0).all()
        summary = report.summary()
        assert sum(summary.wins) + summary.ties == 3
        assert "QDA wins" in str(summary)

    def test_same_method_twice_always_ties(self):
        report = run_benchmark(small_corpus(), SplitPlan(n_splits=2, seed=1), SMALL_SPACE,
                               methods=("qda", "qda"), threads=1)
        summary = report.summary()
        assert summary.wins == (0, 0)
        assert summary.ties == 2
        assert len(report.rows) == 2

    def test_csv_is_deterministic_across_threads(self, tmp_path):
        plan = SplitPlan(n_splits=3, seed=5)
        one = run_benchmark(small_corpus(seed=3), plan, SMALL_SPACE, threads=1).write_csv(tmp_path / "a.csv")
        many = run_benchmark(small_corpus(seed=3), plan, SMALL_SPACE, threads=3).write_csv(tmp_path / "b.csv")
        assert one.read_bytes() == many.read_bytes()
