import math

import numpy as np
import pandas as pd
import pytest
from matplotlib.colors import to_hex

from qdaphase.classify import Variant
from qdaphase.errors import ExportError, ParameterError
from qdaphase.phase_lab import (
    CSV_COLUMNS,
    INVALID_REGION,
    AxisSpec,
    GridSpec,
    PhaseColors,
    PhaseResult,
    export_results,
    load_grid_file,
    plane_of,
    ramp_colormap,
    render_figure,
    result_frame,
    run_phase_grid,
    theoretical_boundary,
)

FIXED = {"delta": 0.8, "alpha": 0.2, "beta": 1.2, "gamma": 0.6}


def small_grid(**changes) -> GridSpec:
    values = dict(
        axis1=AxisSpec.parse("zeta:0.2:0.4:2"),
        axis2=AxisSpec.parse("theta:0.2:0.3:2"),
        fixed=FIXED,
        classifiers=(Variant.IDEAL, Variant.QDAFS),
        p_list=(50,),
        reps=2,
        n_test=60,
        seed=3,
    )
    values.update(changes)
    return GridSpec(**values)


@pytest.fixture
def small_result():
    return run_phase_grid(small_grid(), threads=1)


class TestAxes:
    def test_parse(self):
        axis = AxisSpec.parse("zeta:0.05:0.95:19")
        assert (axis.name, axis.lo, axis.hi, axis.steps) == ("zeta", 0.05, 0.95, 19)
        assert axis.values[0] == 0.05 and axis.values[-1] == 0.95
        assert len(axis.values) == 19
        assert str(axis) == "zeta:0.05:0.95:19"

    @pytest.mark.parametrize("text", ["zeta:0.1:0.9", "omega:0:1:3", "zeta:0.1:0.9:1",
                                      "zeta:0.9:0.1:5", "zeta:a:0.9:5"])
    def test_parse_errors(self, text):
        with pytest.raises(ParameterError):
            AxisSpec.parse(text)

    def test_grid_validation(self):
        with pytest.raises(ParameterError):
            small_grid(axis2=AxisSpec.parse("zeta:0.1:0.2:2"))
        with pytest.raises(ParameterError):
            small_grid(fixed={"delta": 0.8, "alpha": 0.2})
        with pytest.raises(ParameterError):
            small_grid(fixed=dict(FIXED, zeta=0.3))
        with pytest.raises(ParameterError):
            small_grid(p_list=(3,))
        with pytest.raises(ParameterError):
            small_grid(omega0="random")


class TestGridFile:
    def test_load(self, tmp_path):
        path = tmp_path / "grid.txt"
        path.write_text("axis1=zeta:0.1:0.9:5\naxis2=theta:0.1:0.5:3\np_list=100,200\n"
                        "classifiers=QDAfs,IdealQDA\ndelta=0.7\nalpha=0.2\nbeta=1.2\ngamma=0.6\n"
                        "reps=4\nseed=9\n", encoding="utf-8")
        spec = load_grid_file(path)
        assert spec.p_list == (100, 200)
        assert spec.classifiers == (Variant.QDAFS, Variant.IDEAL)
        assert spec.reps == 4 and spec.seed == 9
        assert spec.n_test == 200
        assert spec.n_cells == 30
        overridden = load_grid_file(path, seed=1, reps=2)
        assert (overridden.seed, overridden.reps) == (1, 2)

    def test_unknown_key_and_classifier(self, tmp_path):
        base = "axis1=zeta:0.1:0.9:5\naxis2=theta:0.1:0.5:3\np=100\ndelta=0.7\nalpha=0.2\nbeta=1.2\ngamma=0.6\n"
        path = tmp_path / "grid.txt"
        path.write_text(base + "colour=red\n", encoding="utf-8")
        with pytest.raises(ParameterError, match="colour"):
            load_grid_file(path)
        path.write_text(base + "classifiers=QDAfs,Magic\n", encoding="utf-8")
        with pytest.raises(ParameterError, match="known classifiers"):
            load_grid_file(path)


class TestRun:
    def test_cells_and_standard_errors(self, small_result):
        assert len(small_result.cells) == 2 * 2 * 2
        for cell in small_result.cells:
            assert cell.reps_ok + cell.reps_failed == 2
            assert 0.0 <= cell.mr <= 1.0
            expected = math.sqrt(cell.mr * (1.0 - cell.mr) / (cell.reps_ok * 60))
            assert cell.se == pytest.approx(expected)
            assert cell.region in ("Impossible", "PossibleQDAfs", "PossibleQDAw", "Indeterminate")

    def test_threads_do_not_change_results(self, small_result):
        threaded = run_phase_grid(small_grid(), threads=3)
        pd.testing.assert_frame_equal(result_frame(threaded), result_frame(small_result))

    def test_seed_changes_results(self, small_result):
        other = run_phase_grid(small_grid(seed=4), threads=1)
        assert not result_frame(other)["mr"].equals(result_frame(small_result)["mr"])

    def test_invalid_cells(self):
        spec = small_grid(axis1=AxisSpec.parse("alpha:0.1:0.3:2"), axis2=AxisSpec.parse("beta:0.1:1.5:2"),
                          fixed={"delta": 0.8, "zeta": 0.3, "theta": 0.25, "gamma": 0.6},
                          classifiers=(Variant.IDEAL,))
        result = run_phase_grid(spec, threads=1)
        invalid = [c for c in result.cells if c.axis2 == 0.1]
        assert len(invalid) == 2
        for cell in invalid:
            assert cell.region == INVALID_REGION
            assert math.isnan(cell.mr)
            assert cell.reps_ok == 0 and cell.reps_failed == 2
        assert all(c.region != INVALID_REGION for c in result.cells if c.axis2 == 1.5)

    def test_sampled_omega0(self):
        spec = small_grid(omega0="sampled", classifiers=(Variant.IDEAL, Variant.PLAIN_QDA), reps=1)
        result = run_phase_grid(spec, threads=1)
        assert all(c.reps_ok + c.reps_failed == 1 for c in result.cells)

    def test_boundaries_follow_the_plane(self, small_result):
        names = {curve.name for curve in small_result.boundaries}
        assert "rho_curve" in names
        assert "kappa1_zero" not in names


class TestBoundaries:
    def test_rho_curve_breakpoint(self):
        curve = theoretical_boundary("rho_curve", {"delta": 0.5}, 21)
        assert (curve.x, curve.y) == ("zeta", "theta")
        hits = np.isclose(curve.points[:, 0], 0.25) & np.isclose(curve.points[:, 1], 0.25)
        assert hits.any()

    def test_kappa1_zero_line(self):
        curve = theoretical_boundary("kappa1_zero", {}, 101)
        assert np.interp(0.4, curve.points[:, 0], curve.points[:, 1]) == pytest.approx(1.2)
        assert np.all(curve.points[:, 1] < 2.0)

    def test_reversed_plane_swaps_coordinates(self):
        natural = theoretical_boundary("kappa2_zero", {}, 11)
        reversed_ = theoretical_boundary("kappa2_zero", {}, 11, plane=("zeta", "theta"))
        assert (reversed_.x, reversed_.y) == ("zeta", "theta")
        assert np.array_equal(reversed_.points, natural.points[:, ::-1])

    def test_plain_qda_locus_is_empty_when_the_other_index_dominates(self):
        # kappa1 = 2 - 0.2 - 1.2 = 0.6 already above (1 - 0.8)/2
        curve = theoretical_boundary("kappa_plain_qda", dict(FIXED), 11)
        assert curve.empty

    def test_errors(self):
        with pytest.raises(ParameterError):
            theoretical_boundary("unknown", {}, 10)
        with pytest.raises(ParameterError):
            theoretical_boundary("rho_curve", {}, 10)
        with pytest.raises(ParameterError):
            theoretical_boundary("rho_curve", {"delta": 0.5}, 10, plane=("alpha", "beta"))
        assert plane_of("kappa_plain_qda", ("beta", "alpha")) == ("alpha", "beta")


class TestColors:
    def test_ramp_ends_and_missing_cells(self):
        cmap = ramp_colormap()
        assert to_hex(cmap(0.0)) == PhaseColors.RAMP[0]
        assert to_hex(cmap(1.0)) == PhaseColors.RAMP[-1]
        assert to_hex(cmap(1.5)) == PhaseColors.RAMP[-1]
        assert to_hex(cmap.get_bad()) == PhaseColors.MISSING

    def test_heatmap_saturates_at_the_ceiling(self, small_result):
        fig = render_figure(small_result)
        mesh = fig.axes[0].collections[0]
        assert mesh.norm.vmin == 0.0
        assert mesh.norm.vmax == PhaseColors.MR_CEILING


class TestExport:
    def test_files_and_rows(self, tmp_path, small_result):
        csv, svg = tmp_path / "out" / "phase.csv", tmp_path / "out" / "phase.svg"
        export_results(small_result, csv, svg)
        frame = pd.read_csv(csv)
        assert list(frame.columns) == CSV_COLUMNS
        assert len(frame) == len(small_result.cells)
        assert svg.read_text(encoding="utf-8").lstrip().startswith("<?xml")
        assert not [p for p in csv.parent.iterdir() if p.name.startswith(".qdaphase-")]

    def test_export_is_byte_stable(self, tmp_path, small_result):
        first = (tmp_path / "a.csv", tmp_path / "a.svg")
        second = (tmp_path / "b.csv", tmp_path / "b.svg")
        export_results(small_result, *first)
        export_results(small_result, *second)
        assert first[0].read_bytes() == second[0].read_bytes()
        assert first[1].read_bytes() == second[1].read_bytes()

    def test_png(self, tmp_path, small_result):
        png = tmp_path / "phase.png"
        export_results(small_result, tmp_path / "phase.csv", tmp_path / "phase.svg", png)
        assert png.read_bytes().startswith(b"\x89PNG")

    def test_failed_cells_export_as_nan(self, tmp_path):
        spec = small_grid(axis1=AxisSpec.parse("alpha:0.1:0.3:2"), axis2=AxisSpec.parse("beta:0.1:1.5:2"),
                          fixed={"delta": 0.8, "zeta": 0.3, "theta": 0.25, "gamma": 0.6},
                          classifiers=(Variant.IDEAL,), reps=1)
        csv = tmp_path / "phase.csv"
        export_results(run_phase_grid(spec, threads=1), csv, tmp_path / "phase.svg")
        frame = pd.read_csv(csv)
        failed = frame[frame["reps_ok"] == 0]
        assert len(failed) == 2
        assert failed["mr"].isna().all() and failed["se"].isna().all()
        assert frame.loc[frame["reps_ok"] > 0, "mr"].between(0.0, 1.0).all()

    def test_empty_result(self, tmp_path):
        empty = PhaseResult(spec=small_grid(), cells=())
        with pytest.raises(ExportError):
            export_results(empty, tmp_path / "e.csv", tmp_path / "e.svg")
        assert not (tmp_path / "e.csv").exists()
