import numpy as np
import pytest

from singularity_metric import (
    BreakpointError,
    MatrixError,
    SingularityMatrix,
    build_matrix,
    matrix_from_upper_triangle,
    matrix_from_widths,
    segment_distribution,
    upper_triangle_dict,
    write_matrix_csv,
)
from utils import read_csv


def dyadic_widths(rng, n):
    """Widths on a dyadic grid so differences are exact in floating point"""
    return rng.integers(0, 2**20, size=n) / 1024.0


class TestBuildMatrix:
    def test_example(self, spectrum_factory, gamma_example):
        spectra = [spectrum_factory(f"s{i}", g) for i, g in enumerate(gamma_example)]
        matrix = build_matrix(spectra)
        expected = [[0.0, 2.0, 0.5], [2.0, 0.0, 1.5], [0.5, 1.5, 0.0]]
        np.testing.assert_array_equal(matrix.rho, expected)
        assert matrix.ids == ("s0", "s1", "s2")

    def test_equal_widths_are_at_distance_zero(self, spectrum_factory):
        matrix = build_matrix([spectrum_factory("x", 0.7), spectrum_factory("y", 0.7)])
        assert matrix.rho[0, 1] == 0.0
        assert matrix.size == 2

    def test_axioms(self, rng):
        for _ in range(1000):
            gamma = dyadic_widths(rng, 3)
            rho = matrix_from_widths(["a", "b", "c"], gamma).rho
            assert np.all(rho >= 0)
            np.testing.assert_array_equal(rho, rho.T)
            for i in range(3):
                for j in range(3):
                    assert (rho[i, j] == 0) == (gamma[i] == gamma[j])
                    for k in range(3):
                        assert rho[i, k] <= rho[i, j] + rho[j, k]

    def test_relabeling(self, rng):
        gamma = rng.random(10)
        ids = [f"s{i}" for i in range(10)]
        perm = rng.permutation(10)
        base = matrix_from_widths(ids, gamma)
        permuted = matrix_from_widths([ids[p] for p in perm], gamma[perm])
        np.testing.assert_array_equal(permuted.rho, base.rho[np.ix_(perm, perm)])

    def test_translation(self, rng):
        gamma = dyadic_widths(rng, 12)
        ids = [str(i) for i in range(12)]
        np.testing.assert_array_equal(
            matrix_from_widths(ids, gamma + 8.0).rho, matrix_from_widths(ids, gamma).rho
        )

    def test_guards(self, spectrum_factory):
        with pytest.raises(MatrixError):
            build_matrix([spectrum_factory("a", 1.0)])
        with pytest.raises(MatrixError):
            build_matrix([spectrum_factory("a", 1.0), spectrum_factory("b", np.nan)])
        with pytest.raises(MatrixError):
            SingularityMatrix(ids=("a", "b"), rho=np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_exports(self, example_matrix, tmp_path):
        path = write_matrix_csv(example_matrix, tmp_path / "rho.csv", "abc123")
        assert path.read_text().startswith("# config_hash: abc123\n")
        df = read_csv(path)
        assert list(df.columns) == ["s0", "s1", "s2"]
        np.testing.assert_allclose(df.to_numpy(), example_matrix.rho)

        restored = matrix_from_upper_triangle(upper_triangle_dict(example_matrix))
        np.testing.assert_array_equal(restored.rho, example_matrix.rho)


class TestSegmentDistribution:
    def test_example_bins(self, example_matrix):
        hist = segment_distribution(example_matrix, [1.0])
        assert hist.group_labels == ("A", "B")
        assert hist.entry_counts == (1, 2)
        assert hist.node_counts == (2, 1)
        assert hist.lo == (0.5, 1.0)
        assert hist.hi == (1.0, 2.0)
        assert hist.node_members == (("s0", "s2"), ("s1",))

    def test_breakpoint_is_lower_edge(self, example_matrix):
        hist = segment_distribution(example_matrix, [1.5])
        assert hist.entry_counts == (1, 2)

    def test_median_split(self, rng):
        matrix = matrix_from_widths([str(i) for i in range(41)], rng.random(41))
        hist = segment_distribution(matrix, [float(np.median(matrix.upper_entries()))])
        assert hist.entry_counts == (410, 410)

    def test_all_equal_widths(self):
        matrix = matrix_from_widths(["a", "b", "c", "d"], [2.0, 2.0, 2.0, 2.0])
        hist = segment_distribution(matrix, [1.72, 3.36, 4.77, 5.45, 6.08])
        assert hist.group_labels == ("A", "B", "C", "D", "E", "F")
        assert hist.entry_pct[0] == 100.0
        assert hist.node_pct[0] == 100.0

    def test_default_bins(self, rng):
        matrix = matrix_from_widths([str(i) for i in range(30)], rng.random(30) * 5)
        hist = segment_distribution(matrix, None)
        assert len(hist.group_labels) == len(hist.breakpoints) + 1
        assert sum(hist.entry_pct) == pytest.approx(100.0, abs=0.01)
        assert sum(hist.node_pct) == pytest.approx(100.0, abs=0.01)
        assert sum(hist.entry_counts) == 30 * 29 // 2

    def test_non_monotone(self, example_matrix):
        with pytest.raises(BreakpointError):
            segment_distribution(example_matrix, [1.0, 0.8])

    def test_frame_columns(self, example_matrix):
        df = segment_distribution(example_matrix, [1.0]).to_frame()
        assert list(df.columns) == [
            "group", "lo", "hi", "node_count", "node_pct", "entry_count", "entry_pct",
        ]
