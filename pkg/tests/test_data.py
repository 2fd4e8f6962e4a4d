import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from deepicmgp.data import Dataset, read_csv, write_csv
from deepicmgp.errors import DataError, ShapeError


class TestDataset:
    def test_scaling(self):
        d = Dataset.from_arrays([[0.0], [5.0], [10.0]], [[1.0], [2.0], [3.0]], bounds=[[0, 10]])
        np.testing.assert_allclose(d.x_scaled[:, 0], [0, 0.5, 1])
        np.testing.assert_allclose(d.y_scaled.mean(axis=0), 0, atol=1e-15)
        np.testing.assert_allclose(d.y_scaled.std(axis=0), 1)

    def test_constant_output_scale(self):
        d = Dataset.from_arrays([[0.0], [1.0]], [[4.0], [4.0]])
        assert d.y_scale[0] == 1.0

    def test_default_bounds_from_data(self):
        d = Dataset.from_arrays([[2.0, 1.0], [4.0, 1.0]], [[0.0], [1.0]])
        np.testing.assert_array_equal(d.x_bounds[0], [2.0, 4.0])
        assert d.x_bounds[1, 1] > d.x_bounds[1, 0]

    @pytest.mark.parametrize(
        "x, y, bounds, err",
        [
            ([[0.0], [np.nan]], [[1.0], [2.0]], None, DataError),
            ([[0.0], [1.0]], [[1.0]], None, ShapeError),
            ([[2.0]], [[1.0]], [[0, 1]], DataError),
            ([[0.5]], [[1.0]], [[1, 0]], DataError),
        ],
    )
    def test_rejects(self, x, y, bounds, err):
        with pytest.raises(err):
            Dataset.from_arrays(x, y, bounds=bounds)

    @settings(max_examples=50)
    @given(arrays(float, (6, 2), elements=st.floats(-1e3, 1e3)), arrays(float, (6, 3), elements=st.floats(-1e3, 1e3)))
    def test_round_trip(self, x, y):
        d = Dataset.from_arrays(x, y)
        np.testing.assert_allclose(d.unscale_x(d.x_scaled), x, atol=1e-12 * max(1, np.abs(x).max()))
        np.testing.assert_allclose(d.unscale_y(d.y_scaled), y, atol=1e-12 * max(1, np.abs(y).max()))

    def test_append_keeps_bounds(self):
        d = Dataset.from_arrays([[0.1], [0.2]], [[1.0], [2.0]], bounds=[[0, 1]])
        e = d.append([[0.9]], [[5.0]])
        assert e.n == 3
        np.testing.assert_array_equal(e.x_bounds, d.x_bounds)


class TestCsv:
    def test_round_trip(self, tmp_path):
        rows = np.random.default_rng(0).standard_normal((5, 3))
        p = tmp_path / "a.csv"
        write_csv(p, ["a", "b", "c"], rows)
        head, back = read_csv(p)
        assert head == ["a", "b", "c"]
        np.testing.assert_array_equal(back, rows)

    def test_header_only(self, tmp_path):
        p = tmp_path / "e.csv"
        write_csv(p, ["x_1"], np.zeros((0, 1)))
        assert p.read_text() == "x_1\n"
        assert read_csv(p)[1].shape == (0, 1)

    @pytest.mark.parametrize(
        "text, line",
        [("a,b\n1,2\n3\n", "line 3"), ("a\n1\nfoo\n", "line 3"), ("a\nnan\n", "line 2")],
    )
    def test_errors_name_line(self, tmp_path, text, line):
        p = tmp_path / "bad.csv"
        p.write_text(text)
        with pytest.raises(DataError, match=line):
            read_csv(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(DataError):
            read_csv(p)
