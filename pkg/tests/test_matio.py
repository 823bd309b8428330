import numpy as np
import pytest

from spcp.matio import MAGIC, load_matrix, save_matrix


def test_binary_roundtrip(tmp_path, rng):
    M = rng.standard_normal((7, 3))
    path = tmp_path / "m.mat"
    save_matrix(path, M)
    assert open(path, "rb").read(8) == MAGIC
    assert np.array_equal(load_matrix(path), M)


def test_csv_roundtrip(tmp_path, rng):
    M = rng.standard_normal((4, 6))
    path = tmp_path / "m.csv"
    save_matrix(path, M)
    assert np.array_equal(load_matrix(path), M)


def test_csv_single_row(tmp_path):
    path = tmp_path / "row.csv"
    save_matrix(path, np.array([[1.0, 2.0, 3.0]]))
    M = load_matrix(path)
    assert M.shape == (1, 3)


def test_truncated_binary_rejected(tmp_path, rng):
    path = tmp_path / "m.mat"
    save_matrix(path, rng.standard_normal((5, 5)))
    data = open(path, "rb").read()
    open(path, "wb").write(data[:-16])
    with pytest.raises(ValueError):
        load_matrix(path)


def test_nonfinite_rejected(tmp_path):
    with pytest.raises(ValueError):
        save_matrix(tmp_path / "bad.mat", np.array([[np.inf, 0.0]]))
