"""
Test configuration and kernel table IO
"""
import json

import numpy as np
import pytest

from src.features.measures import builtin_config
from src.utils.data_loader import load_config, load_table_kernel, save_config
from src.utils.errors import DomainError


def test_load_builtin():
    """builtin: names with and without an explicit dimension"""
    assert load_config("builtin:icosahedron").n_atoms == 12
    assert load_config("builtin:ngon:5").n_atoms == 5
    assert load_config("builtin:onb:4").d == 4
    assert load_config("builtin:simplex", d=3).n_atoms == 4


def test_load_builtin_needs_dimension():
    """Builtins without a natural dimension need one"""
    with pytest.raises(DomainError):
        load_config("builtin:onb")
    with pytest.raises(DomainError):
        load_config("builtin:onb:x")


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_save_and_load(tmp_path, suffix):
    """Configurations survive a save/load cycle exactly"""
    config = builtin_config("icosahedron", 3)
    path = tmp_path / f"config{suffix}"
    save_config(config, path)
    loaded = load_config(path)
    np.testing.assert_array_equal(loaded.points, config.points)
    np.testing.assert_array_equal(loaded.weights, config.weights)


def test_load_csv_normalizes(tmp_path):
    """CSV rows are normalized on load"""
    path = tmp_path / "raw.csv"
    path.write_text("x1,x2,weight\n2,0,1\n0,3,3\n")
    config = load_config(path)
    np.testing.assert_allclose(config.points, np.eye(2))
    np.testing.assert_allclose(config.weights, [0.25, 0.75])


def test_load_errors(tmp_path):
    """Missing files, missing columns and dimension mismatches are DomainErrors"""
    with pytest.raises(DomainError):
        load_config(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(DomainError):
        load_config(bad)
    mismatch = tmp_path / "mismatch.json"
    mismatch.write_text(json.dumps({"d": 3, "points": [[1.0, 0.0]], "weights": [1.0]}))
    with pytest.raises(DomainError):
        load_config(mismatch)


def test_load_table_kernel(tmp_path):
    """A t,value table becomes an interpolating kernel"""
    path = tmp_path / "k.csv"
    path.write_text("t,value\n1,1\n-1,1\n0,0\n")
    kernel = load_table_kernel(path, order=1)
    assert kernel(0.5) == pytest.approx(0.5)
    assert kernel.literal == f"table:{path}"
    with pytest.raises(DomainError):
        load_table_kernel(tmp_path / "none.csv")
