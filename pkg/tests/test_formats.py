"""Tests for the artifact and table writers"""

import logging

import h5py
import numpy as np
import pytest
import xarray as xr
from numpy.testing import assert_array_equal

from hypershield.abstraction import GridSpec
from hypershield.formats.csv_writer import write_csv_file
from hypershield.formats.hdf5 import (
    FingerprintMismatchError,
    read_qtable_file,
    read_viability_file,
    write_qtable_file,
    write_viability_file,
)
from hypershield.formats.interfaces import ExportInput
from hypershield.formats.text_writer import write_text_file
from hypershield.qlearning import QTable
from hypershield.viability import ViabilityResult

FINGERPRINT = "a" * 64


@pytest.fixture
def result() -> ViabilityResult:
    """A small hand-made viability result"""
    feasible = np.array([True, True, False])
    admissible = np.zeros((3, 20), dtype=bool)
    admissible[0, [0, 5]] = True
    admissible[1, 19] = True
    successor = np.full((3, 20), -1, dtype=np.int64)
    successor[0, [0, 5]] = 1
    successor[1, 19] = 0
    return ViabilityResult(feasible, admissible, successor, FINGERPRINT, sweeps=2)


def test_viability_file(tmp_path, result):
    """Stored masks and successors are read back"""
    fname = str(tmp_path / "viability.h5")
    write_viability_file(fname, result)
    loaded = read_viability_file(fname, FINGERPRINT)

    assert_array_equal(loaded.feasible, result.feasible)
    assert_array_equal(loaded.admissible, result.admissible)
    assert_array_equal(loaded.successor, result.successor)
    assert loaded.sweeps == 2
    assert loaded.fingerprint == FINGERPRINT
    with h5py.File(fname, "r") as h5file:
        assert_array_equal(h5file["mask"][()], [1 + 2**5, 2**19, 0])
        assert h5file.attrs["kind"] == "viability"


def test_viability_file_for_another_configuration(tmp_path, result):
    """A different fingerprint or grid is refused"""
    fname = str(tmp_path / "viability.h5")
    write_viability_file(fname, result)
    with pytest.raises(FingerprintMismatchError):
        read_viability_file(fname, "b" * 64)
    with pytest.raises(FingerprintMismatchError):
        read_viability_file(fname, FINGERPRINT, GridSpec())


def test_corrupted_viability_file(tmp_path, result):
    """Modified content no longer matches the checksum"""
    fname = str(tmp_path / "viability.h5")
    write_viability_file(fname, result)
    with h5py.File(fname, "r+") as h5file:
        h5file["admissible"][2, 0] = 1
    with pytest.raises(FingerprintMismatchError):
        read_viability_file(fname, FINGERPRINT)


def test_artifacts_are_reproducible(tmp_path, result):
    """Writing the same result twice gives identical bytes"""
    first, second = tmp_path / "first.h5", tmp_path / "second.h5"
    write_viability_file(str(first), result)
    write_viability_file(str(second), result)
    assert first.read_bytes() == second.read_bytes()


def test_qtable_file(tmp_path):
    """Values, visits and the initial value survive a write"""
    q = QTable.zeros(3, 20, init=-1.0)
    q.values[1, 4] = 2.5
    q.visits[1, 4] = 7
    fname = str(tmp_path / "qtable.h5")
    write_qtable_file(fname, q, FINGERPRINT, "c" * 64)
    loaded = read_qtable_file(fname, FINGERPRINT)

    assert_array_equal(loaded.values, q.values)
    assert_array_equal(loaded.visits, q.visits)
    assert loaded.init == -1.0
    with pytest.raises(FingerprintMismatchError):
        read_qtable_file(fname, "b" * 64)


def test_qtable_trained_with_other_settings_warns(tmp_path, caplog):
    """A table from other learning settings loads with a warning"""
    fname = str(tmp_path / "qtable.h5")
    write_qtable_file(fname, QTable.zeros(3, 20), FINGERPRINT, "c" * 64)

    with caplog.at_level(logging.WARNING, logger="hypershield.formats.hdf5"):
        read_qtable_file(fname, FINGERPRINT, "c" * 64)
    assert not caplog.records

    with caplog.at_level(logging.WARNING, logger="hypershield.formats.hdf5"):
        loaded = read_qtable_file(fname, FINGERPRINT, "d" * 64)
    assert loaded.shape == (3, 20)
    assert "trained with other settings" in caplog.text


def test_qtable_is_not_a_viability_file(tmp_path):
    """Artifact kinds are checked"""
    fname = str(tmp_path / "qtable.h5")
    write_qtable_file(fname, QTable.zeros(3, 20), FINGERPRINT)
    with pytest.raises(FingerprintMismatchError):
        read_viability_file(fname)


def trajectory() -> xr.Dataset:
    return xr.Dataset(
        {
            "h": xr.Variable("step", [35_000.0, 35_010.0], {"units": "m"}),
            "mode": ("step", ["safe", "safe"]),
        },
        coords={"step": [0, 1]},
    )


def test_csv_writer(tmp_path):
    """Comment header with units followed by the columns"""
    fname = tmp_path / "rollout.csv"
    write_csv_file(ExportInput(str(fname), trajectory(), "greedy rollout"))
    lines = fname.read_text(encoding="utf-8").splitlines()
    assert lines[:3] == ["# greedy rollout", "# h [m]", "step,h,mode"]
    assert lines[3] == "0,35000.0,safe"
    assert len(lines) == 5


def test_csv_writer_keeps_matrix_layout(tmp_path):
    """Two dimensional arrays are written as a matrix"""
    values = xr.DataArray(
        np.arange(6.0).reshape(2, 3),
        dims=("altitude", "speed"),
        coords={"altitude": [1.0, 2.0], "speed": [10.0, 20.0, 30.0]},
        name="value",
    )
    fname = tmp_path / "qslice.csv"
    write_csv_file(ExportInput(str(fname), values))
    lines = fname.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "altitude,10.0,20.0,30.0"
    assert lines[1] == "1.0,0.0,1.0,2.0"


def test_text_writer(tmp_path):
    """Aligned text with the same header"""
    fname = tmp_path / "rollout.txt"
    write_text_file(ExportInput(str(fname), trajectory(), "greedy rollout"))
    lines = fname.read_text(encoding="utf-8").splitlines()
    assert lines[:2] == ["# greedy rollout", "# h [m]"]
    assert lines[-1].split() == ["1", "35010.0", "safe"]
