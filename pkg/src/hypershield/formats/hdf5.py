"""Functions for storing viability results and Q-tables in hdf5 files"""

import hashlib
import logging
from typing import Optional

import h5py
import numpy as np
from numpy.typing import NDArray

from hypershield.abstraction import GridSpec
from hypershield.qlearning import QTable
from hypershield.viability import ViabilityResult

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class FingerprintMismatchError(ValueError):
    """Raised when an artifact does not belong to the current configuration
    or its content does not match its stored checksum."""


def checksum(*arrays: NDArray) -> str:
    digest = hashlib.sha256()
    for array in arrays:
        digest.update(np.ascontiguousarray(array).tobytes())
    return digest.hexdigest()


def _dataset(h5file: h5py.File, name: str, data: NDArray):
    h5file.create_dataset(name, data=data, track_times=False)


def _check(h5file: h5py.File, fname: str, kind: str, fingerprint: Optional[str]):
    attrs = h5file.attrs
    if attrs.get("kind") != kind:
        raise FingerprintMismatchError(f"`{fname}` does not hold a {kind}")
    if int(attrs.get("format_version", -1)) != FORMAT_VERSION:
        raise FingerprintMismatchError(
            f"`{fname}` has format version {attrs.get('format_version')}, "
            f"expected {FORMAT_VERSION}"
        )
    if fingerprint is not None and attrs["viability_fingerprint"] != fingerprint:
        raise FingerprintMismatchError(
            f"`{fname}` was computed for a different configuration "
            f"({attrs['viability_fingerprint'][:12]}... != {fingerprint[:12]}...)"
        )


def write_viability_file(fname: str, result: ViabilityResult):
    """Writes the viable set, masks and successor table of a viability result."""
    feasible = result.feasible.astype(np.uint8)
    admissible = result.admissible.astype(np.uint8)
    with h5py.File(fname, "w") as h5file:
        h5file.attrs["kind"] = "viability"
        h5file.attrs["format_version"] = FORMAT_VERSION
        h5file.attrs["viability_fingerprint"] = result.fingerprint
        h5file.attrs["sweeps"] = result.sweeps
        h5file.attrs["checksum"] = checksum(feasible, admissible, result.successor)
        _dataset(h5file, "feasible", feasible)
        _dataset(h5file, "admissible", admissible)
        _dataset(h5file, "successor", result.successor)
        _dataset(h5file, "mask", result.mask_bits())


def read_viability_file(
    fname: str, fingerprint: Optional[str] = None, grid: Optional[GridSpec] = None
) -> ViabilityResult:
    """Reads a viability result.

    Args:
        fname (str): The hdf5 file to read from.
        fingerprint (Optional[str], optional):
            The expected viability fingerprint. Not checked if None.
        grid (Optional[GridSpec], optional): The grid the result is attached to.

    Raises:
        FingerprintMismatchError:
            If the fingerprint differs, the content does not match its checksum
            or the state count does not fit the grid.
    """
    with h5py.File(fname, "r") as h5file:
        _check(h5file, fname, "viability", fingerprint)
        feasible = h5file["feasible"][()]
        admissible = h5file["admissible"][()]
        successor = h5file["successor"][()]
        if checksum(feasible, admissible, successor) != h5file.attrs["checksum"]:
            raise FingerprintMismatchError(f"`{fname}` is corrupted")
        stored_fingerprint = str(h5file.attrs["viability_fingerprint"])
        sweeps = int(h5file.attrs["sweeps"])

    if grid is not None and feasible.size != grid.size:
        raise FingerprintMismatchError(
            f"`{fname}` holds {feasible.size} states but the grid has {grid.size}"
        )
    return ViabilityResult(
        feasible=feasible.astype(bool),
        admissible=admissible.astype(bool),
        successor=successor.astype(np.int64),
        fingerprint=stored_fingerprint,
        sweeps=sweeps,
        grid=grid,
    )


def write_qtable_file(
    fname: str, q: QTable, viability_fingerprint: str, fingerprint: str = ""
):
    """Writes action values and visit counts with the fingerprints they belong to."""
    with h5py.File(fname, "w") as h5file:
        h5file.attrs["kind"] = "qtable"
        h5file.attrs["format_version"] = FORMAT_VERSION
        h5file.attrs["viability_fingerprint"] = viability_fingerprint
        h5file.attrs["fingerprint"] = fingerprint
        h5file.attrs["init"] = q.init
        h5file.attrs["checksum"] = checksum(q.values, q.visits)
        _dataset(h5file, "values", q.values)
        _dataset(h5file, "visits", q.visits)


def read_qtable_file(
    fname: str,
    fingerprint: Optional[str] = None,
    config_fingerprint: Optional[str] = None,
) -> QTable:
    """Reads a Q-table, checking it against the expected viability fingerprint.

    A table trained under other settings than `config_fingerprint` (rewards,
    safety box, learner) is loaded with a warning.
    """
    with h5py.File(fname, "r") as h5file:
        _check(h5file, fname, "qtable", fingerprint)
        values = h5file["values"][()]
        visits = h5file["visits"][()]
        if checksum(values, visits) != h5file.attrs["checksum"]:
            raise FingerprintMismatchError(f"`{fname}` is corrupted")
        init = float(h5file.attrs["init"])
        trained_with = str(h5file.attrs.get("fingerprint", ""))

    if config_fingerprint is not None and trained_with != config_fingerprint:
        logger.warning(
            "`%s` was trained with other settings (%s... != %s...)",
            fname,
            trained_with[:12],
            config_fingerprint[:12],
        )

    return QTable(values=values, visits=visits, init=init)
