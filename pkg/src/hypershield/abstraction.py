"""Uniform grid aggregation of the continuous state"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from numpy.typing import NDArray

from hypershield.dynamics import VehicleState

DIMENSIONS = ("h", "V", "gamma", "m")


@dataclass(frozen=True)
class GridAxis:
    """Uniform bins over [lower, upper] along one state dimension."""

    lower: float
    upper: float
    bins: int

    def __post_init__(self):
        if self.bins < 1:
            raise ValueError(f"A grid axis needs at least one bin, got {self.bins}")
        if not self.lower < self.upper:
            raise ValueError(f"Grid bounds must be ordered, got [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return (self.upper - self.lower) / self.bins

    def bin_of(self, x):
        """Half-open bins [lo, hi), the last one closed; outside values clamp."""
        index = np.floor((x - self.lower) / self.width).astype(np.int64)
        return np.clip(index, 0, self.bins - 1)

    def center(self, index):
        return self.lower + (np.asarray(index) + 0.5) * self.width

    def centers(self) -> NDArray[np.float64]:
        return self.center(np.arange(self.bins))


@dataclass(frozen=True)
class AbstractState:
    """Multi-index into the grid (h, V, gamma, m) and its flattened id."""

    index: Tuple[int, int, int, int]
    id: int


@dataclass(frozen=True)
class GridSpec:
    """Product grid over (h, V, gamma, m), flattened row-major (h-major)."""

    h: GridAxis = field(default_factory=lambda: GridAxis(19_000.0, 51_000.0, 21))
    V: GridAxis = field(default_factory=lambda: GridAxis(900.0, 4_100.0, 21))
    gamma: GridAxis = field(
        default_factory=lambda: GridAxis(
            float(np.deg2rad(-10.0)), float(np.deg2rad(10.0)), 11
        )
    )
    m: GridAxis = field(default_factory=lambda: GridAxis(6_000.0, 12_000.0, 2))

    @property
    def axes(self) -> Tuple[GridAxis, ...]:
        return (self.h, self.V, self.gamma, self.m)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(axis.bins for axis in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def flatten(self, index) -> NDArray[np.int64]:
        return np.ravel_multi_index(tuple(index), self.shape)

    def unflatten(self, state_id) -> Tuple:
        if np.any(np.asarray(state_id) < 0) or np.any(np.asarray(state_id) >= self.size):
            raise ValueError(f"State id {state_id} outside [0, {self.size})")
        return np.unravel_index(state_id, self.shape)

    def project_ids(self, y: NDArray[np.float64]) -> NDArray[np.int64]:
        """Flattened ids of stacked states y of shape (4, ...)."""
        return self.flatten([axis.bin_of(y[i]) for i, axis in enumerate(self.axes)])

    def project(self, x: VehicleState) -> AbstractState:
        """Bins the continuous state x, clamping outside values to the edge bins."""
        y = x.as_array()
        if not np.all(np.isfinite(y)):
            raise ValueError(f"Cannot project the non-finite state {x}")
        index = tuple(int(axis.bin_of(y[i])) for i, axis in enumerate(self.axes))
        return AbstractState(index=index, id=int(self.flatten(index)))

    def state(self, state_id: int) -> AbstractState:
        index = tuple(int(i) for i in self.unflatten(state_id))
        return AbstractState(index=index, id=int(state_id))

    def representative(self, s: AbstractState) -> VehicleState:
        """Bin center of the abstract state s."""
        for i, (axis, name) in enumerate(zip(self.axes, DIMENSIONS)):
            if not 0 <= s.index[i] < axis.bins:
                raise ValueError(f"Index {s.index[i]} out of range for `{name}` bins")
        return VehicleState(
            *(float(axis.center(s.index[i])) for i, axis in enumerate(self.axes))
        )

    def representatives(self) -> NDArray[np.float64]:
        """Bin centers of all states as an array of shape (4, size) in id order."""
        index = np.unravel_index(np.arange(self.size), self.shape)
        return np.stack([axis.center(index[i]) for i, axis in enumerate(self.axes)])

    def enumerate_states(self) -> List[AbstractState]:
        return [self.state(state_id) for state_id in range(self.size)]

    def beyond_hull(self, x: VehicleState, tolerance_bins: float = 1.0) -> bool:
        """Whether x lies more than `tolerance_bins` bin widths outside the grid."""
        y = x.as_array()
        for i, axis in enumerate(self.axes):
            margin = tolerance_bins * axis.width
            if y[i] < axis.lower - margin or y[i] > axis.upper + margin:
                return True
        return False

    def neighbors(self, state_ids: NDArray[np.int64]) -> NDArray[np.int64]:
        """Face neighbors of each state, shape (len(state_ids), 8); -1 off the grid."""
        index = np.stack(self.unflatten(np.asarray(state_ids)))
        result = np.full((index.shape[1], 2 * len(self.axes)), -1, dtype=np.int64)
        for dim, axis in enumerate(self.axes):
            for k, step in enumerate((-1, 1)):
                shifted = index.copy()
                shifted[dim] += step
                inside = (shifted[dim] >= 0) & (shifted[dim] < axis.bins)
                ids = self.flatten(np.where(inside, shifted, 0))
                result[:, 2 * dim + k] = np.where(inside, ids, -1)
        return result


def project(x: VehicleState, grid: GridSpec) -> AbstractState:
    return grid.project(x)


def representative(s: AbstractState, grid: GridSpec) -> VehicleState:
    return grid.representative(s)


def enumerate_states(grid: GridSpec) -> List[AbstractState]:
    return grid.enumerate_states()
