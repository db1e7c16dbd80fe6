"""Viable feasible set and admissible action masks over the grid abstraction"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, Optional, Sequence, Tuple

import numpy as np
import xarray as xr
from numpy.typing import NDArray

from hypershield.abstraction import DIMENSIONS, AbstractState, GridSpec
from hypershield.constraints import ConstraintSet
from hypershield.dynamics import ControlInput

logger = logging.getLogger(__name__)


class InfeasibleStateError(KeyError):
    """Raised when masks or modes are queried outside the viable set."""


@dataclass(frozen=True)
class ActionGrid:
    """Discrete (alpha, delta) actions, flattened alpha-major."""

    alpha_levels: Tuple[float, ...] = tuple(
        float(alpha) for alpha in np.deg2rad([3.0, 5.0, 8.0, 12.0, 15.0])
    )
    delta_levels: Tuple[float, ...] = (0.25, 0.50, 0.75, 1.00)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.alpha_levels), len(self.delta_levels)

    @property
    def size(self) -> int:
        return len(self.alpha_levels) * len(self.delta_levels)

    def index(self, action: int) -> Tuple[int, int]:
        if not 0 <= action < self.size:
            raise ValueError(f"Action id {action} outside [0, {self.size})")
        i_alpha, i_delta = divmod(int(action), len(self.delta_levels))
        return i_alpha, i_delta

    def id_of(self, i_alpha: int, i_delta: int) -> int:
        return i_alpha * len(self.delta_levels) + i_delta

    def control(self, action: int) -> ControlInput:
        i_alpha, i_delta = self.index(action)
        return ControlInput(self.alpha_levels[i_alpha], self.delta_levels[i_delta])

    def alphas(self) -> NDArray[np.float64]:
        """Angle of attack of every action id."""
        return np.repeat(self.alpha_levels, len(self.delta_levels))

    def deltas(self) -> NDArray[np.float64]:
        """Throttle of every action id."""
        return np.tile(self.delta_levels, len(self.alpha_levels))


@dataclass(frozen=True, eq=False)
class TransitionTable:
    """One-step hard safety and successor id of every (state, action) pair."""

    safe: NDArray[np.bool_]
    successor: NDArray[np.int64]


def margin_offsets(grid: GridSpec, margin: float) -> NDArray[np.float64]:
    """Offsets (4, K) from a successor to the points its hard constraints are checked at.

    With a positive margin these are the successor itself and the corners of the
    box of `margin` bin widths around it in altitude and speed, all with the
    mass at the lower edge of its bin.
    """
    if not margin >= 0:
        raise ValueError(f"The hard constraint margin must be non-negative, got {margin}")
    if margin == 0:
        return np.zeros((4, 1))

    dh, dV = margin * grid.h.width, margin * grid.V.width
    dm = 0.5 * grid.m.width
    return np.array(
        [
            [0.0, -dh, -dh, dh, dh],
            [0.0, -dV, dV, -dV, dV],
            [0.0, 0.0, 0.0, 0.0, 0.0],
            [-dm, -dm, -dm, -dm, -dm],
        ]
    )


def step_representatives(
    reps: NDArray[np.float64],
    grid: GridSpec,
    actions: ActionGrid,
    constraints: ConstraintSet,
    dt: float,
    margin: float = 0.0,
) -> TransitionTable:
    """Evaluates one discretized step from each column of reps under every action.

    Non-finite successors count as unsafe and keep the origin's projection.
    A transition is safe if the hard constraints hold at every point
    `margin_offsets` places around its successor.
    """
    n_states = reps.shape[1]
    safe = np.zeros((n_states, actions.size), dtype=bool)
    successor = np.zeros((n_states, actions.size), dtype=np.int64)
    model = constraints.model
    offsets = margin_offsets(grid, margin)

    for action in range(actions.size):
        u = actions.control(action)
        y_next = model.step_array(reps, u.alpha, u.delta, dt, check=False)
        valid = np.all(np.isfinite(y_next), axis=0) & (y_next[1] >= 0)
        y_next = np.where(valid, y_next, reps)

        safe_action = valid.copy()
        for offset in offsets.T:
            y = y_next + offset[:, np.newaxis]
            y[1] = np.maximum(y[1], 0.0)
            # no state is lighter than the dry mass floor
            y[3] = np.maximum(y[3], np.minimum(y_next[3], model.m_floor))
            safe_action &= constraints.hard_safe(y, u.alpha)

        safe[:, action] = safe_action
        successor[:, action] = grid.project_ids(y_next)

    return TransitionTable(safe=safe, successor=successor)


def build_transitions(
    grid: GridSpec,
    actions: ActionGrid,
    constraints: ConstraintSet,
    dt: float,
    margin: float = 0.0,
) -> TransitionTable:
    """Transition table evaluated at the representatives of all abstract states."""
    return step_representatives(
        grid.representatives(), grid, actions, constraints, dt, margin
    )


def one_step_hard_safe(
    s: AbstractState,
    action: int,
    grid: GridSpec,
    actions: ActionGrid,
    constraints: ConstraintSet,
    dt: float,
    margin: float = 0.0,
) -> Tuple[bool, AbstractState]:
    """Whether `action` is hard-safe at the representative of s, and the successor."""
    actions.index(action)
    rep = grid.representative(s).as_array()[:, np.newaxis]
    table = step_representatives(rep, grid, actions, constraints, dt, margin)
    return bool(table.safe[0, action]), grid.state(int(table.successor[0, action]))


def prune(
    safe: NDArray[np.bool_],
    successor: NDArray[np.int64],
    order: Optional[Sequence[int]] = None,
) -> Tuple[NDArray[np.bool_], int]:
    """Removes states without a hard-safe action into the candidate set until
    a sweep removes nothing.

    Without `order` every sweep tests all candidates against the previous
    sweep's set (Jacobi). With `order` the states are visited in that order
    and removed immediately (Gauss-Seidel).

    Returns:
        (NDArray[np.bool_], int): The viable states and the number of sweeps.
    """
    candidate = np.ones(safe.shape[0], dtype=bool)
    sweeps = 0
    while True:
        sweeps += 1
        if order is None:
            keep = candidate & np.any(safe & candidate[successor], axis=1)
            removed = int(candidate.sum() - keep.sum())
            candidate = keep
        else:
            removed = 0
            for state in order:
                if candidate[state] and not np.any(
                    safe[state] & candidate[successor[state]]
                ):
                    candidate[state] = False
                    removed += 1

        logger.info(
            "Pruning sweep %d removed %d states, %d remain",
            sweeps,
            removed,
            int(candidate.sum()),
        )
        if removed == 0:
            return candidate, sweeps


@dataclass(frozen=True, eq=False)
class ViabilityResult:
    """Viable feasible set, admissible actions and their successors."""

    feasible: NDArray[np.bool_]
    admissible: NDArray[np.bool_]
    successor: NDArray[np.int64]
    fingerprint: str = ""
    sweeps: int = 0
    grid: Optional[GridSpec] = None

    @property
    def is_empty(self) -> bool:
        return not bool(np.any(self.feasible))

    @property
    def n_states(self) -> int:
        return int(self.feasible.size)

    @property
    def n_feasible(self) -> int:
        return int(self.feasible.sum())

    def mask_sizes(self) -> NDArray[np.int64]:
        return self.admissible.sum(axis=1)

    def mask_bits(self) -> NDArray[np.int64]:
        """Admissible set of each state as an integer, bit a set for action a."""
        weights = 1 << np.arange(self.admissible.shape[1], dtype=np.int64)
        return self.admissible.astype(np.int64) @ weights

    def _check(self, state_id: int):
        if not 0 <= state_id < self.n_states or not self.feasible[state_id]:
            raise InfeasibleStateError(f"Abstract state {state_id} is not viable")

    def admissible_actions(self, state_id: int) -> NDArray[np.int64]:
        """Sorted admissible action ids of a viable state."""
        self._check(state_id)
        return np.flatnonzero(self.admissible[state_id])

    def forward_invariance_failures(self) -> int:
        """Admissible pairs whose recorded successor is not viable."""
        rows, cols = np.nonzero(self.admissible)
        return int(np.count_nonzero(~self.feasible[self.successor[rows, cols]]))

    def boundary_states(self, grid: Optional[GridSpec] = None) -> NDArray[np.bool_]:
        """Viable states with at least one non-viable face neighbor."""
        grid = grid or self.grid
        neighbors = grid.neighbors(np.arange(self.n_states))
        on_grid = neighbors >= 0
        infeasible_neighbor = on_grid & ~self.feasible[np.where(on_grid, neighbors, 0)]
        return self.feasible & np.any(infeasible_neighbor, axis=1)


def masks_from(
    transitions: TransitionTable,
    feasible: NDArray[np.bool_],
    fingerprint: str = "",
    sweeps: int = 0,
    grid: Optional[GridSpec] = None,
) -> ViabilityResult:
    """Admissible actions of the viable states of a transition table."""
    admissible = (
        feasible[:, np.newaxis]
        & transitions.safe
        & feasible[transitions.successor]
    )
    return ViabilityResult(
        feasible=feasible,
        admissible=admissible,
        successor=np.where(admissible, transitions.successor, -1),
        fingerprint=fingerprint,
        sweeps=sweeps,
        grid=grid,
    )


def compute_feasible_set(
    grid: GridSpec,
    actions: ActionGrid,
    constraints: ConstraintSet,
    dt: float,
    fingerprint: str = "",
    margin: float = 0.0,
) -> ViabilityResult:
    """Viable feasible set of the grid abstraction and its admissible masks.

    With a positive `margin` an action is only hard-safe if the constraints
    also hold `margin` bin widths around the successor of the representative.
    """
    transitions = build_transitions(grid, actions, constraints, dt, margin)
    logger.info(
        "Evaluated %d transitions, %d are one-step hard-safe",
        transitions.safe.size,
        int(transitions.safe.sum()),
    )
    feasible, sweeps = prune(transitions.safe, transitions.successor)
    result = masks_from(transitions, feasible, fingerprint, sweeps, grid)

    if result.is_empty:
        logger.warning("The viable set is empty, the configuration is infeasible.")
    else:
        logger.info(
            "Viable set holds %d of %d states after %d sweeps",
            result.n_feasible,
            result.n_states,
            sweeps,
        )
    return result


def admissible_mask(result: ViabilityResult, s: AbstractState) -> FrozenSet[int]:
    """Admissible action ids of the viable abstract state s."""
    return frozenset(int(a) for a in result.admissible_actions(s.id))


def mask_table(result: ViabilityResult, grid: GridSpec) -> xr.Dataset:
    """One row per viable state: grid indices, mask bits and mask size."""
    ids = np.flatnonzero(result.feasible)
    index = grid.unflatten(ids)
    data_vars = {
        f"i_{name}": ("state", np.asarray(index[i], dtype=np.int64))
        for i, name in enumerate(DIMENSIONS)
    }
    data_vars["mask"] = ("state", result.mask_bits()[ids])
    data_vars["mask_size"] = ("state", result.mask_sizes()[ids])
    return xr.Dataset(data_vars, coords={"state": ids})
