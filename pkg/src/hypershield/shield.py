"""Action shielding: admissible masks, local neighborhoods and safety modes"""

from dataclasses import dataclass, field
from typing import FrozenSet, NamedTuple, Optional

import numpy as np
from numpy.typing import NDArray

from hypershield.abstraction import AbstractState, GridSpec
from hypershield.constraints import ConstraintSet, SafetyBox
from hypershield.dynamics import VehicleState
from hypershield.rewards import Mode
from hypershield.viability import (
    ActionGrid,
    InfeasibleStateError,
    ViabilityResult,
    step_representatives,
)


class LocalActions(NamedTuple):
    """Candidate actions of one step and the radius they were found at.

    `radius` is 0 when no previous action exists and `fallback` is set when
    no neighborhood up to the maximal radius met the mask.
    """

    actions: NDArray[np.int64]
    radius: int
    fallback: bool


def action_distances(a: int, actions: ActionGrid = ActionGrid()) -> NDArray[np.int64]:
    """Manhattan distance of every action id to `a` on the (alpha, delta) index grid."""
    i_alpha, i_delta = actions.index(a)
    ids = np.arange(actions.size)
    alpha_index, delta_index = np.divmod(ids, len(actions.delta_levels))
    return np.abs(alpha_index - i_alpha) + np.abs(delta_index - i_delta)


def neighborhood(a: int, r: int, actions: ActionGrid = ActionGrid()) -> FrozenSet[int]:
    """Actions within `r` grid steps of `a`, `a` itself included."""
    if r < 0:
        raise ValueError(f"The neighborhood radius must be non-negative, got {r}")
    return frozenset(int(b) for b in np.flatnonzero(action_distances(a, actions) <= r))


def local_admissible(
    mask: NDArray[np.bool_],
    a_prev: Optional[int],
    r_max: int,
    actions: ActionGrid = ActionGrid(),
) -> LocalActions:
    """Intersects the mask with the smallest neighborhood of a_prev that meets it.

    Args:
        mask (NDArray[np.bool_]): Admissible flag of every action id.
        a_prev (Optional[int]): The previously executed action, None on the first step.
        r_max (int): The largest neighborhood radius to try.

    Returns:
        LocalActions: The sorted candidate ids. The full mask is returned if
            a_prev is None or no radius in [1, r_max] meets the mask.
    """
    if not np.any(mask):
        raise InfeasibleStateError("Cannot select from an empty admissible set")

    full = np.flatnonzero(mask)
    if a_prev is None:
        return LocalActions(full, 0, False)

    distance = action_distances(a_prev, actions)
    for radius in range(1, r_max + 1):
        local = np.flatnonzero(mask & (distance <= radius))
        if local.size:
            return LocalActions(local, radius, False)
    return LocalActions(full, r_max, True)


@dataclass(frozen=True, eq=False)
class Shield:
    """Runtime view on a viability result.

    States projecting outside the viable set use the mask of the nearest
    viable state, re-verified at the continuous state. With `online_check`
    every mask is re-verified. A disabled shield admits every action.
    """

    result: ViabilityResult
    grid: GridSpec
    constraints: ConstraintSet
    dt: float
    actions: ActionGrid = field(default_factory=ActionGrid)
    box: SafetyBox = field(default_factory=SafetyBox)
    online_check: bool = False
    enabled: bool = True
    in_box: NDArray[np.bool_] = field(init=False, repr=False)

    def __post_init__(self):
        if self.result.n_states != self.grid.size:
            raise ValueError(
                f"Viability result covers {self.result.n_states} states "
                f"but the grid has {self.grid.size}"
            )
        reps = self.grid.representatives()
        widths = np.array([axis.width for axis in self.grid.axes])
        viable = np.flatnonzero(self.result.feasible)
        object.__setattr__(self, "in_box", self.box.contains(reps[0], reps[1], reps[2]))
        object.__setattr__(self, "_widths", widths)
        object.__setattr__(self, "_viable", viable)
        object.__setattr__(
            self, "_viable_points", reps[:, viable] / widths[:, np.newaxis]
        )

    @property
    def feasible(self) -> NDArray[np.bool_]:
        return self.result.feasible

    @property
    def safe_states(self) -> NDArray[np.bool_]:
        """Viable states whose representative lies in the safety box."""
        return self.result.feasible & self.in_box

    @property
    def unsafe_states(self) -> NDArray[np.bool_]:
        return self.result.feasible & ~self.in_box

    def soft_safe_states(self) -> NDArray[np.bool_]:
        """Viable states whose representative satisfies all soft constraints."""
        return self.result.feasible & self.constraints.soft_safe(
            self.grid.representatives()
        )

    def admits(self, state_id: int) -> bool:
        """Whether actions can be selected in the state."""
        return not self.enabled or bool(self.result.feasible[state_id])

    def locate(self, x: VehicleState) -> AbstractState:
        """The abstract state whose mask applies at x.

        This is the projection of x if it is viable, otherwise the viable state
        whose representative is nearest to x measured in bin widths.
        """
        s = self.grid.project(x)
        if self.admits(s.id):
            return s
        if self._viable.size == 0:
            raise InfeasibleStateError("The viable set is empty")

        offsets = self._viable_points - (x.as_array() / self._widths)[:, np.newaxis]
        nearest = int(np.argmin(np.sum(offsets**2, axis=0)))
        return self.grid.state(int(self._viable[nearest]))

    def mode_of(self, s: AbstractState) -> Mode:
        if self.enabled and not self.result.feasible[s.id]:
            raise InfeasibleStateError(f"Abstract state {s.id} is not viable")
        return Mode.SAFE if self.in_box[s.id] else Mode.UNSAFE

    def abstract_mask(self, state_id: int) -> NDArray[np.bool_]:
        """The precomputed admissible flags of every action in the state."""
        if not self.enabled:
            return np.ones(self.actions.size, dtype=bool)
        if not self.result.feasible[state_id]:
            raise InfeasibleStateError(f"Abstract state {state_id} is not viable")
        return self.result.admissible[state_id]

    def mask(self, x: VehicleState, s: AbstractState) -> NDArray[np.bool_]:
        """Admissible flags of every action at the continuous state x located in s.

        A re-verified mask keeps the abstract actions whose successor from x is
        hard-safe and projects into the viable set. If there are none it keeps
        the hard-safe ones, and if there are none either the abstract mask.
        """
        abstract = self.abstract_mask(s.id)
        if not self.enabled:
            return abstract
        if not self.online_check and self.grid.project(x).id == s.id:
            return abstract

        table = step_representatives(
            x.as_array()[:, np.newaxis],
            self.grid,
            self.actions,
            self.constraints,
            self.dt,
        )
        hard_safe = abstract & table.safe[0]
        verified = hard_safe & self.result.feasible[table.successor[0]]
        for candidates in (verified, hard_safe):
            if np.any(candidates):
                return candidates
        return abstract
