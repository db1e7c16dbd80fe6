"""Shielded tabular Q-learning with episode chaining"""

import logging
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
import xarray as xr
from numpy.typing import NDArray

from hypershield.abstraction import GridSpec
from hypershield.constraints import CONSTRAINT_NAMES, HARD, box_distance
from hypershield.dynamics import IntegrationError, VehicleState
from hypershield.rewards import Mode, RewardConfig, reward
from hypershield.shield import LocalActions, Shield, local_admissible
from hypershield.viability import ActionGrid

logger = logging.getLogger(__name__)

CAUSES = ("horizon", "hard_violation", "guard")


class ContractViolation(RuntimeError):
    """Raised when a backup is requested for an inadmissible action."""


@dataclass(frozen=True)
class LearnerConfig:
    """Hyperparameters of the learner and the episode schedule."""

    discount: float = 0.99
    learn_rate: float = 0.1
    epsilon_start: float = 0.2
    epsilon_end: float = 0.02
    epsilon_decay: float = 0.995
    r_max: int = 2
    horizon: int = 400
    episodes: int = 500
    q_init: float = 0.0
    mode_augmented: bool = False

    def __post_init__(self):
        if not 0 < self.discount < 1:
            raise ValueError(f"The discount must lie in (0, 1), got {self.discount}")
        if not 0 < self.learn_rate < 1:
            raise ValueError(f"The learning rate must lie in (0, 1), got {self.learn_rate}")
        if not 0 <= self.epsilon_end <= self.epsilon_start <= 1:
            raise ValueError(
                "Exploration must satisfy 0 <= epsilon_end <= epsilon_start <= 1, got "
                f"({self.epsilon_start}, {self.epsilon_end})"
            )
        if not 0 < self.epsilon_decay <= 1:
            raise ValueError(f"The epsilon decay must lie in (0, 1], got {self.epsilon_decay}")
        if self.r_max < 1 or self.horizon < 1 or self.episodes < 0:
            raise ValueError(
                "`r_max` and `horizon` must be positive and `episodes` non-negative"
            )
        if not np.isfinite(self.q_init):
            raise ValueError(f"The initial value must be finite, got {self.q_init}")

    def epsilon(self, episode: int) -> float:
        """Exploration rate of an episode, decayed exponentially down to epsilon_end."""
        return max(self.epsilon_end, self.epsilon_start * self.epsilon_decay**episode)


@dataclass(eq=False)
class QTable:
    """Dense action values over (abstract state id, action id).

    If `admissible` is set every masked maximization counts the reads of
    entries outside it in `inadmissible_reads`.
    """

    values: NDArray[np.float64]
    visits: NDArray[np.int64]
    init: float = 0.0
    admissible: Optional[NDArray[np.bool_]] = None
    inadmissible_reads: int = 0

    @classmethod
    def zeros(
        cls,
        n_states: int,
        n_actions: int,
        init: float = 0.0,
        admissible: Optional[NDArray[np.bool_]] = None,
    ) -> "QTable":
        return cls(
            values=np.full((n_states, n_actions), init, dtype=np.float64),
            visits=np.zeros((n_states, n_actions), dtype=np.int64),
            init=init,
            admissible=admissible,
        )

    @property
    def shape(self):
        return self.values.shape

    def masked_max(self, state_id: int, mask: NDArray[np.bool_]) -> float:
        """Largest value over the masked actions of the state."""
        if not np.any(mask):
            raise ContractViolation(f"Empty successor mask in state {state_id}")
        if self.admissible is not None:
            self.inadmissible_reads += int(
                np.count_nonzero(mask & ~self.admissible[state_id])
            )
        return float(np.max(self.values[state_id, mask]))


class Selection(NamedTuple):
    action: int
    local: LocalActions


def select_action(
    q: QTable,
    state_id: int,
    mask: NDArray[np.bool_],
    a_prev: Optional[int],
    epsilon: float,
    rng: np.random.Generator,
    r_max: int = 2,
    actions: ActionGrid = ActionGrid(),
) -> Selection:
    """Masked epsilon-greedy choice restricted to the local admissible set.

    Greedy ties go to the lowest action id.
    """
    local = local_admissible(mask, a_prev, r_max, actions)
    if local.actions.size == 1:
        return Selection(int(local.actions[0]), local)
    if rng.random() < epsilon:
        return Selection(int(rng.choice(local.actions)), local)
    best = int(np.argmax(q.values[state_id, local.actions]))
    return Selection(int(local.actions[best]), local)


def q_update(
    q: QTable,
    state_id: int,
    action: int,
    r: float,
    next_id: int,
    mask: NDArray[np.bool_],
    mask_next: Optional[NDArray[np.bool_]],
    learn_rate: float,
    discount: float,
) -> float:
    """Mask-consistent temporal difference backup of Q(s, a).

    The successor maximization ranges over the full admissible set of the
    successor. Pass `mask_next=None` for a failed transition, which is absorbing
    with its reward repeated forever.

    Raises:
        ContractViolation: If `action` is outside the admissible set `mask`.

    Returns:
        float: The updated entry.
    """
    if not mask[action]:
        raise ContractViolation(
            f"Action {action} is not admissible in state {state_id}"
        )
    if mask_next is None:
        target = r / (1.0 - discount)
    else:
        target = r + discount * q.masked_max(next_id, mask_next)

    q.values[state_id, action] += learn_rate * (target - q.values[state_id, action])
    q.visits[state_id, action] += 1
    return float(q.values[state_id, action])


@dataclass(frozen=True)
class StepRecord:
    """One executed step: the state at time t and the action applied to it.

    `relocated` marks steps taken from the nearest viable state because the
    state itself projected outside the viable set.
    """

    t: float
    state: VehicleState
    state_id: int
    action: int
    alpha: float
    delta: float
    reward: float
    mode: Mode
    distance: float
    violations: NDArray[np.bool_]
    mask_size: int
    fallback: bool
    relocated: bool = False


@dataclass
class EpisodeResult:
    start: VehicleState
    terminal: VehicleState
    cause: str = "horizon"
    steps: List[StepRecord] = field(default_factory=list)
    epsilon: float = 0.0

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def total_return(self) -> float:
        return float(sum(step.reward for step in self.steps))

    @property
    def hard_violations(self) -> int:
        return int(sum(bool(np.any(step.violations[HARD])) for step in self.steps))

    @property
    def safe_fraction(self) -> float:
        if not self.steps:
            return 0.0
        return sum(step.mode is Mode.SAFE for step in self.steps) / self.length

    @property
    def fallback_rate(self) -> float:
        if not self.steps:
            return 0.0
        return sum(step.fallback for step in self.steps) / self.length

    def rewards(self) -> NDArray[np.float64]:
        return np.array([step.reward for step in self.steps], dtype=np.float64)

    def to_dataset(self) -> xr.Dataset:
        """Per-step trajectory table over the dimension "step"."""
        steps = self.steps
        columns = {
            "t": ("s", [step.t for step in steps]),
            "h": ("m", [step.state.h for step in steps]),
            "V": ("m/s", [step.state.V for step in steps]),
            "gamma": ("rad", [step.state.gamma for step in steps]),
            "m": ("kg", [step.state.m for step in steps]),
            "alpha": ("rad", [step.alpha for step in steps]),
            "delta": ("1", [step.delta for step in steps]),
            "reward": ("1", [step.reward for step in steps]),
            "mode": ("", [step.mode.value for step in steps]),
            "distance": ("1", [step.distance for step in steps]),
        }
        data_vars = {
            name: xr.Variable("step", np.asarray(values), attrs={"units": unit})
            for name, (unit, values) in columns.items()
        }
        flags = np.array([step.violations for step in steps], dtype=np.int8)
        for j, name in enumerate(CONSTRAINT_NAMES):
            data_vars[f"v{j + 1}_{name}"] = xr.Variable(
                "step", flags[:, j] if steps else np.zeros(0, dtype=np.int8)
            )
        data_vars["mask_size"] = xr.Variable(
            "step", np.array([step.mask_size for step in steps], dtype=np.int64)
        )
        data_vars["fallback"] = xr.Variable(
            "step", np.array([step.fallback for step in steps], dtype=np.int8)
        )
        data_vars["relocated"] = xr.Variable(
            "step", np.array([step.relocated for step in steps], dtype=np.int8)
        )
        return xr.Dataset(data_vars, coords={"step": np.arange(len(steps))})


def run_episode(
    x0: VehicleState,
    q: QTable,
    shield: Shield,
    config: LearnerConfig = LearnerConfig(),
    rewards: RewardConfig = RewardConfig(),
    epsilon: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    learn: bool = True,
    horizon: Optional[int] = None,
) -> EpisodeResult:
    """Runs one shielded episode from x0, updating q unless `learn` is False.

    The episode ends at the horizon, on the first hard violation or with
    `guard` when the state leaves the grid hull by more than one bin width.
    States projecting outside the viable set act and learn through the
    nearest viable state (see `Shield.locate`).
    """
    rng = rng if rng is not None else np.random.default_rng()
    horizon = horizon if horizon is not None else config.horizon
    grid, model = shield.grid, shield.constraints.model
    result = EpisodeResult(start=x0, terminal=x0, epsilon=epsilon)

    if grid.beyond_hull(x0) or not shield.admits(grid.project(x0).id):
        result.cause = "guard"
        return result

    x = x0
    s = grid.project(x0)
    a_prev: Optional[int] = None
    for k in range(horizon):
        relocated = s.id != grid.project(x).id
        mode = shield.mode_of(s)
        mask = shield.abstract_mask(s.id)
        selection = select_action(
            q,
            s.id,
            shield.mask(x, s),
            a_prev,
            epsilon,
            rng,
            config.r_max,
            shield.actions,
        )
        action = selection.action
        u = shield.actions.control(action)
        u_prev = u if a_prev is None else shield.actions.control(a_prev)

        try:
            x_next = model.rk2_step(x, u, shield.dt)
        except IntegrationError:
            logger.warning("Integration failed at step %d from %s", k, x)
            result.cause = "guard"
            break

        violations = shield.constraints.evaluate(x_next, u)
        r = reward(x, u, u_prev, x_next, mode, shield.box, rewards)

        cause = None
        if violations.hard_any:
            cause = "hard_violation"
        elif grid.beyond_hull(x_next):
            cause = "guard"
        s_next = grid.project(x_next) if cause else shield.locate(x_next)

        if learn:
            q_update(
                q,
                s.id,
                action,
                r,
                s_next.id,
                mask,
                None if cause else shield.abstract_mask(s_next.id),
                config.learn_rate,
                config.discount,
            )

        result.steps.append(
            StepRecord(
                t=k * shield.dt,
                state=x,
                state_id=s.id,
                action=action,
                alpha=u.alpha,
                delta=u.delta,
                reward=r,
                mode=mode,
                distance=box_distance(x, shield.box),
                violations=violations.flags,
                mask_size=int(mask.sum()),
                fallback=selection.local.fallback,
                relocated=relocated,
            )
        )
        x, s, a_prev = x_next, s_next, action
        if cause:
            result.cause = cause
            break

    result.terminal = x
    return result


@dataclass(frozen=True)
class EpisodeLog:
    """Summary record of one training episode."""

    index: int
    start: VehicleState
    terminal: VehicleState
    cause: str
    length: int
    total_return: float
    hard_violations: int
    safe_fraction: float
    fallback_rate: float
    epsilon: float

    @classmethod
    def of(cls, index: int, episode: EpisodeResult) -> "EpisodeLog":
        return cls(
            index=index,
            start=episode.start,
            terminal=episode.terminal,
            cause=episode.cause,
            length=episode.length,
            total_return=episode.total_return,
            hard_violations=episode.hard_violations,
            safe_fraction=episode.safe_fraction,
            fallback_rate=episode.fallback_rate,
            epsilon=episode.epsilon,
        )


def episode_table(logs: List[EpisodeLog]) -> xr.Dataset:
    """Episode logs as a table over the dimension "episode"."""
    data_vars = {}
    for name in ("start", "terminal"):
        for key in ("h", "V", "gamma", "m"):
            data_vars[f"{name}_{key}"] = (
                "episode",
                np.array([asdict(getattr(log, name))[key] for log in logs], dtype=float),
            )
    for name in (
        "cause",
        "length",
        "total_return",
        "hard_violations",
        "safe_fraction",
        "fallback_rate",
        "epsilon",
    ):
        data_vars[name] = ("episode", np.array([getattr(log, name) for log in logs]))
    return xr.Dataset(data_vars, coords={"episode": [log.index for log in logs]})


@dataclass
class TrainingResult:
    q: QTable
    logs: List[EpisodeLog]


def next_start(
    episode: EpisodeResult, shield: Shield, nominal: VehicleState
) -> VehicleState:
    """Initial state of the episode following `episode`.

    Chains the terminal state unless the episode hit a hard limit or its
    terminal state does not project into the viable set.
    """
    terminal = episode.terminal
    if episode.cause == "hard_violation" or shield.grid.beyond_hull(terminal):
        return nominal
    if not shield.admits(shield.grid.project(terminal).id):
        return nominal
    return terminal


def train(
    shield: Shield,
    nominal: VehicleState,
    config: LearnerConfig = LearnerConfig(),
    rewards: RewardConfig = RewardConfig(),
    seed: int = 0,
    q: Optional[QTable] = None,
) -> TrainingResult:
    """Trains a Q-table over chained episodes starting at the nominal state."""
    if config.mode_augmented:
        raise NotImplementedError("Mode-augmented Q-tables are not supported")

    rng = np.random.default_rng(seed)
    if q is None:
        q = QTable.zeros(
            shield.grid.size,
            shield.actions.size,
            config.q_init,
            admissible=shield.result.admissible if shield.enabled else None,
        )

    logs: List[EpisodeLog] = []
    x0 = nominal
    for index in range(config.episodes):
        epsilon = config.epsilon(index)
        episode = run_episode(x0, q, shield, config, rewards, epsilon, rng)
        logs.append(EpisodeLog.of(index, episode))
        logger.debug(
            "Episode %d ended by %s after %d steps with return %.3f",
            index,
            episode.cause,
            episode.length,
            episode.total_return,
        )
        if (index + 1) % 50 == 0:
            logger.info(
                "Trained %d of %d episodes, epsilon %.4f",
                index + 1,
                config.episodes,
                epsilon,
            )
        x0 = next_start(episode, shield, nominal)

    return TrainingResult(q=q, logs=logs)


def evaluate(
    shield: Shield,
    q: QTable,
    x0: VehicleState,
    steps: int = 400,
    config: LearnerConfig = LearnerConfig(),
    rewards: RewardConfig = RewardConfig(),
) -> EpisodeResult:
    """Greedy shielded rollout against a frozen Q-table."""
    return run_episode(
        x0,
        q,
        shield,
        config,
        rewards,
        epsilon=0.0,
        rng=np.random.default_rng(0),
        learn=False,
        horizon=steps,
    )


def q_slice(
    q: QTable,
    grid: GridSpec,
    gamma_bin: int,
    m_bin: int,
    admissible: Optional[NDArray[np.bool_]] = None,
) -> xr.DataArray:
    """Greedy state values over the (h, V) bins at fixed gamma and mass bins.

    With `admissible` the maximum is restricted to the admissible actions and
    states without any are NaN.
    """
    if not 0 <= gamma_bin < grid.gamma.bins or not 0 <= m_bin < grid.m.bins:
        raise ValueError(f"Bins ({gamma_bin}, {m_bin}) outside the gamma and mass axes")
    i_h, i_V = np.meshgrid(np.arange(grid.h.bins), np.arange(grid.V.bins), indexing="ij")
    ids = grid.flatten((i_h, i_V, np.full_like(i_h, gamma_bin), np.full_like(i_h, m_bin)))
    values = q.values[ids]
    if admissible is not None:
        allowed = admissible[ids]
        values = np.where(allowed, values, -np.inf).max(axis=-1)
        values = np.where(allowed.any(axis=-1), values, np.nan)
    else:
        values = values.max(axis=-1)

    return xr.DataArray(
        values,
        dims=("altitude", "speed"),
        coords={
            "altitude": xr.Variable("altitude", grid.h.centers(), {"units": "m"}),
            "speed": xr.Variable("speed", grid.V.centers(), {"units": "m/s"}),
        },
        name="value",
        attrs={
            "gamma": float(grid.gamma.center(gamma_bin)),
            "m": float(grid.m.center(m_bin)),
        },
    )
