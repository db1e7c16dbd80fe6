"""Mode-dependent rewards"""

from dataclasses import asdict, dataclass
from enum import Enum

from hypershield.constraints import SafetyBox, box_distance
from hypershield.dynamics import ControlInput, VehicleState


class Mode(str, Enum):
    """Reward mode given by safety box membership of the abstract state."""

    SAFE = "safe"
    UNSAFE = "unsafe"


@dataclass(frozen=True)
class RewardConfig:
    """Weights of the tracking, effort, switching and recovery terms."""

    w_h: float = 4e-8
    w_V: float = 4e-6
    w_gamma: float = 0.04
    w_u: float = 1e-4
    w_du: float = 5e-3
    lambda_delta: float = 25.0
    c_out: float = 50.0
    w_d: float = 25.0
    w_imp: float = 150.0
    c_away: float = 10.0

    def __post_init__(self):
        negative = {key: value for key, value in asdict(self).items() if value < 0}
        if negative:
            raise ValueError(f"Reward weights must be non-negative, got {negative}")


def effort(a: ControlInput) -> float:
    """Squared action norm with alpha in rad."""
    return a.alpha**2 + a.delta**2


def switching_penalty(
    a: ControlInput, a_prev: ControlInput, config: RewardConfig = RewardConfig()
) -> float:
    d_alpha = a.alpha - a_prev.alpha
    d_delta = a.delta - a_prev.delta
    return config.w_du * (d_alpha**2 + config.lambda_delta * d_delta**2)


def tracking_loss(
    x: VehicleState, box: SafetyBox, config: RewardConfig = RewardConfig()
) -> float:
    """Weighted squared deviation of x from the nominal cruise condition."""
    return (
        config.w_h * (x.h - box.h_star) ** 2
        + config.w_V * (x.V - box.V_star) ** 2
        + config.w_gamma * (x.gamma - box.gamma_star) ** 2
    )


def reward(
    x_k: VehicleState,
    a_k: ControlInput,
    a_prev: ControlInput,
    x_next: VehicleState,
    mode: Mode,
    box: SafetyBox = SafetyBox(),
    config: RewardConfig = RewardConfig(),
) -> float:
    """Stage reward of the transition x_k -> x_next under a_k.

    Inside the safety box the agent is rewarded for regulation about the
    nominal state. Outside it pays a constant and a distance penalty, with a
    bonus for reducing the normalized box distance and a penalty for
    increasing it.
    """
    cost = config.w_u * effort(a_k) + switching_penalty(a_k, a_prev, config)
    if mode is Mode.SAFE:
        return -tracking_loss(x_next, box, config) - cost

    d_k = box_distance(x_k, box)
    d_next = box_distance(x_next, box)
    value = -config.c_out - config.w_d * d_k - cost
    if d_next > d_k:
        value -= config.c_away
    return value + config.w_imp * max(d_k - d_next, 0.0)
