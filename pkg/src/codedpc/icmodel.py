"""Two-pair interference channel with on/off power control.

Each of two transmitter-receiver pairs sees a direct gain and a cross gain;
all four gains take one of two values and flip independently from stage to
stage, giving 16 channel states.  Transmit powers are binary (off or full),
the second transmitter observes the first one's power level perfectly, and
the stage payoff is a sum of per-receiver SINR utilities.

Reference power-control policies:

* full power (FPC): both transmitters always on, no state knowledge needed;
* semi-coordinated (SPC): transmitter 2 always on, transmitter 1 plays the
  per-state best response against full power.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from .optimizer import PayoffTable
from .probability import JointDistribution, ObservationChannel, StatePrior

N_STATES = 16

#: Probabilities that each of (g11, g12, g21, g22) takes its low value, for
#: the low- and high-interference regimes.
REGIME_PROBS = {
    "lir": (0.5, 0.9, 0.9, 0.5),
    "hir": (0.5, 0.1, 0.1, 0.5),
}


class ChannelGainState(NamedTuple):
    g11: float
    g12: float
    g21: float
    g22: float


@dataclass(frozen=True)
class ICConfig:
    """Interference-channel experiment parameters.

    ``p_gmin`` holds (p11, p12, p21, p22), the probabilities that each gain
    sits at ``g_min``.  Full power is ``sigma2 * 10**(snr_db / 10)``.
    ``payoff_form`` selects the per-receiver utility: "log" for
    log2(1 + SINR), "linear" for the raw SINR.
    """

    snr_db: float
    p_gmin: tuple[float, float, float, float]
    g_min: float = 0.1
    g_max: float = 1.9
    sigma2: float = 1.0
    payoff_form: Literal["log", "linear"] = "log"

    def __post_init__(self):
        if len(self.p_gmin) != 4:
            raise ValueError(f"p_gmin needs 4 entries, got {self.p_gmin!r}")
        if any(not 0.0 <= p <= 1.0 for p in self.p_gmin):
            raise ValueError(f"p_gmin entries must lie in [0, 1]: {self.p_gmin!r}")
        if not self.g_min < self.g_max:
            raise ValueError(f"need g_min < g_max, got {self.g_min} >= {self.g_max}")
        if self.sigma2 <= 0.0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.payoff_form not in ("log", "linear"):
            raise ValueError(f"payoff_form must be 'log' or 'linear', got {self.payoff_form!r}")

    @property
    def p_max(self) -> float:
        return self.sigma2 * 10.0 ** (self.snr_db / 10.0)

    @property
    def power_levels(self) -> tuple[float, float]:
        return (0.0, self.p_max)

    @classmethod
    def for_regime(cls, regime: str, snr_db: float, **kwargs) -> "ICConfig":
        key = regime.lower()
        if key not in REGIME_PROBS:
            raise ValueError(f"unknown regime {regime!r}; expected one of {sorted(REGIME_PROBS)}")
        return cls(snr_db=snr_db, p_gmin=REGIME_PROBS[key], **kwargs)


def gain_states(cfg: ICConfig) -> list[ChannelGainState]:
    """The 16 gain tuples, ordered lexicographically with g_min < g_max."""
    out = []
    for s in range(N_STATES):
        bits = ((s >> 3) & 1, (s >> 2) & 1, (s >> 1) & 1, s & 1)
        out.append(
            ChannelGainState(*(cfg.g_max if b else cfg.g_min for b in bits))
        )
    return out


def build_state_prior(cfg: ICConfig) -> StatePrior:
    """Product of the four independent two-point gain distributions."""
    probs = np.ones(N_STATES)
    for s in range(N_STATES):
        bits = ((s >> 3) & 1, (s >> 2) & 1, (s >> 1) & 1, s & 1)
        for b, p in zip(bits, cfg.p_gmin):
            probs[s] *= (1.0 - p) if b else p
    return StatePrior(probs)


def sinr(cfg: ICConfig, state: ChannelGainState, power_tx1: float, power_tx2: float, receiver: int) -> float:
    """SINR at the requested receiver: own gain times own power over noise
    plus the cross gain times the interferer's power."""
    if receiver == 1:
        return state.g11 * power_tx1 / (cfg.sigma2 + state.g21 * power_tx2)
    if receiver == 2:
        return state.g22 * power_tx2 / (cfg.sigma2 + state.g12 * power_tx1)
    raise ValueError(f"receiver must be 1 or 2, got {receiver!r}")


def _utility(cfg: ICConfig, a: np.ndarray) -> np.ndarray:
    if cfg.payoff_form == "log":
        return np.log2(1.0 + a)
    return a


def build_payoff_table(cfg: ICConfig) -> PayoffTable:
    """Sum of the two receivers' utilities, on the 16 x 2 x 2 alphabet.

    Action index 0 is power off, index 1 is full power.
    """
    gains = np.array(gain_states(cfg))
    g11, g12, g21, g22 = gains.T
    x = np.array(cfg.power_levels)
    sinr1 = g11[:, None, None] * x[None, :, None] / (
        cfg.sigma2 + g21[:, None, None] * x[None, None, :]
    )
    sinr2 = g22[:, None, None] * x[None, None, :] / (
        cfg.sigma2 + g12[:, None, None] * x[None, :, None]
    )
    return PayoffTable(_utility(cfg, sinr1) + _utility(cfg, sinr2))


def identity_observation_channel() -> ObservationChannel:
    """Perfect monitoring of the binary power level of transmitter 1."""
    return ObservationChannel.identity(2)


def fpc_distribution(cfg: ICConfig) -> JointDistribution:
    """Both transmitters at full power in every state."""
    prior = build_state_prior(cfg)
    qbar = np.zeros((N_STATES, 2, 2))
    qbar[:, 1, 1] = prior.probs
    return JointDistribution(qbar, ("x0", "x1", "x2"))


def spc_distribution(cfg: ICConfig) -> JointDistribution:
    """Transmitter 2 at full power, transmitter 1 best-responding per state.

    Argmax ties go to full power, which keeps runs reproducible.
    """
    prior = build_state_prior(cfg)
    w = build_payoff_table(cfg).values
    best_x1 = np.where(w[:, 1, 1] >= w[:, 0, 1], 1, 0)
    qbar = np.zeros((N_STATES, 2, 2))
    qbar[np.arange(N_STATES), best_x1, 1] = prior.probs
    return JointDistribution(qbar, ("x0", "x1", "x2"))
