"""Feasibility functional for coordination through noisy action observation.

A target joint behaviour of (state, action 1, action 2) is sustainable as a
long-run average exactly when the coordination information it demands,
I(X0; X2), does not exceed the information I(X1; Y | X0, X2) that the
observing decision maker can extract about the informed one's actions.
``info_constraint_gap`` returns the difference of the two terms (bits);
nonpositive values are achievable, and the functional is convex in the joint
distribution when the state marginal and the observation channel are held
fixed.

For a state that stays constant over blocks of ``stages`` steps, the
coordination term is paid once per block, which scales it by 1/stages and
makes the constraint arbitrarily mild as the block length grows.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .probability import (
    DistributionError,
    AlphabetError,
    JointDistribution,
    ObservationChannel,
    StatePrior,
    compose,
    conditional_entropy,
    conditional_mutual_information,
    entropy,
)

#: Default boundary tolerance (bits) for feasibility decisions.  Optimizer
#: iterates approach the boundary from inside, so exact zero is too strict.
FEASIBILITY_TOL = 1e-9


def _check_four_axes(q: JointDistribution) -> None:
    if q.axes != ("x0", "x1", "x2", "y"):
        raise AlphabetError(
            f"constraint functional needs all four axes, got {q.axes}"
        )


def _check_stages(stages: int) -> None:
    if not isinstance(stages, (int, np.integer)) or stages < 1:
        raise ValueError(f"stages must be a positive integer, got {stages!r}")


def info_constraint_gap(q: JointDistribution, stages: int = 1) -> float:
    """I(X0; X2) / stages - I(X1; Y | X0, X2), in bits.

    ``q`` must span all four variables.  A value <= 0 means the behaviour is
    achievable; ``stages`` > 1 gives the relaxed block-constant-state form.
    """
    _check_four_axes(q)
    _check_stages(stages)
    i_coord = conditional_mutual_information(q, "x0", "x2")
    i_channel = conditional_mutual_information(q, "x1", "y", ("x0", "x2"))
    return i_coord / stages - i_channel


def info_constraint_gap_entropy_path(q: JointDistribution) -> float:
    """The same gap via H(X0) - H(Y, X0 | X2) + H(Y | X0, X1, X2).

    Algebraically identical to ``info_constraint_gap`` (stages = 1); kept as
    an independent computation path so the two can cross-check each other.
    """
    _check_four_axes(q)
    return (
        entropy(q, "x0")
        - conditional_entropy(q, ("x0", "y"), ("x2",))
        + conditional_entropy(q, ("y",), ("x0", "x1", "x2"))
    )


class ImplementabilityResult(NamedTuple):
    implementable: bool
    slack: float


def is_implementable(
    qbar: JointDistribution,
    channel: ObservationChannel,
    prior: StatePrior,
    tol: float = FEASIBILITY_TOL,
) -> ImplementabilityResult:
    """Decide achievability of ``qbar`` under ``channel`` and ``prior``.

    Requires the X0-marginal of ``qbar`` to match ``prior`` within ``tol``.
    Returns the boolean verdict together with the slack (minus the gap);
    slack >= 0 means implementable.
    """
    if qbar.axes != ("x0", "x1", "x2"):
        raise AlphabetError(
            f"is_implementable expects axes ('x0', 'x1', 'x2'), got {qbar.axes}"
        )
    if qbar.axis_size("x0") != prior.n_states:
        raise AlphabetError(
            f"qbar has {qbar.axis_size('x0')} states but prior has "
            f"{prior.n_states}"
        )
    state_marginal = qbar.pmf.sum(axis=(1, 2))
    off = np.abs(state_marginal - prior.probs)
    bad = np.nonzero(off > tol)[0]
    if bad.size:
        i = int(bad[0])
        raise DistributionError(
            f"state marginal mismatch at x0={i}: qbar gives "
            f"{state_marginal[i]!r} but the prior says {prior.probs[i]!r}"
        )
    gap = info_constraint_gap(compose(qbar, channel))
    return ImplementabilityResult(bool(gap <= tol), float(-gap + 0.0))
