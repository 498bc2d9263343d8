"""Information-constrained maximization of an expected payoff.

Solves

    maximize    E[w]  over qbar on X0 x X1 x X2
    subject to  I(X0; X2) / stages - I(X1; Y | X0, X2) <= -min_slack,
                sum_{x1, x2} qbar(x0, x1, x2) = prior(x0) for every x0,

where the four-variable distribution behind the informations is
qbar(x0, x1, x2) * channel(y | x1).  Optimizing over qbar with fixed
per-state mass makes the channel-consistency relations hold by construction
and keeps every iterate on the probability simplex.

Algorithm: Lagrangian dual bisection on the constraint multiplier.  For a
fixed multiplier the inner problem is concave (the gap functional is convex)
and is solved by entropic mirror ascent restricted to each state's mass
slice, with backtracking on the objective.  The outer bisection drives the
gap to zero from the feasible side; when the constraint is inactive the
per-state payoff argmax is returned directly.  A small pool of always
feasible candidate policies (constant partner action with best response)
is kept so the returned point never falls below those baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .probability import (
    AlphabetError,
    JointDistribution,
    ObservationChannel,
    StatePrior,
)

_LN2 = float(np.log(2.0))
# Mirror-ascent iterates are floored here and renormalized, so every log in
# the gradient stays finite.
_FLOOR = 1e-14
_MAX_MULTIPLIER = 2.0**40


class ConvergenceError(RuntimeError):
    """Solver failed to certify optimality; ``result`` holds the best iterate."""

    def __init__(self, message: str, result: "OptimizationResult | None" = None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True, eq=False)
class PayoffTable:
    """Stage payoff w(x0, x1, x2) on the state/action product alphabet."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 3:
            raise AlphabetError(f"payoff table must be 3-D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("payoff table contains non-finite values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape


@dataclass(frozen=True)
class SolverOptions:
    tol_payoff: float = 1e-5
    max_inner_iter: int = 50_000
    outer_steps: int = 60
    feasibility_tol: float = 1e-9
    inner_tol: float = 1e-11
    patience: int = 6


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Feasible near-optimal point plus solver diagnostics.

    ``slack`` is minus the constraint gap at ``qbar`` (nonnegative up to the
    feasibility tolerance), ``multiplier`` the dual variable of the
    information constraint, and ``dual_bound`` a certified upper bound on
    the optimal payoff, so dual_bound - payoff bounds the suboptimality.
    """

    qbar: JointDistribution
    payoff: float
    slack: float
    multiplier: float
    dual_bound: float
    iterations: int
    converged: bool


def expected_payoff(dist: JointDistribution, payoff: PayoffTable) -> float:
    """E[w] under a distribution over (x0, x1, x2), or over all four axes.

    The payoff does not depend on the observation, so a four-variable
    distribution is first marginalized onto (x0, x1, x2).
    """
    if dist.axes == ("x0", "x1", "x2", "y"):
        dist = dist.marginal(("x0", "x1", "x2"))
    if dist.axes != ("x0", "x1", "x2"):
        raise AlphabetError(
            f"expected_payoff needs axes ('x0', 'x1', 'x2'), got {dist.axes}"
        )
    if dist.pmf.shape != payoff.shape:
        raise AlphabetError(
            f"distribution shape {dist.pmf.shape} does not match payoff "
            f"shape {payoff.shape}"
        )
    return float((dist.pmf * payoff.values).sum())


def best_actions(payoff: PayoffTable) -> list[tuple[int, int]]:
    """Per-state payoff-maximizing action pair, lowest flat index on ties."""
    n0, n1, n2 = payoff.shape
    flat = payoff.values.reshape(n0, n1 * n2)
    idx = flat.argmax(axis=1)
    return [(int(i // n2), int(i % n2)) for i in idx]


def costless_bound(prior: StatePrior, payoff: PayoffTable) -> float:
    """Upper bound on the optimum: per-state maximum payoff averaged by the prior.

    Attained when the informed side can reveal the coming state for free.
    """
    if prior.n_states != payoff.shape[0]:
        raise AlphabetError(
            f"prior has {prior.n_states} states but payoff has {payoff.shape[0]}"
        )
    per_state = payoff.values.reshape(payoff.shape[0], -1).max(axis=1)
    return float(prior.probs @ per_state)


# ---------------------------------------------------------------------------
# Array-level internals.  qbar arrays are (n0, n1, n2) with per-state masses
# fixed to the prior; gamma is the channel matrix (n1, ny).
# ---------------------------------------------------------------------------


def _sum_plogp(a: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(a > 0.0, a * np.log(a), 0.0)
    return float(t.sum())


def _gap_bits(qbar: np.ndarray, gamma: np.ndarray, inv_stages: float) -> float:
    """(1/stages) I(X0;X2) - I(X1;Y|X0,X2) in bits, without composing in y."""
    m02 = qbar.sum(axis=1)
    m0 = m02.sum(axis=1)
    m2 = m02.sum(axis=0)
    i_coord = _sum_plogp(m02) - _sum_plogp(m0) - _sum_plogp(m2)
    s = np.einsum("abc,by->acy", qbar, gamma)
    h_y_given_02 = -(_sum_plogp(s) - _sum_plogp(m02))
    occupancy1 = qbar.sum(axis=(0, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        row_ent = -np.where(gamma > 0.0, gamma * np.log(gamma), 0.0).sum(axis=1)
    h_y_given_012 = float(occupancy1 @ row_ent)
    i_channel = h_y_given_02 - h_y_given_012
    return (inv_stages * i_coord - i_channel) / _LN2


def _gap_grad_bits(qbar: np.ndarray, gamma: np.ndarray, inv_stages: float) -> np.ndarray:
    """Gradient of ``_gap_bits`` w.r.t. qbar; requires strictly positive qbar."""
    m02 = qbar.sum(axis=1)
    m0 = m02.sum(axis=1)
    m2 = m02.sum(axis=0)
    log_ratio = np.log(m02) - np.log(m0)[:, None] - np.log(m2)[None, :]
    g_coord = np.broadcast_to(log_ratio[:, None, :], qbar.shape)
    s = np.einsum("abc,by->acy", qbar, gamma)
    p_y = s / m02[:, :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_gamma = np.where(gamma > 0.0, np.log(gamma), 0.0)
        # p_y(a, c, y) = 0 forces gamma(., y) = 0, whose coefficient below
        # is zero, so the substituted log never contributes.
        log_p = np.where(p_y > 0.0, np.log(p_y), 0.0)
    row_term = (gamma * log_gamma).sum(axis=1)
    cross = np.einsum("by,acy->abc", gamma, log_p)
    g_channel = row_term[None, :, None] - cross
    return (inv_stages * g_coord - g_channel) / _LN2


def _objective(qbar, gamma, w, lam, inv_stages, offset):
    pay = float((qbar * w).sum())
    gap = _gap_bits(qbar, gamma, inv_stages)
    return pay - lam * (gap + offset), pay, gap


def _fw_gap(grad: np.ndarray, p: np.ndarray, rho: np.ndarray) -> float:
    """Linearized ascent gap over the sliced simplex.

    The feasible set is a product of scaled simplices, so the best linear
    improvement is reached at a per-slice vertex; by concavity of the
    objective this gap upper-bounds the remaining suboptimality, giving the
    certified bound max G <= G(p) + _fw_gap.
    """
    return float((rho * grad.max(axis=(1, 2))).sum() - (grad * p).sum())


def _inner_maximize(start, rho, gamma, w, lam, inv_stages, offset, opts, fw_target):
    """Entropic mirror ascent of E[w] - lam * (gap + offset) on the slices.

    Stops once the linearized gap certifies the inner maximum within
    ``fw_target``, or on stalled progress, or on the iteration budget.
    Returns the iterate, its objective value, payoff, constraint gap,
    certified inner gap, and the iteration count.
    """
    p = start
    value, pay, gap = _objective(p, gamma, w, lam, inv_stages, offset)
    step = 1.0
    iters = 0
    stall = 0
    while True:
        grad = w - lam * _gap_grad_bits(p, gamma, inv_stages)
        shift = grad.max(axis=(1, 2), keepdims=True)
        if _fw_gap(grad, p, rho) <= fw_target or iters >= opts.max_inner_iter:
            break
        accepted = False
        while iters < opts.max_inner_iter:
            iters += 1
            cand = p * np.exp(step * (grad - shift))
            cand = np.maximum(cand, _FLOOR)
            cand *= (rho / cand.sum(axis=(1, 2)))[:, None, None]
            cand_value, cand_pay, cand_gap = _objective(
                cand, gamma, w, lam, inv_stages, offset
            )
            if cand_value >= value:
                gain = cand_value - value
                p, value, pay, gap = cand, cand_value, cand_pay, cand_gap
                step = min(step * 1.3, 1e8)
                accepted = True
                break
            step *= 0.5
            if step < 1e-14:
                break
        if not accepted:
            break
        if gain <= opts.inner_tol * (1.0 + abs(value)):
            stall += 1
            if stall >= opts.patience:
                break
        else:
            stall = 0
    grad = w - lam * _gap_grad_bits(p, gamma, inv_stages)
    certified = max(_fw_gap(grad, p, rho), 0.0)
    return p, value, pay, gap, certified, iters


def _per_state_argmax(rho: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Point mass on the best action pair in every state (first index on ties)."""
    n0, n1, n2 = w.shape
    q = np.zeros_like(w)
    idx = w.reshape(n0, n1 * n2).argmax(axis=1)
    q.reshape(n0, n1 * n2)[np.arange(n0), idx] = rho
    return q


def _constant_partner_candidates(rho: np.ndarray, w: np.ndarray):
    """For each fixed x2, the per-state best response in x1 (always feasible
    when the gap functional is, since a constant X2 carries no state
    information)."""
    n0, n1, n2 = w.shape
    for c in range(n2):
        q = np.zeros_like(w)
        best = w[:, :, c].argmax(axis=1)
        q[np.arange(n0), best, c] = rho
        yield q


def solve(
    prior: StatePrior,
    channel: ObservationChannel,
    payoff: PayoffTable,
    *,
    stages: int = 1,
    min_slack: float = 0.0,
    options: SolverOptions | None = None,
) -> OptimizationResult:
    """Maximize the expected payoff subject to the information constraint.

    ``stages`` relaxes the coordination term by 1/stages (block-constant
    states); ``min_slack`` demands gap <= -min_slack instead of gap <= 0,
    which is useful for producing targets with room to spare.

    Returns an ``OptimizationResult`` whose payoff is within
    ``options.tol_payoff`` of the optimum, certified by the dual bound.
    Raises ``ConvergenceError`` (carrying the best feasible iterate) if the
    certificate cannot be established within the iteration budget.
    """
    opts = options or SolverOptions()
    if not isinstance(stages, (int, np.integer)) or stages < 1:
        raise ValueError(f"stages must be a positive integer, got {stages!r}")
    if min_slack < 0.0:
        raise ValueError(f"min_slack must be nonnegative, got {min_slack!r}")
    w_full = payoff.values
    n0, n1, n2 = w_full.shape
    if prior.n_states != n0:
        raise AlphabetError(
            f"prior has {prior.n_states} states but payoff has {n0}"
        )
    if channel.n_inputs != n1:
        raise AlphabetError(
            f"channel has {channel.n_inputs} input rows but |X1| = {n1}"
        )
    gamma = channel.matrix
    inv_stages = 1.0 / stages
    offset = float(min_slack)
    feas = opts.feasibility_tol

    # Work on the states with positive mass; zero-probability slices stay
    # identically zero and contribute nothing to payoff or informations.
    active = prior.probs > 0.0
    rho = prior.probs[active]
    w = w_full[active]

    def expand(q_active: np.ndarray) -> np.ndarray:
        full = np.zeros((n0, n1, n2))
        full[active] = q_active
        return full

    def finish(q_active, multiplier, dual_bound, iterations, converged):
        gap = _gap_bits(q_active, gamma, inv_stages)
        pay = float((q_active * w).sum())
        result = OptimizationResult(
            qbar=JointDistribution(expand(q_active), ("x0", "x1", "x2")),
            payoff=pay,
            slack=float(-gap),
            multiplier=float(multiplier),
            dual_bound=float(dual_bound),
            iterations=int(iterations),
            converged=bool(converged),
        )
        if not converged:
            raise ConvergenceError(
                f"no certificate after {opts.outer_steps} bisection steps: "
                f"dual bound {dual_bound!r} vs payoff {pay!r}",
                result=result,
            )
        return result

    best_pay = -np.inf
    best_q = None
    # Best iterate seen on the wrong side of the constraint, kept for
    # cross-boundary blending: a convex combination of a feasible and an
    # infeasible near-optimal point stays feasible (the gap functional is
    # convex) while its payoff interpolates linearly.
    outside_q = None
    outside_excess = np.inf
    interior = rho[:, None, None] * np.full((1, n1, n2), 1.0 / (n1 * n2))

    def consider(q_active: np.ndarray) -> float:
        nonlocal best_pay, best_q, outside_q, outside_excess
        excess = _gap_bits(q_active, gamma, inv_stages) + offset
        if excess <= feas:
            pay = float((q_active * w).sum())
            if pay > best_pay:
                best_pay, best_q = pay, q_active
        elif excess < outside_excess:
            outside_q, outside_excess = q_active, excess
        return excess

    def consider_blend() -> None:
        if best_q is None or outside_q is None or not np.isfinite(outside_excess):
            return
        inside_excess = _gap_bits(best_q, gamma, inv_stages) + offset
        if inside_excess >= 0.0:
            return
        t = -inside_excess / (outside_excess - inside_excess)
        for _ in range(8):
            mix = (1.0 - t) * best_q + t * outside_q
            if consider(mix) <= feas:
                return
            t *= 0.5

    consider(interior)
    for cand in _constant_partner_candidates(rho, w):
        consider(cand)

    # Constraint inactive at multiplier zero: the unconstrained argmax wins.
    vertex = _per_state_argmax(rho, w)
    vertex_pay = float((vertex * w).sum())
    dual_bound = vertex_pay
    if _gap_bits(vertex, gamma, inv_stages) + offset <= feas:
        return finish(vertex, 0.0, dual_bound, 0, True)

    fw_target = 0.25 * opts.tol_payoff
    total_iters = 0
    warm = interior
    lam_hi = 1.0
    hi_found = False
    while lam_hi <= _MAX_MULTIPLIER:
        q, value, pay, gap, certified, it = _inner_maximize(
            warm, rho, gamma, w, lam_hi, inv_stages, offset, opts, fw_target
        )
        total_iters += it
        dual_bound = min(dual_bound, value + certified)
        warm = q
        consider(q)
        if gap + offset <= feas:
            hi_found = True
            break
        lam_hi *= 2.0
    if not hi_found:
        # No multiplier makes the inner maximizer feasible (degenerate
        # channel); certify against the best feasible candidate if possible.
        if best_q is None:
            raise ConvergenceError(
                "no feasible point found: the requested slack exceeds what "
                "the observation channel supports"
            )
        converged = dual_bound - best_pay <= opts.tol_payoff
        return finish(best_q, lam_hi / 2.0, dual_bound, total_iters, converged)

    lam_lo = 0.0 if lam_hi == 1.0 else lam_hi / 2.0
    multiplier = lam_hi
    for _ in range(opts.outer_steps):
        consider_blend()
        if dual_bound - best_pay <= opts.tol_payoff:
            break
        lam_mid = 0.5 * (lam_lo + lam_hi)
        q, value, pay, gap, certified, it = _inner_maximize(
            warm, rho, gamma, w, lam_mid, inv_stages, offset, opts, fw_target
        )
        total_iters += it
        dual_bound = min(dual_bound, value + certified)
        warm = q
        consider(q)
        if gap + offset <= feas:
            lam_hi = lam_mid
            multiplier = lam_mid
        else:
            lam_lo = lam_mid

    if dual_bound - best_pay > opts.tol_payoff:
        # Polish on the feasible side of the final bracket and blend once
        # more across the boundary.
        start = np.maximum(best_q, _FLOOR)
        start *= (rho / start.sum(axis=(1, 2)))[:, None, None]
        q, value, pay, gap, certified, it = _inner_maximize(
            start, rho, gamma, w, lam_hi, inv_stages, offset, opts, fw_target
        )
        total_iters += it
        dual_bound = min(dual_bound, value + certified)
        consider(q)
        consider_blend()

    converged = dual_bound - best_pay <= opts.tol_payoff
    return finish(best_q, multiplier, dual_bound, total_iters, converged)
