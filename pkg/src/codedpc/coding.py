"""Block-coding simulator for coordination through observed actions.

Validates achievability empirically: given a target joint distribution of
(state, action 1, action 2), the informed side embeds the observing side's
next-block action sequence into its own current-block actions, and the
observing side recovers it from noisy observations.  Concretely, with block
length n and B blocks:

* a source codebook of action sequences for the observing side is drawn
  i.i.d. from the target's X2 marginal;
* per block, the informed side picks the source codeword the observing side
  should play next (the jointly typical one, with the coming block's states,
  whose empirical statistics match the target best), and transmits the
  channel codeword of that index, drawn i.i.d. from the target's conditional
  of X1 given the current block's (state, X2) pair;
* the observing side decodes the index by joint typicality of the four
  sequences (its own actions and past states are known to it, the
  observations arrive through the monitoring channel), then plays the
  corresponding source codeword on the next block;
* block 0 uses the fixed index 0, known to both sides.

Both sides derive their codebooks from shared counter-based randomness:
identical per-block uniforms are pushed through each side's own conditional
quantizer, so the codebooks agree exactly whenever the two sides agree on
the conditioning sequences.  Encoding failures fall back to index 0 and
decoding failures to the smallest typical index (or 0), so an action is
produced at every stage.

The empirical distribution of (state, action 1, action 2, observation) is
counted over all n*B stages, block 0 included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .optimizer import PayoffTable
from .probability import (
    AlphabetError,
    JointDistribution,
    ObservationChannel,
    StatePrior,
    compose,
    conditional_mutual_information,
    total_variation,
)

#: Hard cap on the codebook size ceil(2**(n * rate)); larger requests are a
#: configuration error so memory stays desk-scale.
MAX_CODEBOOK = 2**20

_DEGENERATE_INFO = 1e-12

_STREAM_STATE = 0
_STREAM_SOURCE = 1
_STREAM_CODEBOOK = 2
_STREAM_OBSERVATION = 3


class CodingConfigError(ValueError):
    """Simulation parameters violate a construction requirement."""


def _stream(seed: int, tag: int, block: int = 0) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, (tag << 32) | block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_pmf(gen: np.random.Generator, pmf: np.ndarray, size) -> np.ndarray:
    cdf = np.cumsum(pmf)
    idx = np.searchsorted(cdf, gen.random(size), side="right")
    return np.minimum(idx, pmf.shape[0] - 1)


def _quantize_rows(cdf_rows: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Map uniforms through per-position inverse CDFs.

    ``cdf_rows`` is (n, K) with each row a cumulative distribution;
    ``uniforms`` is (..., n).  Returns integer symbols shaped like
    ``uniforms``.
    """
    idx = (uniforms[..., None] >= cdf_rows).sum(axis=-1)
    return np.minimum(idx, cdf_rows.shape[-1] - 1)


def _row_counts(cells: np.ndarray, n_cells: int) -> np.ndarray:
    """Occupancy counts per row of an (M, n) integer cell array."""
    m, _ = cells.shape
    out = np.empty((m, n_cells), dtype=np.int64)
    chunk = max(1, (1 << 22) // max(n_cells, 1))
    for lo in range(0, m, chunk):
        part = cells[lo : lo + chunk]
        offsets = np.arange(part.shape[0], dtype=np.int64)[:, None] * n_cells
        flat = np.bincount(
            (part + offsets).ravel(), minlength=part.shape[0] * n_cells
        )
        out[lo : lo + part.shape[0]] = flat.reshape(part.shape[0], n_cells)
    return out


def _typical_rows(counts: np.ndarray, ref: np.ndarray, n: int, eps: float) -> np.ndarray:
    """Robust typicality per row: every cell count within eps * n * p of n * p.

    Cells with zero reference probability must be unoccupied.
    """
    target = n * ref
    return (np.abs(counts - target) <= eps * target).all(axis=-1)


def typical_set_test(sequences, reference: JointDistribution, epsilon: float) -> bool:
    """Joint robust typicality of a tuple of symbol sequences.

    ``sequences`` holds one integer sequence per axis of ``reference``, all
    of the same length.  True iff every cell's empirical frequency is within
    ``epsilon`` (relatively) of the reference probability; occupying a
    zero-probability cell fails the test.
    """
    arrays = [np.asarray(s, dtype=np.int64) for s in sequences]
    if len(arrays) != len(reference.axes):
        raise AlphabetError(
            f"got {len(arrays)} sequences for {len(reference.axes)} axes"
        )
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    n = arrays[0].shape[0]
    for a in arrays:
        if a.ndim != 1 or a.shape[0] != n:
            raise ValueError("sequences must be 1-D and of equal length")
    shape = reference.pmf.shape
    for a, size, name in zip(arrays, shape, reference.axes):
        if a.min() < 0 or a.max() >= size:
            raise ValueError(f"sequence for axis {name!r} leaves [0, {size})")
    cells = np.zeros(n, dtype=np.int64)
    for a, size in zip(arrays, shape):
        cells = cells * size + a
    counts = np.bincount(cells, minlength=int(np.prod(shape)))
    return bool(_typical_rows(counts[None, :], reference.flat, n, epsilon)[0])


@dataclass(frozen=True, eq=False)
class CodingConfig:
    """Parameters of one coding-simulation run.

    ``rate`` (bits per stage) defaults to the midpoint of the admissible
    interval (I(X0;X2), I(X1;Y|X0,X2)) computed under ``target``; an explicit
    value must lie strictly inside that interval.  When the coordination
    information is zero there is nothing to convey and any positive rate is
    accepted.  The codebook holds ceil(2**(n*rate)) sequences, capped at
    ``MAX_CODEBOOK``.
    """

    target: JointDistribution
    channel: ObservationChannel
    prior: StatePrior
    payoff: PayoffTable
    block_length: int
    num_blocks: int
    rate: float | None = None
    epsilon: float = 0.2
    seed: int = 0

    info_coordination: float = field(init=False)
    info_channel: float = field(init=False)
    resolved_rate: float = field(init=False)
    codebook_size: int = field(init=False)

    def __post_init__(self):
        if self.target.axes != ("x0", "x1", "x2"):
            raise CodingConfigError(
                f"target must span ('x0', 'x1', 'x2'), got {self.target.axes}"
            )
        if self.channel.n_inputs != self.target.axis_size("x1"):
            raise CodingConfigError("channel input alphabet does not match target")
        if self.payoff.shape != self.target.pmf.shape:
            raise CodingConfigError("payoff table shape does not match target")
        if self.prior.n_states != self.target.axis_size("x0"):
            raise CodingConfigError("prior length does not match target states")
        state_marginal = self.target.pmf.sum(axis=(1, 2))
        if np.abs(state_marginal - self.prior.probs).max() > 1e-9:
            raise CodingConfigError("target's state marginal disagrees with the prior")
        if self.block_length < 1:
            raise CodingConfigError(f"block_length must be >= 1, got {self.block_length}")
        if self.num_blocks < 2:
            raise CodingConfigError(f"num_blocks must be >= 2, got {self.num_blocks}")
        if not 0.0 < self.epsilon:
            raise CodingConfigError(f"epsilon must be positive, got {self.epsilon}")

        reference = compose(self.target, self.channel)
        i_coord = conditional_mutual_information(reference, "x0", "x2")
        i_chan = conditional_mutual_information(reference, "x1", "y", ("x0", "x2"))
        if i_coord <= _DEGENERATE_INFO:
            rate = self.rate if self.rate is not None else 1.0 / self.block_length
            if rate <= 0.0:
                raise CodingConfigError(f"rate must be positive, got {rate!r}")
        else:
            if i_coord >= i_chan:
                raise CodingConfigError(
                    "target admits no rate: coordination information "
                    f"{i_coord:.6f} bits is not below the channel information "
                    f"{i_chan:.6f} bits"
                )
            rate = self.rate if self.rate is not None else 0.5 * (i_coord + i_chan)
            if not i_coord < rate < i_chan:
                raise CodingConfigError(
                    f"rate {rate!r} outside the admissible interval "
                    f"({i_coord:.6f}, {i_chan:.6f}) bits"
                )
        size = math.ceil(2.0 ** (self.block_length * rate))
        if size > MAX_CODEBOOK:
            raise CodingConfigError(
                f"codebook of {size} sequences exceeds the cap {MAX_CODEBOOK}; "
                "lower the rate or the block length"
            )
        object.__setattr__(self, "info_coordination", float(i_coord))
        object.__setattr__(self, "info_channel", float(i_chan))
        object.__setattr__(self, "resolved_rate", float(rate))
        object.__setattr__(self, "codebook_size", int(size))

    def reference(self) -> JointDistribution:
        """The four-variable distribution the empirical counts should approach."""
        return compose(self.target, self.channel)


@dataclass(frozen=True)
class BlockDiagnostics:
    block: int
    encoded_index: int | None
    decoded_index: int | None
    encoder_failed: bool
    typical_candidates: int | None
    decode_error: bool | None
    payoff_only: bool


@dataclass(frozen=True, eq=False)
class SimResult:
    """Outcome of one simulated run."""

    empirical: JointDistribution
    tv_to_target: float
    encoder_failures: int
    decoder_errors: int
    average_payoff: float
    blocks: tuple[BlockDiagnostics, ...]

    def to_dict(self) -> dict:
        return {
            "tv_to_target": self.tv_to_target,
            "encoder_failures": self.encoder_failures,
            "decoder_errors": self.decoder_errors,
            "average_payoff": self.average_payoff,
            "blocks": [
                {
                    "block": d.block,
                    "encoded_index": d.encoded_index,
                    "decoded_index": d.decoded_index,
                    "encoder_failed": d.encoder_failed,
                    "typical_candidates": d.typical_candidates,
                    "decode_error": d.decode_error,
                    "payoff_only": d.payoff_only,
                }
                for d in self.blocks
            ],
        }


def run(cfg: CodingConfig) -> SimResult:
    """Simulate ``cfg.num_blocks`` blocks and return the empirical outcome."""
    n = cfg.block_length
    blocks = cfg.num_blocks
    eps = cfg.epsilon
    size = cfg.codebook_size
    n0, n1, n2 = cfg.target.pmf.shape
    ny = cfg.channel.n_outputs
    reference = cfg.reference()
    ref_flat = reference.flat
    pair_ref = reference.pmf.sum(axis=(1, 3))
    pair_flat = pair_ref.reshape(-1)

    # Conditional of the informed side's action given (state, partner action);
    # unsupported (state, partner) pairs get a uniform placeholder that the
    # dynamics never visit with matching statistics.
    m02 = cfg.target.pmf.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond_x1 = np.where(
            m02[:, None, :] > 0.0,
            cfg.target.pmf / np.where(m02[:, None, :] > 0.0, m02[:, None, :], 1.0),
            1.0 / n1,
        )
    cond_cdf = np.cumsum(np.transpose(cond_x1, (0, 2, 1)), axis=-1)  # (n0, n2, n1)
    gamma_cdf = np.cumsum(cfg.channel.matrix, axis=-1)  # (n1, ny)
    x2_marginal = cfg.target.pmf.sum(axis=(0, 1))

    states = _sample_pmf(
        _stream(cfg.seed, _STREAM_STATE), cfg.prior.probs, (blocks, n)
    )
    source_codebook = _sample_pmf(
        _stream(cfg.seed, _STREAM_SOURCE), x2_marginal, (size, n)
    )

    quad_counts = np.zeros(n0 * n1 * n2 * ny, dtype=np.int64)
    diagnostics: list[BlockDiagnostics] = []
    encoder_failures = 0
    decoder_errors = 0

    play_x2 = source_codebook[0]
    belief_x2 = source_codebook[0]

    for b in range(blocks):
        last = b == blocks - 1
        x0 = states[b]
        chan_gen = _stream(cfg.seed, _STREAM_CODEBOOK, b)

        if last:
            m_next = None
            enc_failed = False
            uniforms = chan_gen.random(n)
            x1 = _quantize_rows(cond_cdf[x0, belief_x2], uniforms)
        else:
            # encoder looks at the coming block's states; among the typical
            # source codewords it keeps the one whose empirical pair
            # statistics sit closest to the target (larger codebooks then
            # cover the target ever more finely)
            pair_cells = states[b + 1][None, :] * n2 + source_codebook
            counts = _row_counts(pair_cells, n0 * n2)
            typical = _typical_rows(counts, pair_flat, n, eps)
            if typical.any():
                deviation = np.abs(counts / n - pair_flat).sum(axis=1)
                deviation[~typical] = np.inf
                m_next = int(np.argmin(deviation))
                enc_failed = False
            else:
                m_next = 0
                enc_failed = True
                encoder_failures += 1
            uniforms = chan_gen.random((size, n))
            x1 = _quantize_rows(cond_cdf[x0, belief_x2], uniforms[m_next])

        obs_gen = _stream(cfg.seed, _STREAM_OBSERVATION, b)
        y = _quantize_rows(gamma_cdf[x1], obs_gen.random(n))

        if last:
            diagnostics.append(
                BlockDiagnostics(
                    block=b,
                    encoded_index=None,
                    decoded_index=None,
                    encoder_failed=False,
                    typical_candidates=None,
                    decode_error=None,
                    payoff_only=True,
                )
            )
        else:
            candidates = _quantize_rows(cond_cdf[x0, play_x2], uniforms)
            cells = ((x0[None, :] * n1 + candidates) * n2 + play_x2[None, :]) * ny + y[
                None, :
            ]
            counts4 = _row_counts(cells, n0 * n1 * n2 * ny)
            typical4 = _typical_rows(counts4, ref_flat, n, eps)
            n_typical = int(typical4.sum())
            m_hat = int(np.argmax(typical4)) if n_typical else 0
            error = m_hat != m_next
            if error:
                decoder_errors += 1
            diagnostics.append(
                BlockDiagnostics(
                    block=b,
                    encoded_index=m_next,
                    decoded_index=m_hat,
                    encoder_failed=enc_failed,
                    typical_candidates=n_typical,
                    decode_error=error,
                    payoff_only=False,
                )
            )

        played = ((x0 * n1 + x1) * n2 + play_x2) * ny + y
        quad_counts += np.bincount(played, minlength=quad_counts.shape[0])

        if not last:
            play_x2 = source_codebook[m_hat]
            belief_x2 = source_codebook[m_next]

    total = n * blocks
    empirical = JointDistribution(
        quad_counts.reshape(n0, n1, n2, ny) / total, ("x0", "x1", "x2", "y")
    )
    action_marginal = empirical.pmf.sum(axis=3)
    average_payoff = float((action_marginal * cfg.payoff.values).sum())
    return SimResult(
        empirical=empirical,
        tv_to_target=total_variation(empirical, reference),
        encoder_failures=encoder_failures,
        decoder_errors=decoder_errors,
        average_payoff=average_payoff,
        blocks=tuple(diagnostics),
    )
