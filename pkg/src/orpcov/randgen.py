"""Reproducible Rayleigh channels and Haar-distributed precoders.

Every random quantity is drawn from a generator keyed by a
:class:`StreamSeed`.  Channel and precoder draws use separate child streams
of the same seed, and both are generated one antenna row (or one precoder
column) at a time.  This makes the first ``r`` channel rows and the first
``c`` precoder columns of a batch independent of how many rows or columns
were requested in total, so sweeps over ``N``, ``N_r`` or ``D`` can share
random numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError

_CHANNEL = 0
_PRECODER = 1
_UNIFORM = 2


@dataclass(frozen=True)
class StreamSeed:
    master_seed: int
    substream_index: int

    def generator(self, purpose: int = _UNIFORM) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed & (2**64 - 1),
            spawn_key=(self.substream_index & (2**64 - 1), purpose),
        )
        return np.random.Generator(np.random.PCG64(seq))


def substream(master_seed: int, trial: int) -> StreamSeed:
    return StreamSeed(int(master_seed), int(trial))


@dataclass(frozen=True)
class ChannelMatrix:
    entries: np.ndarray  # (n_rx, n_tx) complex

    @property
    def n_rx(self) -> int:
        return self.entries.shape[0]

    @property
    def n_tx(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class PrecoderMatrix:
    columns: np.ndarray  # (n_tx, n_beams * n_slots) complex, orthonormal
    n_beams: int
    n_slots: int = 1

    def group(self, slot: int) -> np.ndarray:
        """Columns used in slot ``slot`` (zero based)."""
        start = slot * self.n_beams
        return self.columns[:, start:start + self.n_beams]


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    pair = rng.standard_normal((*shape, 2))
    return pair.view(np.complex128)[..., 0] * np.sqrt(0.5)


def channel_batch(n_rx: int, n_tx: int, count: int, seed: StreamSeed) -> np.ndarray:
    """``count`` i.i.d. CN(0, 1) channel matrices, shape (count, n_rx, n_tx)."""
    rng = seed.generator(_CHANNEL)
    out = np.empty((count, n_rx, n_tx), dtype=np.complex128)
    for r in range(n_rx):
        out[:, r, :] = _complex_normal(rng, (count, n_tx))
    return out


def precoder_batch(n_tx: int, n_cols: int, count: int, seed: StreamSeed) -> np.ndarray:
    """``count`` Haar precoders with ``n_cols`` orthonormal columns each.

    A complex Ginibre matrix is QR-factorised and each column of ``Q`` is
    rotated by the phase of the matching diagonal entry of ``R``, so ``R``
    has a positive diagonal.  Only the leading ``n_cols`` columns of the
    square Ginibre matrix are drawn; Householder QR makes the first ``n_cols``
    columns of ``Q`` depend on nothing else.
    """
    if not 1 <= n_cols <= n_tx:
        raise DimensionError(f"need 1 <= n_cols <= n_tx, got n_cols={n_cols}, n_tx={n_tx}")
    rng = seed.generator(_PRECODER)
    g = np.empty((count, n_tx, n_cols), dtype=np.complex128)
    for c in range(n_cols):
        # scale is irrelevant to the orthonormalised columns
        g[:, :, c] = rng.standard_normal((count, n_tx, 2)).view(np.complex128)[..., 0]
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[:, None, :]


def sample_channel(n_rx: int, n_tx: int, seed: StreamSeed) -> ChannelMatrix:
    return ChannelMatrix(channel_batch(n_rx, n_tx, 1, seed)[0])


def sample_precoder(n_tx: int, n_cols: int, seed: StreamSeed, n_beams: int | None = None) -> PrecoderMatrix:
    columns = precoder_batch(n_tx, n_cols, 1, seed)[0]
    if n_beams is None:
        n_beams = n_cols
    if n_cols % n_beams:
        raise DimensionError(f"{n_cols} columns cannot be split into groups of {n_beams}")
    return PrecoderMatrix(columns, n_beams, n_cols // n_beams)


def uniform_stream(seed: StreamSeed, size: int) -> np.ndarray:
    return seed.generator(_UNIFORM).random(size)
