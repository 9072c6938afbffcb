"""Monte Carlo estimation of downlink coverage.

Trials are grouped into fixed blocks of :data:`BLOCK_TRIALS`; block ``j``
draws from ``substream(master_seed, j)`` and always generates a full block,
so the random numbers of any given trial depend only on the master seed and
the trial index.  Blocks can be farmed out to threads and are reassembled in
order, which keeps every result bit-identical whatever the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from . import randgen
from .core import DimensionError, Scheme, SystemConfig, validate
from .randgen import ChannelMatrix, PrecoderMatrix

BLOCK_TRIALS = 2048
DEFAULT_TRIALS = 1_000_000


@dataclass(frozen=True)
class CoverageEstimate:
    p_hat: float
    ci_half_width: float
    trials: int
    master_seed: int

    @classmethod
    def from_count(cls, successes: int, trials: int, master_seed: int) -> "CoverageEstimate":
        p = successes / trials
        return cls(p, 1.96 * math.sqrt(p * (1.0 - p) / trials), trials, master_seed)


# -- single-instance statistics ---------------------------------------------

def beam_powers(channel_row: np.ndarray, precoder_group: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(channel_row) @ np.asarray(precoder_group)) ** 2


def beam_sinrs(channel_row, precoder_group, n_beams: int, rho: float) -> np.ndarray:
    """SINR of every beam when all ``n_beams`` beams share power ``P_T/N``."""
    a = beam_powers(channel_row, precoder_group)
    interference = a.sum() - a
    return a / (n_beams / rho + interference)


def max_sinr(channel: ChannelMatrix, precoder: PrecoderMatrix, config: SystemConfig, scheme: Scheme) -> float:
    validate(config, scheme)
    if not scheme.is_orp:
        raise ValueError("max_sinr applies to ORP schemes; use stc_snr for STC")
    best = 0.0
    for r in range(config.n_rx):
        row = channel.entries[r]
        for d in range(config.n_slots):
            sinrs = beam_sinrs(row, precoder.group(d), config.n_beams, config.rho)
            best = max(best, float(sinrs.max()))
    return best


def stc_snr(channel: ChannelMatrix, n_tx: int, rho: float) -> float:
    gain = math.fsum(np.abs(channel.entries[0]) ** 2)
    return rho / n_tx * gain


# -- batched machinery ---------------------------------------------------------

SAMPLERS = ("explicit", "projected")


def _block_layout(trials: int) -> list[tuple[int, int]]:
    n_blocks = -(-trials // BLOCK_TRIALS)
    return [(j, min(BLOCK_TRIALS, trials - j * BLOCK_TRIALS)) for j in range(n_blocks)]


def map_blocks(fn: Callable[[int, int], np.ndarray], trials: int, threads: int = 1) -> Iterator[np.ndarray]:
    """Yield ``fn(block_index, count)`` for consecutive blocks, in order."""
    layout = _block_layout(trials)
    if threads <= 1:
        for j, count in layout:
            yield fn(j, count)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(lambda jc: fn(*jc), layout)


def _projected_powers(h: np.ndarray, n_cols: int, seed: randgen.StreamSeed) -> np.ndarray:
    # H = L W^H with W^H having orthonormal rows.  For Haar Q independent of H,
    # W^H Q is again a Haar isometry, and its top n_rx x n_cols block has the
    # law of the transposed top n_cols rows of a Haar N_t x n_rx isometry.
    count, n_rx, n_tx = h.shape
    _, r = np.linalg.qr(np.conj(np.swapaxes(h, 1, 2)))
    lower = np.conj(np.swapaxes(r, 1, 2))
    v = randgen.precoder_batch(n_tx, n_rx, count, seed)[:, :n_cols, :]
    return np.abs(lower @ np.swapaxes(v, 1, 2)) ** 2


def draw_block(
    n_rx: int, n_tx: int, n_cols: int, master_seed: int, block: int, count: int, sampler: str = "explicit"
) -> tuple[np.ndarray, np.ndarray]:
    """Channels and beam powers ``|h_r^T p_c|^2`` for one block.

    Returns ``(h, powers)`` with shapes (count, n_rx, n_tx) and
    (count, n_rx, n_cols).  ``"explicit"`` multiplies the channel by a drawn
    Haar precoder.  ``"projected"`` draws the product directly from its exact
    joint law given ``h``; its cost does not grow with ``n_cols``, which
    matters for wide precoders at large ``N_t``.
    """
    if not 1 <= count <= BLOCK_TRIALS:
        raise ValueError(f"a block holds 1..{BLOCK_TRIALS} trials, got {count}")
    seed = randgen.substream(master_seed, block)
    h = randgen.channel_batch(n_rx, n_tx, BLOCK_TRIALS, seed)[:count]
    if sampler == "explicit" or n_rx > n_tx:
        p = randgen.precoder_batch(n_tx, n_cols, BLOCK_TRIALS, seed)[:count]
        return h, np.abs(h @ p) ** 2
    if sampler != "projected":
        raise ValueError(f"unknown sampler {sampler!r}; expected one of {SAMPLERS}")
    if n_cols > n_tx:
        raise DimensionError(f"need n_cols <= n_tx, got n_cols={n_cols}, n_tx={n_tx}")
    full = h if count == BLOCK_TRIALS else randgen.channel_batch(n_rx, n_tx, BLOCK_TRIALS, seed)
    return h, _projected_powers(full, n_cols, seed)[:count]


def power_block(n_rx: int, n_tx: int, n_cols: int, master_seed: int, block: int, count: int, sampler: str = "explicit") -> np.ndarray:
    """Beam powers for one block, shape (count, n_rx, n_cols)."""
    return draw_block(n_rx, n_tx, n_cols, master_seed, block, count, sampler)[1]


def group_max_sinr(powers: np.ndarray, n_beams: int, n_slots: int, rho: float) -> np.ndarray:
    """Best SINR of each (antenna, slot) pair.

    ``powers`` has shape (count, n_rx, >= n_beams * n_slots); the result has
    shape (count, n_rx, n_slots).  The SINR of a beam is increasing in its own
    power at fixed total, so the best beam of a group is its strongest one.
    """
    count, n_rx = powers.shape[:2]
    a = powers[:, :, : n_beams * n_slots].reshape(count, n_rx, n_slots, n_beams)
    total = a.sum(axis=-1)
    strongest = a.max(axis=-1)
    return strongest / (n_beams / rho + (total - strongest))


def _statistic_key(config: SystemConfig, scheme: Scheme) -> tuple:
    if scheme is Scheme.STC:
        return ("stc", config.n_tx, config.rho)
    return ("orp", config.n_rx, config.n_beams, config.n_slots, config.rho)


def _block_statistics(h: np.ndarray, powers: np.ndarray, keys: Sequence[tuple]) -> np.ndarray:
    out = np.empty((len(keys), h.shape[0]))
    for i, key in enumerate(keys):
        if key[0] == "stc":
            _, n_tx, rho = key
            out[i] = rho / n_tx * (np.abs(h[:, 0, :]) ** 2).sum(axis=1)
        else:
            _, n_rx, n_beams, n_slots, rho = key
            out[i] = group_max_sinr(powers[:, :n_rx], n_beams, n_slots, rho).max(axis=(1, 2))
    return out


def _prepare(specs: Sequence[tuple[SystemConfig, Scheme]]):
    if not specs:
        raise ValueError("need at least one configuration")
    n_tx = specs[0][0].n_tx
    for config, scheme in specs:
        validate(config, scheme)
        if config.n_tx != n_tx:
            raise ValueError("configurations sharing draws must have the same n_tx")
    keys = list(dict.fromkeys(_statistic_key(c, s) for c, s in specs))
    index = [keys.index(_statistic_key(c, s)) for c, s in specs]
    orp = [c for c, s in specs if s.is_orp]
    n_rx = max((c.n_rx for c in orp), default=1)
    n_cols = max((c.n_columns for c in orp), default=1)
    return n_tx, n_rx, n_cols, keys, index


def sample_statistics(
    specs: Sequence[tuple[SystemConfig, Scheme]],
    trials: int,
    master_seed: int,
    threads: int = 1,
    sampler: str = "explicit",
) -> np.ndarray:
    """Decision statistic of every configuration on shared draws.

    All configurations read prefixes of the same channel rows and precoder
    columns, so a whole sweep costs one simulation of its widest point.
    Returns shape (len(specs), trials).
    """
    n_tx, n_rx, n_cols, keys, index = _prepare(specs)

    def block(j: int, count: int) -> np.ndarray:
        h, a = draw_block(n_rx, n_tx, n_cols, master_seed, j, count, sampler)
        return _block_statistics(h, a, keys)

    out = np.concatenate(list(map_blocks(block, trials, threads)), axis=1)
    return out[index]


def estimate_many(
    specs: Sequence[tuple[SystemConfig, Scheme]],
    trials: int = DEFAULT_TRIALS,
    master_seed: int = 0,
    threads: int = 1,
    sampler: str = "explicit",
) -> list[CoverageEstimate]:
    """Coverage estimates for many configurations from one set of draws."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_tx, n_rx, n_cols, keys, index = _prepare(specs)
    thresholds = np.array([c.threshold for c, _ in specs])

    def block(j: int, count: int) -> np.ndarray:
        h, a = draw_block(n_rx, n_tx, n_cols, master_seed, j, count, sampler)
        stats = _block_statistics(h, a, keys)[index]
        return np.count_nonzero(stats > thresholds[:, None], axis=1)

    hits = np.zeros(len(specs), dtype=np.int64)
    for counts in map_blocks(block, trials, threads):
        hits += counts
    return [CoverageEstimate.from_count(int(k), trials, master_seed) for k in hits]


def max_sinr_samples(
    config: SystemConfig,
    scheme: Scheme,
    trials: int,
    master_seed: int,
    threads: int = 1,
    rhos: Sequence[float] | None = None,
    sampler: str = "explicit",
) -> np.ndarray:
    """Per-trial decision statistic of an ORP scheme.

    Returns shape (trials,) or, when ``rhos`` is given, (len(rhos), trials)
    with every SNR evaluated on the same channel and precoder draws.
    """
    if not scheme.is_orp:
        raise ValueError("max_sinr_samples applies to ORP schemes")
    rho_list = [config.rho] if rhos is None else list(rhos)
    out = sample_statistics([(config.replace(rho=r), scheme) for r in rho_list], trials, master_seed, threads, sampler)
    return out[0] if rhos is None else out


def stc_snr_samples(config: SystemConfig, trials: int, master_seed: int, threads: int = 1) -> np.ndarray:
    # The channel is frozen over the D slots, so every slot sees the same SNR.
    return sample_statistics([(config, Scheme.STC)], trials, master_seed, threads)[0]


def decision_samples(config: SystemConfig, scheme: Scheme, trials: int, master_seed: int, threads: int = 1, sampler: str = "explicit") -> np.ndarray:
    return sample_statistics([(config, scheme)], trials, master_seed, threads, sampler)[0]


def estimate_coverage(
    config: SystemConfig,
    scheme: Scheme,
    trials: int = DEFAULT_TRIALS,
    master_seed: int = 0,
    threads: int = 1,
    sampler: str = "explicit",
) -> CoverageEstimate:
    return estimate_many([(config, scheme)], trials, master_seed, threads, sampler)[0]


def amax_bmin_samples(n_tx: int, n_beams: int, trials: int, master_seed: int, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Strongest beam power and the interference it sees, single antenna."""

    def block(j: int, count: int) -> np.ndarray:
        a = power_block(1, n_tx, n_beams, master_seed, j, count)[:, 0, :]
        amax = a.max(axis=1)
        return np.stack([amax, a.sum(axis=1) - amax])

    out = np.concatenate(list(map_blocks(block, trials, threads)), axis=1)
    return out[0], out[1]
