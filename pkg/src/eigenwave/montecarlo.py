"""Monte Carlo oracle for the closed forms.

Rayleigh channels are drawn in fixed-size chunks. Chunk ``c`` owns its own
Philox4x64 stream, keyed from ``SeedSequence(seed, spawn_key=(c,))``, and
consumes it strictly in sample order, so every sample's variates are fixed
by ``(seed, chunk index, sample index)``. Per-chunk statistics are merged in
chunk order, which makes results independent of how many worker threads ran
the chunks.

BER is estimated semi-analytically: each transmitting realization
contributes its exact conditional BER ``xi * Q(sqrt(beta * p * lambda))``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .eigen import ChannelDims
from .policy import PolicyParams, StreamSpec, derive_params

__all__ = [
    "ChannelRealization",
    "SimConfig",
    "McEstimate",
    "StreamMetrics",
    "SimResult",
    "rng_for_chunk",
    "sample_realization",
    "sample_eigenvalues",
    "simulate",
    "estimate_outage",
    "estimate_stream_metrics",
    "thread_count",
]

POLICIES = ("traditional", "dynamic")


@dataclass(frozen=True)
class ChannelRealization:
    matrix: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class SimConfig:
    dims: ChannelDims
    specs: tuple[StreamSpec, ...]
    policy_kind: str = "traditional"
    samples: int = 1_000_000
    seed: int = 42
    chunk_size: int = 65_536

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        if self.policy_kind not in POLICIES:
            raise ValueError(f"policy_kind must be one of {POLICIES}, got {self.policy_kind!r}")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        # a chunk larger than the run is just the whole run
        object.__setattr__(self, "chunk_size", min(self.chunk_size, self.samples))
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        for spec in self.specs:
            self.dims.check_index(spec.stream)

    @property
    def n_chunks(self) -> int:
        return -(-self.samples // self.chunk_size)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    count: int

    def z_score(self, reference: float, std_error: Optional[float] = None) -> float:
        se = self.std_error if std_error is None else std_error
        diff = self.mean - reference
        if se == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / se


@dataclass(frozen=True)
class StreamMetrics:
    """Estimates for one stream.

    ``cond_ber`` and ``chernoff_ber`` are averages over transmitting
    realizations only, so their ``count`` is the number of those.
    """

    stream: int
    outage: McEstimate
    atp: McEstimate
    cond_ber: McEstimate
    chernoff_ber: McEstimate
    transmit_freq: McEstimate


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    params: tuple[PolicyParams, ...]
    streams: tuple[StreamMetrics, ...]
    backend: str = field(default=_kernels.BACKEND)


def thread_count() -> int:
    """Worker threads, from the ``EIGENWAVE_THREADS`` hint (default 1)."""
    raw = os.environ.get("EIGENWAVE_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def rng_for_chunk(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _draw_channels(dims: ChannelDims, count: int, rng: np.random.Generator) -> np.ndarray:
    # real and imaginary parts ~ N(0, 1/2) so that E|h|^2 = 1
    parts = rng.standard_normal((count, dims.n_r, dims.n_t, 2))
    parts *= math.sqrt(0.5)
    return parts[..., 0] + 1j * parts[..., 1]


def _gram(h: np.ndarray) -> np.ndarray:
    hh = np.conj(np.swapaxes(h, -1, -2))
    if h.shape[-1] <= h.shape[-2]:
        return hh @ h  # n_t x n_t
    return h @ hh  # n_r x n_r


def _eigvalsh_desc(omega: np.ndarray) -> np.ndarray:
    try:
        w = np.linalg.eigvalsh(omega)
    except np.linalg.LinAlgError:
        eye = np.eye(omega.shape[-1])
        scale = np.abs(omega).max() if omega.size else 1.0
        w = np.linalg.eigvalsh(omega + 1e-13 * scale * eye)
    return np.maximum(w[..., ::-1], 0.0)


def sample_realization(dims: ChannelDims, rng: np.random.Generator) -> ChannelRealization:
    h = _draw_channels(dims, 1, rng)[0]
    return ChannelRealization(matrix=h, eigenvalues=_eigvalsh_desc(_gram(h)))


def sample_eigenvalues(dims: ChannelDims, count: int, rng: np.random.Generator) -> np.ndarray:
    """Descending eigenvalues of ``count`` independent Gram matrices, shape (count, m)."""
    return _eigvalsh_desc(_gram(_draw_channels(dims, count, rng)))


def _run_chunk(config: SimConfig, params, chunk: int) -> np.ndarray:
    start = chunk * config.chunk_size
    count = min(config.chunk_size, config.samples - start)
    lam = sample_eigenvalues(config.dims, count, rng_for_chunk(config.seed, chunk))
    dynamic = config.policy_kind == "dynamic"
    rows = []
    for spec, prm in zip(config.specs, params):
        mod = spec.modulation
        rows.append(_kernels.accumulate_stream(
            lam[:, spec.stream - 1], prm.lambda_out, prm.lambda_mea, prm.delta,
            prm.snr_hat, prm.snr_tilde, mod.xi, mod.beta, dynamic))
    return np.array(rows)


def _merge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Chan et al. pairwise merge of two stats rows (see ``_kernels``)."""
    out = a.copy()
    out[0] = a[0] + b[0]
    out[1] = a[1] + b[1]
    out[4] = a[4] + b[4]
    for n_idx, mean_idx in ((0, 2), (4, 5), (4, 7)):
        na, nb = a[n_idx], b[n_idx]
        n = na + nb
        if n == 0:
            continue
        d = b[mean_idx] - a[mean_idx]
        out[mean_idx] = a[mean_idx] + d * nb / n
        out[mean_idx + 1] = a[mean_idx + 1] + b[mean_idx + 1] + d * d * na * nb / n
    return out


def _estimate(mean: float, m2: float, n: int) -> McEstimate:
    if n <= 1:
        return McEstimate(float(mean), 0.0, int(n))
    return McEstimate(float(mean), math.sqrt(m2 / (n - 1) / n), int(n))


def _proportion(hits: int, n: int) -> McEstimate:
    p = hits / n
    m2 = hits * (1.0 - p) ** 2 + (n - hits) * p * p
    return _estimate(p, m2, n)


def simulate(config: SimConfig, threads: Optional[int] = None,
             params: Optional[Sequence[PolicyParams]] = None) -> SimResult:
    """Run every chunk and reduce in chunk order."""
    if params is None:
        params = tuple(derive_params(config.dims, spec) for spec in config.specs)
    threads = thread_count() if threads is None else max(1, int(threads))
    chunks = range(config.n_chunks)
    if threads == 1 or config.n_chunks == 1:
        partials = [_run_chunk(config, params, c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(lambda c: _run_chunk(config, params, c), chunks))
    total = partials[0]
    for part in partials[1:]:
        total = np.array([_merge(a, b) for a, b in zip(total, part)])

    streams = []
    for spec, row in zip(config.specs, total):
        n, n_out, n_tx = int(row[0]), int(row[1]), int(row[4])
        streams.append(StreamMetrics(
            stream=spec.stream,
            outage=_proportion(n_out, n),
            atp=_estimate(row[2], row[3], n),
            cond_ber=_estimate(row[5], row[6], n_tx),
            chernoff_ber=_estimate(row[7], row[8], n_tx),
            transmit_freq=_proportion(n_tx, n),
        ))
    return SimResult(config=config, params=tuple(params), streams=tuple(streams))


def estimate_outage(config: SimConfig, threads: Optional[int] = None) -> list[McEstimate]:
    return [s.outage for s in simulate(config, threads).streams]


def estimate_stream_metrics(config: SimConfig,
                            threads: Optional[int] = None) -> list[StreamMetrics]:
    return list(simulate(config, threads).streams)
