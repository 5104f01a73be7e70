"""
Brownian and fractional Brownian mode increments.

Every (sample, mode, channel) triple owns an independent counter-based random
stream derived from the master seed, so a path does not depend on how samples
are grouped into batches or scheduled across threads. Channel 0 drives the
Brownian increments, channel 1 the fractional ones.

Fractional Gaussian noise is sampled exactly by circulant embedding of the
stationary increment covariance.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg

from app.core.config import settings

from .errors import CirculantEmbeddingError, DivisibilityError, ModelValidationError

logger = logging.getLogger(__name__)

BM_CHANNEL = 0
FBM_CHANNEL = 1

_MAGIC = b"TFWNOISE"
_HEADER = struct.Struct("<8sIIddQQ")


@dataclass(frozen=True, eq=False)
class NoisePath:
    """
    Per-mode noise increments on t_i = i * tau, i = 0..N.

    Attributes:
        tau: Time step
        n_steps: Number of increments N
        bm_incr: K x N Brownian increments
        fbm_incr: K x N fractional Brownian increments
        hurst: Hurst index of fbm_incr
        seed: Master seed
        sample_index: Sample the increments were drawn for
    """
    tau: float
    n_steps: int
    bm_incr: np.ndarray
    fbm_incr: np.ndarray
    hurst: float
    seed: int
    sample_index: int = 0

    def __post_init__(self):
        for name in ("bm_incr", "fbm_incr"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 2 or arr.shape[1] != self.n_steps:
                raise ModelValidationError(f"{name} has shape K x N with N={self.n_steps}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.bm_incr.shape != self.fbm_incr.shape:
            raise ModelValidationError("Brownian and fractional increments share the K x N shape")

    @property
    def n_modes(self) -> int:
        return self.bm_incr.shape[0]

    @property
    def horizon(self) -> float:
        return self.tau * self.n_steps


def mode_stream(seed: int, sample_index: int, mode: int, channel: int) -> np.random.Generator:
    """Independent Philox stream for one (sample, mode, channel)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(sample_index), int(mode), int(channel)))
    return np.random.Generator(np.random.Philox(sequence))


def sample_bm(n_modes: int, n_steps: int, tau: float, seed: int, sample_index: int = 0) -> np.ndarray:
    """
    Brownian increments, i.i.d. N(0, tau).

    Args:
        n_modes: K
        n_steps: N
        tau: Time step
        seed: Master seed
        sample_index: Monte-Carlo sample the path belongs to

    Returns:
        K x N matrix of increments
    """
    if n_modes < 1 or n_steps < 1 or not tau > 0:
        raise ModelValidationError("K >= 1, N >= 1 and tau > 0")
    out = np.empty((n_modes, n_steps))
    for k in range(n_modes):
        out[k] = mode_stream(seed, sample_index, k, BM_CHANNEL).standard_normal(n_steps)
    return out * np.sqrt(tau)


def fgn_autocovariance(n_lags: int, hurst: float) -> np.ndarray:
    """Unit-step fGn autocovariance gamma(k) = (|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) / 2 for k = 0..n_lags."""
    k = np.arange(n_lags + 1, dtype=float)
    two_h = 2.0 * hurst
    return 0.5 * (np.abs(k + 1.0) ** two_h + np.abs(k - 1.0) ** two_h - 2.0 * k ** two_h)


def fgn_covariance(n_steps: int, hurst: float, tau: float = 1.0) -> np.ndarray:
    """Exact N x N covariance of fBm increments with step tau."""
    return linalg.toeplitz(fgn_autocovariance(n_steps - 1, hurst)) * tau ** (2.0 * hurst)


@lru_cache(maxsize=32)
def _circulant_sqrt_eigenvalues(n_steps: int, hurst: float) -> Optional[np.ndarray]:
    gamma = fgn_autocovariance(n_steps, hurst)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.fft(row).real
    if eig.min() < -1e-10 * eig.max():
        logger.warning(f"circulant embedding not nonnegative (N={n_steps}, H={hurst}, min={eig.min():.3e})")
        return None
    eig = np.clip(eig, 0.0, None)
    sqrt_eig = np.sqrt(eig / row.size)
    sqrt_eig.setflags(write=False)
    return sqrt_eig


@lru_cache(maxsize=8)
def _dense_factor(n_steps: int, hurst: float) -> np.ndarray:
    return linalg.cholesky(fgn_covariance(n_steps, hurst), lower=True)


def sample_fbm(n_modes: int, n_steps: int, tau: float, hurst: float, seed: int, sample_index: int = 0) -> np.ndarray:
    """
    Fractional Brownian increments with the exact stationary covariance.

    Args:
        n_modes: K
        n_steps: N
        tau: Time step
        hurst: H in [1/2, 1)
        seed: Master seed
        sample_index: Monte-Carlo sample the path belongs to

    Returns:
        K x N matrix; each row has Cov(D_i, D_j) = tau^{2H} gamma(|i - j|)

    Raises:
        CirculantEmbeddingError: negative embedding spectrum and N too large for the dense fallback
    """
    if not 0.5 <= hurst < 1.0:
        raise ModelValidationError(f"1/2 <= hurst < 1 (got {hurst})")
    if n_modes < 1 or n_steps < 1 or not tau > 0:
        raise ModelValidationError("K >= 1, N >= 1 and tau > 0")

    sqrt_eig = _circulant_sqrt_eigenvalues(n_steps, hurst)
    streams = [mode_stream(seed, sample_index, k, FBM_CHANNEL) for k in range(n_modes)]
    if sqrt_eig is not None:
        size = sqrt_eig.size
        z = np.empty((n_modes, size), dtype=complex)
        for k, rng in enumerate(streams):
            draws = rng.standard_normal(2 * size)
            z[k].real = draws[:size]
            z[k].imag = draws[size:]
        unit = np.fft.fft(sqrt_eig * z, axis=1).real[:, :n_steps]
    else:
        if n_steps > settings.FBM_DENSE_FALLBACK_MAX:
            raise CirculantEmbeddingError(f"negative circulant spectrum for N={n_steps}, H={hurst}")
        factor = _dense_factor(n_steps, hurst)
        unit = np.stack([factor @ rng.standard_normal(n_steps) for rng in streams])
    return unit * tau ** hurst


def sample_path(
    n_modes: int, n_steps: int, tau: float, hurst: float, seed: int, sample_index: int = 0
) -> NoisePath:
    """Both noise channels for one Monte-Carlo sample."""
    return NoisePath(
        tau=tau,
        n_steps=n_steps,
        bm_incr=sample_bm(n_modes, n_steps, tau, seed, sample_index),
        fbm_incr=sample_fbm(n_modes, n_steps, tau, hurst, seed, sample_index),
        hurst=hurst,
        seed=seed,
        sample_index=sample_index,
    )


def normalize_increments(path: NoisePath) -> Tuple[np.ndarray, np.ndarray]:
    """Standardised increments (Delta xi / tau^{1/2}, Delta xi^H / tau^H), both N(0, 1)."""
    return path.bm_incr / np.sqrt(path.tau), path.fbm_incr / path.tau ** path.hurst


def _block_sum(incr: np.ndarray, factor: int) -> np.ndarray:
    if factor & (factor - 1) == 0:
        out = incr
        while out.shape[1] > incr.shape[1] // factor:
            out = out[:, 0::2] + out[:, 1::2]
        return out
    k, n = incr.shape
    return incr.reshape(k, n // factor, factor).sum(axis=2)


def coarsen(path: NoisePath, factor: int) -> NoisePath:
    """
    Sum increments in blocks of `factor`.

    Power-of-two factors are applied as repeated pairwise halvings, so
    coarsening by 2 twice is bit-identical to coarsening by 4 once.
    """
    if factor < 2:
        raise DivisibilityError(f"coarsening factor must be >= 2, got {factor}")
    if path.n_steps % factor != 0:
        raise DivisibilityError(f"factor {factor} does not divide N={path.n_steps}")
    return NoisePath(
        tau=path.tau * factor,
        n_steps=path.n_steps // factor,
        bm_incr=_block_sum(path.bm_incr, factor),
        fbm_incr=_block_sum(path.fbm_incr, factor),
        hurst=path.hurst,
        seed=path.seed,
        sample_index=path.sample_index,
    )


def truncate_modes(path: NoisePath, n_modes: int) -> NoisePath:
    """Keep the first n_modes rows; modes are independent streams, so this equals a direct K-mode sample."""
    if n_modes > path.n_modes:
        raise ModelValidationError(f"cannot truncate {path.n_modes} modes to {n_modes}")
    return NoisePath(
        tau=path.tau,
        n_steps=path.n_steps,
        bm_incr=path.bm_incr[:n_modes],
        fbm_incr=path.fbm_incr[:n_modes],
        hurst=path.hurst,
        seed=path.seed,
        sample_index=path.sample_index,
    )


def dump_path(path: NoisePath, target: Union[str, Path]) -> None:
    """Write a path as a little-endian binary file (header, then Brownian and fractional increments)."""
    header = _HEADER.pack(
        _MAGIC, path.n_modes, path.n_steps, path.tau, path.hurst, path.seed & (2 ** 64 - 1), path.sample_index,
    )
    with open(target, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(path.bm_incr, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(path.fbm_incr, dtype="<f8").tobytes())


def load_path(source: Union[str, Path]) -> NoisePath:
    """Read a path written by dump_path."""
    raw = Path(source).read_bytes()
    magic, n_modes, n_steps, tau, hurst, seed, sample_index = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise ValueError(f"{source} is not a noise dump")
    count = n_modes * n_steps
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size, count=2 * count)
    return NoisePath(
        tau=tau,
        n_steps=n_steps,
        bm_incr=body[:count].reshape(n_modes, n_steps).astype(float),
        fbm_incr=body[count:].reshape(n_modes, n_steps).astype(float),
        hurst=hurst,
        seed=seed,
        sample_index=sample_index,
    )
