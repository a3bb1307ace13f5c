"""Baseband LoRa chirp-spread-spectrum modem.

Symbols are cyclic time shifts of a quadratic-phase base chirp, critically
sampled at one sample per chip (2**sf samples per symbol). Detection
de-chirps with the conjugate base chirp and picks the largest DFT magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModemConfig",
    "base_chirp",
    "modulate",
    "modulate_block",
    "dechirp",
    "detect",
    "detect_block",
    "bits_to_symbols",
    "symbols_to_bits",
    "count_bit_errors",
]

SF_MIN = 7
SF_MAX = 12


@dataclass(frozen=True)
class ModemConfig:
    """Spreading factor and bandwidth of the chirp modem."""

    sf: int
    bandwidth_hz: float = 125e3

    def __post_init__(self) -> None:
        if not isinstance(self.sf, (int, np.integer)) or not SF_MIN <= self.sf <= SF_MAX:
            raise ValueError(f"sf must be an integer in [{SF_MIN}, {SF_MAX}], got {self.sf!r}")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")

    @property
    def samples_per_symbol(self) -> int:
        return 1 << self.sf

    @property
    def sample_interval_s(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def symbol_duration_s(self) -> float:
        return self.samples_per_symbol / self.bandwidth_hz


_BASE_CHIRPS: dict[int, np.ndarray] = {}


def base_chirp(cfg: ModemConfig) -> np.ndarray:
    """Unit-energy base up-chirp of length 2**sf (the zero-shift symbol)."""
    cached = _BASE_CHIRPS.get(cfg.sf)
    if cached is None:
        m = cfg.samples_per_symbol
        n = np.arange(m, dtype=np.float64)
        cached = np.exp(1j * np.pi * n * n / m) / np.sqrt(m)
        cached.setflags(write=False)
        _BASE_CHIRPS[cfg.sf] = cached
    return cached


def _check_symbol(m: int, cfg: ModemConfig) -> int:
    m = int(m)
    if not 0 <= m < cfg.samples_per_symbol:
        raise ValueError(f"symbol index {m} outside [0, {cfg.samples_per_symbol})")
    return m


def modulate(m: int, cfg: ModemConfig) -> np.ndarray:
    """Cyclically shifted chirp carrying symbol m, unit energy."""
    m = _check_symbol(m, cfg)
    size = cfg.samples_per_symbol
    idx = (np.arange(size) + m) % size
    return base_chirp(cfg)[idx]


def modulate_block(symbols: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    """Modulate a 1-D array of symbols into a (n_symbols, 2**sf) sample block."""
    symbols = np.asarray(symbols)
    size = cfg.samples_per_symbol
    if symbols.size and (symbols.min() < 0 or symbols.max() >= size):
        raise ValueError("symbol index outside modem alphabet")
    idx = (np.arange(size)[None, :] + symbols[:, None]) % size
    return base_chirp(cfg)[idx]


def _check_frame(received: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    received = np.asarray(received)
    if received.shape[-1] != cfg.samples_per_symbol:
        raise ValueError(
            f"expected {cfg.samples_per_symbol} samples per symbol, got {received.shape[-1]}"
        )
    return received


def dechirp(received: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    """Multiply the received symbol by the conjugate base chirp."""
    received = _check_frame(received, cfg)
    return received * np.conj(base_chirp(cfg))


def detect(received: np.ndarray, cfg: ModemConfig) -> tuple[int, np.ndarray]:
    """Detect one symbol: de-chirp, DFT, pick the largest bin magnitude.

    The DFT is the unnormalized forward sum, so a clean symbol of amplitude
    |h|*sqrt(P) lands at its bin with magnitude |h|*sqrt(P). Ties break
    toward the smallest bin index.
    """
    received = _check_frame(received, cfg)
    if received.ndim != 1:
        raise ValueError("detect expects a single symbol; use detect_block for batches")
    mags = np.abs(np.fft.fft(dechirp(received, cfg)))
    return int(np.argmax(mags)), mags


def detect_block(received: np.ndarray, cfg: ModemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized detect over a (n_symbols, 2**sf) block."""
    received = _check_frame(received, cfg)
    mags = np.abs(np.fft.fft(received * np.conj(base_chirp(cfg))[None, :], axis=-1))
    return np.argmax(mags, axis=-1), mags


def bits_to_symbols(bits: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    """Pack bits into symbols, sf bits each, natural binary, MSB first."""
    bits = np.asarray(bits)
    if bits.size % cfg.sf != 0:
        raise ValueError(f"bit count {bits.size} not divisible by sf={cfg.sf}")
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("bits must be 0 or 1")
    weights = 1 << np.arange(cfg.sf - 1, -1, -1)
    return bits.reshape(-1, cfg.sf).astype(np.int64) @ weights


def symbols_to_bits(symbols: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    """Inverse of bits_to_symbols."""
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.size and (symbols.min() < 0 or symbols.max() >= cfg.samples_per_symbol):
        raise ValueError("symbol index outside modem alphabet")
    shifts = np.arange(cfg.sf - 1, -1, -1)
    return ((symbols[:, None] >> shifts) & 1).reshape(-1)


def count_bit_errors(m: int, m_hat: int) -> int:
    """Number of differing bits between two symbol indices."""
    return (int(m) ^ int(m_hat)).bit_count()
