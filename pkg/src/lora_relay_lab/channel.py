"""Stochastic fading and noise layer.

Nakagami-m fading with power-law path loss. The squared envelope |h|^2 is
Gamma distributed with shape m and mean d**-alpha, so the instantaneous SNR
P*|h|^2/(N0/2**sf) is Gamma with mean equal to the link average SNR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "LinkSpec",
    "FadeDraw",
    "sample_nakagami_gain",
    "sample_nakagami_gains",
    "nakagami_snr_pdf",
    "avg_link_snr",
    "apply_fading_and_awgn",
]

M_FADING_MIN = 0.5
ALPHA_RANGE = (2.0, 6.0)


@dataclass(frozen=True)
class LinkSpec:
    """One hop: fading shape, geometry, transmit power and noise level."""

    m_fading: float
    distance_m: float
    tx_power_w: float
    path_loss_exp: float
    noise_psd_w: float

    def __post_init__(self) -> None:
        if self.m_fading < M_FADING_MIN:
            raise ValueError(f"m_fading must be >= {M_FADING_MIN}, got {self.m_fading}")
        if self.distance_m <= 0:
            raise ValueError("distance_m must be positive")
        if self.tx_power_w <= 0:
            raise ValueError("tx_power_w must be positive")
        if not ALPHA_RANGE[0] <= self.path_loss_exp <= ALPHA_RANGE[1]:
            raise ValueError(f"path_loss_exp must lie in {ALPHA_RANGE}")
        if self.noise_psd_w <= 0:
            raise ValueError("noise_psd_w must be positive")

    @property
    def mean_gain_sq(self) -> float:
        """E[|h|^2] from the power-law path loss."""
        return self.distance_m ** (-self.path_loss_exp)

    def avg_snr(self, sf: int) -> float:
        """Average link SNR P * d**-alpha / (N0 / 2**sf)."""
        value = self.tx_power_w * self.mean_gain_sq * (1 << sf) / self.noise_psd_w
        if not np.isfinite(value) or value <= 0:
            raise ValueError("average SNR is not positive and finite")
        return value

    def per_sample_noise_var(self, sf: int) -> float:
        """Waveform-domain complex noise variance per sample, N0 / 2**sf."""
        return self.noise_psd_w / (1 << sf)


@dataclass(frozen=True)
class FadeDraw:
    """One realization of a complex channel gain."""

    h: complex
    gain_sq: float
    phase: float


def sample_nakagami_gain(m: float, omega: float, rng: np.random.Generator) -> FadeDraw:
    """Draw one complex gain with |h|^2 ~ Gamma(m, omega/m) and uniform phase."""
    if m < M_FADING_MIN:
        raise ValueError(f"m must be >= {M_FADING_MIN}")
    if omega <= 0:
        raise ValueError("omega must be positive")
    gain_sq = float(rng.gamma(m, omega / m))
    phase = float(rng.uniform(0.0, 2.0 * np.pi))
    h = np.sqrt(gain_sq) * np.exp(1j * phase)
    return FadeDraw(h=complex(h), gain_sq=gain_sq, phase=phase)


def sample_nakagami_gains(
    m: float, omega: float, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Vectorized complex gain draws; |h|^2 ~ Gamma(m, omega/m), phase uniform."""
    if m < M_FADING_MIN:
        raise ValueError(f"m must be >= {M_FADING_MIN}")
    if omega <= 0:
        raise ValueError("omega must be positive")
    gain_sq = rng.gamma(m, omega / m, size=size)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=size)
    return np.sqrt(gain_sq) * np.exp(1j * phase)


def nakagami_snr_pdf(r, m: float, gbar: float):
    """Density of the instantaneous SNR: Gamma with shape m and mean gbar."""
    if m < M_FADING_MIN:
        raise ValueError(f"m must be >= {M_FADING_MIN}")
    if gbar <= 0:
        raise ValueError("gbar must be positive")
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("SNR argument must be nonnegative")
    c = m / gbar
    with np.errstate(divide="ignore", invalid="ignore"):
        out = c**m * r ** (m - 1.0) * np.exp(-c * r) / special.gamma(m)
    # r=0 with m<1 diverges, m=1 gives c, m>1 gives 0
    if out.ndim == 0:
        return float(out)
    return out


def avg_link_snr(link: LinkSpec, sf: int) -> float:
    """Average SNR of a link for a given spreading factor."""
    return link.avg_snr(sf)


def apply_fading_and_awgn(
    frame: np.ndarray,
    h: complex | np.ndarray,
    per_sample_noise_var: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Scale by the channel gain and add circular complex Gaussian noise."""
    if per_sample_noise_var < 0:
        raise ValueError("noise variance must be nonnegative")
    frame = np.asarray(frame)
    out = np.asarray(h) * frame
    if per_sample_noise_var > 0:
        scale = np.sqrt(per_sample_noise_var / 2.0)
        noise = rng.standard_normal(frame.shape) + 1j * rng.standard_normal(frame.shape)
        out = out + scale * noise
    return out
