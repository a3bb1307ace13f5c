"""Two-hop amplify-and-forward relay machinery.

One source broadcasts to N candidate relays; the branch with the largest
instantaneous end-to-end SNR forwards an amplified copy of its raw received
waveform to the destination. There is no direct source-destination link.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .analysis import BranchParams
from .channel import LinkSpec, sample_nakagami_gains
from .lora_phy import (
    ModemConfig,
    bits_to_symbols,
    detect_block,
    modulate_block,
    symbols_to_bits,
)

__all__ = [
    "FadingMode",
    "RelayTopology",
    "SnrDraw",
    "amplification_factor",
    "end_to_end_snr",
    "select_best",
    "draw_end_to_end_snr",
    "simulate_packet",
]


class FadingMode(str, Enum):
    PER_PACKET = "per_packet"
    PER_SYMBOL = "per_symbol"


@dataclass(frozen=True)
class RelayTopology:
    """Source-to-relay and relay-to-destination links for N candidate relays."""

    source_links: tuple[LinkSpec, ...]
    dest_links: tuple[LinkSpec, ...]
    sf: int

    def __post_init__(self) -> None:
        if len(self.source_links) != len(self.dest_links):
            raise ValueError("source_links and dest_links must have the same length")
        if not self.source_links:
            raise ValueError("need at least one relay")

    @property
    def n_relays(self) -> int:
        return len(self.source_links)

    @property
    def total_power_w(self) -> float:
        """Source plus relay transmit power of the first branch."""
        return self.source_links[0].tx_power_w + self.dest_links[0].tx_power_w

    def branch_params(self) -> tuple[BranchParams, ...]:
        return tuple(
            BranchParams(
                m_sr=sl.m_fading,
                m_rd=dl.m_fading,
                gbar_sr=sl.avg_snr(self.sf),
                gbar_rd=dl.avg_snr(self.sf),
            )
            for sl, dl in zip(self.source_links, self.dest_links)
        )

    def scaled_to_total_snr_db(self, ptn0_db: float) -> "RelayTopology":
        """Same geometry and powers with the noise level set so that the
        total-power-to-noise ratio equals ptn0_db."""
        noise = self.total_power_w / 10.0 ** (ptn0_db / 10.0)

        def with_noise(link: LinkSpec) -> LinkSpec:
            return LinkSpec(
                m_fading=link.m_fading,
                distance_m=link.distance_m,
                tx_power_w=link.tx_power_w,
                path_loss_exp=link.path_loss_exp,
                noise_psd_w=noise,
            )

        return RelayTopology(
            source_links=tuple(with_noise(l) for l in self.source_links),
            dest_links=tuple(with_noise(l) for l in self.dest_links),
            sf=self.sf,
        )


@dataclass(frozen=True)
class SnrDraw:
    """One realization of all link SNRs plus the selected branch."""

    gamma_sr: np.ndarray
    gamma_rd: np.ndarray
    gamma_branch: np.ndarray
    best_index: int
    gamma_best: float


def amplification_factor(
    p_relay: float, gain_sq_sr: float, p_source: float, noise_var: float
) -> float:
    """Relay gain normalizing the received signal-plus-noise power."""
    if p_relay <= 0 or p_source <= 0 or noise_var <= 0:
        raise ValueError("powers and noise variance must be positive")
    if gain_sq_sr < 0:
        raise ValueError("gain_sq_sr must be nonnegative")
    return float(np.sqrt(p_relay / (gain_sq_sr * p_source + noise_var)))


def end_to_end_snr(g1, g2):
    """Exact two-hop SNR g1*g2/(g1+g2+1); never exceeds min(g1, g2)."""
    g1 = np.asarray(g1, dtype=np.float64)
    g2 = np.asarray(g2, dtype=np.float64)
    if np.any(g1 < 0) or np.any(g2 < 0):
        raise ValueError("SNRs must be nonnegative")
    out = g1 * g2 / (g1 + g2 + 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def select_best(branch_snrs) -> tuple[int, float]:
    """Index and value of the largest branch SNR; ties go to the lowest index."""
    branch_snrs = np.asarray(branch_snrs, dtype=np.float64)
    if branch_snrs.size == 0:
        raise ValueError("need at least one branch SNR")
    idx = int(np.argmax(branch_snrs))
    return idx, float(branch_snrs[idx])


def draw_end_to_end_snr(topology: RelayTopology, rng: np.random.Generator) -> SnrDraw:
    """Sample all 2N instantaneous link SNRs and select the best branch."""
    sf = topology.sf
    gamma_sr = np.array(
        [rng.gamma(l.m_fading, l.avg_snr(sf) / l.m_fading) for l in topology.source_links]
    )
    gamma_rd = np.array(
        [rng.gamma(l.m_fading, l.avg_snr(sf) / l.m_fading) for l in topology.dest_links]
    )
    gamma_branch = end_to_end_snr(gamma_sr, gamma_rd)
    gamma_branch = np.atleast_1d(gamma_branch)
    best, value = select_best(gamma_branch)
    return SnrDraw(
        gamma_sr=gamma_sr,
        gamma_rd=gamma_rd,
        gamma_branch=gamma_branch,
        best_index=best,
        gamma_best=value,
    )


def _popcount_errors(tx: np.ndarray, rx: np.ndarray) -> int:
    diff = np.bitwise_xor(tx.astype(np.int64), rx.astype(np.int64))
    return int(sum(int(d).bit_count() for d in diff[diff != 0]))


def simulate_packet(
    topology: RelayTopology,
    payload_bits: np.ndarray,
    rng: np.random.Generator,
    fading_mode: FadingMode = FadingMode.PER_PACKET,
) -> tuple[np.ndarray, int, int]:
    """Full waveform path through the selected relay for one packet.

    Modulates at the source, fades and adds noise into every relay, picks the
    branch with the best instantaneous end-to-end SNR, amplifies the raw
    samples there, fades and adds noise into the destination, then detects.
    Returns (decoded_bits, bit_error_count, symbol_error_count).
    """
    fading_mode = FadingMode(fading_mode)
    cfg = ModemConfig(topology.sf)
    symbols = bits_to_symbols(np.asarray(payload_bits), cfg)
    n_sym = symbols.size
    if n_sym == 0:
        raise ValueError("payload is empty")
    n_rel = topology.n_relays
    p_src = np.array([l.tx_power_w for l in topology.source_links])
    p_rel = np.array([l.tx_power_w for l in topology.dest_links])
    nv_sr = np.array([l.per_sample_noise_var(topology.sf) for l in topology.source_links])
    nv_rd = np.array([l.per_sample_noise_var(topology.sf) for l in topology.dest_links])
    omega_sr = np.array([l.mean_gain_sq for l in topology.source_links])
    omega_rd = np.array([l.mean_gain_sq for l in topology.dest_links])
    m_sr = np.array([l.m_fading for l in topology.source_links])
    m_rd = np.array([l.m_fading for l in topology.dest_links])

    draws = 1 if fading_mode is FadingMode.PER_PACKET else n_sym
    h_sr = np.stack([sample_nakagami_gains(m_sr[l], omega_sr[l], rng, draws) for l in range(n_rel)])
    h_rd = np.stack([sample_nakagami_gains(m_rd[l], omega_rd[l], rng, draws) for l in range(n_rel)])

    # bin SNR equals the link SNR: P|h|^2 / (N0 / 2**sf)
    g_sr = p_src[:, None] * np.abs(h_sr) ** 2 / nv_sr[:, None]
    g_rd = p_rel[:, None] * np.abs(h_rd) ** 2 / nv_rd[:, None]
    g_branch = end_to_end_snr(g_sr, g_rd)
    best = np.argmax(np.atleast_2d(g_branch), axis=0)
    if fading_mode is FadingMode.PER_PACKET:
        best = np.repeat(best, n_sym)
        h_sr = np.repeat(h_sr, n_sym, axis=1)
        h_rd = np.repeat(h_rd, n_sym, axis=1)

    cols = np.arange(n_sym)
    h1 = h_sr[best, cols][:, None]
    h2 = h_rd[best, cols][:, None]
    tx = np.sqrt(p_src[best])[:, None] * modulate_block(symbols, cfg)

    # noise variances may differ per branch, so scale per selected branch
    noise_scale_sr = np.sqrt(nv_sr[best] / 2.0)[:, None]
    y_relay = h1 * tx + noise_scale_sr * (
        rng.standard_normal(tx.shape) + 1j * rng.standard_normal(tx.shape)
    )

    amp = np.sqrt(p_rel[best] / (np.abs(h1[:, 0]) ** 2 * p_src[best] + nv_sr[best]))[:, None]
    noise_scale_rd = np.sqrt(nv_rd[best] / 2.0)[:, None]
    y_dest = h2 * amp * y_relay + noise_scale_rd * (
        rng.standard_normal(tx.shape) + 1j * rng.standard_normal(tx.shape)
    )

    detected, _ = detect_block(y_dest, cfg)
    decoded = symbols_to_bits(detected, cfg)
    bit_errors = _popcount_errors(symbols, detected)
    symbol_errors = int(np.sum(detected != symbols))
    return decoded, bit_errors, symbol_errors
