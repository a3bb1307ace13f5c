"""Monte Carlo estimation harness with deterministic, reshard-stable seeding.

Two estimation modes: full waveform simulation (slow, assumption free) and
SNR-domain sampling that applies the conditional BER to draws of the selected
branch SNR (fast, and exactly the quantity the analytic integral computes).

Trials are split into fixed-size blocks; every random stream is keyed by the
(seed, block or packet index), so results are bit-identical for any shard
count and any worker count. Block partial sums merge with math.fsum, which is
order independent.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .analysis import conditional_ber
from .lora_phy import ModemConfig
from .relay_link import FadingMode, RelayTopology, simulate_packet

__all__ = [
    "EstimationMode",
    "SimScenario",
    "EstimateResult",
    "CurvePoint",
    "estimate_ber",
    "estimate_coverage",
    "estimate_per_and_throughput",
    "sweep",
]

BLOCK_TRIALS = 1 << 16
_SEED_MASK = (1 << 63) - 1
THREADS_ENV = "LORA_RELAY_LAB_THREADS"


class EstimationMode(str, Enum):
    WAVEFORM = "waveform"
    SNR_DOMAIN = "snr"


@dataclass(frozen=True)
class SimScenario:
    """One simulation setup: topology, modem, packet shape and mode switches."""

    topology: RelayTopology
    modem: ModemConfig
    packet_symbols: int = 20
    fading_mode: FadingMode = FadingMode.PER_PACKET
    mode: EstimationMode = EstimationMode.SNR_DOMAIN

    def __post_init__(self) -> None:
        if self.topology.sf != self.modem.sf:
            raise ValueError("topology and modem disagree on the spreading factor")
        if self.packet_symbols < 1:
            raise ValueError("packet_symbols must be >= 1")

    def at_total_snr_db(self, ptn0_db: float) -> "SimScenario":
        return SimScenario(
            topology=self.topology.scaled_to_total_snr_db(ptn0_db),
            modem=self.modem,
            packet_symbols=self.packet_symbols,
            fading_mode=self.fading_mode,
            mode=self.mode,
        )


@dataclass(frozen=True)
class EstimateResult:
    """Point estimate with a 95% confidence interval.

    errors_observed is the raw error count for counting estimators and None
    for smoothed (expectation) estimators, which observe no discrete errors.
    """

    point_estimate: float
    stderr: float
    ci95_low: float
    ci95_high: float
    trials: int
    errors_observed: int | None
    seed: int


@dataclass(frozen=True)
class CurvePoint:
    """One sweep abscissa with its Monte Carlo and analytic values."""

    abscissa: float
    mc_value: float
    mc_ci95_low: float
    mc_ci95_high: float
    analytical: float
    asymptotic: float | None
    trials: int
    seed: int


# ---------------------------------------------------------------------------
# deterministic streams and block execution


def _stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & _SEED_MASK, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _blocks(trials: int, block_size: int = BLOCK_TRIALS) -> list[tuple[int, int, int]]:
    out = []
    start = 0
    idx = 0
    while start < trials:
        size = min(block_size, trials - start)
        out.append((idx, start, size))
        idx += 1
        start += size
    return out


def _worker_cap() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _run_slice(payload):
    job, blocks = payload
    return [(idx, job(idx, start, size)) for idx, start, size in blocks]


def _run_blocks(job, trials: int, shards: int, block_size: int = BLOCK_TRIALS) -> list[tuple]:
    """Run a block job over all trials; the result is a list in block order
    and is independent of shards and worker count."""
    blocks = _blocks(trials, block_size)
    if shards <= 1 or len(blocks) <= 1:
        return [job(idx, start, size) for idx, start, size in blocks]
    slices = [blocks[s::shards] for s in range(shards) if blocks[s::shards]]
    workers = min(len(slices), _worker_cap())
    if workers <= 1:
        parts = [_run_slice((job, sl)) for sl in slices]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_slice, [(job, sl) for sl in slices]))
    indexed = sorted((idx, res) for part in parts for idx, res in part)
    return [res for _, res in indexed]


def _merge_columns(results: list[tuple]) -> list:
    """Componentwise merge of per-block tuples: exact for ints, fsum for floats."""
    merged = []
    for col in range(len(results[0])):
        values = [res[col] for res in results]
        if all(isinstance(v, (int, np.integer)) for v in values):
            merged.append(int(sum(values)))
        else:
            merged.append(math.fsum(float(v) for v in values))
    return merged


# ---------------------------------------------------------------------------
# block jobs (module level so process pools can pickle them)


def _branch_tuples(topology: RelayTopology) -> tuple[tuple[float, float, float, float], ...]:
    return tuple(
        (p.m_sr, p.gbar_sr, p.m_rd, p.gbar_rd) for p in topology.branch_params()
    )


def _draw_gamma_max(branches, seed: int, block_idx: int, n: int) -> np.ndarray:
    """Best-branch SNR draws; branch l uses its own stream so different relay
    counts share the draws of their common branches."""
    gmax = None
    for l, (m1, gb1, m2, gb2) in enumerate(branches):
        gen = _stream(seed, block_idx, l)
        g1 = gen.gamma(m1, gb1 / m1, size=n)
        g2 = gen.gamma(m2, gb2 / m2, size=n)
        gt = g1 * g2 / (g1 + g2 + 1.0)
        gmax = gt if gmax is None else np.maximum(gmax, gt)
    return gmax


@dataclass(frozen=True)
class _SnrBerJob:
    branches: tuple
    sf: int
    seed: int

    def __call__(self, idx: int, start: int, size: int):
        x = conditional_ber(_draw_gamma_max(self.branches, self.seed, idx, size), self.sf)
        return float(np.sum(x)), float(np.sum(x * x))


@dataclass(frozen=True)
class _CoverageJob:
    branches: tuple
    psi_linear: float
    seed: int

    def __call__(self, idx: int, start: int, size: int):
        gmax = _draw_gamma_max(self.branches, self.seed, idx, size)
        return (int(np.sum(gmax > self.psi_linear)),)


@dataclass(frozen=True)
class _SnrPerJob:
    branches: tuple
    sf: int
    packet_symbols: int
    per_symbol: bool
    seed: int

    def __call__(self, idx: int, start: int, size: int):
        n_draws = size * self.packet_symbols if self.per_symbol else size
        gmax = _draw_gamma_max(self.branches, self.seed, idx, n_draws)
        pe = np.minimum(2.0 * conditional_ber(gmax, self.sf), 1.0)
        if self.per_symbol:
            ok = (1.0 - pe).reshape(size, self.packet_symbols).prod(axis=1)
        else:
            ok = (1.0 - pe) ** self.packet_symbols
        per = 1.0 - ok
        return float(np.sum(per)), float(np.sum(per * per))


@dataclass(frozen=True)
class _WaveformJob:
    topology: RelayTopology
    packet_symbols: int
    fading_mode: FadingMode
    seed: int

    def __call__(self, idx: int, start: int, size: int):
        sf = self.topology.sf
        bits_per_packet = self.packet_symbols * sf
        bit_errors = 0
        symbol_errors = 0
        packets_in_error = 0
        rate_sum = 0.0
        rate_sq_sum = 0.0
        for i in range(size):
            packet = start + i  # streams keyed by global packet index
            payload = _stream(self.seed, packet, 0).integers(0, 2, size=bits_per_packet)
            chan_rng = _stream(self.seed, packet, 1)
            _, berr, serr = simulate_packet(
                self.topology, payload, chan_rng, fading_mode=self.fading_mode
            )
            bit_errors += berr
            symbol_errors += serr
            packets_in_error += 1 if serr else 0
            rate = berr / bits_per_packet
            rate_sum += rate
            rate_sq_sum += rate * rate
        return bit_errors, symbol_errors, packets_in_error, rate_sum, rate_sq_sum, size


# ---------------------------------------------------------------------------
# estimators


def _proportion_result(count: int, n: int, seed: int) -> EstimateResult:
    p = count / n
    stderr = math.sqrt(p * (1.0 - p) / n)
    return EstimateResult(
        point_estimate=p,
        stderr=stderr,
        ci95_low=max(0.0, p - 1.96 * stderr),
        ci95_high=min(1.0, p + 1.96 * stderr),
        trials=n,
        errors_observed=count,
        seed=seed,
    )


def _smoothed_result(total: float, total_sq: float, n: int, seed: int) -> EstimateResult:
    mean = total / n
    var = max(0.0, (total_sq - n * mean * mean) / (n - 1)) if n > 1 else 0.0
    stderr = math.sqrt(var / n)
    return EstimateResult(
        point_estimate=mean,
        stderr=stderr,
        ci95_low=max(0.0, mean - 1.96 * stderr),
        ci95_high=mean + 1.96 * stderr,
        trials=n,
        errors_observed=None,
        seed=seed,
    )


def estimate_ber(
    scenario: SimScenario, snr_db: float, trials: int, seed: int, shards: int = 1
) -> EstimateResult:
    """BER estimate at total-power-to-noise ratio snr_db.

    Waveform mode counts bit errors over trials packets; its standard error
    treats packets, not bits, as the independent unit (bit errors cluster
    within a faded packet). SNR-domain mode averages the conditional BER over
    best-branch SNR draws, a smoothed estimator of the same expectation with
    strictly lower variance.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    scaled = scenario.at_total_snr_db(snr_db)
    if scenario.mode is EstimationMode.WAVEFORM:
        job = _WaveformJob(
            topology=scaled.topology,
            packet_symbols=scenario.packet_symbols,
            fading_mode=scenario.fading_mode,
            seed=seed,
        )
        block = max(1, BLOCK_TRIALS // max(1, scenario.packet_symbols * 8))
        merged = _merge_columns(_run_blocks(job, trials, shards, block_size=block))
        bit_errors, _, _, rate_sum, rate_sq_sum, packets = (
            merged[0], merged[1], merged[2], merged[3], merged[4], merged[5],
        )
        bits = packets * scenario.packet_symbols * scenario.modem.sf
        p = bit_errors / bits
        mean_rate = rate_sum / packets
        var = (
            max(0.0, (rate_sq_sum - packets * mean_rate * mean_rate) / (packets - 1))
            if packets > 1
            else 0.0
        )
        stderr = math.sqrt(var / packets)
        return EstimateResult(
            point_estimate=p,
            stderr=stderr,
            ci95_low=max(0.0, p - 1.96 * stderr),
            ci95_high=min(1.0, p + 1.96 * stderr),
            trials=packets,
            errors_observed=int(bit_errors),
            seed=seed,
        )
    job = _SnrBerJob(branches=_branch_tuples(scaled.topology), sf=scenario.modem.sf, seed=seed)
    total, total_sq = _merge_columns(_run_blocks(job, trials, shards))
    return _smoothed_result(total, total_sq, trials, seed)


def estimate_coverage(
    scenario: SimScenario, psi_db: float, trials: int, seed: int, shards: int = 1
) -> EstimateResult:
    """Fraction of best-branch SNR draws above the threshold psi_db."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    psi_linear = 0.0 if psi_db == -math.inf else 10.0 ** (psi_db / 10.0)
    job = _CoverageJob(
        branches=_branch_tuples(scenario.topology), psi_linear=psi_linear, seed=seed
    )
    (count,) = _merge_columns(_run_blocks(job, trials, shards))
    return _proportion_result(count, trials, seed)


def estimate_per_and_throughput(
    scenario: SimScenario, snr_db: float, trials: int, seed: int, shards: int = 1
) -> tuple[EstimateResult, float]:
    """Packet error rate estimate plus the implied relay throughput in bit/s."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    scaled = scenario.at_total_snr_db(snr_db)
    sf = scenario.modem.sf
    if scenario.mode is EstimationMode.WAVEFORM:
        job = _WaveformJob(
            topology=scaled.topology,
            packet_symbols=scenario.packet_symbols,
            fading_mode=scenario.fading_mode,
            seed=seed,
        )
        block = max(1, BLOCK_TRIALS // max(1, scenario.packet_symbols * 8))
        merged = _merge_columns(_run_blocks(job, trials, shards, block_size=block))
        per = _proportion_result(merged[2], merged[5], seed)
    else:
        job = _SnrPerJob(
            branches=_branch_tuples(scaled.topology),
            sf=sf,
            packet_symbols=scenario.packet_symbols,
            per_symbol=scenario.fading_mode is FadingMode.PER_SYMBOL,
            seed=seed,
        )
        total, total_sq = _merge_columns(_run_blocks(job, trials, shards))
        per = _smoothed_result(total, total_sq, trials, seed)
    # two hops per packet regardless of the relay count
    period = 2.0 * scenario.packet_symbols * scenario.modem.symbol_duration_s
    throughput_bps = (
        scenario.packet_symbols * sf * (1.0 - per.point_estimate) / period
    )
    return per, throughput_bps


def sweep(
    scenario: SimScenario,
    abscissa,
    estimator,
    trials: int,
    seed: int,
    shards: int = 1,
    analytics=None,
) -> list[CurvePoint]:
    """Run an estimator across a grid with per-point derived seeds.

    The point at index i runs with seed ^ i, so single-point runs and sweep
    points coincide. `analytics(x)` may supply (analytical, asymptotic)
    values to attach to each CurvePoint.
    """
    abscissa = list(abscissa)
    if not abscissa:
        raise ValueError("abscissa grid is empty")
    points = []
    for i, x in enumerate(abscissa):
        point_seed = (int(seed) ^ i) & _SEED_MASK
        est = estimator(scenario, x, trials, point_seed, shards)
        analytical, asymptotic = (math.nan, None) if analytics is None else analytics(x)
        points.append(
            CurvePoint(
                abscissa=float(x),
                mc_value=est.point_estimate,
                mc_ci95_low=est.ci95_low,
                mc_ci95_high=est.ci95_high,
                analytical=analytical,
                asymptotic=asymptotic,
                trials=est.trials,
                seed=point_seed,
            )
        )
    return points
