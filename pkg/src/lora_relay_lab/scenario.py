"""Flat key-value scenario files.

One `key = value` pair per line, `#` comments, and `[l]`-indexed per-relay
overrides (zero-based), e.g. `m_sr[1] = 2`. Scalars broadcast to all relays.
Unknown keys are rejected. Defaults reproduce the reference setup: SF 7,
125 kHz, 14 dBm total power split equally, midpoint relays on a 2 km path,
Rayleigh fading, path loss exponent 2.65.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .channel import LinkSpec
from .analysis import BranchParams
from .exceptions import ScenarioError
from .lora_phy import ModemConfig
from .montecarlo import EstimationMode, SimScenario
from .relay_link import FadingMode, RelayTopology

__all__ = ["ScenarioConfig", "parse_scenario_text", "parse_scenario_file", "DEFAULT_SEED", "DEFAULT_TRIALS"]

DEFAULT_SEED = 0
DEFAULT_TRIALS = 100_000

_SCALAR_KEYS = {
    "sf": int,
    "bandwidth_hz": float,
    "n_relays": int,
    "alpha": float,
    "total_power_dbm": float,
    "power_split": float,
    "noise_psd_w": float,
    "packet_symbols": int,
    "fading_mode": str,
    "mode": str,
    "trials": int,
    "seed": int,
}
_ARRAY_KEYS = {"m_sr": float, "m_rd": float, "d_sr_m": float, "d_rd_m": float}

_LINE = re.compile(r"^(?P<key>[a-z_]+)(?:\[(?P<idx>\d+)\])?\s*=\s*(?P<value>\S.*?)\s*$")


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario: geometry, fading profile, powers and run controls."""

    sf: int = 7
    bandwidth_hz: float = 125e3
    n_relays: int = 1
    alpha: float = 2.65
    total_power_dbm: float = 14.0
    power_split: float = 0.5
    m_sr: tuple[float, ...] = (1.0,)
    m_rd: tuple[float, ...] = (1.0,)
    d_sr_m: tuple[float, ...] = (1000.0,)
    d_rd_m: tuple[float, ...] = (1000.0,)
    noise_psd_w: float | None = None
    packet_symbols: int = 20
    fading_mode: FadingMode = FadingMode.PER_PACKET
    mode: EstimationMode = EstimationMode.SNR_DOMAIN
    trials: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.n_relays < 1:
            raise ScenarioError("n_relays must be >= 1")
        for name in ("m_sr", "m_rd", "d_sr_m", "d_rd_m"):
            if len(getattr(self, name)) != self.n_relays:
                raise ScenarioError(f"{name} must define all {self.n_relays} relays")
        if not 0.0 < self.power_split < 1.0:
            raise ScenarioError("power_split must lie strictly between 0 and 1")

    @property
    def total_power_w(self) -> float:
        return 10.0 ** ((self.total_power_dbm - 30.0) / 10.0)

    @property
    def p_source_w(self) -> float:
        return self.power_split * self.total_power_w

    @property
    def p_relay_w(self) -> float:
        return (1.0 - self.power_split) * self.total_power_w

    @property
    def modem(self) -> ModemConfig:
        return ModemConfig(sf=self.sf, bandwidth_hz=self.bandwidth_hz)

    def noise_for_ptn0_db(self, ptn0_db: float) -> float:
        return self.total_power_w / 10.0 ** (ptn0_db / 10.0)

    def _resolve_noise(self, ptn0_db: float | None) -> float:
        if ptn0_db is not None:
            return self.noise_for_ptn0_db(ptn0_db)
        if self.noise_psd_w is not None:
            return self.noise_psd_w
        raise ScenarioError("no noise level: set noise_psd_w or supply a P_T/N0 point")

    def topology(self, ptn0_db: float | None = None) -> RelayTopology:
        noise = self._resolve_noise(ptn0_db)
        try:
            source = tuple(
                LinkSpec(
                    m_fading=self.m_sr[l],
                    distance_m=self.d_sr_m[l],
                    tx_power_w=self.p_source_w,
                    path_loss_exp=self.alpha,
                    noise_psd_w=noise,
                )
                for l in range(self.n_relays)
            )
            dest = tuple(
                LinkSpec(
                    m_fading=self.m_rd[l],
                    distance_m=self.d_rd_m[l],
                    tx_power_w=self.p_relay_w,
                    path_loss_exp=self.alpha,
                    noise_psd_w=noise,
                )
                for l in range(self.n_relays)
            )
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
        return RelayTopology(source_links=source, dest_links=dest, sf=self.sf)

    def sim_scenario(self, ptn0_db: float | None = None) -> SimScenario:
        return SimScenario(
            topology=self.topology(ptn0_db),
            modem=self.modem,
            packet_symbols=self.packet_symbols,
            fading_mode=self.fading_mode,
            mode=self.mode,
        )

    def branch_params(self, ptn0_db: float) -> tuple[BranchParams, ...]:
        return self.topology(ptn0_db).branch_params()

    def with_n_relays(self, n: int) -> "ScenarioConfig":
        """Same scenario with the first n relays, or the first relay replicated
        when more branches are requested than defined (requires homogeneity)."""
        if n < 1:
            raise ScenarioError("n_relays must be >= 1")
        if n <= self.n_relays:
            take = lambda t: t[:n]
        else:
            uniform = all(
                len(set(getattr(self, name))) == 1
                for name in ("m_sr", "m_rd", "d_sr_m", "d_rd_m")
            )
            if not uniform:
                raise ScenarioError(
                    f"cannot extend a heterogeneous {self.n_relays}-relay scenario to {n} relays"
                )
            take = lambda t: (t[0],) * n
        return replace(
            self,
            n_relays=n,
            m_sr=take(self.m_sr),
            m_rd=take(self.m_rd),
            d_sr_m=take(self.d_sr_m),
            d_rd_m=take(self.d_rd_m),
        )

    def conventional_link(self, ptn0_db: float) -> tuple[float, float]:
        """(fading shape, average SNR) of the one-hop baseline: full total
        power over the straight-line source-destination distance."""
        d_sd = self.d_sr_m[0] + self.d_rd_m[0]
        gbar = (
            self.total_power_w
            * d_sd ** (-self.alpha)
            * (1 << self.sf)
            / self.noise_for_ptn0_db(ptn0_db)
        )
        return self.m_sr[0], gbar


def _convert(key: str, raw: str, caster):
    try:
        if caster is int:
            value = int(raw)
        elif caster is float:
            value = float(raw)
        else:
            value = raw
    except ValueError as exc:
        raise ScenarioError(f"bad value for {key!r}: {raw!r}") from exc
    return value


def parse_scenario_text(text: str) -> ScenarioConfig:
    scalars: dict = {}
    broadcast: dict[str, float] = {}
    overrides: dict[str, dict[int, float]] = {k: {} for k in _ARRAY_KEYS}

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        match = _LINE.match(stripped)
        if match is None:
            raise ScenarioError(f"line {lineno}: cannot parse {line.strip()!r}")
        key, idx, raw = match.group("key"), match.group("idx"), match.group("value")
        if key in _ARRAY_KEYS:
            value = _convert(key, raw, _ARRAY_KEYS[key])
            if idx is None:
                broadcast[key] = value
            else:
                overrides[key][int(idx)] = value
        elif key in _SCALAR_KEYS:
            if idx is not None:
                raise ScenarioError(f"line {lineno}: {key!r} takes no index")
            scalars[key] = _convert(key, raw, _SCALAR_KEYS[key])
        else:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")

    defaults = ScenarioConfig()
    n_relays = scalars.get("n_relays", defaults.n_relays)
    if n_relays < 1:
        raise ScenarioError("n_relays must be >= 1")

    arrays: dict[str, tuple[float, ...]] = {}
    for key in _ARRAY_KEYS:
        base = broadcast.get(key, getattr(defaults, key)[0])
        values = [base] * n_relays
        for idx, value in overrides[key].items():
            if idx >= n_relays:
                raise ScenarioError(f"{key}[{idx}] out of range for n_relays={n_relays}")
            values[idx] = value
        arrays[key] = tuple(values)

    if "fading_mode" in scalars:
        try:
            scalars["fading_mode"] = FadingMode(scalars["fading_mode"])
        except ValueError as exc:
            raise ScenarioError(f"unknown fading_mode {scalars['fading_mode']!r}") from exc
    if "mode" in scalars:
        try:
            scalars["mode"] = EstimationMode(scalars["mode"])
        except ValueError as exc:
            raise ScenarioError(f"unknown mode {scalars['mode']!r}") from exc

    scalars["n_relays"] = n_relays
    try:
        return ScenarioConfig(**scalars, **arrays)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def parse_scenario_file(path) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario_text(text)
