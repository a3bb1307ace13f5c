"""Deterministic performance engine for the two-hop relaying link.

Everything here is closed form or adaptive quadrature: per-branch end-to-end
SNR distributions, order statistics of the best branch, the single-integral
BER, its high-SNR closed form, diversity order, coverage probability and
throughput. Monte Carlo estimation lives in `montecarlo` and is used to
cross-validate these routines, never the other way around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, special

from .exceptions import ConvergenceError

__all__ = [
    "BranchParams",
    "AsymptoticTerms",
    "SystemKind",
    "ThroughputParams",
    "harmonic_number",
    "detection_constant",
    "q_function",
    "incomplete_gammas",
    "conditional_ber",
    "branch_cdf_exact",
    "branch_pdf",
    "max_cdf",
    "max_pdf",
    "analytical_ber",
    "single_link_ber",
    "single_link_coverage",
    "maclaurin_coefficient",
    "min_bound_cdf",
    "asymptotic_terms",
    "asymptotic_ber",
    "asymptotic_ber_detail",
    "diversity_order",
    "coverage_probability",
    "throughput",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class BranchParams:
    """Fading shapes and average SNRs of one source-relay-destination branch."""

    m_sr: float
    m_rd: float
    gbar_sr: float
    gbar_rd: float

    def __post_init__(self) -> None:
        if self.m_sr < 0.5 or self.m_rd < 0.5:
            raise ValueError("fading shape must be >= 0.5")
        if self.gbar_sr <= 0 or self.gbar_rd <= 0:
            raise ValueError("average SNR must be positive")

    @property
    def m_min(self) -> float:
        return min(self.m_sr, self.m_rd)


@dataclass(frozen=True)
class AsymptoticTerms:
    """Small-SNR expansion data driving the high-SNR closed form."""

    a_coeffs: tuple[float, ...]
    t_orders: tuple[float, ...]
    delta: float
    v_const: float


class SystemKind(str, Enum):
    CONVENTIONAL = "conventional"
    RELAY = "relay"


@dataclass(frozen=True)
class ThroughputParams:
    """Packet geometry and airtime model for throughput evaluation."""

    packet_symbols: int
    sf: int
    t_sam_s: float
    system_kind: SystemKind

    def __post_init__(self) -> None:
        if self.packet_symbols < 1:
            raise ValueError("packet_symbols must be >= 1")

    @property
    def symbol_duration_s(self) -> float:
        return (1 << self.sf) * self.t_sam_s

    @property
    def transmission_period_s(self) -> float:
        period = self.packet_symbols * self.symbol_duration_s
        if self.system_kind is SystemKind.RELAY:
            period *= 2.0  # two hops per packet regardless of relay count
        return period


# ---------------------------------------------------------------------------
# special functions


def harmonic_number(x: int) -> float:
    """Sum of 1/k for k = 1..x, by direct summation."""
    if int(x) != x or x < 1:
        raise ValueError("harmonic_number needs a positive integer")
    return math.fsum(1.0 / k for k in range(1, int(x) + 1))


_V_CACHE: dict[int, float] = {}


def detection_constant(sf: int) -> float:
    """Noise-peak constant sqrt(2 * H_{2**sf - 1}) of the detector."""
    v = _V_CACHE.get(sf)
    if v is None:
        v = math.sqrt(2.0 * harmonic_number((1 << sf) - 1))
        _V_CACHE[sf] = v
    return v


def q_function(x):
    """Gaussian tail probability via the complementary error function."""
    return 0.5 * special.erfc(np.asarray(x, dtype=np.float64) / _SQRT2)


def incomplete_gammas(a: float, x: float) -> tuple[float, float]:
    """Lower and upper incomplete gamma at (a, x); they sum to Gamma(a)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    whole = math.gamma(a)
    lower = float(special.gammainc(a, x)) * whole
    upper = float(special.gammaincc(a, x)) * whole
    return lower, upper


def conditional_ber(gamma, sf: int):
    """Bit error probability of the detector at instantaneous SNR gamma."""
    gamma = np.asarray(gamma, dtype=np.float64)
    if np.any(gamma < 0):
        raise ValueError("gamma must be nonnegative")
    v = detection_constant(sf)
    out = 0.5 * q_function(np.sqrt(2.0 * gamma) - v)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# per-branch end-to-end SNR distribution (numerical)


def _gamma_cdf(r, m, gbar):
    return special.gammainc(m, m * np.asarray(r, dtype=np.float64) / gbar)

def _gamma_sf(r, m, gbar):
    return special.gammaincc(m, m * np.asarray(r, dtype=np.float64) / gbar)

def _gamma_pdf(r, m, gbar):
    # log-space evaluation so huge arguments underflow to 0 instead of inf*0
    c = m / gbar
    r = np.asarray(r, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logpdf = m * np.log(c) + (m - 1.0) * np.log(r) - c * r - special.gammaln(m)
    return np.exp(logpdf)


def _quad(fn, a, b, *, epsabs: float, epsrel: float, limit: int = 200) -> float:
    out = integrate.quad(fn, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
    value, err = out[0], out[1]
    if len(out) > 3:
        # QUADPACK flagged trouble; accept only if the error estimate is still
        # comfortably inside what the caller asked for.
        if err > 100.0 * max(epsabs, epsrel * abs(value)):
            raise ConvergenceError(f"quadrature did not converge: {out[3]}")
    return value


def _gamma_extent(m: float, gbar: float) -> float:
    """Argument beyond which a Gamma(m, gbar/m) density or tail is negligible."""
    return gbar * (1.0 + 50.0 / math.sqrt(m)) + 50.0 * gbar / m


def _branch_tail_integral(r: float, p: BranchParams, kind: str, epsrel: float) -> float:
    """int_r^inf f_sr(x) * K_rd(r*(x+1)/(x-r)) dx for K in {cdf, sf}.

    Conditioning on the first hop, the branch SNR is below (above) r iff the
    second hop is below (above) the threshold r*(x+1)/(x-r). Integrated in
    log(x - r) with fixed geometric panels so the mass is found whatever the
    separation between r and the two hop scales.
    """
    m1, gb1 = p.m_sr, p.gbar_sr
    m2, gb2 = p.m_rd, p.gbar_rd
    second = _gamma_cdf if kind == "cdf" else _gamma_sf

    hi_off = max(_gamma_extent(m1, gb1) - r, 60.0 * gb1 / m1)
    t_hi = math.log(hi_off)
    # threshold drops to the second hop's scale at offset u = r(r+1)/extent
    u_on = r * (r + 1.0) / _gamma_extent(m2, gb2)
    t_lo = min(math.log(u_on) if u_on > 0 else t_hi, t_hi) - 55.0

    rr1 = r * (r + 1.0)

    def integrand(t):
        u = math.exp(t)
        thr = r + rr1 / u
        return float(_gamma_pdf(r + u, m1, gb1)) * float(second(thr, m2, gb2)) * u

    width = 5.0
    n_panels = max(2, math.ceil((t_hi - t_lo) / width))
    knots = np.linspace(t_lo, t_hi, n_panels + 1)
    per_panel_abs = 1e-14
    total = math.fsum(
        _quad(integrand, knots[i], knots[i + 1], epsabs=per_panel_abs, epsrel=epsrel)
        for i in range(n_panels)
    )
    return min(max(total, 0.0), 1.0)


def _branch_survival(r: float, p: BranchParams, epsrel: float = 1e-9) -> float:
    """Pr(end-to-end SNR > r) for one branch, by single quadrature."""
    if r <= 0:
        return 1.0
    return _branch_tail_integral(r, p, "sf", epsrel)


def branch_cdf_exact(r: float, p: BranchParams, *, _epsrel: float = 1e-9) -> float:
    """Pr(end-to-end SNR <= r) for one branch.

    Evaluated in whichever complementary form keeps relative accuracy:
    the direct form for small probabilities, the survival form near one.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0:
        return 0.0
    direct = float(_gamma_cdf(r, p.m_sr, p.gbar_sr)) + _branch_tail_integral(
        r, p, "cdf", _epsrel
    )
    if direct <= 0.5:
        return max(direct, 0.0)
    return 1.0 - _branch_survival(r, p, epsrel=_epsrel)


def branch_pdf(r: float, p: BranchParams) -> float:
    """Branch end-to-end SNR density by Richardson-extrapolated central
    differences of the exact CDF."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    h = max(1e-6, 1e-6 * r)
    if r < h:
        h = r if r > 0 else 1e-6

    def cdf(x):
        return branch_cdf_exact(x, p, _epsrel=1e-12) if x > 0 else 0.0

    if r - h <= 0:
        return (cdf(r + h) - cdf(max(r - h, 0.0))) / (r + h - max(r - h, 0.0))
    d_full = (cdf(r + h) - cdf(r - h)) / (2.0 * h)
    d_half = (cdf(r + h / 2.0) - cdf(r - h / 2.0)) / h
    return (4.0 * d_half - d_full) / 3.0


def max_cdf(r: float, branches: tuple[BranchParams, ...] | list[BranchParams]) -> float:
    """CDF of the best-branch SNR: product of branch CDFs."""
    if not branches:
        raise ValueError("need at least one branch")
    if r < 0:
        raise ValueError("r must be nonnegative")
    out = 1.0
    for p in branches:
        out *= branch_cdf_exact(r, p)
        if out == 0.0:
            return 0.0
    return out


def max_pdf(r: float, branches: tuple[BranchParams, ...] | list[BranchParams]) -> float:
    """Density of the best-branch SNR via the order-statistics expansion."""
    if not branches:
        raise ValueError("need at least one branch")
    if r < 0:
        raise ValueError("r must be nonnegative")
    cdfs = [branch_cdf_exact(r, p) for p in branches]
    total = 0.0
    for k, p in enumerate(branches):
        rest = 1.0
        for l, f in enumerate(cdfs):
            if l != k:
                rest *= f
        total += branch_pdf(r, p) * rest
    return total


# ---------------------------------------------------------------------------
# analytical BER


def _ber_from_snr_cdf(snr_cdf, sf: int) -> float:
    """0.5 * E[Q(sqrt(2*G) - V)] computed from the CDF of G.

    Integration by parts plus the substitution u = sqrt(2r) turn the SNR
    average into a Gaussian-weighted average of the CDF,
    0.5 * int phi(u - V) * F(u^2/2) du, which has no singularity and only
    needs CDF evaluations.
    """
    v = detection_constant(sf)

    def integrand(u):
        return _INV_SQRT_2PI * math.exp(-0.5 * (u - v) ** 2) * snr_cdf(0.5 * u * u)

    upper = v + 9.5  # Gaussian kernel below 1e-16 of its peak beyond here
    return 0.5 * _quad(integrand, 0.0, upper, epsabs=1e-14, epsrel=1e-8)


def analytical_ber(branches: tuple[BranchParams, ...] | list[BranchParams], sf: int) -> float:
    """Average BER of best-branch selection, as a single quadrature."""
    branches = tuple(branches)
    if not branches:
        raise ValueError("need at least one branch")

    def cdf(r):
        out = 1.0
        for p in branches:
            out *= branch_cdf_exact(r, p)
            if out == 0.0:
                return 0.0
        return out

    return _ber_from_snr_cdf(cdf, sf)


def single_link_ber(m: float, gbar: float, sf: int) -> float:
    """Average BER of a one-hop link with Gamma-distributed SNR."""
    if m < 0.5 or gbar <= 0:
        raise ValueError("invalid link parameters")
    return _ber_from_snr_cdf(lambda r: float(_gamma_cdf(r, m, gbar)), sf)


def single_link_coverage(psi: float, m: float, gbar: float) -> float:
    """Pr(SNR > psi) of a one-hop link with Gamma-distributed SNR."""
    if psi < 0:
        raise ValueError("psi must be nonnegative")
    return float(_gamma_sf(psi, m, gbar))


# ---------------------------------------------------------------------------
# high-SNR expansion and closed-form BER


def maclaurin_coefficient(p: BranchParams) -> tuple[float, float]:
    """Leading small-r coefficient and order of the min-bound branch density.

    The density of min(g1, g2) behaves like a * r**t with
    t = min(m_sr, m_rd) - 1; the side with the smaller shape dominates, and
    both sides add when the shapes tie.
    """
    t = p.m_min - 1.0
    term_sr = (p.m_sr / p.gbar_sr) ** p.m_sr / math.gamma(p.m_sr)
    term_rd = (p.m_rd / p.gbar_rd) ** p.m_rd / math.gamma(p.m_rd)
    if p.m_sr < p.m_rd:
        a = term_sr
    elif p.m_sr > p.m_rd:
        a = term_rd
    else:
        a = term_sr + term_rd
    return a, t


def min_bound_cdf(r: float, p: BranchParams) -> float:
    """Small-r polynomial CDF of the min-bound: a * r**(t+1) / min(m_sr, m_rd).

    Valid only as an r -> 0 approximation; callers own the regime check.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    a, t = maclaurin_coefficient(p)
    return a * r ** (t + 1.0) / p.m_min


def asymptotic_terms(
    branches: tuple[BranchParams, ...] | list[BranchParams], sf: int
) -> AsymptoticTerms:
    """Expansion data for the closed-form high-SNR BER."""
    branches = tuple(branches)
    if not branches:
        raise ValueError("need at least one branch")
    coeffs = []
    orders = []
    for p in branches:
        a, t = maclaurin_coefficient(p)
        coeffs.append(a)
        orders.append(t)
    delta = math.fsum(t + 1.0 for t in orders) - 1.0
    return AsymptoticTerms(
        a_coeffs=tuple(coeffs),
        t_orders=tuple(orders),
        delta=delta,
        v_const=detection_constant(sf),
    )


def _combining_coefficient(terms: AsymptoticTerms, form: str) -> float:
    prod_a = math.prod(terms.a_coeffs)
    mins = [t + 1.0 for t in terms.t_orders]
    partials = [
        math.prod(m for l, m in enumerate(mins) if l != k) for k in range(len(mins))
    ]
    if form == "branch-sum":
        # branch sum in the numerator, as the order-statistics expansion gives
        return math.fsum(prod_a / q for q in partials)
    if form == "denominator-sum":
        # alternative arrangement with the sum pooled in the denominator;
        # differs by N**2 for identical branches
        return prod_a / math.fsum(partials)
    raise ValueError(f"unknown coefficient form {form!r}")


def _gaussian_moment(j: int, v_const: float) -> float:
    """int_{-V}^{inf} exp(-x^2/2) x^j dx via incomplete gamma functions.

    Splitting at zero gives 2**(v-1) * ((-1)**j * lower(v, V^2/2) + Gamma(v))
    with v = (j+1)/2; the signed term is the finite piece over [-V, 0].
    """
    order = (j + 1) / 2.0
    lower, upper = incomplete_gammas(order, v_const * v_const / 2.0)
    whole = lower + upper
    return 2.0 ** (order - 1.0) * ((-1.0) ** j * lower + whole)


def _tail_weight_integral(delta: float, v_const: float) -> tuple[float, bool]:
    """int_0^inf exp(-(sqrt(2r) - V)^2 / 2) * r**delta dr.

    Closed form by binomial expansion when 2*delta + 1 is a nonnegative
    integer, otherwise direct quadrature of the smooth substituted integrand.
    """
    n_float = 2.0 * delta + 1.0
    n = int(round(n_float))
    if abs(n_float - n) < 1e-9 and n >= 0:
        total = math.fsum(
            math.comb(n, j) * v_const ** (n - j) * _gaussian_moment(j, v_const)
            for j in range(n + 1)
        )
        return 2.0 ** (-delta) * total, True

    def integrand(u):
        return math.exp(-0.5 * (u - v_const) ** 2) * u**n_float

    value = 2.0 ** (-delta) * _quad(integrand, 0.0, np.inf, epsabs=1e-300, epsrel=1e-10)
    return value, False


def asymptotic_ber_detail(
    branches: tuple[BranchParams, ...] | list[BranchParams],
    sf: int,
    *,
    coefficient_form: str = "branch-sum",
) -> tuple[float, str]:
    """High-SNR BER approximation plus the evaluation method used."""
    terms = asymptotic_terms(branches, sf)
    coeff = _combining_coefficient(terms, coefficient_form)
    integral, closed = _tail_weight_integral(terms.delta, terms.v_const)
    method = "closed-form" if closed else "quadrature"
    return 0.25 * coeff * integral, method


def asymptotic_ber(
    branches: tuple[BranchParams, ...] | list[BranchParams],
    sf: int,
    *,
    coefficient_form: str = "branch-sum",
) -> float:
    """Closed-form high-SNR BER of best-branch selection."""
    value, _ = asymptotic_ber_detail(branches, sf, coefficient_form=coefficient_form)
    return value


def diversity_order(branches: tuple[BranchParams, ...] | list[BranchParams]) -> float:
    """Sum over branches of the more severely faded hop's shape."""
    branches = tuple(branches)
    if not branches:
        raise ValueError("need at least one branch")
    return math.fsum(p.m_min for p in branches)


# ---------------------------------------------------------------------------
# coverage and throughput


def coverage_probability(
    psi: float, branches: tuple[BranchParams, ...] | list[BranchParams]
) -> float:
    """Pr(best-branch SNR > psi); complements the best-branch CDF.

    Computed from branch survivals so small coverage values keep relative
    accuracy.
    """
    branches = tuple(branches)
    if not branches:
        raise ValueError("need at least one branch")
    if psi < 0:
        raise ValueError("psi must be nonnegative")
    if psi == 0:
        return 1.0
    log_miss = 0.0
    for p in branches:
        s = _branch_survival(psi, p)
        if s >= 1.0:
            return 1.0
        log_miss += math.log1p(-s)
    return -math.expm1(log_miss)


def throughput(pb: float, params: ThroughputParams) -> float:
    """Correct bits per second given the bit error probability."""
    if not 0.0 <= pb <= 0.5:
        raise ValueError("pb must lie in [0, 0.5]")
    pe = min(2.0 * pb, 1.0)
    per = 1.0 - (1.0 - pe) ** params.packet_symbols
    bits = params.packet_symbols * params.sf
    return bits * (1.0 - per) / params.transmission_period_s
