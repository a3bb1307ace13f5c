import math

import numpy as np
import pytest
from conftest import gauss_tail_oracle
from scipy import integrate, special

from lora_relay_lab import (
    BranchParams,
    SystemKind,
    ThroughputParams,
    analytical_ber,
    asymptotic_ber,
    asymptotic_ber_detail,
    asymptotic_terms,
    branch_cdf_exact,
    conditional_ber,
    coverage_probability,
    detection_constant,
    diversity_order,
    harmonic_number,
    incomplete_gammas,
    maclaurin_coefficient,
    max_cdf,
    max_pdf,
    min_bound_cdf,
    q_function,
    single_link_ber,
    single_link_coverage,
    throughput,
)

RAYLEIGH_10 = BranchParams(1.0, 1.0, 10.0, 10.0)


# ---------------------------------------------------------------------------
# special functions


def test_harmonic_number_values():
    assert harmonic_number(1) == 1.0
    assert harmonic_number(3) == pytest.approx(11 / 6, rel=1e-15)
    direct = math.fsum(1.0 / k for k in range(1, 128))
    assert harmonic_number(127) == pytest.approx(direct, rel=1e-15)
    # asymptotic cross-check: ln(x) + euler-mascheroni + 1/(2x)
    assert harmonic_number(127) == pytest.approx(
        math.log(127) + 0.5772156649015329 + 1 / 254, abs=1e-5
    )
    with pytest.raises(ValueError):
        harmonic_number(0)


def test_q_function_values():
    assert q_function(0.0) == pytest.approx(0.5, rel=1e-15)
    rng = np.random.default_rng(0)
    for x in rng.normal(0, 2, 20):
        assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-14)
    assert q_function(3.0) == pytest.approx(gauss_tail_oracle(3.0), rel=1e-10)
    assert q_function(3.0) == pytest.approx(1.3499e-3, rel=1e-4)


def test_incomplete_gammas_values():
    for x in (0.3, 1.0, 4.2):
        lower, _ = incomplete_gammas(1.0, x)
        assert lower == pytest.approx(1 - math.exp(-x), rel=1e-12)
    lower, upper = incomplete_gammas(3.7, 0.0)
    assert lower == 0.0
    assert upper == pytest.approx(math.gamma(3.7), rel=1e-14)
    # quadrature oracle of the defining integrals
    low_q, _ = integrate.quad(lambda t: math.exp(-t) * t**1.5, 0, 3.0, epsabs=1e-13)
    up_q, _ = integrate.quad(lambda t: math.exp(-t) * t**1.5, 3.0, np.inf, epsabs=1e-13)
    lower, upper = incomplete_gammas(2.5, 3.0)
    assert lower == pytest.approx(low_q, rel=1e-9)
    assert upper == pytest.approx(up_q, rel=1e-9)
    with pytest.raises(ValueError):
        incomplete_gammas(0.0, 1.0)
    with pytest.raises(ValueError):
        incomplete_gammas(1.0, -1.0)


def test_incomplete_gammas_complementarity_grid():
    for a in np.geomspace(0.5, 50.0, 12):
        for x in [0.0, 0.1, 1.0, 10.0, 60.0, 200.0]:
            lower, upper = incomplete_gammas(float(a), x)
            assert lower + upper == pytest.approx(math.gamma(float(a)), rel=1e-10)


def test_conditional_ber():
    h127 = harmonic_number(127)
    assert conditional_ber(h127, 7) == pytest.approx(0.25, rel=1e-12)
    v = detection_constant(7)
    assert conditional_ber(0.0, 7) == pytest.approx(0.5 * gauss_tail_oracle(-v), rel=1e-9)
    assert conditional_ber(0.0, 7) == pytest.approx(0.4995, abs=5e-4)
    grid = np.linspace(0, 60, 100)
    values = conditional_ber(grid, 7)
    assert np.all(np.diff(values) <= 0)
    with pytest.raises(ValueError):
        conditional_ber(-0.5, 7)


# ---------------------------------------------------------------------------
# branch distribution


def test_branch_cdf_endpoints():
    assert branch_cdf_exact(0.0, RAYLEIGH_10) == 0.0
    assert branch_cdf_exact(1e6 * 10.0, RAYLEIGH_10) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        branch_cdf_exact(-1.0, RAYLEIGH_10)


def test_branch_cdf_against_monte_carlo():
    rng = np.random.default_rng(1)
    n = 10_000_000
    g1 = rng.gamma(1.0, 10.0, n)
    g2 = rng.gamma(1.0, 10.0, n)
    emp = np.mean(g1 * g2 / (g1 + g2 + 1.0) <= 2.0)
    se = math.sqrt(emp * (1 - emp) / n)
    assert branch_cdf_exact(2.0, RAYLEIGH_10) == pytest.approx(emp, abs=3 * se)


def test_branch_cdf_against_rayleigh_closed_form():
    # independent closed form: S(r) = exp(-r(1/g1+1/g2)) * b*K1(b),
    # b = 2*sqrt(r(r+1)/(g1*g2))
    for r in (0.05, 0.9, 4.0, 25.0):
        for gb1, gb2 in [(10.0, 10.0), (5.0, 40.0)]:
            b = 2.0 * math.sqrt(r * (r + 1.0) / (gb1 * gb2))
            closed = 1.0 - math.exp(-r * (1 / gb1 + 1 / gb2)) * b * special.kv(1, b)
            p = BranchParams(1.0, 1.0, gb1, gb2)
            assert branch_cdf_exact(r, p) == pytest.approx(closed, rel=1e-9, abs=1e-12)


def test_branch_cdf_monotone_and_bounded_by_min_cdf():
    p = BranchParams(2.0, 1.5, 30.0, 12.0)
    grid = np.geomspace(0.01, 300.0, 25)
    values = [branch_cdf_exact(float(r), p) for r in grid]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
    for r, v in zip(grid, values):
        s_min = float(
            special.gammaincc(p.m_sr, p.m_sr * r / p.gbar_sr)
            * special.gammaincc(p.m_rd, p.m_rd * r / p.gbar_rd)
        )
        assert v >= (1.0 - s_min) - 1e-9  # branch SNR never exceeds min of the hops


def test_max_cdf_and_pdf_structure():
    p = RAYLEIGH_10
    assert max_cdf(3.0, [p]) == pytest.approx(branch_cdf_exact(3.0, p), rel=1e-12)
    assert max_cdf(3.0, [p, p, p]) == pytest.approx(branch_cdf_exact(3.0, p) ** 3, rel=1e-11)
    with pytest.raises(ValueError):
        max_cdf(1.0, [])


def test_max_pdf_integrates_to_one():
    branches = [BranchParams(1.0, 1.0, 8.0, 8.0), BranchParams(2.0, 1.0, 12.0, 6.0)]
    total, _ = integrate.quad(
        lambda r: max_pdf(r, branches), 0.0, np.inf, limit=300
    )
    assert total == pytest.approx(1.0, abs=1e-4)


# ---------------------------------------------------------------------------
# BER integrals


def test_analytical_ber_degenerate_limit():
    v = detection_constant(7)
    tiny = [BranchParams(1.0, 1.0, 1e-9, 1e-9)]
    assert analytical_ber(tiny, 7) == pytest.approx(0.5 * q_function(-v), rel=1e-6)


def test_analytical_ber_bounds_and_monotonicity():
    v = detection_constant(7)
    cap = 0.5 * float(q_function(-v))
    weak = [BranchParams(1.0, 1.0, 50.0, 50.0)]
    strong = [BranchParams(1.0, 1.0, 500.0, 500.0)]
    b_weak, b_strong = analytical_ber(weak, 7), analytical_ber(strong, 7)
    assert 0.0 < b_strong < b_weak < cap
    # adding a branch cannot raise the error rate
    assert analytical_ber(weak * 2, 7) < b_weak


def test_analytical_ber_matches_monte_carlo():
    gbar = 1000.0
    branches = [BranchParams(1.0, 1.0, gbar, gbar)] * 2
    rng = np.random.default_rng(2)
    n = 4_000_000
    g1 = rng.gamma(1.0, gbar, (2, n))
    g2 = rng.gamma(1.0, gbar, (2, n))
    gmax = (g1 * g2 / (g1 + g2 + 1.0)).max(axis=0)
    samples = conditional_ber(gmax, 7)
    mc = samples.mean()
    se = samples.std(ddof=1) / math.sqrt(n)
    assert analytical_ber(branches, 7) == pytest.approx(mc, abs=3 * se)


def test_single_link_ber_consistency():
    # one hop with a huge second hop behaves like the single-link average
    gbar = 300.0
    one_hop = single_link_ber(1.0, gbar, 7)
    relay_like = analytical_ber([BranchParams(1.0, 1.0, gbar, 1e9 * gbar)], 7)
    assert relay_like == pytest.approx(one_hop, rel=1e-3)


# ---------------------------------------------------------------------------
# high-SNR expansion


def test_maclaurin_coefficient_cases():
    a, t = maclaurin_coefficient(BranchParams(1.0, 1.0, 10.0, 10.0))
    assert (a, t) == (pytest.approx(0.2), 0.0)
    a, t = maclaurin_coefficient(BranchParams(1.0, 2.0, 5.0, 99.0))
    assert (a, t) == (pytest.approx(0.2), 0.0)
    a, t = maclaurin_coefficient(BranchParams(3.0, 2.0, 99.0, 7.0))
    assert a == pytest.approx((2.0 / 7.0) ** 2 / math.gamma(2.0), rel=1e-12)
    assert t == 1.0


def test_maclaurin_matches_small_r_density():
    # oracle: the min-of-hops density evaluated from Gamma pdfs and tails
    def min_pdf(r, p):
        f1 = special.gamma(p.m_sr) ** -1 * (p.m_sr / p.gbar_sr) ** p.m_sr * r ** (
            p.m_sr - 1
        ) * math.exp(-p.m_sr * r / p.gbar_sr)
        f2 = special.gamma(p.m_rd) ** -1 * (p.m_rd / p.gbar_rd) ** p.m_rd * r ** (
            p.m_rd - 1
        ) * math.exp(-p.m_rd * r / p.gbar_rd)
        s1 = float(special.gammaincc(p.m_sr, p.m_sr * r / p.gbar_sr))
        s2 = float(special.gammaincc(p.m_rd, p.m_rd * r / p.gbar_rd))
        return f1 * s2 + f2 * s1

    for p in [RAYLEIGH_10, BranchParams(1.0, 2.0, 5.0, 8.0), BranchParams(3.0, 2.0, 20.0, 7.0)]:
        a, t = maclaurin_coefficient(p)
        assert min_pdf(1e-6, p) / 1e-6**t == pytest.approx(a, rel=0.01)


def test_min_bound_cdf_values():
    assert min_bound_cdf(0.0, RAYLEIGH_10) == 0.0
    # Rayleigh pair at gbar 10: F ~ r/5 for small r
    assert min_bound_cdf(1e-3, RAYLEIGH_10) == pytest.approx(1e-3 / 5.0, rel=1e-12)


@pytest.mark.parametrize("m_pair", [(1.0, 1.0), (2.0, 3.0)])
def test_min_bound_cdf_matches_exact_at_small_r(m_pair):
    # the polynomial is the r -> 0 limit; at r = 1e-4 * gbar the exact branch
    # CDF agrees within 2% once gbar is deep in the asymptotic regime
    gbar = 1e4
    p = BranchParams(m_pair[0], m_pair[1], gbar, gbar)
    r = 1e-4 * gbar
    assert min_bound_cdf(r, p) / branch_cdf_exact(r, p) == pytest.approx(1.0, abs=0.02)


def test_asymptotic_terms_structure():
    branches = [BranchParams(1.0, 2.0, 10.0, 20.0), BranchParams(2.0, 2.0, 30.0, 30.0)]
    terms = asymptotic_terms(branches, 7)
    assert terms.t_orders == (0.0, 1.0)
    assert terms.delta == pytest.approx(sum(t + 1 for t in terms.t_orders) - 1)
    assert all(a > 0 for a in terms.a_coeffs)
    assert terms.v_const == pytest.approx(math.sqrt(2 * harmonic_number(127)))


@pytest.mark.parametrize(
    "branches",
    [
        [BranchParams(1.0, 1.0, 251.2, 251.2)],
        [BranchParams(1.0, 1.0, 251.2, 251.2)] * 2,
        [BranchParams(2.0, 2.0, 500.0, 500.0)] * 2,
    ],
)
def test_asymptotic_closed_form_matches_quadrature(branches):
    value, method = asymptotic_ber_detail(branches, 7)
    assert method == "closed-form"
    terms = asymptotic_terms(branches, 7)
    v = terms.v_const
    integral, _ = integrate.quad(
        lambda r: math.exp(-0.5 * (math.sqrt(2 * r) - v) ** 2) * r**terms.delta,
        0.0,
        np.inf,
        epsabs=1e-14,
        epsrel=1e-12,
        limit=300,
    )
    mins = [t + 1.0 for t in terms.t_orders]
    coeff = math.fsum(
        math.prod(terms.a_coeffs) / math.prod(m for l, m in enumerate(mins) if l != k)
        for k in range(len(mins))
    )
    assert value == pytest.approx(0.25 * coeff * integral, rel=1e-6)


def test_asymptotic_noninteger_shape_falls_back_to_quadrature():
    branches = [BranchParams(1.3, 2.0, 100.0, 100.0)]
    value, method = asymptotic_ber_detail(branches, 7)
    assert method == "quadrature"
    assert value > 0


def test_asymptotic_coefficient_forms_differ_by_n_squared():
    branches = [BranchParams(1.0, 1.0, 1000.0, 1000.0)] * 3
    default = asymptotic_ber(branches, 7)
    pooled = asymptotic_ber(branches, 7, coefficient_form="denominator-sum")
    assert default / pooled == pytest.approx(9.0, rel=1e-12)


def test_asymptotic_ratio_stabilizes_at_high_snr():
    ratios = []
    for db in (30.0, 40.0, 50.0):
        gbar = 10 ** (db / 10)
        branches = [BranchParams(1.0, 1.0, gbar, gbar)] * 2
        ratios.append(asymptotic_ber(branches, 7) / analytical_ber(branches, 7))
    assert ratios[2] / ratios[1] == pytest.approx(1.0, abs=0.10)


def test_asymptotic_slope_equals_diversity_order():
    configs = [
        ([(1.0, 1.0)] * 2, 2.0),
        ([(1.0, 2.0), (2.0, 1.0)], 2.0),
        ([(2.0, 2.0)] * 2, 4.0),
    ]
    for pairs, expected in configs:
        values = []
        for db in (40.0, 50.0):
            gbar = 10 ** (db / 10)
            branches = [BranchParams(m1, m2, gbar, gbar) for m1, m2 in pairs]
            values.append(asymptotic_ber(branches, 7))
        slope = -(math.log10(values[1]) - math.log10(values[0]))
        assert slope == pytest.approx(expected, abs=0.05)
        assert diversity_order(
            [BranchParams(m1, m2, 10.0, 10.0) for m1, m2 in pairs]
        ) == pytest.approx(expected)


def test_diversity_order_values():
    assert diversity_order([RAYLEIGH_10] * 2) == 2.0
    mixed = [BranchParams(1.0, 2.0, 10.0, 10.0), BranchParams(2.0, 1.0, 10.0, 10.0)]
    assert diversity_order(mixed) == 2.0
    assert diversity_order([BranchParams(2.0, 2.0, 10.0, 10.0)] * 3) == 6.0


# ---------------------------------------------------------------------------
# coverage and throughput


def test_coverage_probability_endpoints_and_monotonicity():
    branches = [RAYLEIGH_10] * 2
    assert coverage_probability(0.0, branches) == 1.0
    assert coverage_probability(1e9, branches) < 1e-12
    grid = np.geomspace(0.1, 100.0, 12)
    values = [coverage_probability(float(psi), branches) for psi in grid]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    # nondecreasing in the number of branches
    for psi in (1.0, 10.0):
        assert coverage_probability(psi, branches * 2) >= coverage_probability(psi, branches)
    with pytest.raises(ValueError):
        coverage_probability(-1.0, branches)


def test_coverage_complements_max_cdf():
    branches = [BranchParams(1.0, 2.0, 40.0, 25.0)] * 2
    for psi in (0.5, 5.0, 20.0):
        assert coverage_probability(psi, branches) == pytest.approx(
            1.0 - max_cdf(psi, branches), abs=1e-10
        )


def test_single_link_coverage_is_gamma_tail():
    assert single_link_coverage(5.0, 1.0, 10.0) == pytest.approx(math.exp(-0.5), rel=1e-12)
    assert single_link_coverage(0.0, 2.0, 10.0) == 1.0


def test_throughput_values():
    base = dict(packet_symbols=20, sf=7, t_sam_s=1 / 125e3)
    conv = ThroughputParams(system_kind=SystemKind.CONVENTIONAL, **base)
    relay = ThroughputParams(system_kind=SystemKind.RELAY, **base)
    assert throughput(0.0, conv) == pytest.approx(6835.9375)
    assert throughput(0.0, relay) == pytest.approx(3417.96875)
    assert throughput(0.0, relay) == throughput(0.0, conv) / 2
    # pb = 0.25 -> symbol error rate 0.5
    expected = 20 * 7 * 0.5**20 / (20 * 128 / 125e3)
    assert throughput(0.25, conv) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        throughput(0.51, conv)
    with pytest.raises(ValueError):
        throughput(-0.01, conv)


def test_throughput_sf_scaling():
    hi = ThroughputParams(20, 7, 1 / 125e3, SystemKind.RELAY)
    lo = ThroughputParams(20, 12, 1 / 125e3, SystemKind.RELAY)
    assert throughput(0.0, lo) < throughput(0.0, hi)
