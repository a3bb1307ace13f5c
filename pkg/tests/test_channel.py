import numpy as np
import pytest
from scipy import integrate, stats

from lora_relay_lab import (
    LinkSpec,
    ModemConfig,
    apply_fading_and_awgn,
    avg_link_snr,
    detect_block,
    nakagami_snr_pdf,
    sample_nakagami_gain,
    sample_nakagami_gains,
)


def _link(**kwargs):
    base = dict(
        m_fading=1.0, distance_m=1000.0, tx_power_w=0.0125, path_loss_exp=2.65,
        noise_psd_w=1e-12,
    )
    base.update(kwargs)
    return LinkSpec(**base)


@pytest.mark.parametrize(
    "field,value",
    [
        ("m_fading", 0.4),
        ("distance_m", 0.0),
        ("tx_power_w", -1.0),
        ("path_loss_exp", 1.9),
        ("path_loss_exp", 6.1),
        ("noise_psd_w", 0.0),
    ],
)
def test_linkspec_validation(field, value):
    with pytest.raises(ValueError):
        _link(**{field: value})


def test_rayleigh_mean_square_gain():
    rng = np.random.default_rng(10)
    omega = 2.5
    h = sample_nakagami_gains(1.0, omega, rng, 1_000_000)
    assert np.mean(np.abs(h) ** 2) == pytest.approx(omega, rel=0.01)


def test_gamma_variance_of_gain_sq():
    rng = np.random.default_rng(11)
    gain_sq = np.abs(sample_nakagami_gains(4.0, 1.0, rng, 1_000_000)) ** 2
    # Var = omega^2 / m
    assert np.var(gain_sq) == pytest.approx(0.25, rel=0.03)


def test_single_draw_consistency():
    rng = np.random.default_rng(12)
    for _ in range(100):
        draw = sample_nakagami_gain(2.0, 1.5, rng)
        assert draw.gain_sq >= 0
        assert abs(draw.h) ** 2 == pytest.approx(draw.gain_sq, rel=1e-12)
        assert 0 <= draw.phase < 2 * np.pi
    with pytest.raises(ValueError):
        sample_nakagami_gain(0.3, 1.0, rng)
    with pytest.raises(ValueError):
        sample_nakagami_gain(1.0, 0.0, rng)


def test_snr_pdf_rayleigh_is_exponential():
    r = np.linspace(0, 50, 200)
    assert np.allclose(nakagami_snr_pdf(r, 1.0, 10.0), np.exp(-r / 10.0) / 10.0)


def test_snr_pdf_normalization():
    total, _ = integrate.quad(lambda r: nakagami_snr_pdf(r, 2.5, 7.0), 0, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_snr_pdf_matches_gamma_density():
    # shape 2, scale gbar/m = 5
    assert nakagami_snr_pdf(5.0, 2.0, 10.0) == pytest.approx(
        stats.gamma.pdf(5.0, a=2.0, scale=5.0), rel=1e-12
    )


def test_snr_pdf_rejects_negative():
    with pytest.raises(ValueError):
        nakagami_snr_pdf(-0.1, 1.0, 1.0)


def test_nakagami_draws_match_gamma_distribution():
    rng = np.random.default_rng(13)
    m, gbar = 2.0, 4.0
    draws = np.abs(sample_nakagami_gains(m, gbar, rng, 100_000)) ** 2
    ks = stats.kstest(draws, stats.gamma(a=m, scale=gbar / m).cdf)
    # 1% critical value of the KS statistic
    assert ks.statistic < 1.63 / np.sqrt(100_000)


def test_avg_link_snr_direct_substitution():
    link = LinkSpec(
        m_fading=1.0, distance_m=1.0, tx_power_w=1.0, path_loss_exp=2.0, noise_psd_w=1.0
    )
    assert avg_link_snr(link, 7) == pytest.approx(128.0)


def test_avg_link_snr_power_law_scaling():
    near = _link(distance_m=1000.0)
    far = _link(distance_m=2000.0)
    assert avg_link_snr(far, 7) / avg_link_snr(near, 7) == pytest.approx(2 ** -2.65, rel=1e-12)


def test_avg_link_snr_reference_setup_regression():
    # 14 dBm total split equally, 1 km hop, alpha 2.65, SF 7, P_T/N0 = 100 dB
    p_total = 10 ** ((14 - 30) / 10)
    link = LinkSpec(
        m_fading=1.0,
        distance_m=1000.0,
        tx_power_w=p_total / 2,
        path_loss_exp=2.65,
        noise_psd_w=p_total / 1e10,
    )
    oracle = (p_total / 2) * 1000.0 ** -2.65 * 2 ** 7 / (p_total / 1e10)
    value = avg_link_snr(link, 7)
    assert value == pytest.approx(oracle, rel=1e-12)
    assert value == pytest.approx(7180.918107532566, rel=1e-12)


def test_avg_link_snr_monotonicity():
    assert avg_link_snr(_link(distance_m=1500.0), 7) < avg_link_snr(_link(), 7)
    assert avg_link_snr(_link(tx_power_w=0.05), 7) > avg_link_snr(_link(), 7)
    assert avg_link_snr(_link(), 8) > avg_link_snr(_link(), 7)


def test_awgn_zero_variance_is_exact():
    rng = np.random.default_rng(14)
    frame = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    h = 0.7 - 0.2j
    assert np.array_equal(apply_fading_and_awgn(frame, h, 0.0, rng), h * frame)


def test_awgn_noise_power():
    rng = np.random.default_rng(15)
    out = apply_fading_and_awgn(np.zeros(1_000_000, dtype=complex), 1.0, 3.0, rng)
    assert np.mean(np.abs(out) ** 2) == pytest.approx(3.0, rel=0.01)


def test_awgn_linearity_at_zero_variance():
    rng = np.random.default_rng(16)
    x = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    y = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    h = 1.1 + 0.3j
    left = apply_fading_and_awgn(2.0 * x + 3.0 * y, h, 0.0, rng)
    right = 2.0 * apply_fading_and_awgn(x, h, 0.0, rng) + 3.0 * apply_fading_and_awgn(
        y, h, 0.0, rng
    )
    assert np.allclose(left, right)


def test_awgn_rejects_negative_variance():
    with pytest.raises(ValueError):
        apply_fading_and_awgn(np.zeros(4, dtype=complex), 1.0, -1e-9, np.random.default_rng(0))


def test_zero_gain_gives_uniform_symbol_errors():
    # with h = 0 detection sees pure noise: error rate (2**sf - 1)/2**sf
    cfg = ModemConfig(sf=7)
    rng = np.random.default_rng(17)
    trials = 40_000
    from lora_relay_lab import modulate_block

    symbols = rng.integers(0, 128, size=trials)
    frames = apply_fading_and_awgn(modulate_block(symbols, cfg), 0.0, 1.0, rng)
    detected, _ = detect_block(frames, cfg)
    ser = np.mean(detected != symbols)
    assert ser == pytest.approx(127 / 128, abs=0.01)
