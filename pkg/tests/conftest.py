"""Shared independent oracles for the test suite.

These deliberately avoid the library's own code paths: the exact detector
error law comes from the Rician-envelope integral, and expected values are
computed with scipy quadrature or plain Monte Carlo.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate, special


def exact_symbol_error_rate(gamma: float, sf: int) -> float:
    """Exact detector symbol error probability at bin SNR gamma.

    The signal bin magnitude is Rician, the other 2**sf - 1 bins are
    i.i.d. Rayleigh; a correct decision needs every noise bin below the
    signal bin. One-dimensional quadrature over the Rician envelope.
    """
    m_alphabet = 1 << sf
    s = np.sqrt(gamma)

    def integrand(v):
        # Rician pdf with unit complex noise variance, exp-scaled Bessel
        pdf = 2.0 * v * np.exp(-((v - s) ** 2)) * special.ive(0, 2.0 * v * s)
        return pdf * (1.0 - (1.0 - np.exp(-v * v)) ** (m_alphabet - 1))

    value, _ = integrate.quad(integrand, 0.0, s + 9.0, limit=300)
    return float(value)


def exact_bit_error_rate(gamma: float, sf: int) -> float:
    """Exact detector bit error probability at bin SNR gamma.

    Conditioned on a symbol error the winning bin is uniform over the wrong
    indices, so each bit flips with probability 2**(sf-1)/(2**sf - 1).
    """
    m_alphabet = 1 << sf
    return exact_symbol_error_rate(gamma, sf) * (m_alphabet / 2) / (m_alphabet - 1)


def gauss_tail_oracle(x: float) -> float:
    """Gaussian tail probability by direct quadrature of the defining integral."""
    value, _ = integrate.quad(
        lambda u: np.exp(-u * u / 2.0) / np.sqrt(2.0 * np.pi), x, np.inf
    )
    return float(value)
