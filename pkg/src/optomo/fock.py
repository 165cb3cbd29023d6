"""Fock-basis quadrature wavefunctions and smeared quadrature distributions.

Quadrature convention: X_phi = (a^dag e^{i phi} + a e^{-i phi}) / 2, so the
vacuum quadrature variance is 1/4.  The position-like eigenbasis of X_0 has
the orthonormal wavefunctions

    Psi_0(x) = (2/pi)^{1/4} exp(-x^2),
    Psi_{n+1}(x) = (2x/sqrt(n+1)) Psi_n(x) - sqrt(n/(n+1)) Psi_{n-1}(x),

and <x|n>_phi = e^{i n phi} Psi_n(x).  Detector efficiency eta < 1 smears the
quadrature distribution with a zero-mean Gaussian of variance (1-eta)/(4 eta).
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

from optomo.errors import UnphysicalDeconvolutionError


def noise_sigma2(eta: float) -> float:
    """Variance of the efficiency-noise Gaussian, (1-eta)/(4 eta)."""
    if not 0.5 < eta <= 1.0:
        raise UnphysicalDeconvolutionError(
            f"quantum efficiency must be in (0.5, 1], got {eta}"
        )
    return (1.0 - eta) / (4.0 * eta)


def quadrature_wavefunctions(nmax: int, x: np.ndarray) -> np.ndarray:
    """Table of Psi_n(x) for n < nmax, shape (nmax, len(x))."""
    x = np.asarray(x, dtype=float)
    table = np.zeros((nmax, x.size))
    table[0] = (2.0 / np.pi) ** 0.25 * np.exp(-x * x)
    if nmax > 1:
        table[1] = 2.0 * x * table[0]
    for n in range(1, nmax - 1):
        table[n + 1] = (2.0 * x / np.sqrt(n + 1.0)) * table[n] - np.sqrt(
            n / (n + 1.0)
        ) * table[n - 1]
    return table


def gaussian_filter_kernel(sigma: float, dx: float) -> np.ndarray:
    """Discrete Gaussian density for grid convolution; sums to exactly 1."""
    if sigma <= 0.0:
        return np.array([1.0])
    half = int(np.ceil(8.0 * sigma / dx))
    t = np.arange(-half, half + 1) * dx
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def smeared_pair_table(
    dim_cut: int, delta: int, x: np.ndarray, dx: float, sigma: float
) -> np.ndarray:
    """Smeared products g_ab = (Psi_a Psi_b) * N(0, sigma^2) for b - a = delta.

    Returns shape (dim_cut - delta, len(x)); row a holds the pair (a, a + delta).
    These are the quadrature-distribution basis functions: a state rho smeared
    by efficiency noise has density
    p_eta(x | phi) = sum_ab rho_ab e^{i(a-b) phi} g_{min(a,b),|a-b|}(x).
    """
    if not 0 <= delta < dim_cut:
        raise ValueError(f"need 0 <= delta < dim_cut, got delta={delta}")
    psi = quadrature_wavefunctions(dim_cut, x)
    kern = gaussian_filter_kernel(sigma, dx)
    rows = np.empty((dim_cut - delta, x.size))
    for a in range(dim_cut - delta):
        prod = psi[a] * psi[a + delta]
        rows[a] = fftconvolve(prod, kern, mode="same") if kern.size > 1 else prod
    return rows


def smeared_density(
    rho: np.ndarray, phi: float, x: np.ndarray, dx: float, sigma: float
) -> np.ndarray:
    """Exact eta-smeared quadrature density of a single-mode density matrix."""
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    out = np.zeros(x.size)
    for delta in range(d):
        g = smeared_pair_table(d, delta, x, dx, sigma)
        for a in range(d - delta):
            if delta == 0:
                out += rho[a, a].real * g[a]
            else:
                # rho_ab e^{i(a-b)phi} + c.c. with b = a + delta
                out += 2.0 * np.real(
                    rho[a, a + delta] * np.exp(-1j * delta * phi)
                ) * g[a]
    return out


def coherent_state(alpha: complex, dim_cut: int) -> np.ndarray:
    """Fock amplitudes of |alpha>, truncated."""
    n = np.arange(dim_cut)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    amps = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(complex(alpha)) - 0.5 * log_fact) \
        if alpha != 0 else np.eye(dim_cut, 1).ravel().astype(complex)
    return amps


def thermal_state(nbar: float, dim_cut: int) -> np.ndarray:
    """Diagonal of a thermal density matrix with mean photon number nbar."""
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    if nbar == 0:
        p = np.zeros(dim_cut)
        p[0] = 1.0
        return p
    r = nbar / (nbar + 1.0)
    return (1.0 - r) * r ** np.arange(dim_cut)
