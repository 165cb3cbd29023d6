"""Monte Carlo generation of measurement records.

Three sampling paths share one RNG contract:

* exact Gaussian sampling of joint quadratures for Gaussian scenarios
  (the displaced twin-beam experiment),
* grid inverse-CDF sampling over truncated Fock-basis wavefunction sums for
  arbitrary pure bipartite outputs (and mixtures of them for Kraus maps),
* exact-distribution outcome sampling for finite-dimensional quorums.

Quadrature units follow X_phi = (a^dag e^{i phi} + a e^{-i phi})/2 (vacuum
variance 1/4); detector efficiency adds independent Gaussian noise of
variance (1-eta)/(4 eta) per mode.

Determinism: every block owns the generator ``substream(master_seed,
block_index)``; block data never depends on scheduling order or worker count.
Draw order within a block is fixed and documented per sampler.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from optomo.errors import NumericalPSDError, TruncationError
from optomo.fock import noise_sigma2, quadrature_wavefunctions
from optomo.quorum import FiniteQuorum

SYMPLECTIC_TOL = 1e-9
FOCK_GRID_POINTS = 4096
TRUNCATION_BOUND = 1e-6

_OMEGA = np.array(
    [[0.0, 1.0, 0.0, 0.0],
     [-1.0, 0.0, 0.0, 0.0],
     [0.0, 0.0, 0.0, 1.0],
     [0.0, 0.0, -1.0, 0.0]]
)


def substream(master_seed: int, block_index: int) -> np.random.Generator:
    """Independent, reproducible per-block random stream."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, block_index)))


@dataclass(frozen=True)
class GaussianState:
    """Two-mode Gaussian state: mean and covariance over (X1, P1, X2, P2)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if mean.shape != (4,) or cov.shape != (4, 4):
            raise ValueError("need a length-4 mean and a 4x4 covariance")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ValueError("covariance must be symmetric")
        nus = np.abs(np.linalg.eigvals(1j * _OMEGA @ cov))
        if np.min(nus) < 0.25 - SYMPLECTIC_TOL:
            raise ValueError(
                f"covariance violates the uncertainty bound: min symplectic "
                f"eigenvalue {np.min(nus):.6g} < 1/4"
            )


def displaced_twinbeam_gaussian(z: complex, nbar: float) -> GaussianState:
    """Twin-beam with mean thermal photon nbar, mode 1 displaced by D(z).

    Marginal quadrature variance is (2 nbar + 1)/4 per mode; X1-X2 and P1-P2
    carry the two-mode squeezing correlations +-sqrt(nbar(nbar+1))/2.
    """
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    v = (2.0 * nbar + 1.0) / 4.0
    c = np.sqrt(nbar * (nbar + 1.0)) / 2.0
    cov = np.array(
        [[v, 0.0, c, 0.0],
         [0.0, v, 0.0, -c],
         [c, 0.0, v, 0.0],
         [0.0, -c, 0.0, v]]
    )
    mean = np.array([np.real(z), np.imag(z), 0.0, 0.0])
    return GaussianState(mean=mean, cov=cov)


@dataclass
class QuadratureBlock:
    """One block of joint homodyne records."""

    block_id: int
    phi1: np.ndarray
    phi2: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    herald: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.herald is None:
            self.herald = np.ones(self.phi1.size, dtype=bool)

    def heralded_mode(self, mode: int):
        h = self.herald
        if mode == 1:
            return self.x1[h], self.phi1[h]
        return self.x2[h], self.phi2[h]


@dataclass
class FiniteOutcomeBlock:
    """One block of joint finite-quorum outcomes (observable and eigenvalue indices)."""

    block_id: int
    obs1: np.ndarray
    obs2: np.ndarray
    out1: np.ndarray
    out2: np.ndarray
    herald: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.herald is None:
            self.herald = np.ones(self.obs1.size, dtype=bool)

    def heralded_mode(self, mode: int):
        h = self.herald
        if mode == 1:
            return self.obs1[h], self.out1[h]
        return self.obs2[h], self.out2[h]


def _quadrature_projection(state: GaussianState, phi1, phi2):
    """Mean and 2x2 covariance of (X_phi1 (x) X_phi2) for each phase pair."""
    c1, s1 = np.cos(phi1), np.sin(phi1)
    c2, s2 = np.cos(phi2), np.sin(phi2)
    v = state.cov
    mu = state.mean
    m1 = c1 * mu[0] + s1 * mu[1]
    m2 = c2 * mu[2] + s2 * mu[3]
    v11 = c1 * c1 * v[0, 0] + 2 * c1 * s1 * v[0, 1] + s1 * s1 * v[1, 1]
    v22 = c2 * c2 * v[2, 2] + 2 * c2 * s2 * v[2, 3] + s2 * s2 * v[3, 3]
    v12 = (
        c1 * c2 * v[0, 2] + c1 * s2 * v[0, 3]
        + s1 * c2 * v[1, 2] + s1 * s2 * v[1, 3]
    )
    return m1, m2, v11, v22, v12


def sample_quadratures(
    state: GaussianState,
    eta: float,
    n: int,
    stream: np.random.Generator,
    phases: tuple | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Joint quadrature samples (phi1, phi2, x1, x2) at efficiency eta.

    Draw order (fixed for reproducibility): phi1, phi2, two standard normals
    for the exact bivariate law, two standard normals for efficiency noise.
    ``phases`` overrides the random phases with fixed values (test hook).
    """
    if n < 1:
        raise ValueError("need at least one sample")
    sig2 = noise_sigma2(eta)
    if phases is None:
        phi1 = stream.uniform(0.0, 2.0 * np.pi, n)
        phi2 = stream.uniform(0.0, 2.0 * np.pi, n)
    else:
        phi1 = np.full(n, float(phases[0]))
        phi2 = np.full(n, float(phases[1]))
    z1 = stream.standard_normal(n)
    z2 = stream.standard_normal(n)
    g1 = stream.standard_normal(n)
    g2 = stream.standard_normal(n)
    m1, m2, v11, v22, v12 = _quadrature_projection(state, phi1, phi2)
    x1 = m1 + np.sqrt(v11) * z1
    x2 = m2 + (v12 / np.sqrt(v11)) * z1 + np.sqrt(np.maximum(v22 - v12**2 / v11, 0.0)) * z2
    if sig2 > 0.0:
        sn = np.sqrt(sig2)
        x1 = x1 + sn * g1
        x2 = x2 + sn * g2
    return phi1, phi2, x1, x2


def _inverse_cdf_draw(pdf_rows: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Draw one value per row from tabulated densities by inverse CDF."""
    cdf = np.cumsum(pdf_rows, axis=1)
    total = cdf[:, -1:]
    target = u[:, None] * total
    idx = np.minimum((cdf < target).sum(axis=1), x.size - 1)
    rows = np.arange(pdf_rows.shape[0])
    hi = cdf[rows, idx]
    lo = np.where(idx > 0, cdf[rows, np.maximum(idx - 1, 0)], 0.0)
    frac = np.where(hi > lo, (target.ravel() - lo) / (hi - lo), 0.5)
    dx = x[1] - x[0]
    left = x[idx] - dx
    return left + frac * dx


def sample_fock_general(
    phi_out: np.ndarray,
    eta: float,
    n: int,
    stream: np.random.Generator,
    n_points: int = FOCK_GRID_POINTS,
    batch: int = 256,
    deficit_bound: float = TRUNCATION_BOUND,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Joint quadrature samples for an arbitrary pure bipartite output.

    ``phi_out`` is the normalised output matrix in the Fock basis.  Per
    sample: x1 is drawn from the exact phase-dependent marginal on a grid of
    ``n_points`` over [-6 sigma_max, 6 sigma_max] by inverse CDF, x2 from the
    exact conditional given x1, then both receive efficiency noise.  Draw
    order per batch: phi1, phi2, u1, u2, noise1, noise2.
    """
    phi_out = np.asarray(phi_out, dtype=complex)
    d = phi_out.shape[0]
    norm2 = float(np.sum(np.abs(phi_out) ** 2))
    if abs(norm2 - 1.0) > deficit_bound:
        raise TruncationError(
            f"output-state truncation deficit {abs(norm2 - 1.0):.3e} above "
            f"bound {deficit_bound:.0e}"
        )
    sig2 = noise_sigma2(eta)
    sigma_max = np.sqrt((2.0 * d + 1.0) / 4.0)
    x = np.linspace(-6.0 * sigma_max, 6.0 * sigma_max, n_points)
    psi_tab = quadrature_wavefunctions(d, x)  # (d, G)
    # real pair-product table for the mode-1 marginal quadratic form
    pair_rows = []
    pair_index = []
    for a in range(d):
        for b in range(a, d):
            pair_rows.append(psi_tab[a] * psi_tab[b])
            pair_index.append((a, b))
    pair_tab = np.array(pair_rows)  # (P, G)
    rho1 = phi_out @ phi_out.conj().T  # reduced state of mode 1

    phi1 = np.empty(n)
    phi2 = np.empty(n)
    x1 = np.empty(n)
    x2 = np.empty(n)
    done = 0
    while done < n:
        s = min(batch, n - done)
        p1 = stream.uniform(0.0, 2.0 * np.pi, s)
        p2 = stream.uniform(0.0, 2.0 * np.pi, s)
        u1 = stream.random(s)
        u2 = stream.random(s)
        g1 = stream.standard_normal(s)
        g2 = stream.standard_normal(s)
        # marginal p(x1 | phi1) = sum_ab rho1_ab e^{i(a-b) phi1} Psi_a Psi_b
        coeff = np.empty((s, len(pair_index)))
        for p, (a, b) in enumerate(pair_index):
            if a == b:
                coeff[:, p] = rho1[a, a].real
            else:
                coeff[:, p] = 2.0 * np.real(rho1[a, b] * np.exp(1j * (a - b) * p1))
        pdf1 = np.maximum(coeff @ pair_tab, 0.0)
        xs1 = _inverse_cdf_draw(pdf1, x, u1)
        # conditional amplitude over mode-2 index m at the sampled x1
        psi_at = np.empty((s, d))
        for a in range(d):
            psi_at[:, a] = np.interp(xs1, x, psi_tab[a])
        amp = (psi_at * np.exp(1j * np.arange(d) * p1[:, None])) @ phi_out  # (s, d)
        amp2 = (amp * np.exp(1j * np.arange(d) * p2[:, None])) @ psi_tab.astype(complex)
        pdf2 = np.abs(amp2) ** 2
        xs2 = _inverse_cdf_draw(pdf2, x, u2)
        if sig2 > 0.0:
            xs1 = xs1 + np.sqrt(sig2) * g1
            xs2 = xs2 + np.sqrt(sig2) * g2
        phi1[done:done + s] = p1
        phi2[done:done + s] = p2
        x1[done:done + s] = xs1
        x2[done:done + s] = xs2
        done += s
    return phi1, phi2, x1, x2


def joint_outcome_table(r_out: np.ndarray, quorum: FiniteQuorum) -> np.ndarray:
    """Exact joint outcome probabilities, shape (L, L, d, d).

    Entry (k, l, m1, m2) is the probability of choosing observables (k, l)
    and obtaining their (m1, m2)-th eigenvalues on the normalised state.
    Sums to 1; raises NumericalPSDError on negative probabilities
    beyond -1e-10.
    """
    r = np.asarray(r_out, dtype=complex)
    tr = np.trace(r).real
    if tr <= 0:
        raise NumericalPSDError("state has non-positive trace")
    r = r / tr
    L, d = len(quorum), quorum.dim
    table = np.empty((L, L, d, d))
    for k in range(L):
        vk = quorum.eigenvectors[k]
        for l in range(L):
            vl = quorum.eigenvectors[l]
            u = np.kron(vk, vl)
            born = np.real(np.einsum("ij,jk,ki->i", u.conj().T, r, u))
            if born.min() < -1e-10:
                raise NumericalPSDError(
                    f"negative joint probability {born.min():.3e} for "
                    f"observables ({k}, {l})"
                )
            table[k, l] = (
                quorum.weights[k] * quorum.weights[l]
                * np.clip(born, 0.0, None).reshape(d, d)
            )
    return table / table.sum()


def sample_finite(
    r_out: np.ndarray,
    quorum: FiniteQuorum,
    n: int,
    stream: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Joint finite-quorum outcomes (obs1, obs2, out1, out2) from the exact table."""
    table = joint_outcome_table(r_out, quorum)
    flat = table.reshape(-1)
    cdf = np.cumsum(flat)
    draws = np.searchsorted(cdf, stream.random(n) * cdf[-1], side="right")
    draws = np.minimum(draws, flat.size - 1)
    obs1, obs2, out1, out2 = np.unravel_index(draws, table.shape)
    return obs1, obs2, out1, out2


def draw_heralds(p: float, n: int, stream: np.random.Generator) -> np.ndarray:
    """Bernoulli occurrence flags; empirical frequency estimates p."""
    if not 0.0 <= p <= 1.0 + 1e-12:
        raise ValueError(f"occurrence probability {p} outside [0, 1]")
    if p >= 1.0:
        return np.ones(n, dtype=bool)
    return stream.random(n) < p


def write_sample_dump(path, blocks) -> None:
    """Raw-sample dump: one `block_id, phi1, phi2, x1, x2, herald` record per line.

    Values use 9 significant digits; herald is 0/1.  Non-heralded records keep
    zero quadratures (the operation did not occur; nothing was measured).
    """
    with open(path, "w") as fh:
        fh.write("# block_id, phi1, phi2, x1, x2, herald\n")
        for blk in blocks:
            for i in range(blk.phi1.size):
                fh.write(
                    f"{blk.block_id}, {blk.phi1[i]:.9g}, {blk.phi2[i]:.9g}, "
                    f"{blk.x1[i]:.9g}, {blk.x2[i]:.9g}, {int(blk.herald[i])}\n"
                )
