"""Quorum machinery: observable families, dual frames, and homodyne kernels.

A quorum is a family of observables O(l) spanning operator space, with a
biorthogonal dual family Q(l), Tr[Q^dag(i) O(j)] = delta_ij, so that any
operator expands as H = sum_l Tr[Q^dag(l) H] O(l).  Measuring a randomly
chosen O(l) and averaging Tr[Q^dag(l) H] times the observed eigenvalue
(divided by the sampling weight) gives an unbiased estimate of <H>.

For a single radiation mode the quorum is quadrature measurement at a random
phase.  Matrix elements are estimated with pattern functions: real kernels
f_nm(x) such that averaging f_nm(x) e^{i(m-n) phi} over efficiency-smeared
quadrature data at uniformly random phase recovers <n|rho|m> for any state
supported below the configured Fock cutoff.  The kernels are built
numerically, per phase-offset delta = m - n, as the minimum-norm solution of
the unbiasedness constraints against the exact smeared pair distributions on
an x-grid, with a small ridge for numerical stability.  The phase factor
e^{i(m-n) phi} is handled analytically.

Kernel construction is a one-time single-threaded setup; the resulting
objects are immutable and shareable across concurrent workers.
"""

from __future__ import annotations

import hashlib
import pathlib
from dataclasses import dataclass, field

import numpy as np

from optomo.bipartite import inverse
from optomo.errors import IllConditionedKernelError
from optomo.fock import noise_sigma2, smeared_pair_table

KERNEL_CACHE_VERSION = 1
BIORTHOGONALITY_TOL = 1e-8
DEFAULT_RIDGE = 1e-10
DEFAULT_GATE_TOL = 5e-3
DEFAULT_SPACING = 0.01


# ---------------------------------------------------------------------------
# finite-dimensional quorum


@dataclass(frozen=True)
class FiniteQuorum:
    """Observables with eigendecompositions, duals, and sampling weights."""

    dim: int
    observables: np.ndarray  # (L, d, d) Hermitian
    duals: np.ndarray  # (L, d, d)
    weights: np.ndarray  # (L,) strictly positive, sums to 1
    eigenvalues: np.ndarray  # (L, d)
    eigenvectors: np.ndarray  # (L, d, d), columns are eigenvectors

    def __post_init__(self):
        bio = np.einsum("iab,jab->ij", self.duals.conj(), self.observables)
        defect = np.max(np.abs(bio - np.eye(len(self.observables))))
        if defect > BIORTHOGONALITY_TOL:
            raise ValueError(f"dual frame not biorthogonal: defect {defect:.3e}")

    def __len__(self) -> int:
        return len(self.observables)

    def dyad_estimates(self, obs_idx, out_idx, pairs) -> np.ndarray:
        """Per-sample unbiased estimates of dyads |a><b|.

        For sample s with observable k_s and eigenvalue index m_s the estimate
        of <|a><b|> is <b|Q^dag(k_s)|a> lambda_{m_s} / w_{k_s}.  Returns shape
        (n_samples, n_pairs).
        """
        obs_idx = np.asarray(obs_idx)
        out_idx = np.asarray(out_idx)
        a = np.array([p[0] for p in pairs])
        b = np.array([p[1] for p in pairs])
        # <b|Q^dag(k)|a> = conj(Q_k[a, b])
        coeff = self.duals.conj()[:, a, b]  # (L, P)
        lam = self.eigenvalues[obs_idx, out_idx] / self.weights[obs_idx]  # (S,)
        return coeff[obs_idx] * lam[:, None]


def _gell_mann_family(dim: int) -> list[np.ndarray]:
    ops: list[np.ndarray] = [np.eye(dim, dtype=complex)]
    for j in range(dim):
        for k in range(j + 1, dim):
            x = np.zeros((dim, dim), dtype=complex)
            x[j, k] = x[k, j] = 1.0
            ops.append(x)
            y = np.zeros((dim, dim), dtype=complex)
            y[j, k] = -1.0j
            y[k, j] = 1.0j
            ops.append(y)
    for l in range(1, dim):
        h = np.zeros((dim, dim), dtype=complex)
        h[:l, :l] = np.eye(l)
        h[l, l] = -l
        ops.append(np.sqrt(2.0 / (l * (l + 1))) * h)
    return ops


def build_finite_quorum(dim: int) -> FiniteQuorum:
    """Quorum of d^2 Hermitian observables spanning operator space.

    For dim = 2 this is the three spin observables completed by the identity;
    in general the generalised Gell-Mann family.  Duals come from the
    pseudoinverse of the frame Gram matrix and sampling weights are uniform.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    ops = np.array(_gell_mann_family(dim))
    gram = np.einsum("iab,jab->ij", ops.conj(), ops).real
    if np.linalg.matrix_rank(gram, tol=1e-8) < dim * dim:
        raise ValueError("observable family does not span operator space")
    ginv = np.linalg.pinv(gram)
    duals = np.einsum("kl,kab->lab", ginv, ops)
    evals = np.empty((len(ops), dim))
    evecs = np.empty((len(ops), dim, dim), dtype=complex)
    for i, o in enumerate(ops):
        evals[i], evecs[i] = np.linalg.eigh(o)
    weights = np.full(len(ops), 1.0 / len(ops))
    return FiniteQuorum(
        dim=dim,
        observables=ops,
        duals=duals,
        weights=weights,
        eigenvalues=evals,
        eigenvectors=evecs,
    )


def expand_in_quorum(h: np.ndarray, quorum: FiniteQuorum) -> np.ndarray:
    """Expansion coefficients c_l = Tr[Q^dag(l) H], so H = sum_l c_l O(l)."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (quorum.dim, quorum.dim):
        raise ValueError(f"operator shape {h.shape} does not match dim {quorum.dim}")
    return np.einsum("lab,ab->l", quorum.duals.conj(), h)


# ---------------------------------------------------------------------------
# homodyne pattern-function kernel


@dataclass(frozen=True)
class GridSpec:
    """Uniform symmetric x-grid for kernel tables."""

    half_width: float
    spacing: float = DEFAULT_SPACING

    def __post_init__(self):
        if self.half_width <= 0 or self.spacing <= 0:
            raise ValueError("grid half_width and spacing must be positive")

    @property
    def points(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + self.spacing / 2,
                         self.spacing)


def default_grid(nbar: float, spacing: float = DEFAULT_SPACING) -> GridSpec:
    """Default kernel grid, x in [-6(1+nbar), 6(1+nbar)]."""
    return GridSpec(half_width=6.0 * (1.0 + nbar), spacing=spacing)


@dataclass(frozen=True)
class HomodyneKernel:
    """Tabulated pattern functions f_nm with analytic phase factors.

    ``tables[delta]`` holds rows f_{n, n+delta}(x) for n <= max_index;
    f_nm = f_mn, so only delta = |m - n| is stored.  ``recovery[delta]`` is
    the matrix C[a, n] = integral g_{a, a+delta} f_{n, n+delta} over the full
    constraint family a < dim_cut: exactly the identity columns for an
    unbiased kernel, and the source of exact bias audits.
    """

    dim_cut: int
    eta: float
    grid: GridSpec
    max_index: int
    ridge: float
    x: np.ndarray = field(repr=False)
    tables: dict = field(repr=False)  # delta -> (rows, len(x))
    recovery: dict = field(repr=False)  # delta -> (dim_cut - delta, rows)

    def pattern(self, n: int, m: int) -> np.ndarray:
        """Tabulated f_nm on the grid (real)."""
        delta = abs(m - n)
        lo = min(n, m)
        if delta not in self.tables or lo >= self.tables[delta].shape[0]:
            raise KeyError(f"kernel row ({n}, {m}) not built; max_index={self.max_index}")
        return self.tables[delta][lo]

    def _interp_rows(self, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Linear interpolation of several tabulated rows at sample points x."""
        g = self.x
        dx = self.grid.spacing
        idx = np.clip(((x - g[0]) / dx).astype(np.int64), 0, g.size - 2)
        w = np.clip((x - g[idx]) / dx, 0.0, 1.0)
        return rows[:, idx] * (1.0 - w) + rows[:, idx + 1] * w  # (P, S)

    def dyad_estimates(self, x, phi, pairs) -> np.ndarray:
        """Per-sample unbiased estimates of dyads |a><b| from quadrature data.

        The estimate of <|a><b|> = rho_ba from a sample (x, phi) is
        f_{b,a}(x) e^{i(a-b) phi}.  Returns shape (n_samples, n_pairs).
        """
        x = np.asarray(x, dtype=float)
        phi = np.asarray(phi, dtype=float)
        rows = np.stack([self.pattern(b, a) for (a, b) in pairs])
        vals = self._interp_rows(rows, x).astype(complex)  # (P, S)
        for p, (a, b) in enumerate(pairs):
            if a != b:
                vals[p] *= np.exp(1j * (a - b) * phi)
        return vals.T

    def cache_key(self) -> str:
        raw = (
            f"v{KERNEL_CACHE_VERSION}|D{self.dim_cut}|eta{self.eta!r}"
            f"|hw{self.grid.half_width!r}|dx{self.grid.spacing!r}"
            f"|idx{self.max_index}|ridge{self.ridge!r}"
        )
        return hashlib.sha256(raw.encode()).hexdigest()[:16]

    def save(self, path) -> None:
        arrays = {f"table_{d}": t for d, t in self.tables.items()}
        arrays.update({f"recovery_{d}": r for d, r in self.recovery.items()})
        np.savez_compressed(
            path,
            version=KERNEL_CACHE_VERSION,
            dim_cut=self.dim_cut,
            eta=self.eta,
            half_width=self.grid.half_width,
            spacing=self.grid.spacing,
            max_index=self.max_index,
            ridge=self.ridge,
            **arrays,
        )


def load_homodyne_kernel(path) -> HomodyneKernel:
    """Load a cached kernel; raises on version mismatch."""
    with np.load(path) as z:
        if int(z["version"]) != KERNEL_CACHE_VERSION:
            raise ValueError("kernel cache version mismatch")
        grid = GridSpec(float(z["half_width"]), float(z["spacing"]))
        tables = {}
        recovery = {}
        for name in z.files:
            if name.startswith("table_"):
                tables[int(name.split("_")[1])] = z[name]
            elif name.startswith("recovery_"):
                recovery[int(name.split("_")[1])] = z[name]
        return HomodyneKernel(
            dim_cut=int(z["dim_cut"]),
            eta=float(z["eta"]),
            grid=grid,
            max_index=int(z["max_index"]),
            ridge=float(z["ridge"]),
            x=grid.points,
            tables=tables,
            recovery=recovery,
        )


def build_homodyne_kernel(
    dim_cut: int,
    eta: float,
    grid: GridSpec,
    max_index: int | None = None,
    ridge: float = DEFAULT_RIDGE,
    gate_tol: float = DEFAULT_GATE_TOL,
    cache_dir=None,
) -> HomodyneKernel:
    """Build (or load from cache) eta-deconvolving pattern-function kernels.

    Per offset delta the tabulated kernels are the minimum-norm solutions of
    integral g_{a,a+delta} f_{n,n+delta} = delta_an for all a < dim_cut, where
    g are the exact noise-smeared quadrature pair distributions.  The ridge is
    relative to the mean diagonal of the constraint Gram matrix.  Rows are
    stored for n <= max_index (default dim_cut // 2).

    Raises UnphysicalDeconvolutionError for eta <= 0.5 and
    IllConditionedKernelError (naming the diagonal) when the stored rows fail
    their unbiasedness constraints within the stored window at ``gate_tol``.
    The gate is a tripwire for catastrophic conditioning (defects of order
    one appear as eta approaches 1/2); residual small defects are weighted by
    the state's Fock occupations and are certified operationally by the
    calibration family and by exact bias audits on the ``recovery`` matrices.
    """
    sigma = float(np.sqrt(noise_sigma2(eta)))
    if max_index is None:
        max_index = dim_cut // 2
    if not 0 <= max_index < dim_cut:
        raise ValueError("max_index must satisfy 0 <= max_index < dim_cut")

    probe = HomodyneKernel(
        dim_cut=dim_cut, eta=eta, grid=grid, max_index=max_index, ridge=ridge,
        x=grid.points, tables={}, recovery={},
    )
    if cache_dir is not None:
        cache_path = pathlib.Path(cache_dir) / f"kernel-{probe.cache_key()}.npz"
        if cache_path.exists():
            try:
                return load_homodyne_kernel(cache_path)
            except Exception:
                cache_path.unlink()  # stale or corrupt; rebuild

    x = grid.points
    dx = grid.spacing
    tables = {}
    recovery = {}
    for delta in range(0, max_index + 1):
        g = smeared_pair_table(dim_cut, delta, x, dx, sigma)
        a_mat = g * dx  # quadrature rows: (a_mat f)_p ~ integral g_p f
        m = a_mat.shape[0]
        keep = min(max_index + 1, m)
        gram = a_mat @ a_mat.T
        scale = float(np.mean(np.diag(gram)))
        rhs = np.eye(m)[:, :keep]
        try:
            w = np.linalg.solve(gram + ridge * scale * np.eye(m), rhs)
        except np.linalg.LinAlgError as exc:
            raise IllConditionedKernelError(delta, str(exc)) from exc
        f = a_mat.T @ w  # (G, keep)
        recov = a_mat @ f  # (m, keep)
        defect = np.max(np.abs(recov[:keep] - np.eye(keep)))
        if defect > gate_tol:
            raise IllConditionedKernelError(
                delta,
                f"kernel unbiasedness defect {defect:.3e} > {gate_tol:.0e} "
                f"within window on diagonal delta={delta}; "
                "reduce dim_cut or raise eta",
            )
        tables[delta] = np.ascontiguousarray(f.T)
        recovery[delta] = recov

    kernel = HomodyneKernel(
        dim_cut=dim_cut, eta=eta, grid=grid, max_index=max_index, ridge=ridge,
        x=x, tables=tables, recovery=recovery,
    )
    if cache_dir is not None:
        pathlib.Path(cache_dir).mkdir(parents=True, exist_ok=True)
        kernel.save(pathlib.Path(cache_dir) / f"kernel-{kernel.cache_key()}.npz")
    return kernel


# ---------------------------------------------------------------------------
# estimator coefficients (Kraus-free reconstruction chain)


@dataclass(frozen=True)
class EstimatorCoefficients:
    """Factorised estimator data for one target matrix entry (i, j).

    Encodes the two-mode observable |i0><i| (x) |j0><psi^{-1*}(j)|: the first
    factor is the dyad |i0><i| on mode 1; the second is a finite linear
    combination sum_k psi_inv[k, j] |j0><k| on mode 2.  ``mode2_coefficients``
    holds that combination (index k), truncated at the kernel window, with the
    dropped squared-norm fraction in ``truncation_deficit``.
    """

    i: int
    j: int
    i0: int
    j0: int
    mode2_coefficients: np.ndarray
    truncation_deficit: float

    def a(self, k: int, l: int, quorum: FiniteQuorum) -> complex:
        """Finite-quorum c-number a_ij(kl) multiplying O(k) (x) O(l)."""
        first = np.conj(quorum.duals[k][self.i0, self.i])
        second = sum(
            c * np.conj(quorum.duals[l][self.j0, b])
            for b, c in enumerate(self.mode2_coefficients)
        )
        return complex(first * second)


def estimator_coefficients(
    i: int, j: int, i0: int, j0: int, psi: np.ndarray, k_max: int | None = None
) -> EstimatorCoefficients:
    """Coefficients of the estimator for entry (i, j) given entangler psi.

    For a maximally entangled psi = I/sqrt(d) the mode-2 combination is the
    single term sqrt(d) |j0><j|; for a diagonal twin-beam it is
    (1/psi_jj) |j0><j|.  Propagates the non-invertible-entangler error.
    """
    psi_inv = inverse(np.asarray(psi, dtype=complex))
    col = psi_inv[:, j]
    total = float(np.sum(np.abs(col) ** 2))
    if k_max is not None and k_max + 1 < col.size:
        kept = col[: k_max + 1]
        deficit = 1.0 - float(np.sum(np.abs(kept) ** 2)) / total
        col = kept
    else:
        deficit = 0.0
    return EstimatorCoefficients(
        i=i, j=j, i0=i0, j0=j0, mode2_coefficients=col,
        truncation_deficit=deficit,
    )
