"""Quantum operations, Choi matrices, and the physical states of the experiment.

A pure operation acts as rho -> A rho A^dag with a contraction A; a general
operation is a Kraus map rho -> sum_n K_n rho K_n^dag with
sum_n K_n^dag K_n <= I.  Acting with the map on the first half of an entangled
pure state |psi>> produces, for the pure case,

    |phi>> = (A (x) I)|psi>> / ||A psi||_HS,      p = ||A psi||_HS^2,

from which A = phi psi^{-1} sqrt(p) up to a global phase.  For the general
case the (unnormalised) output is R(psi) = sum_n (K_n (x) I)|psi>><<psi|(...)^dag
and the Choi matrix is R(I) = (I (x) psi^{-1 T}) R(psi) (I (x) psi^{-1 *}),
with the map recovered as E(rho) = Tr_2[(I (x) rho^T) R(I)].

Construction and application functions are pure; values are immutable in
practice and safe to share across workers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from optomo.bipartite import hs_norm, inverse, kron, partial_trace_2, unvec, vec
from optomo.errors import (
    AnnihilatingOperationError,
    NotCompletelyPositiveError,
)

CONTRACTION_TOL = 1e-10
KRAUS_BOUND_TOL = 1e-10
CHOI_HERMITIAN_TOL = 1e-10
CHOI_PSD_REL_TOL = 1e-8
DISPLACEMENT_GUARD = 8
DEFICIT_WARN_BOUND = 1e-3


@dataclass(frozen=True)
class PureOperation:
    """Single-contraction operation rho -> A rho A^dag, ||A|| <= 1."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", a)
        top = np.linalg.svd(a, compute_uv=False)[0]
        if top > 1.0 + CONTRACTION_TOL:
            raise ValueError(f"not a contraction: largest singular value {top:.6g}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class KrausMap:
    """Trace-decreasing CP map given by an ordered list of Kraus operators."""

    kraus: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ops:
            raise ValueError("need at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise ValueError("all Kraus operators must be square with equal dims")
        object.__setattr__(self, "kraus", ops)
        gap = np.eye(d) - sum(k.conj().T @ k for k in ops)
        low = np.linalg.eigvalsh(gap)[0]
        if low < -KRAUS_BOUND_TOL:
            raise ValueError(
                f"sum K^dag K exceeds identity: min eig of I - sum = {low:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """E(rho) = sum_n K_n rho K_n^dag (unnormalised)."""
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ k.conj().T for k in self.kraus)


@dataclass(frozen=True)
class ChoiMatrix:
    """d^2 x d^2 positive matrix R(I) representing a CP map."""

    matrix: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", r)
        d2 = r.shape[0]
        d = int(round(np.sqrt(d2)))
        if r.shape != (d2, d2) or d * d != d2:
            raise ValueError(f"Choi matrix must be d^2 x d^2, got {r.shape}")
        herm = np.max(np.abs(r - r.conj().T))
        if herm > CHOI_HERMITIAN_TOL * max(1.0, abs(np.trace(r))):
            raise ValueError(f"not Hermitian: max asymmetry {herm:.3e}")
        low = np.linalg.eigvalsh(r)[0]
        if low < -CHOI_PSD_REL_TOL * max(abs(np.trace(r)), 1e-300):
            raise NotCompletelyPositiveError(
                f"not completely positive: min eigenvalue {low:.3e}"
            )

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))


@dataclass(frozen=True)
class TwinBeamState:
    """Twin-beam (two-mode squeezed vacuum) entangler, diagonal matrix psi.

    psi_nn = sqrt(1 - lambda^2) lambda^n with lambda^2 = nbar/(nbar+1); the
    reduced state of either beam is thermal with mean photon number nbar.
    """

    nbar: float
    dim_cut: int
    psi: np.ndarray = field(repr=False)
    deficit: float

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.psi))


@dataclass(frozen=True)
class DisplacementOp:
    """Fock-basis truncation of the unitary displacement exp(z a^dag - z* a)."""

    z: complex
    dim_cut: int
    matrix: np.ndarray = field(repr=False)


def apply_pure(op: PureOperation, psi: np.ndarray) -> tuple[np.ndarray, float]:
    """Map the entangler matrix through the operation: phi = A psi / ||A psi||.

    Returns (phi, p) with p = ||A psi||_HS^2 the occurrence probability.
    Raises AnnihilatingOperationError when A psi = 0.
    """
    psi = np.asarray(psi, dtype=complex)
    if op.matrix.shape[1] != psi.shape[0]:
        raise ValueError("operation and entangler dimensions do not match")
    out = op.matrix @ psi
    norm = hs_norm(out)
    if norm == 0.0:
        raise AnnihilatingOperationError("operation annihilates the input state")
    return out / norm, float(norm**2)


def reconstruct_pure(phi: np.ndarray, psi: np.ndarray, p: float) -> np.ndarray:
    """Invert apply_pure: A = phi psi^{-1} sqrt(p), up to a global phase."""
    if not 0.0 < p <= 1.0 + CONTRACTION_TOL:
        raise ValueError(f"occurrence probability must be in (0, 1], got {p}")
    return np.asarray(phi, dtype=complex) @ inverse(psi) * np.sqrt(p)


def apply_kraus_bipartite(kmap: KrausMap, psi: np.ndarray) -> np.ndarray:
    """Joint output density matrix R(psi) = sum_n (K_n (x) I)|psi>><<psi|(K_n (x) I)^dag.

    Requires a normalised entangler, ||psi||_HS = 1.  The result is Hermitian
    and PSD with trace equal to the overall occurrence probability (<= 1).
    """
    psi = np.asarray(psi, dtype=complex)
    if abs(hs_norm(psi) - 1.0) > 1e-10:
        raise ValueError("entangler matrix must be normalised to ||psi||_HS = 1")
    d = psi.shape[0]
    r = np.zeros((d * d, d * d), dtype=complex)
    for k in kmap.kraus:
        v = vec(k @ psi)  # (K (x) I) vec(psi)
        r += np.outer(v, v.conj())
    return r


def choi_normalize(r_psi: np.ndarray, psi: np.ndarray) -> ChoiMatrix:
    """Rescale R(psi) to the Choi matrix R(I) = (I (x) psi^{-1T}) R(psi) (I (x) psi^{-1*})."""
    psi = np.asarray(psi, dtype=complex)
    d = psi.shape[0]
    left = kron(np.eye(d), inverse(psi).T)
    r = left @ np.asarray(r_psi, dtype=complex) @ left.conj().T
    return ChoiMatrix((r + r.conj().T) / 2.0)


def map_from_choi(choi: ChoiMatrix, rho: np.ndarray) -> np.ndarray:
    """Apply the map encoded by R(I): E(rho) = Tr_2[(I (x) rho^T) R(I)]."""
    rho = np.asarray(rho, dtype=complex)
    d = choi.dim
    if rho.shape != (d, d):
        raise ValueError(f"state dimension {rho.shape} does not match Choi dim {d}")
    return partial_trace_2(kron(np.eye(d), rho.T) @ choi.matrix)


def kraus_to_choi(kmap: KrausMap) -> ChoiMatrix:
    """R(I) = sum_n vec(K_n) vec(K_n)^dag (unnormalised |I>> convention)."""
    d = kmap.dim
    r = np.zeros((d * d, d * d), dtype=complex)
    for k in kmap.kraus:
        v = vec(k)
        r += np.outer(v, v.conj())
    return ChoiMatrix(r)


def choi_to_kraus(choi: ChoiMatrix) -> KrausMap:
    """Kraus operators from the Choi eigendecomposition.

    Eigenvalues in (-1e-8 Tr R, 0) are clipped to zero (statistical
    reconstructions of R(I) are not exactly PSD); more negative values raise
    NotCompletelyPositiveError via the ChoiMatrix constructor.
    """
    evals, evecs = np.linalg.eigh(choi.matrix)
    ops = []
    for lam, v in zip(evals, evecs.T):
        if lam <= 0.0:
            continue
        ops.append(np.sqrt(lam) * unvec(v))
    if not ops:
        ops = [np.zeros((choi.dim, choi.dim), dtype=complex)]
    return KrausMap(tuple(ops))


def displacement_matrix(z: complex, dim_cut: int) -> DisplacementOp:
    """Truncated displacement operator exp(z a^dag - z* a) in the Fock basis.

    The generator is exponentiated at an enlarged cutoff (guard band of
    8 Fock levels) and cropped, so columns well below dim_cut are unit-norm
    to ~1e-6.
    """
    if dim_cut < 2:
        raise ValueError("dim_cut must be at least 2")
    n = dim_cut + DISPLACEMENT_GUARD
    adag = np.diag(np.sqrt(np.arange(1.0, n)), -1)
    gen = z * adag - np.conj(z) * adag.T
    full = scipy.linalg.expm(gen)
    return DisplacementOp(z=complex(z), dim_cut=dim_cut, matrix=full[:dim_cut, :dim_cut])


def twin_beam(nbar: float, dim_cut: int, deficit_bound: float = DEFICIT_WARN_BOUND) -> TwinBeamState:
    """Twin-beam entangler with mean thermal photon number nbar per beam.

    The truncation deficit 1 - sum_n psi_nn^2 = lambda^(2 dim_cut) is recorded
    on the result; a deficit above ``deficit_bound`` triggers a warning.
    """
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    lam2 = nbar / (nbar + 1.0)
    diag = np.sqrt(1.0 - lam2) * np.sqrt(lam2) ** np.arange(dim_cut)
    deficit = float(lam2**dim_cut)
    if deficit > deficit_bound:
        warnings.warn(
            f"twin-beam truncation deficit {deficit:.3e} above bound "
            f"{deficit_bound:.0e}; increase dim_cut",
            stacklevel=2,
        )
    return TwinBeamState(
        nbar=float(nbar),
        dim_cut=dim_cut,
        psi=np.diag(diag).astype(complex),
        deficit=deficit,
    )


def default_dim_cut(nbar: float) -> int:
    """Truncation policy: max(16, ceil(8 (nbar + 1)))."""
    return max(16, int(np.ceil(8.0 * (nbar + 1.0))))
