"""Reconstruction of operation matrices from measurement records.

The estimator for entry A_ij is the two-mode observable
|i0><i| (x) |j0><psi^{-1*}(j)| averaged over the heralded output ensemble and
scaled by kappa = sqrt(p / <|i0,j0>><<i0,j0|>), with p the occurrence
probability and the denominator the reference-projector average estimated
tomographically from the same data.  Choi-matrix entries come from the
4-index family <<i,j|R(I)|l,k>> = <|l><i| (x) |psi^{-1*}(k)><psi^{-1*}(j)|>
averaged over the unheralded output (trace-normalised by the occurrence
estimate).

Error bars follow the block structure of the data: per-block means, standard
error = std across block means / sqrt(blocks).  kappa uncertainty is reported
separately and not folded into the per-entry bars.

Accumulation is per-block with no shared state; merging accumulators of
disjoint blocks is exact, and the final reduction is taken in block-index
order so results are independent of worker scheduling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from optomo.bipartite import inverse
from optomo.errors import ReferenceTooSmallError
from optomo.quorum import FiniteQuorum, HomodyneKernel

REFERENCE_SIGMA_FACTOR = 2.0


# ---------------------------------------------------------------------------
# evaluators: per-sample dyad estimates for either measurement backend


class HomodyneEvaluator:
    """Adapts a HomodyneKernel to the estimation chain."""

    def __init__(self, kernel: HomodyneKernel):
        self.kernel = kernel
        self.max_pair_index = kernel.max_index

    def estimates(self, mode_data, pairs) -> np.ndarray:
        x, phi = mode_data
        return self.kernel.dyad_estimates(x, phi, pairs)


class FiniteEvaluator:
    """Adapts a FiniteQuorum to the estimation chain."""

    def __init__(self, quorum: FiniteQuorum):
        self.quorum = quorum
        self.max_pair_index = quorum.dim - 1

    def estimates(self, mode_data, pairs) -> np.ndarray:
        obs, out = mode_data
        return self.quorum.dyad_estimates(obs, out, pairs)


# ---------------------------------------------------------------------------
# block accumulation


@dataclass
class _BlockSums:
    est_sum: np.ndarray
    den_sum: complex
    n_heralded: int
    n_trials: int


@dataclass
class BlockAccumulator:
    """Per-block running sums of estimator values, mergeable across blocks."""

    target_shape: tuple
    blocks: dict = field(default_factory=dict)
    mode2_deficit: float = 0.0

    def add_block(self, block_id: int, est_sum, den_sum, n_heralded, n_trials):
        if block_id in self.blocks:
            raise ValueError(f"block {block_id} already accumulated")
        est = np.asarray(est_sum, dtype=complex)
        if est.shape != self.target_shape:
            raise ValueError("estimator sum shape mismatch")
        self.blocks[block_id] = _BlockSums(est, complex(den_sum),
                                           int(n_heralded), int(n_trials))

    def merge(self, other: "BlockAccumulator") -> "BlockAccumulator":
        """Union of disjoint block sets; raises on overlapping block ids."""
        if self.target_shape != other.target_shape:
            raise ValueError("cannot merge accumulators with different targets")
        overlap = set(self.blocks) & set(other.blocks)
        if overlap:
            raise ValueError(f"blocks {sorted(overlap)} present in both accumulators")
        out = BlockAccumulator(
            self.target_shape,
            blocks={**self.blocks, **other.blocks},
            mode2_deficit=max(self.mode2_deficit, other.mode2_deficit),
        )
        return out

    # -- reductions (always in block-index order for reproducibility) -------

    def _ordered(self):
        return [self.blocks[b] for b in sorted(self.blocks)]

    def block_means(self) -> np.ndarray:
        """Per-block means of the estimator values (blocks with data only)."""
        rows = [b.est_sum / b.n_heralded for b in self._ordered() if b.n_heralded > 0]
        return np.array(rows)

    def den_block_means(self) -> np.ndarray:
        return np.array(
            [b.den_sum / b.n_heralded for b in self._ordered() if b.n_heralded > 0]
        )

    def herald_counts(self) -> tuple[int, int]:
        hs = sum(b.n_heralded for b in self._ordered())
        ts = sum(b.n_trials for b in self._ordered())
        return hs, ts


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class KappaEstimate:
    """Scale factor kappa = sqrt(p / denominator) with the phase convention
    theta = 0 (the unmeasurable global phase is fixed downstream)."""

    kappa: float
    kappa_stderr: float
    p_hat: float
    p_hat_stderr: float
    denominator: float
    denominator_stderr: float
    i0: int
    j0: int


@dataclass(frozen=True)
class MatrixEstimate:
    """Reconstructed complex matrix with per-entry standard errors."""

    values: np.ndarray
    std_errors: np.ndarray
    kappa: KappaEstimate | None
    i0: int
    j0: int
    n_blocks: int
    truncation_deficit: float
    phase_convention: str = "none"
    hermiticity_defect: float | None = None
    config_hash: str = ""

    @property
    def window(self) -> int:
        return self.values.shape[0] - 1


# ---------------------------------------------------------------------------
# reference selection and phase conventions


def select_reference(magnitudes: np.ndarray | None) -> tuple[int, int]:
    """Reference indices (i0, j0) maximising |phi|, row-major tie-break.

    ``magnitudes`` is an exact or pilot-estimated table of |phi_ij|; with no
    table (or an all-zero one) the default is (0, 0).
    """
    if magnitudes is None:
        return 0, 0
    mags = np.abs(np.asarray(magnitudes))
    if not np.any(mags > 0):
        warnings.warn("pilot estimate is all zero; falling back to (0, 0)",
                      stacklevel=2)
        return 0, 0
    flat = int(np.argmax(mags))
    return flat // mags.shape[1], flat % mags.shape[1]


def pilot_magnitudes(blocks, evaluator, window: int) -> np.ndarray:
    """Reference-free pilot table of |phi_ij|^2 from diagonal projector dyads."""
    pairs = [(i, i) for i in range(window + 1)]
    total = np.zeros((window + 1, window + 1))
    count = 0
    for blk in blocks:
        e1 = evaluator.estimates(blk.heralded_mode(1), pairs)
        e2 = evaluator.estimates(blk.heralded_mode(2), pairs)
        total += np.real(e1.T @ e2)
        count += e1.shape[0]
    if count == 0:
        return np.zeros((window + 1, window + 1))
    return np.sqrt(np.clip(total / count, 0.0, None))


def phase_fix(estimate: MatrixEstimate) -> MatrixEstimate:
    """Rotate by the unit phase making the largest-magnitude entry real positive."""
    vals = estimate.values
    flat = int(np.argmax(np.abs(vals)))
    pivot = vals.reshape(-1)[flat]
    phase = np.conj(pivot) / abs(pivot) if pivot != 0 else 1.0 + 0.0j
    return replace(
        estimate,
        values=vals * phase,
        phase_convention="largest-entry-real-positive",
    )


def align_to_truth(estimate: MatrixEstimate, truth: np.ndarray) -> np.ndarray:
    """Precision-weighted phase alignment of the estimate onto a known truth.

    The global phase is unmeasurable; for accuracy checks the estimate is
    rotated by the phase that matches the truth, weighting each entry by its
    inverse variance so noisy entries cannot corrupt the alignment.  Returns
    the aligned values.
    """
    sig = np.asarray(estimate.std_errors, dtype=float)
    floor = max(np.min(sig[sig > 0], initial=0.0), 1e-300)
    w = 1.0 / np.maximum(sig, floor) ** 2
    inner = np.sum(w * np.conj(estimate.values) * np.asarray(truth, dtype=complex))
    if inner == 0:
        return estimate.values.copy()
    return estimate.values * (inner / abs(inner))


# ---------------------------------------------------------------------------
# estimation chains


def _mode2_combination(psi: np.ndarray, window: int, j0: int, k_max: int):
    """Coefficient matrix C[k, j] = (psi^{-1})_{kj} truncated at k_max rows.

    The mode-2 estimator of |j0><psi^{-1*}(j)| is sum_k C[k, j] times the dyad
    estimator of |j0><k|; the dropped squared-norm fraction is returned as the
    truncation deficit (zero for diagonal entanglers).
    """
    psi_inv = inverse(np.asarray(psi, dtype=complex))
    cols = psi_inv[:, : window + 1]
    kept = cols[: k_max + 1]
    total = np.sum(np.abs(cols) ** 2)
    deficit = float(1.0 - np.sum(np.abs(kept) ** 2) / total) if total > 0 else 0.0
    return kept, deficit


def accumulate_pure(
    blocks,
    psi: np.ndarray,
    i0: int,
    j0: int,
    evaluator,
    window: int,
) -> BlockAccumulator:
    """Accumulate per-block sums of the pure-operation entry estimators."""
    k_max = min(evaluator.max_pair_index, np.asarray(psi).shape[0] - 1)
    coef, deficit = _mode2_combination(psi, window, j0, k_max)
    pairs1 = [(i0, i) for i in range(window + 1)]
    pairs2 = [(j0, k) for k in range(k_max + 1)]
    den1 = pairs1.index((i0, i0)) if (i0, i0) in pairs1 else None
    acc = BlockAccumulator(target_shape=(window + 1, window + 1),
                           mode2_deficit=deficit)
    for blk in blocks:
        n_trials = blk.herald.size
        n_her = int(blk.herald.sum())
        if n_her == 0:
            acc.add_block(blk.block_id, np.zeros(acc.target_shape, complex),
                          0.0, 0, n_trials)
            continue
        e1 = evaluator.estimates(blk.heralded_mode(1), pairs1)  # (S, w+1)
        e2raw = evaluator.estimates(blk.heralded_mode(2), pairs2)  # (S, k_max+1)
        e2 = e2raw @ coef  # (S, w+1)
        est_sum = e1.T @ e2
        d1 = e1[:, den1] if den1 is not None else evaluator.estimates(
            blk.heralded_mode(1), [(i0, i0)])[:, 0]
        d2 = e2raw[:, j0] if j0 <= k_max else evaluator.estimates(
            blk.heralded_mode(2), [(j0, j0)])[:, 0]
        den_sum = complex(np.sum(d1 * d2))
        acc.add_block(blk.block_id, est_sum, den_sum, n_her, n_trials)
    return acc


def estimate_kappa(acc: BlockAccumulator, i0: int, j0: int) -> KappaEstimate:
    """kappa from herald statistics and the tomographic reference denominator.

    Raises ReferenceTooSmallError when the denominator estimate is within
    twice its own standard error of zero.
    """
    n_her, n_trials = acc.herald_counts()
    if n_her == 0:
        raise ReferenceTooSmallError("no heralded samples")
    p_hat = n_her / n_trials
    p_stderr = float(np.sqrt(p_hat * (1.0 - p_hat) / n_trials))
    dmeans = np.real(acc.den_block_means())
    nb = dmeans.size
    den = float(np.mean(dmeans))
    den_stderr = float(np.std(dmeans, ddof=1) / np.sqrt(nb)) if nb > 1 else 0.0
    if den <= REFERENCE_SIGMA_FACTOR * den_stderr or den <= 0.0:
        raise ReferenceTooSmallError(
            f"reference element ({i0},{j0}) too small: denominator "
            f"{den:.3e} +- {den_stderr:.3e}; choose different (i0, j0)"
        )
    kappa = float(np.sqrt(p_hat / den))
    rel = 0.5 * np.sqrt((p_stderr / p_hat) ** 2 + (den_stderr / den) ** 2)
    return KappaEstimate(
        kappa=kappa, kappa_stderr=float(kappa * rel),
        p_hat=float(p_hat), p_hat_stderr=p_stderr,
        denominator=den, denominator_stderr=den_stderr,
        i0=i0, j0=j0,
    )


def estimate_pure_matrix(
    blocks,
    psi: np.ndarray,
    i0: int,
    j0: int,
    evaluator,
    window: int,
    extra_deficit: float = 0.0,
) -> MatrixEstimate:
    """Full pure-operation reconstruction with block-statistics error bars.

    Entry (i, j) = kappa times the grand mean over blocks of the per-sample
    product of the mode-1 estimate of |i0><i| and the mode-2 estimate of
    |j0><psi^{-1*}(j)|.  Std error = |kappa| std(block means)/sqrt(blocks).
    """
    acc = accumulate_pure(blocks, psi, i0, j0, evaluator, window)
    return finalize_pure(acc, i0, j0, extra_deficit)


def finalize_pure(
    acc: BlockAccumulator, i0: int, j0: int, extra_deficit: float = 0.0
) -> MatrixEstimate:
    """Reduce accumulated blocks (in block-index order) to a MatrixEstimate."""
    kap = estimate_kappa(acc, i0, j0)
    means = acc.block_means()  # (B, w+1, w+1)
    nb = means.shape[0]
    if nb == 0:
        raise ReferenceTooSmallError("no blocks with heralded samples")
    grand = means.mean(axis=0)
    if nb > 1:
        spread = np.sqrt(
            np.sum(np.abs(means - grand) ** 2, axis=0) / (nb * (nb - 1))
        )
    else:
        spread = np.full_like(np.abs(grand), np.inf)
    deficit = acc.mode2_deficit + extra_deficit
    return MatrixEstimate(
        values=kap.kappa * grand,
        std_errors=kap.kappa * spread,
        kappa=kap,
        i0=i0, j0=j0,
        n_blocks=nb,
        truncation_deficit=deficit,
    )


def accumulate_choi(
    blocks,
    psi: np.ndarray,
    evaluator,
    window: int,
) -> BlockAccumulator:
    """Accumulate the 4-index Choi entry estimators <<i,j|R(I)|l,k>>.

    Per sample the entry estimator factorises into the mode-1 dyad |l><i| and
    the mode-2 dyad combination |psi^{-1*}(k)><psi^{-1*}(j)|; entries are
    stored as a (w+1)^2 x (w+1)^2 matrix with composite row (i, j) and
    column (l, k).
    """
    w1 = window + 1
    k_max = min(evaluator.max_pair_index, np.asarray(psi).shape[0] - 1)
    if k_max < window:
        raise ValueError(
            f"evaluator supports dyad indices up to {k_max}, below window {window}"
        )
    psi_inv = inverse(np.asarray(psi, dtype=complex))
    cols = psi_inv[: k_max + 1, : w1]  # rows truncated at the evaluator window
    total = np.sum(np.abs(psi_inv[:, :w1]) ** 2)
    deficit = float(1.0 - np.sum(np.abs(cols) ** 2) / total) if total > 0 else 0.0
    pairs1 = [(l, i) for l in range(w1) for i in range(w1)]
    pairs2 = [(a, b) for a in range(k_max + 1) for b in range(k_max + 1)]
    # mode-2 combination: est(j, k) = sum_ab conj(psi_inv[a, k]) psi_inv[b, j] dyad(a, b)
    comb = np.einsum("ak,bj->abjk", cols.conj(), cols).reshape(len(pairs2), w1 * w1)
    acc = BlockAccumulator(target_shape=(w1 * w1, w1 * w1), mode2_deficit=deficit)
    for blk in blocks:
        n_trials = blk.herald.size
        n_her = int(blk.herald.sum())
        if n_her == 0:
            acc.add_block(blk.block_id, np.zeros(acc.target_shape, complex),
                          0.0, 0, n_trials)
            continue
        e1 = evaluator.estimates(blk.heralded_mode(1), pairs1)  # (S, w1^2)
        e2 = evaluator.estimates(blk.heralded_mode(2), pairs2) @ comb  # (S, w1^2)
        a1 = e1.reshape(-1, w1, w1)  # [s, l, i]  (mode-1 dyad |l><i|)
        a2 = e2.reshape(-1, w1, w1)  # [s, j, k]
        est = np.einsum("sli,sjk->ijlk", a1, a2).reshape(w1 * w1, w1 * w1)
        acc.add_block(blk.block_id, est, 0.0, n_her, n_trials)
    return acc


def finalize_choi(
    acc: BlockAccumulator,
    p_hat: float,
    p_hat_stderr: float = 0.0,
    extra_deficit: float = 0.0,
) -> MatrixEstimate:
    """Reduce Choi accumulation; scales by the occurrence estimate and hermitises.

    The ensemble averages of the 4-index estimators refer to the unnormalised
    output R(psi) (trace = occurrence probability); sample means over heralded
    data are therefore multiplied by p_hat before inversion to R(I).
    """
    means = acc.block_means()
    nb = means.shape[0]
    if nb == 0:
        raise ReferenceTooSmallError("no blocks with heralded samples")
    grand = means.mean(axis=0) * p_hat
    if nb > 1:
        spread = p_hat * np.sqrt(
            np.sum(np.abs(means - means.mean(axis=0)) ** 2, axis=0)
            / (nb * (nb - 1))
        )
    else:
        spread = np.full_like(np.abs(grand), np.inf)
    defect = float(np.max(np.abs(grand - grand.conj().T)))
    herm = (grand + grand.conj().T) / 2.0
    sym_err = np.sqrt((spread**2 + spread.T**2) / 2.0)
    kap = KappaEstimate(
        kappa=1.0, kappa_stderr=0.0, p_hat=p_hat, p_hat_stderr=p_hat_stderr,
        denominator=1.0, denominator_stderr=0.0, i0=0, j0=0,
    )
    return MatrixEstimate(
        values=herm,
        std_errors=sym_err,
        kappa=kap,
        i0=0, j0=0,
        n_blocks=nb,
        truncation_deficit=acc.mode2_deficit + extra_deficit,
        hermiticity_defect=defect,
    )


def estimate_choi(
    blocks,
    psi: np.ndarray,
    evaluator,
    window: int,
    p_hat: float | None = None,
) -> MatrixEstimate:
    """Choi-matrix reconstruction on the index window (composite-index matrix)."""
    acc = accumulate_choi(blocks, psi, evaluator, window)
    if p_hat is None:
        n_her, n_trials = acc.herald_counts()
        p_hat = n_her / n_trials if n_trials else 0.0
        p_std = float(np.sqrt(p_hat * (1 - p_hat) / n_trials)) if n_trials else 0.0
    else:
        p_std = 0.0
    return finalize_choi(acc, p_hat, p_std)


# ---------------------------------------------------------------------------
# exact (no-sampling) expectations for the finite quorum


def exact_finite_joint(
    r_out: np.ndarray,
    quorum: FiniteQuorum,
    pairs1,
    pairs2,
) -> np.ndarray:
    """Brute-force expectation of the joint dyad estimators over all outcomes.

    Enumerates every (observable pair, eigenvalue pair) with its exact
    probability on the normalised state and sums the product estimator.
    Returns E[est1_p est2_q], shape (len(pairs1), len(pairs2)).
    """
    from optomo.sampling import joint_outcome_table

    table = joint_outcome_table(r_out, quorum)
    L, d = len(quorum), quorum.dim
    out = np.zeros((len(pairs1), len(pairs2)), dtype=complex)
    a1 = np.array([p[0] for p in pairs1])
    b1 = np.array([p[1] for p in pairs1])
    a2 = np.array([p[0] for p in pairs2])
    b2 = np.array([p[1] for p in pairs2])
    for k in range(L):
        c1 = quorum.duals.conj()[k, a1, b1] / quorum.weights[k]
        for l in range(L):
            c2 = quorum.duals.conj()[l, a2, b2] / quorum.weights[l]
            for m1 in range(d):
                for m2 in range(d):
                    pr = table[k, l, m1, m2]
                    if pr == 0.0:
                        continue
                    lam = quorum.eigenvalues[k, m1] * quorum.eigenvalues[l, m2]
                    out += pr * lam * np.outer(c1, c2)
    return out


def exact_pure_estimate(
    phi_norm: np.ndarray,
    p: float,
    psi: np.ndarray,
    i0: int,
    j0: int,
    quorum: FiniteQuorum,
) -> np.ndarray:
    """Expectation of the full pure-operation chain under the exact outcome law.

    Equals the true A up to the unmeasurable global phase when phi_norm is the
    normalised output of apply_pure.
    """
    d = quorum.dim
    r_out = np.outer(phi_norm.reshape(-1), phi_norm.reshape(-1).conj())
    psi_inv = inverse(np.asarray(psi, dtype=complex))
    pairs1 = [(i0, i) for i in range(d)]
    pairs2 = [(j0, k) for k in range(d)]
    joint = exact_finite_joint(r_out, quorum, pairs1, pairs2)  # (i, k)
    mean = joint @ psi_inv
    den = exact_finite_joint(r_out, quorum, [(i0, i0)], [(j0, j0)])[0, 0].real
    kappa = np.sqrt(p / den)
    return kappa * mean


def exact_choi_estimate(
    r_psi: np.ndarray,
    psi: np.ndarray,
    quorum: FiniteQuorum,
) -> np.ndarray:
    """Expectation of the Choi chain under the exact outcome law (times trace)."""
    d = quorum.dim
    p = float(np.trace(r_psi).real)
    psi_inv = inverse(np.asarray(psi, dtype=complex))
    pairs = [(a, b) for a in range(d) for b in range(d)]
    joint = exact_finite_joint(r_psi, quorum, pairs, pairs)
    comb = np.einsum("ak,bj->abjk", psi_inv.conj(), psi_inv).reshape(d * d, d * d)
    e2 = joint @ comb  # columns now (j, k)
    a1 = e2.reshape(d, d, d, d)  # [l, i, j, k]  (mode-1 dyad (a,b) = (l,i))
    r_est = p * np.einsum("lijk->ijlk", a1).reshape(d * d, d * d)
    return (r_est + r_est.conj().T) / 2.0
