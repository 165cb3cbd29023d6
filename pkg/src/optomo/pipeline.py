"""Orchestration: simulate -> estimate pipelines, verification suites, plot data.

The simulate pipeline builds the entangler, operation, and measurement
backend from a config, samples measurement records block by block (each block
on its own RNG substream), accumulates the estimator sums, and writes the
result document plus plot-data files.  Worker count only affects wall-clock:
block substreams and the ordered reduction make outputs byte-identical for
any --threads value.
"""

from __future__ import annotations

import concurrent.futures
import pathlib
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from optomo import estimation, report, sampling
from optomo.bipartite import phase_align
from optomo.config import ExperimentConfig, config_hash, load_preset
from optomo.errors import ConfigError, VerificationFailure
from optomo.estimation import (
    FiniteEvaluator,
    HomodyneEvaluator,
    MatrixEstimate,
    exact_choi_estimate,
    exact_pure_estimate,
    select_reference,
)
from optomo.fock import noise_sigma2
from optomo.maps import (
    KrausMap,
    PureOperation,
    apply_kraus_bipartite,
    apply_pure,
    displacement_matrix,
    kraus_to_choi,
    map_from_choi,
    twin_beam,
)
from optomo.quorum import GridSpec, build_finite_quorum, build_homodyne_kernel
from optomo.sampling import (
    FiniteOutcomeBlock,
    QuadratureBlock,
    displaced_twinbeam_gaussian,
    draw_heralds,
    sample_finite,
    sample_fock_general,
    sample_quadratures,
    substream,
)

FINITE_ROUTE_MAX_DIM = 12


# ---------------------------------------------------------------------------
# theory targets


def displacement_theory(z: complex, n_max: int) -> np.ndarray:
    """Closed-form Fock matrix elements of D(z) on the window.

    <m|D(z)|n> = sqrt(n!/m!) z^{m-n} e^{-|z|^2/2} L_n^{(m-n)}(|z|^2) for
    m >= n, and the (-z*)-reflected form below the diagonal.
    """
    w1 = n_max + 1
    out = np.empty((w1, w1), dtype=complex)
    a2 = abs(z) ** 2
    pref = np.exp(-a2 / 2.0)
    for m in range(w1):
        for n in range(w1):
            if m >= n:
                amp = (
                    np.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
                    * z ** (m - n) * eval_genlaguerre(n, m - n, a2)
                )
            else:
                amp = (
                    np.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1)))
                    * (-np.conj(z)) ** (n - m) * eval_genlaguerre(m, n - m, a2)
                )
            out[m, n] = pref * amp
    return out


def theory_matrix(cfg: ExperimentConfig, window: int) -> np.ndarray | None:
    """Exact operation matrix on the reconstruction window, if closed-form."""
    if cfg.operation == "displacement":
        return displacement_theory(cfg.z, window)
    if cfg.operation == "identity":
        return np.eye(window + 1, dtype=complex)
    kraus = load_kraus_file(cfg.kraus_file)
    if len(kraus.kraus) == 1:
        k = kraus.kraus[0]
        w1 = min(window + 1, k.shape[0])
        out = np.zeros((window + 1, window + 1), dtype=complex)
        out[:w1, :w1] = k[:w1, :w1]
        return out
    return None  # general Kraus maps are estimated as Choi matrices


def load_kraus_file(path: str) -> KrausMap:
    """Kraus operators from a .npy stack of shape (n_kraus, d, d)."""
    arr = np.load(path)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ConfigError(
            f"kraus file must hold a (n, d, d) stack, got shape {arr.shape}"
        )
    return KrausMap(tuple(arr.astype(complex)))


def build_operation(cfg: ExperimentConfig, dim_cut: int):
    if cfg.operation == "displacement":
        m = displacement_matrix(cfg.z, dim_cut).matrix
        # the cropped exponential can exceed unit norm by rounding; rescale
        top = np.linalg.norm(m, 2)
        if top > 1.0:
            m = m / top
        return PureOperation(m)
    if cfg.operation == "identity":
        return PureOperation(np.eye(dim_cut, dtype=complex))
    kraus = load_kraus_file(cfg.kraus_file)
    if kraus.dim > dim_cut:
        raise ConfigError(
            f"kraus operators of dim {kraus.dim} exceed dim_cut {dim_cut}"
        )
    if kraus.dim < dim_cut:
        padded = []
        for k in kraus.kraus:
            p = np.zeros((dim_cut, dim_cut), dtype=complex)
            p[: kraus.dim, : kraus.dim] = k
            padded.append(p)
        kraus = KrausMap(tuple(padded))
    if len(kraus.kraus) == 1:
        return PureOperation(kraus.kraus[0])
    return kraus


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimResult:
    estimate: MatrixEstimate
    kind: str
    theory: np.ndarray | None
    paths: list
    wall_seconds: float
    dry_report: list = None


def _gaussian_block(cfg, state, block_id) -> QuadratureBlock:
    rng = substream(cfg.master_seed, block_id)
    n = cfg.samples_per_block
    phi1, phi2, x1, x2 = sample_quadratures(state, cfg.eta, n, rng)
    return QuadratureBlock(block_id, phi1, phi2, x1, x2)


def _fock_block(cfg, branches, weights, p_occ, block_id) -> QuadratureBlock:
    """Mixture sampling over pure bipartite branches (K_n psi) with heralding."""
    rng = substream(cfg.master_seed, block_id)
    n = cfg.samples_per_block
    herald = draw_heralds(p_occ, n, rng)
    nh = int(herald.sum())
    phi1 = np.zeros(n)
    phi2 = np.zeros(n)
    x1 = np.zeros(n)
    x2 = np.zeros(n)
    if nh:
        if len(branches) == 1:
            branch_idx = np.zeros(nh, dtype=int)
        else:
            w = np.asarray(weights) / np.sum(weights)
            branch_idx = rng.choice(len(branches), size=nh, p=w)
        hpos = np.flatnonzero(herald)
        for bi, phi_out in enumerate(branches):
            sel = hpos[branch_idx == bi]
            if sel.size == 0:
                continue
            p1, p2, s1, s2 = sample_fock_general(phi_out, cfg.eta, sel.size, rng)
            phi1[sel], phi2[sel], x1[sel], x2[sel] = p1, p2, s1, s2
    return QuadratureBlock(block_id, phi1, phi2, x1, x2, herald)


def _finite_block(cfg, r_out, quorum, p_occ, block_id) -> FiniteOutcomeBlock:
    rng = substream(cfg.master_seed, block_id)
    n = cfg.samples_per_block
    herald = draw_heralds(p_occ, n, rng)
    nh = int(herald.sum())
    obs1 = np.zeros(n, dtype=int)
    obs2 = np.zeros(n, dtype=int)
    out1 = np.zeros(n, dtype=int)
    out2 = np.zeros(n, dtype=int)
    if nh:
        o1, o2, u1, u2 = sample_finite(r_out, quorum, nh, rng)
        hpos = np.flatnonzero(herald)
        obs1[hpos], obs2[hpos], out1[hpos], out2[hpos] = o1, o2, u1, u2
    return FiniteOutcomeBlock(block_id, obs1, obs2, out1, out2, herald)


def _map_blocks(make_block, accumulate_one, block_ids, threads,
                keep_blocks=False):
    """Per-block sample + accumulate, merged in a scheduling-independent way.

    Sampled blocks are dropped after accumulation unless ``keep_blocks`` is
    set (needed only for the raw-sample dump); full-scale runs would
    otherwise hold gigabytes of records.
    """
    def work(bid):
        blk = make_block(bid)
        return accumulate_one(blk), (blk if keep_blocks else None)

    if threads <= 1:
        results = [work(b) for b in block_ids]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, block_ids))
    acc = results[0][0]
    for other, _ in results[1:]:
        acc = acc.merge(other)
    return acc, [blk for _, blk in results if blk is not None]


def run_simulate(
    cfg: ExperimentConfig,
    threads: int = 1,
    dry_run: bool = False,
    out_dir=".",
) -> SimResult:
    """Full simulate -> estimate -> report pipeline; returns the estimate and paths."""
    cfg.validate()
    t0 = time.perf_counter()
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    route = cfg.resolved_route()
    window = cfg.n_max

    if route == "finite":
        return _run_simulate_finite(cfg, threads, dry_run, out_dir, t0)

    dim_cut = cfg.resolved_dim_cut()
    beam = twin_beam(cfg.nbar, dim_cut)
    op = build_operation(cfg, dim_cut)
    theory = theory_matrix(cfg, window)
    kind = "pure" if isinstance(op, PureOperation) else "choi"

    if kind == "pure":
        phi_norm, p_occ = apply_pure(op, beam.psi)
        ref = cfg.resolved_reference()
        if ref is None:
            ref = select_reference(np.abs(phi_norm[: window + 1, : window + 1]))
        i0, j0 = ref
    else:
        branches = []
        weights = []
        for k in op.kraus:
            out = k @ beam.psi
            w = float(np.sum(np.abs(out) ** 2))
            if w > 0:
                branches.append(out / np.sqrt(w))
                weights.append(w)
        p_occ = float(sum(weights))
        i0 = j0 = 0

    if dry_run:
        lines = [f"config_hash = {config_hash(cfg)}", f"route = {route}",
                 f"dim_cut = {dim_cut}", f"estimate_kind = {kind}",
                 f"p_occurrence = {p_occ:.9g}", f"i0 = {i0}", f"j0 = {j0}",
                 f"truncation_deficit = {beam.deficit:.3e}"]
        if theory is not None:
            for n in range(window + 1):
                lines.append(f"theory A_{n}{n} = {theory[n, n]:.9g}")
        return SimResult(estimate=None, kind=kind, theory=theory, paths=[],
                         wall_seconds=time.perf_counter() - t0,
                         dry_report=lines)

    grid = GridSpec(cfg.resolved_half_width(), cfg.grid_spacing)
    kernel = build_homodyne_kernel(
        dim_cut, cfg.eta, grid, max_index=window, ridge=cfg.ridge,
        cache_dir=out_dir / "kernel-cache",
    )
    evaluator = HomodyneEvaluator(kernel)
    block_ids = list(range(cfg.blocks))

    if kind == "pure":
        if route == "gaussian":
            if cfg.operation == "displacement":
                state = displaced_twinbeam_gaussian(cfg.z, cfg.nbar)
            else:  # identity
                state = displaced_twinbeam_gaussian(0.0, cfg.nbar)
            make_block = lambda b: _gaussian_block(cfg, state, b)
        else:
            make_block = lambda b: _fock_block(cfg, [phi_norm], [1.0], p_occ, b)

        def accumulate_one(blk):
            return estimation.accumulate_pure([blk], beam.psi, i0, j0,
                                              evaluator, window)

        acc, blocks = _map_blocks(make_block, accumulate_one, block_ids,
                                  threads, keep_blocks=cfg.dump_samples)
        estimate = estimation.finalize_pure(acc, i0, j0,
                                            extra_deficit=beam.deficit)
        estimate = estimation.phase_fix(estimate)
    else:
        make_block = lambda b: _fock_block(cfg, branches, weights, p_occ, b)

        def accumulate_one(blk):
            return estimation.accumulate_choi([blk], beam.psi, evaluator, window)

        acc, blocks = _map_blocks(make_block, accumulate_one, block_ids,
                                  threads, keep_blocks=cfg.dump_samples)
        n_her, n_tr = acc.herald_counts()
        p_hat = n_her / n_tr
        p_std = float(np.sqrt(p_hat * (1 - p_hat) / n_tr))
        estimate = estimation.finalize_choi(acc, p_hat, p_std,
                                            extra_deficit=beam.deficit)

    paths = _write_outputs(cfg, estimate, kind, theory, out_dir,
                           blocks if cfg.dump_samples else None)
    return SimResult(estimate=estimate, kind=kind, theory=theory, paths=paths,
                     wall_seconds=time.perf_counter() - t0)


def _run_simulate_finite(cfg, threads, dry_run, out_dir, t0) -> SimResult:
    d = cfg.resolved_dim_cut() if cfg.dim_cut > 0 else cfg.n_max + 1
    if d > FINITE_ROUTE_MAX_DIM:
        raise ConfigError(
            f"finite route limited to dim <= {FINITE_ROUTE_MAX_DIM}, got {d}"
        )
    window = min(cfg.n_max, d - 1)
    beam = twin_beam(cfg.nbar, d, deficit_bound=1.0)
    psi = beam.psi / np.linalg.norm(beam.psi)
    op = build_operation(cfg, d)
    quorum = build_finite_quorum(d)
    evaluator = FiniteEvaluator(quorum)
    kind = "pure" if isinstance(op, PureOperation) else "choi"
    theory = theory_matrix(cfg, window)

    if kind == "pure":
        phi_norm, p_occ = apply_pure(op, psi)
        r_out = np.outer(phi_norm.reshape(-1), phi_norm.reshape(-1).conj())
        ref = cfg.resolved_reference()
        if ref is None:
            ref = select_reference(np.abs(phi_norm[: window + 1, : window + 1]))
        i0, j0 = ref
    else:
        r_out = apply_kraus_bipartite(op, psi)
        p_occ = float(np.trace(r_out).real)
        r_out = r_out / p_occ
        i0 = j0 = 0

    if dry_run:
        lines = [f"config_hash = {config_hash(cfg)}", "route = finite",
                 f"dim = {d}", f"estimate_kind = {kind}",
                 f"p_occurrence = {p_occ:.9g}", f"i0 = {i0}", f"j0 = {j0}"]
        return SimResult(estimate=None, kind=kind, theory=theory, paths=[],
                         wall_seconds=time.perf_counter() - t0,
                         dry_report=lines)

    block_ids = list(range(cfg.blocks))
    make_block = lambda b: _finite_block(cfg, r_out, quorum, p_occ, b)
    if kind == "pure":
        def accumulate_one(blk):
            return estimation.accumulate_pure([blk], psi, i0, j0, evaluator,
                                              window)

        acc, blocks = _map_blocks(make_block, accumulate_one, block_ids, threads)
        estimate = estimation.phase_fix(estimation.finalize_pure(acc, i0, j0))
    else:
        def accumulate_one(blk):
            return estimation.accumulate_choi([blk], psi, evaluator, window)

        acc, blocks = _map_blocks(make_block, accumulate_one, block_ids, threads)
        n_her, n_tr = acc.herald_counts()
        p_hat = n_her / n_tr
        p_std = float(np.sqrt(p_hat * (1 - p_hat) / n_tr))
        estimate = estimation.finalize_choi(acc, p_hat, p_std)

    paths = _write_outputs(cfg, estimate, kind, theory, out_dir, None)
    return SimResult(estimate=estimate, kind=kind, theory=theory, paths=paths,
                     wall_seconds=time.perf_counter() - t0)


def _write_outputs(cfg, estimate, kind, theory, out_dir, dump_blocks):
    paths = []
    result_path = out_dir / f"{cfg.out_prefix}.result.txt"
    result_path.write_text(report.render_result(cfg, estimate, kind))
    paths.append(result_path)
    if kind == "pure":
        if theory is None:
            theory = np.zeros_like(estimate.values)
        diag_path = out_dir / f"{cfg.out_prefix}.diagonal.csv"
        diag_path.write_text(
            report.render_plotdata_diagonal(estimate.values,
                                            estimate.std_errors, theory)
        )
        paths.append(diag_path)
        mat_path = out_dir / f"{cfg.out_prefix}.matrix.csv"
        mat_path.write_text(
            report.render_plotdata_matrix(estimate.values, estimate.std_errors)
        )
        paths.append(mat_path)
    if dump_blocks is not None:
        dump_path = out_dir / f"{cfg.out_prefix}.samples.csv"
        sampling.write_sample_dump(dump_path, dump_blocks)
        paths.append(dump_path)
    return paths


def emit_plotdata(result_path, out_dir=".") -> list:
    """Regenerate plot-data files from a result document.

    The document stores 9 significant digits, so regenerated files can differ
    from the originals in the last digit.
    """
    result_path = pathlib.Path(result_path)
    if not result_path.exists():
        raise ConfigError(f"result document {result_path} does not exist")
    doc = report.parse_result(result_path.read_text())
    if doc.kind != "pure":
        raise ConfigError(
            "plot data is defined for pure-operation results; this document "
            "holds a Choi-matrix estimate"
        )
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    window = doc.values.shape[0] - 1
    theory = theory_matrix(doc.config, window)
    if theory is None:
        theory = np.zeros_like(doc.values)
    prefix = doc.config.out_prefix
    diag = out_dir / f"{prefix}.diagonal.csv"
    diag.write_text(report.render_plotdata_diagonal(doc.values, doc.std_errors,
                                                    theory))
    mat = out_dir / f"{prefix}.matrix.csv"
    mat.write_text(report.render_plotdata_matrix(doc.values, doc.std_errors))
    return [diag, mat]


# ---------------------------------------------------------------------------
# verification suites


def _check(lines, name, value, bound, ok=None):
    ok = (value <= bound) if ok is None else ok
    lines.append(
        f"check={name} status={'pass' if ok else 'fail'} "
        f"value={value:.6g} bound={bound:.6g}"
    )
    return ok


def verify_unbiasedness(seed: int = 7) -> tuple[bool, list]:
    """Exact estimator-chain unbiasedness at d = 2 and 3, brute force."""
    lines = []
    ok = True
    rng = np.random.default_rng(seed)
    for d in (2, 3):
        quorum = build_finite_quorum(d)
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        a = a / (np.linalg.svd(a, compute_uv=False)[0] * 1.25)
        psi = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        psi = psi / np.linalg.norm(psi)
        phi, p = apply_pure(PureOperation(a), psi)
        est = exact_pure_estimate(phi, p, psi, 0, 0, quorum)
        _, dist = phase_align(a, est)
        ok &= _check(lines, f"pure-chain-d{d}", dist, 1e-10)

        ks = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
              for _ in range(2)]
        norm = np.linalg.eigvalsh(sum(k.conj().T @ k for k in ks))[-1]
        kmap = KrausMap(tuple(k / np.sqrt(norm * 1.1) for k in ks))
        r_psi = apply_kraus_bipartite(kmap, psi)
        est_choi = exact_choi_estimate(r_psi, psi, quorum)
        truth = kraus_to_choi(kmap).matrix
        dist = float(np.max(np.abs(est_choi - truth)))
        ok &= _check(lines, f"choi-chain-d{d}", dist, 1e-10)
    return ok, lines


def verify_choi(seed: int = 11) -> tuple[bool, list]:
    """Choi conversions and the consistency triangle at d = 3."""
    from optomo.maps import choi_normalize, choi_to_kraus

    lines = []
    ok = True
    rng = np.random.default_rng(seed)
    d = 3
    ks = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(2)]
    norm = np.linalg.eigvalsh(sum(k.conj().T @ k for k in ks))[-1]
    kmap = KrausMap(tuple(k / np.sqrt(norm) for k in ks))
    choi = kraus_to_choi(kmap)
    worst = 0.0
    for _ in range(20):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = g @ g.conj().T
        rho = rho / np.trace(rho)
        worst = max(worst, float(np.max(np.abs(
            map_from_choi(choi, rho) - kmap.apply(rho)))))
    ok &= _check(lines, "choi-action", worst, 1e-12)

    psi = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    psi = psi / np.linalg.norm(psi)
    tri = choi_normalize(apply_kraus_bipartite(kmap, psi), psi)
    dist = float(np.max(np.abs(tri.matrix - choi.matrix)))
    ok &= _check(lines, "consistency-triangle", dist, 1e-10)

    back = choi_to_kraus(choi)
    worst = 0.0
    for _ in range(20):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = g @ g.conj().T
        rho = rho / np.trace(rho)
        worst = max(worst, float(np.max(np.abs(
            back.apply(rho) - kmap.apply(rho)))))
    ok &= _check(lines, "kraus-roundtrip-action", worst, 1e-10)
    return ok, lines


def calibration_worst_error(eta: float, dim_cut: int = 16,
                            half_width: float = 12.0) -> float:
    """Worst kernel-recovery error over the calibration family.

    States: vacuum, coherent(alpha = 1), thermal(nbar = 1); their
    eta-smeared quadrature distributions are exact Gaussians, integrated
    against the kernels over 256 phase nodes.  Checked for all matrix
    elements with indices <= dim_cut / 2.
    """
    from math import factorial

    grid = GridSpec(half_width)
    kernel = build_homodyne_kernel(dim_cut, eta, grid,
                                   max_index=dim_cut // 2)
    sig2 = noise_sigma2(eta)
    x = kernel.x
    dx = grid.spacing
    nphi = 256
    phis = np.arange(nphi) * 2.0 * np.pi / nphi
    alpha = 1.0
    nbar = 1.0
    states = {
        "vacuum": (lambda phi: 0.0, 0.25 + sig2,
                   lambda n, m: 1.0 if n == m == 0 else 0.0),
        "coherent": (lambda phi: np.real(alpha * np.exp(-1j * phi)),
                     0.25 + sig2,
                     lambda n, m: np.exp(-abs(alpha) ** 2) * alpha ** (n + m)
                     / np.sqrt(factorial(n) * factorial(m))),
        "thermal": (lambda phi: 0.0, (2 * nbar + 1) / 4.0 + sig2,
                    lambda n, m: (nbar / (nbar + 1)) ** n / (nbar + 1)
                    if n == m else 0.0),
    }
    worst = 0.0
    half = dim_cut // 2
    for mean_fn, var, rho_fn in states.values():
        pdfs = np.array([
            np.exp(-0.5 * (x - mean_fn(phi)) ** 2 / var)
            / np.sqrt(2 * np.pi * var)
            for phi in phis
        ])  # (nphi, G)
        for n in range(half + 1):
            for m in range(n, half + 1):
                f = kernel.pattern(n, m)
                xint = pdfs @ f * dx  # (nphi,)
                est = np.mean(xint * np.exp(1j * (m - n) * phis))
                worst = max(worst, abs(est - rho_fn(n, m)))
    return worst


def verify_kernels(etas=(1.0, 0.9, 0.7)) -> tuple[bool, list]:
    lines = []
    ok = True
    for eta in etas:
        worst = calibration_worst_error(eta)
        ok &= _check(lines, f"kernel-calibration-eta{eta}", worst, 1e-3)
    return ok, lines


def verify_sampler_moments(seed: int = 23) -> tuple[bool, list]:
    """Gaussian-sampler moments against closed forms (4 sigma z-tests)."""
    lines = []
    ok = True
    n = 10**6
    for eta in (1.0, 0.9, 0.7):
        vac = displaced_twinbeam_gaussian(0.0, 0.0)
        rng = sampling.substream(seed, 0)
        _, _, x1, _ = sample_quadratures(vac, eta, n, rng)
        var = float(np.var(x1))
        target = 1.0 / (4.0 * eta)
        tol = 4.0 * target * np.sqrt(2.0 / n)
        ok &= _check(lines, f"vacuum-variance-eta{eta}", abs(var - target), tol)
    nbar = 3.0
    beam = displaced_twinbeam_gaussian(0.0, nbar)
    rng = sampling.substream(seed, 1)
    _, _, x1, x2 = sample_quadratures(beam, 1.0, n, rng)
    target = (2.0 * nbar + 1.0) / 4.0
    tol = 4.0 * target * np.sqrt(2.0 / n)
    ok &= _check(lines, "twinbeam-reduced-variance", abs(float(np.var(x1)) - target),
                 tol)
    rng = sampling.substream(seed, 2)
    _, _, y1, y2 = sample_quadratures(beam, 1.0, n, rng, phases=(0.0, 0.0))
    squeezed = float(np.var(y1 - y2))
    ok &= _check(lines, "two-mode-squeezing",
                 squeezed, float(np.var(y1) + np.var(y2)))
    return ok, lines


VERIFY_SUITES = {
    "unbiasedness": verify_unbiasedness,
    "choi": verify_choi,
    "kernels": verify_kernels,
    "sampler-moments": verify_sampler_moments,
}


def run_verify(suite: str, **kwargs) -> list:
    """Run one verification suite; raises VerificationFailure on any failure."""
    if suite not in VERIFY_SUITES:
        raise ConfigError(
            f"unknown suite {suite!r}; available: {sorted(VERIFY_SUITES)}"
        )
    ok, lines = VERIFY_SUITES[suite](**kwargs)
    if not ok:
        raise VerificationFailure("\n".join(lines))
    return lines


def load_config_or_preset(name_or_path: str) -> ExperimentConfig:
    """Treat the argument as a preset name first, then as a config file path."""
    from optomo.config import PRESETS, parse_config

    if name_or_path in PRESETS:
        return load_preset(name_or_path)
    path = pathlib.Path(name_or_path)
    if not path.exists():
        raise ConfigError(f"no preset or config file named {name_or_path!r}")
    return parse_config(path.read_text())
