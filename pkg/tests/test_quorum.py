import numpy as np
import pytest

from optomo.errors import (
    IllConditionedKernelError,
    NonInvertibleEntanglerError,
    UnphysicalDeconvolutionError,
)
from optomo.fock import noise_sigma2
from optomo.maps import twin_beam
from optomo.quorum import (
    GridSpec,
    build_finite_quorum,
    build_homodyne_kernel,
    estimator_coefficients,
    expand_in_quorum,
    load_homodyne_kernel,
)

from oracles import random_density


class TestFiniteQuorum:
    def test_qubit_family(self):
        q = build_finite_quorum(2)
        assert len(q) == 4
        gram = np.einsum("iab,jab->ij", q.observables.conj(), q.observables)
        assert np.linalg.matrix_rank(gram, tol=1e-8) == 4

    def test_qutrit_span(self):
        q = build_finite_quorum(3)
        gram = np.einsum("iab,jab->ij", q.observables.conj(), q.observables)
        assert np.linalg.matrix_rank(gram, tol=1e-8) == 9

    def test_biorthogonality(self):
        for d in (2, 3, 4):
            q = build_finite_quorum(d)
            bio = np.einsum("iab,jab->ij", q.duals.conj(), q.observables)
            assert np.max(np.abs(bio - np.eye(d * d))) < 1e-10

    def test_observables_hermitian(self):
        q = build_finite_quorum(3)
        for o in q.observables:
            assert np.allclose(o, o.conj().T)

    def test_expand_basis_element(self):
        q = build_finite_quorum(2)
        coeffs = expand_in_quorum(q.observables[1], q)
        expect = np.zeros(4)
        expect[1] = 1.0
        assert np.allclose(coeffs, expect, atol=1e-12)

    def test_expand_resum(self, rng):
        q = build_finite_quorum(3)
        h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        h = h + h.conj().T
        coeffs = expand_in_quorum(h, q)
        resum = np.einsum("l,lab->ab", coeffs, q.observables)
        assert np.max(np.abs(resum - h)) < 1e-10

    def test_expand_zero(self):
        q = build_finite_quorum(2)
        assert np.allclose(expand_in_quorum(np.zeros((2, 2)), q), 0.0)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_single_mode_unbiasedness_brute_force(self, d, rng):
        # expectation of the dyad estimator over all outcomes = Tr[rho H],
        # enumerated outcome by outcome
        q = build_finite_quorum(d)
        rho = random_density(rng, d)
        pairs = [(a, b) for a in range(d) for b in range(d)]
        got = np.zeros(len(pairs), dtype=complex)
        for k in range(len(q)):
            evals, evecs = q.eigenvalues[k], q.eigenvectors[k]
            born = np.real(np.einsum("im,ij,jm->m", evecs.conj(), rho, evecs))
            for m in range(d):
                est = q.dyad_estimates(np.array([k]), np.array([m]), pairs)[0]
                got += q.weights[k] * born[m] * est
        want = np.array([rho[b, a] for (a, b) in pairs])
        assert np.max(np.abs(got - want)) < 1e-12


class TestEstimatorCoefficients:
    def test_maximally_entangled_single_term(self):
        d = 4
        psi = np.eye(d) / np.sqrt(d)
        for j in range(d):
            c = estimator_coefficients(0, j, 0, 0, psi)
            expect = np.zeros(d)
            expect[j] = np.sqrt(d)
            assert np.allclose(c.mode2_coefficients, expect, atol=1e-12)
            assert c.truncation_deficit == 0.0

    def test_twin_beam_diagonal_coefficient(self):
        beam = twin_beam(3.0, 16, deficit_bound=1.0)
        for j in range(6):
            c = estimator_coefficients(0, j, 0, 0, beam.psi)
            assert abs(c.mode2_coefficients[j] - 2.0 * (4.0 / 3.0) ** (j / 2.0)) < 1e-10
            off = np.delete(c.mode2_coefficients, j)
            assert np.max(np.abs(off)) < 1e-14

    def test_a_coefficient_factorisation(self, rng):
        # a_ij(kl) = <i|Q^dag(k)|i0> <psi^{-1*}(j)|Q^dag(l)|j0> entrywise
        d = 3
        q = build_finite_quorum(d)
        psi = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        psi = psi / np.linalg.norm(psi)
        psi_inv = np.linalg.inv(psi)
        i, j, i0, j0 = 1, 2, 0, 0
        c = estimator_coefficients(i, j, i0, j0, psi)
        for k in range(len(q)):
            for l in range(len(q)):
                first = np.conj(q.duals[k][i0, i])
                second = sum(
                    psi_inv[b, j] * np.conj(q.duals[l][j0, b]) for b in range(d)
                )
                assert abs(c.a(k, l, q) - first * second) < 1e-12

    def test_truncation_deficit_reported(self, rng):
        psi = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        psi = psi / np.linalg.norm(psi)
        c = estimator_coefficients(0, 0, 0, 0, psi, k_max=2)
        assert 0.0 < c.truncation_deficit < 1.0
        assert c.mode2_coefficients.size == 3

    def test_singular_entangler_propagates(self):
        psi = np.diag([1.0, 0.0])
        with pytest.raises(NonInvertibleEntanglerError):
            estimator_coefficients(0, 0, 0, 0, psi)


class TestGridSpec:
    def test_points_symmetric(self):
        g = GridSpec(2.0, 0.5)
        assert np.allclose(g.points, np.arange(-2.0, 2.25, 0.5))

    def test_rejects_bad(self):
        with pytest.raises(ValueError):
            GridSpec(-1.0)


@pytest.fixture(scope="module")
def kernel():
    return build_homodyne_kernel(16, 0.9, GridSpec(12.0), max_index=8)


class TestHomodyneKernel:

    def test_recovery_is_identity_on_window(self, kernel):
        for delta, rec in kernel.recovery.items():
            keep = rec.shape[1]
            assert np.max(np.abs(rec[:keep] - np.eye(keep))) < 5e-3

    def test_pattern_symmetric(self, kernel):
        assert np.array_equal(kernel.pattern(2, 5), kernel.pattern(5, 2))

    def test_pattern_tables_finite(self, kernel):
        for t in kernel.tables.values():
            assert np.all(np.isfinite(t))

    def test_dyad_estimates_phase_factor(self, kernel):
        x = np.array([0.3, -1.2])
        phi = np.array([0.7, 2.1])
        vals = kernel.dyad_estimates(x, phi, [(2, 0), (0, 2), (1, 1)])
        f02 = np.interp(x, kernel.x, kernel.pattern(0, 2))
        assert np.allclose(vals[:, 0], f02 * np.exp(2j * phi))
        assert np.allclose(vals[:, 1], f02 * np.exp(-2j * phi))
        f11 = np.interp(x, kernel.x, kernel.pattern(1, 1))
        assert np.allclose(vals[:, 2], f11)

    def test_missing_row_raises(self, kernel):
        with pytest.raises(KeyError):
            kernel.pattern(0, 12)

    def test_eta_below_half_rejected(self):
        with pytest.raises(UnphysicalDeconvolutionError):
            build_homodyne_kernel(16, 0.5, GridSpec(12.0))

    def test_catastrophic_eta_trips_gate(self):
        with pytest.raises(IllConditionedKernelError) as err:
            build_homodyne_kernel(32, 0.505, GridSpec(12.0), max_index=16)
        assert err.value.delta >= 0

    def test_cache_roundtrip(self, kernel, tmp_path):
        kernel.save(tmp_path / "k.npz")
        loaded = load_homodyne_kernel(tmp_path / "k.npz")
        assert loaded.dim_cut == kernel.dim_cut
        assert loaded.eta == kernel.eta
        for d in kernel.tables:
            assert np.array_equal(loaded.tables[d], kernel.tables[d])

    def test_cache_dir_reuse_and_regeneration(self, tmp_path):
        k1 = build_homodyne_kernel(12, 0.95, GridSpec(8.0), max_index=4,
                                   cache_dir=tmp_path)
        files = list(tmp_path.glob("kernel-*.npz"))
        assert len(files) == 1
        k2 = build_homodyne_kernel(12, 0.95, GridSpec(8.0), max_index=4,
                                   cache_dir=tmp_path)
        assert np.array_equal(k1.tables[0], k2.tables[0])
        files[0].write_bytes(b"corrupt")
        k3 = build_homodyne_kernel(12, 0.95, GridSpec(8.0), max_index=4,
                                   cache_dir=tmp_path)
        assert np.allclose(k1.tables[0], k3.tables[0])


def phase_averaged_recovery(kernel, n, m, mean_of_phi, var, nphi=256):
    """Independent oracle: integrate f_nm against an exact Gaussian smeared
    quadrature law over the phase circle."""
    x = kernel.x
    dx = kernel.grid.spacing
    phis = np.arange(nphi) * 2 * np.pi / nphi
    f = kernel.pattern(n, m)
    acc = 0.0 + 0.0j
    for phi in phis:
        pdf = np.exp(-0.5 * (x - mean_of_phi(phi)) ** 2 / var) / np.sqrt(
            2 * np.pi * var)
        acc += np.exp(1j * (m - n) * phi) * np.sum(pdf * f) * dx
    return acc / nphi


class TestKernelCalibration:
    def test_vacuum_eta1(self):
        kernel = build_homodyne_kernel(16, 1.0, GridSpec(12.0), max_index=8)
        est = phase_averaged_recovery(kernel, 0, 0, lambda phi: 0.0, 0.25)
        assert abs(est - 1.0) < 1e-3

    def test_coherent_eta09(self):
        kernel = build_homodyne_kernel(16, 0.9, GridSpec(12.0), max_index=8)
        var = 0.25 + noise_sigma2(0.9)
        est = phase_averaged_recovery(
            kernel, 0, 1, lambda phi: np.cos(phi), var)
        assert abs(est - np.exp(-1.0)) < 1e-3

    def test_thermal_eta08(self):
        kernel = build_homodyne_kernel(16, 0.8, GridSpec(12.0), max_index=8)
        var = 0.75 + noise_sigma2(0.8)
        for n in range(6):
            est = phase_averaged_recovery(kernel, n, n, lambda phi: 0.0, var)
            assert abs(est - 0.5**(n + 1)) < 1e-3

    def test_eta_variance_monotonicity(self):
        # same data volume: lower efficiency costs estimator variance
        rng = np.random.default_rng(5)
        n = 20_000
        variances = {}
        for eta in (0.9, 0.7):
            kernel = build_homodyne_kernel(16, eta, GridSpec(12.0), max_index=8)
            sig = np.sqrt(noise_sigma2(eta))
            x = rng.standard_normal(n) * np.sqrt(0.25 + sig**2)
            vals = np.interp(x, kernel.x, kernel.pattern(2, 2))
            variances[eta] = float(np.var(vals))
        assert variances[0.7] > variances[0.9]


class TestFig2BiasAudit:
    """Exact end-to-end bias of the homodyne chain at the experiment configs.

    Uses the kernel recovery matrices and the exact Fock representation of
    the displaced twin-beam; statistical errors at the acceptance sample
    sizes are ~3e-3 and larger, so the deterministic bias must sit well
    below that.
    """

    @pytest.mark.parametrize("nbar,eta,dim_cut", [(5.0, 0.9, 48), (3.0, 0.7, 32)])
    def test_chain_bias_small(self, nbar, eta, dim_cut):
        from optomo.maps import displacement_matrix
        from optomo.pipeline import displacement_theory

        n_max = 7
        kernel = build_homodyne_kernel(
            dim_cut, eta, GridSpec(6.0 * (1 + nbar)), max_index=n_max)
        beam = twin_beam(nbar, dim_cut)
        dop = displacement_matrix(1.0, dim_cut).matrix
        phi = dop @ beam.psi  # unnormalised output, A_ij = phi_ij / psi_jj
        diag = beam.diagonal
        rec = kernel.recovery
        truth = displacement_theory(1.0, n_max)
        worst = 0.0
        for i in range(n_max + 1):
            for j in range(n_max + 1):
                d1, d2 = i, j  # kernel offsets |i - i0| and |j - j0|, i0 = j0 = 0
                # E[h1 h2] (times p): kernels pick joint elements with mode-1
                # pair (b + d1, b) and mode-2 pair (dd + d2, dd); the kernel
                # rows in use have lower index 0, i.e. recovery column 0
                val = 0.0 + 0.0j
                for b in range(dim_cut - d1):
                    c1 = rec[d1][b, 0]
                    if abs(c1) < 1e-14:
                        continue
                    for dd in range(dim_cut - d2):
                        c2 = rec[d2][dd, 0]
                        if abs(c2) < 1e-14:
                            continue
                        val += phi[b + d1, dd + d2] * np.conj(phi[b, dd]) * c1 * c2
                # kappa = p/|phi_00| over the unnormalised phi; E over the
                # normalised state divides by p, so A_hat = val / (|phi_00|
                # psi_jj) up to the reference phase
                a_hat = val * np.exp(1j * np.angle(phi[0, 0])) / (
                    abs(phi[0, 0]) * diag[j])
                worst = max(worst, abs(a_hat - truth[i, j]))
        assert worst < 5e-4
