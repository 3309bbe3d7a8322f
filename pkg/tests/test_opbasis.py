"""Finite matrix model: bases, predual maps, Choi spectra."""

import numpy as np
import pytest

from cpflow.halfline import ExpKernelVector, inner_product
from cpflow.opbasis import (
    ChoiVerdict,
    MatrixModel,
    NonInvertibleSystemError,
    choi_matrix,
    choi_min_eig,
    identity_superop,
    orthonormal_span,
    tail_overlap,
    transpose_superop,
)
from cpflow.tensorspace import LambdaSequence, tail_weight_product


@pytest.fixture(scope="module")
def model():
    return MatrixModel(n_factors=3, factor_dim=2)


@pytest.fixture(scope="module")
def span_model():
    return MatrixModel(n_factors=3, factor_dim=2, h_kind="span")


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


class TestBases:
    def test_orthonormal_span_gram(self):
        basis = orthonormal_span([0.5, 1.5, 2.5])
        gram = np.array([[inner_product(u, v) for v in basis]
                         for u in basis])
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)

    def test_tail_overlap_full_range(self):
        f = ExpKernelVector([(1.0, 1.0)])
        assert tail_overlap(f, f, 0.0) == pytest.approx(
            inner_product(f, f))

    def test_damping_is_contraction(self, model):
        evals = np.linalg.eigvalsh(model.damping)
        assert evals[0] > 0.0
        assert evals[-1] < 1.0

    def test_cell_damping_diagonal(self, model):
        off = model.h_damping - np.diag(np.diag(model.h_damping))
        assert np.linalg.norm(off) == 0.0

    def test_cut_is_projection_at_edges(self, model):
        for t in (0.25, 0.5):
            p = model.cut(t)
            np.testing.assert_allclose(p @ p, p, atol=1e-14)

    def test_cut_rejects_non_edges(self, model):
        with pytest.raises(ValueError):
            model.cut(0.3)

    def test_cut_commutes_with_damping(self, model):
        p = model.cut(0.25)
        e = model.h_damping
        assert np.linalg.norm(p @ e - e @ p) == 0.0

    def test_reference_fidelity_below_one(self, model):
        _, fid = model.reference_coords
        assert 0.0 < fid < 1.0

    def test_delta_matrix_trace(self, model):
        # compression of the infinite damping product against the exact tail
        tail = tail_weight_product(model.seq, model.n_factors + 1)
        evals = np.linalg.eigvalsh(model.delta_matrix)
        assert evals[0] > 0.0
        assert evals[-1] <= tail + 1e-12


class TestPredualMaps:
    def test_pred_pi_positive(self, model):
        rng = np.random.default_rng(0)
        rho = random_density(rng, model.dim_k)
        mu = model.pred_pi(rho)
        assert np.linalg.eigvalsh(mu)[0] >= -1e-12

    def test_pi_superop_matches_pred_pi(self, model):
        rng = np.random.default_rng(1)
        rho = random_density(rng, model.dim_k)
        direct = model.pred_pi(rho)
        via = (model.pi_superop @ rho.reshape(-1)).reshape(model.dim_h,
                                                           model.dim_h)
        np.testing.assert_allclose(direct, via, atol=1e-12)

    def test_lambda_superop_matches_pred_lambda(self, model):
        rng = np.random.default_rng(2)
        mu = random_density(rng, model.dim_h)
        direct = model.pred_lambda(mu)
        via = (model.lambda_superop() @ mu.reshape(-1)).reshape(
            model.dim_k, model.dim_k)
        np.testing.assert_allclose(direct, via, atol=1e-12)

    def test_lambda_of_identity_is_damping_trace(self, model):
        mu = np.eye(model.dim_h, dtype=complex)
        out = model.pred_lambda(mu)
        expected = np.eye(model.dim_k) * np.trace(model.h_damping)
        np.testing.assert_allclose(out, expected, atol=1e-12)


class TestWeightSuperop:
    def test_weight_preserves_positivity(self, model):
        rng = np.random.default_rng(3)
        omega = model.weight_superop()
        for _ in range(5):
            rho = random_density(rng, model.dim_k)
            mu = (omega @ rho.reshape(-1)).reshape(model.dim_h,
                                                   model.dim_h)
            assert np.linalg.eigvalsh(0.5 * (mu + mu.conj().T))[0] >= -1e-10

    def test_divergent_label_rejected(self, model):
        with pytest.raises(NonInvertibleSystemError):
            model.weight_superop(z=1e6)

    def test_xi_eta_normalization(self, model):
        nu = np.zeros((model.dim_h, model.dim_h), dtype=complex)
        nu[0, 0] = 1.0
        eta, d_val = model.xi_eta(nu)
        assert 0.0 < d_val < 1.0
        np.testing.assert_allclose(eta, eta.conj().T, atol=1e-12)

    def test_boundary_rep_cp_at_cell_edges(self, model):
        omega = model.weight_superop()
        for t in (0.5, 0.25):
            rep, cond = model.boundary_rep(omega, t)
            verdict = choi_min_eig(rep, model.dim_k, model.dim_h)
            assert verdict.completely_positive
            assert cond < 1e6


class TestGammaModel:
    def test_gamma_requires_span_variant(self, model):
        with pytest.raises(NotImplementedError):
            model.gamma_tensor

    def test_gamma_identity_relation(self, span_model):
        m = span_model.factor_dim
        ident = np.eye(m, dtype=complex).reshape(-1)
        g2 = span_model.gamma_tensor.reshape(m * m, m * m)
        image = (g2 @ ident).reshape(m, m)
        expected = np.eye(m) - span_model.damping
        np.testing.assert_allclose(image, expected, atol=1e-12)

    def test_pred_gamma_positive(self, span_model):
        rng = np.random.default_rng(4)
        mu = random_density(rng, span_model.dim_h)
        out = span_model.pred_gamma(mu)
        herm = 0.5 * (out + out.conj().T)
        assert np.linalg.eigvalsh(herm)[0] >= -1e-10


class TestChoi:
    def test_identity_map(self):
        v = choi_min_eig(identity_superop(3), 3, 3)
        assert v.min_eigenvalue == pytest.approx(0.0, abs=1e-12)
        assert v.completely_positive

    def test_transpose_map(self):
        v = choi_min_eig(transpose_superop(2), 2, 2)
        assert v.min_eigenvalue == pytest.approx(-1.0)
        assert not v.completely_positive

    def test_shape_guard(self):
        with pytest.raises(ValueError):
            choi_matrix(np.eye(4), 3, 3)

    def test_conjugation_choi_rank_one(self):
        rng = np.random.default_rng(5)
        k = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        superop = np.kron(k, k.conj())
        v = choi_min_eig(superop, 2, 2)
        assert v.completely_positive
