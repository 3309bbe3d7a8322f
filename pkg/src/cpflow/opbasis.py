"""Finite operator-space model for weight maps and positivity checks.

The truncated tensor space is modelled as N factors of an m-dimensional
span of decaying exponentials, orthonormalized exactly.  The extra
half-line slot of the big space can carry either the same kind of span
("span") or an orthonormal family of cell indicators ("cells").  With
cells, multiplication by exp(-x) and the spectral tail cuts are exact
commuting diagonal matrices, which is what makes the generalized boundary
representation of a series weight manifestly completely positive: the
resolvent rearranges into the positive series

    cut o sum_n (pihat lambdahat_complement)^n pihat.

Functionals are identified with density matrices: rho(A) = tr(rho_d A).
Maps between functional spaces are stored as superoperator matrices over
row-major vectorized densities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .halfline import (
    ExpKernelVector,
    GammaImage,
    RankOneSum,
    inner_product,
)
from .tensorspace import LambdaSequence, tail_weight_product


class NonInvertibleSystemError(np.linalg.LinAlgError):
    """The resolvent system of a boundary representation is singular."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


def tail_overlap(f: ExpKernelVector, g: ExpKernelVector, t: float) -> complex:
    """integral_t^inf conj(f) g dx in closed form."""
    total = 0.0 + 0.0j
    for c, mu in f.terms:
        for d, nu in g.terms:
            s = np.conj(mu) + nu
            total += np.conj(c) * d * np.exp(-s * t) / s
    return total


def orthonormal_span(rates) -> list[ExpKernelVector]:
    """Exact orthonormal basis of span{exp(-r x)} via Cholesky of the Gram."""
    rates = [complex(r) for r in rates]
    m = len(rates)
    gram = np.empty((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            gram[i, j] = 1.0 / (np.conj(rates[i]) + rates[j])
    chol = np.linalg.cholesky(gram)
    coeff = np.linalg.inv(chol).conj().T  # columns: coordinates of the basis
    return [ExpKernelVector([(coeff[i, k], rates[i]) for i in range(m)])
            for k in range(m)]


def _exp_cell_integral(rate: complex, a: float, b: float) -> complex:
    """integral_a^b exp(-rate x) dx."""
    return (np.exp(-rate * a) - np.exp(-rate * b)) / rate


DEFAULT_EDGES = (0.0, 0.25, 0.5, 2.0)


@dataclass(frozen=True)
class MatrixModel:
    """Truncated model with n_factors tensor slots of dimension factor_dim.

    h_kind selects the half-line slot basis: "cells" (indicator functions
    over h_edges, needed for spectral cuts) or "span" (same exponential
    span as the tensor slots, needed for the damped translation average).
    """

    n_factors: int = 4
    factor_dim: int = 2
    seq: LambdaSequence = LambdaSequence("linear")
    h_kind: str = "cells"
    h_edges: tuple[float, ...] = DEFAULT_EDGES

    @property
    def dim_k(self) -> int:
        return self.factor_dim ** self.n_factors

    @property
    def h_dim(self) -> int:
        if self.h_kind == "cells":
            return len(self.h_edges) - 1
        return self.factor_dim

    @property
    def dim_h(self) -> int:
        return self.dim_k * self.h_dim

    @cached_property
    def basis(self) -> list[ExpKernelVector]:
        rates = [0.5 + j for j in range(self.factor_dim)]
        return orthonormal_span(rates)

    @cached_property
    def damping(self) -> np.ndarray:
        """Compression of multiplication by exp(-x) to the tensor-slot span."""
        m = self.factor_dim
        out = np.empty((m, m), dtype=complex)
        for i in range(m):
            for j in range(m):
                out[i, j] = inner_product(self.basis[i],
                                          self.basis[j].shifted(1.0))
        return 0.5 * (out + out.conj().T)

    @cached_property
    def h_damping(self) -> np.ndarray:
        """Multiplication by exp(-x) compressed to the half-line slot."""
        if self.h_kind == "span":
            return self.damping
        e = self.h_edges
        vals = [_exp_cell_integral(1.0, e[j], e[j + 1]).real / (e[j + 1] - e[j])
                for j in range(self.h_dim)]
        return np.diag(vals).astype(complex)

    @cached_property
    def cross_overlap(self) -> np.ndarray:
        """(tensor-slot basis_i, half-line basis_j) overlap matrix."""
        if self.h_kind == "span":
            return np.eye(self.factor_dim, dtype=complex)
        e = self.h_edges
        out = np.empty((self.factor_dim, self.h_dim), dtype=complex)
        for i, vec in enumerate(self.basis):
            for j in range(self.h_dim):
                width = e[j + 1] - e[j]
                val = sum(np.conj(c) * _exp_cell_integral(np.conj(mu),
                                                          e[j], e[j + 1])
                          for c, mu in vec.terms)
                out[i, j] = val / np.sqrt(width)
        return out

    @cached_property
    def reference_coords(self) -> tuple[np.ndarray, float]:
        """Span coordinates of the first tail reference vector, normalized.

        Returns (unit coordinate vector, projection fidelity).
        """
        ref = self.seq.reference(self.n_factors + 1)
        raw = np.array([inner_product(b, ref) for b in self.basis])
        fid = float(np.linalg.norm(raw))
        return raw / fid, fid

    @cached_property
    def delta_matrix(self) -> np.ndarray:
        """Compression of the limit operator Delta to the truncated space."""
        out = np.array([[1.0 + 0.0j]])
        for _ in range(self.n_factors):
            out = np.kron(out, self.damping)
        return out * tail_weight_product(self.seq, self.n_factors + 1)

    @cached_property
    def shift(self) -> np.ndarray:
        """Matrix of the shift compression S0 (dim_k x dim_h).

        The half-line factor is projected into slot one, every tensor slot
        moves up, and the last slot is contracted against the reference
        coordinates.
        """
        m, n, mh = self.factor_dim, self.n_factors, self.h_dim
        kappa, _ = self.reference_coords
        cross = self.cross_overlap
        s0 = np.zeros((self.dim_k, self.dim_h), dtype=complex)
        shape = (m,) * n + (mh,)
        for col in range(self.dim_h):
            idx = np.unravel_index(col, shape)  # (i1 .. iN, i0)
            v = np.zeros((m,) * n, dtype=complex)
            coeff = np.conj(kappa[idx[-2]])
            for j in range(m):
                out_idx = (j,) + idx[:-2]
                v[out_idx] = coeff * cross[j, idx[-1]]
            s0[:, col] = v.reshape(-1)
        return s0

    def cut(self, t: float) -> np.ndarray:
        """The spectral tail cut U(t)U(t)* on the half-line slot.

        With the cell basis, t must coincide with a cell edge and the cut
        is an exact diagonal projection.  With the span basis, the result
        is only a compression (not a projection) and is unsuitable for
        boundary-representation work.
        """
        if self.h_kind == "cells":
            e = self.h_edges
            if not any(abs(t - edge) < 1e-12 for edge in e):
                raise ValueError(
                    "cut level %g is not a cell edge of %r" % (t, e))
            return np.diag([1.0 + 0.0j if e[j] >= t - 1e-12 else 0.0
                            for j in range(self.h_dim)])
        m = self.factor_dim
        out = np.empty((m, m), dtype=complex)
        for i in range(m):
            for j in range(m):
                out[i, j] = tail_overlap(self.basis[i], self.basis[j], t)
        return 0.5 * (out + out.conj().T)

    # -- predual maps on densities -----------------------------------------

    def pred_pi(self, rho: np.ndarray) -> np.ndarray:
        """Density of rho composed with the shift endomorphism."""
        s0 = self.shift
        return s0.conj().T @ rho @ s0

    def pred_lambda(self, mu: np.ndarray, blocks: int = 1) -> np.ndarray:
        """Density of mu composed with the damping embedding."""
        d = blocks * self.dim_k
        mh = self.h_dim
        mu4 = mu.reshape(d, mh, d, mh)
        return np.einsum("bqap,pq->ba", mu4, self.h_damping)

    # -- superoperator matrices --------------------------------------------

    @cached_property
    def pi_superop(self) -> np.ndarray:
        s0 = self.shift
        return np.kron(s0.conj().T, s0.T)

    def lambda_superop(self, blocks: int = 1) -> np.ndarray:
        d = blocks * self.dim_k
        mh = self.h_dim
        eye = np.eye(d)
        t6 = np.einsum("bi,aj,pq->baiqjp", eye, eye, self.h_damping)
        return t6.reshape(d * d, (d * mh) ** 2)

    def weight_superop(self, z: complex = 1.0,
                       xi_eta: np.ndarray | None = None) -> np.ndarray:
        """Matrix of rho -> series weight density on the big space.

        The geometric series z pihat (I - z lambdahat pihat)^{-1} is summed
        by an exact resolvent solve; with xi_eta given, the gap term
        tr(rho Delta) xi_eta is added.
        """
        d = self.dim_k
        p_hat = self.pi_superop
        l_hat = self.lambda_superop()
        k_hat = l_hat @ p_hat
        radius = np.max(np.abs(np.linalg.eigvals(k_hat)))
        if abs(z) * radius >= 1.0 - 1e-9:
            raise NonInvertibleSystemError(
                "weight series does not converge in this model", float(radius))
        core = np.linalg.solve(np.eye(d * d) - z * k_hat, np.eye(d * d))
        omega = z * (p_hat @ core)
        if xi_eta is not None:
            delta_vec = self.delta_matrix.T.reshape(1, -1)
            omega = omega + xi_eta.reshape(-1, 1) @ delta_vec
        return omega

    def xi_eta(self, nu_density: np.ndarray) -> tuple[np.ndarray, float]:
        """Density of the normalized weight built from nu, plus nu(Lambda Delta).

        eta = (1 - nu(Lambda(Delta)))^{-1} sum_n (pihat lambdahat)^n nu.
        """
        lam_delta = np.kron(self.delta_matrix, self.h_damping)
        d_val = np.trace(nu_density @ lam_delta).real
        if d_val >= 1.0 - 1e-8:
            raise NonInvertibleSystemError(
                "normalization 1 - nu(Lambda(Delta)) is singular", d_val)
        dh = self.dim_h
        p_hat = self.pi_superop
        l_hat = self.lambda_superop()
        k_hat = p_hat @ l_hat  # on big-space densities
        vec = np.linalg.solve(np.eye(dh * dh) - k_hat,
                              nu_density.reshape(-1))
        eta = vec.reshape(dh, dh) / (1.0 - d_val)
        return 0.5 * (eta + eta.conj().T), d_val

    def truncation_superop(self, t: float, blocks: int = 1) -> np.ndarray:
        """Superoperator of mu -> P mu P for the spectral cut at level t."""
        p_tilde = np.kron(np.eye(blocks * self.dim_k), self.cut(t))
        return np.kron(p_tilde, p_tilde.T)

    def apply_truncation(self, t: float, superop: np.ndarray,
                         blocks: int = 1) -> np.ndarray:
        """Compose mu -> P mu P after the given superoperator.

        Equivalent to truncation_superop(t, blocks) @ superop without
        materializing the large Kronecker factor.
        """
        dh = blocks * self.dim_k * self.h_dim
        p_tilde = np.kron(np.eye(blocks * self.dim_k), self.cut(t))
        om3 = superop.reshape(dh, dh, -1)
        out = np.einsum("ai,ijr->ajr", p_tilde, om3)
        out = np.einsum("ajr,jb->abr", out, p_tilde)
        return out.reshape(dh * dh, -1)

    def boundary_rep(self, omega_superop: np.ndarray, t: float,
                     blocks: int = 1) -> tuple[np.ndarray, float]:
        """Generalized boundary representation at cut level t.

        Solves (I + lambdahat omegahat|_t) sigma = rho and returns the
        superoperator rho -> omegahat|_t(sigma) together with the condition
        number of the solved system.
        """
        w_t = self.apply_truncation(t, omega_superop, blocks)
        k_mat = self.lambda_superop(blocks) @ w_t
        d2 = k_mat.shape[0]
        system = np.eye(d2) + k_mat
        condition = float(np.linalg.cond(system))
        if not np.isfinite(condition) or condition > 1e12:
            raise NonInvertibleSystemError(
                "resolvent system is numerically singular", condition)
        return w_t @ np.linalg.solve(system, np.eye(d2)), condition

    # -- the damped translation average ------------------------------------

    @cached_property
    def gamma_tensor(self) -> np.ndarray:
        """G[i,j,k,l] = (e_i, Gamma(|e_k><e_l|) e_j) on the span slot."""
        if self.h_kind != "span":
            raise NotImplementedError(
                "the damped translation average is provided on the span "
                "variant of the model")
        m = self.factor_dim
        out = np.empty((m, m, m, m), dtype=complex)
        for k in range(m):
            for l in range(m):
                img = GammaImage(RankOneSum([(self.basis[l], self.basis[k], 1.0)]))
                for i in range(m):
                    for j in range(m):
                        out[i, j, k, l] = img.matrix_element(self.basis[i],
                                                             self.basis[j])
        return out

    def pred_gamma(self, mu: np.ndarray) -> np.ndarray:
        """Density of mu composed with the damped translation average."""
        d, m = self.dim_k, self.h_dim
        mu4 = mu.reshape(d, m, d, m)
        out4 = np.einsum("apbq,qpkl->albk", mu4, self.gamma_tensor)
        return out4.reshape(self.dim_h, self.dim_h)


# ---------------------------------------------------------------------------
# Choi spectra
# ---------------------------------------------------------------------------

def choi_matrix(superop: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    """Choi matrix of a map given as a superoperator over matrix units."""
    if superop.shape != (dim_out * dim_out, dim_in * dim_in):
        raise ValueError("superoperator shape does not match the dimensions")
    t4 = superop.reshape(dim_out, dim_out, dim_in, dim_in)
    return (t4.transpose(2, 0, 3, 1)
            .reshape(dim_in * dim_out, dim_in * dim_out))


@dataclass(frozen=True)
class ChoiVerdict:
    min_eigenvalue: float
    trace: float
    hermiticity_defect: float
    tolerance: float

    @property
    def completely_positive(self) -> bool:
        scale = max(abs(self.trace), 1.0)
        return self.min_eigenvalue >= -self.tolerance * scale


def choi_min_eig(superop: np.ndarray, dim_in: int, dim_out: int,
                 tolerance: float = 1e-8) -> ChoiVerdict:
    """Minimum Choi eigenvalue; the map is CP when it is not negative."""
    choi = choi_matrix(superop, dim_in, dim_out)
    herm = 0.5 * (choi + choi.conj().T)
    defect = float(np.linalg.norm(choi - herm))
    evals = np.linalg.eigvalsh(herm)
    return ChoiVerdict(float(evals[0]), float(np.trace(herm).real),
                       defect, tolerance)


def identity_superop(dim: int) -> np.ndarray:
    return np.eye(dim * dim, dtype=complex)


def transpose_superop(dim: int) -> np.ndarray:
    """Superoperator of the matrix transpose (the canonical non-CP map)."""
    out = np.zeros((dim * dim, dim * dim))
    for i in range(dim):
        for j in range(dim):
            out[j * dim + i, i * dim + j] = 1.0
    return out
