"""Truncated infinite tensor product over L2(0, infinity).

States keep N explicit exponential-kernel factors and an implicit tail of
reference vectors k_i(x) = lambda_i exp(-lambda_i^2 x / 2).  Operators are
finite sums of elementary tensors with a declared behaviour (identity or
damping by exp(-x)) on all slots past their explicit factors.  The shift
isometry, the induced endomorphism pi, and the limit operator Delta are
realised on this truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .halfline import (
    ExpKernelVector,
    ExpMultiplier,
    HalfLineOperator,
    IdentityOperator,
    RankOneSum,
    inner_product,
    reference_vector,
)


class InvalidSequenceError(ValueError):
    """Raised for non-positive or unusable factor-scale sequences."""


class TruncationExceededError(ValueError):
    """Raised when an operation needs more factors than the truncation has."""


# ---------------------------------------------------------------------------
# factor-scale sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LambdaSequence:
    """The per-factor scale sequence lambda_1, lambda_2, ...

    kind "linear" is lambda_n = n, "geometric" is lambda_n = 2^n, and
    "custom" takes an explicit finite list.
    """

    kind: Literal["linear", "geometric", "custom"] = "linear"
    custom_values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "custom":
            vals = tuple(float(v) for v in self.custom_values)
            if not vals:
                raise InvalidSequenceError("custom sequence is empty")
            if any(v <= 0 for v in vals):
                raise InvalidSequenceError("scales must be strictly positive")
            object.__setattr__(self, "custom_values", vals)

    def value(self, i: int) -> float:
        if i < 1:
            raise IndexError("sequence index starts at 1")
        if self.kind == "linear":
            return float(i)
        if self.kind == "geometric":
            return float(2.0 ** i)
        if i > len(self.custom_values):
            raise TruncationExceededError(
                "custom sequence has no value at index %d" % i)
        return self.custom_values[i - 1]

    def reference(self, i: int) -> ExpKernelVector:
        return reference_vector(self.value(i))


@dataclass(frozen=True)
class AdmissibilityReport:
    inverse_square_sums: np.ndarray
    increment_sums: np.ndarray
    inverse_square_ok: bool
    increment_ok: bool

    @property
    def admissible(self) -> bool:
        return self.inverse_square_ok and self.increment_ok


def check_lambda_sequence(seq: LambdaSequence, horizon: int,
                          cauchy_tol: float = 1e-4) -> AdmissibilityReport:
    """Partial sums of the two convergence conditions with a Cauchy verdict.

    Condition one is sum(1/lambda_n^2); condition two is
    sum(|lambda_n - lambda_{n+1}|^2 / (lambda_n^2 + lambda_{n+1}^2)).
    A series looks convergent when its late increments (the last tenth of
    the horizon) stay below cauchy_tol on average.
    """
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    lam = np.array([seq.value(i) for i in range(1, horizon + 2)])
    if np.any(lam <= 0):
        raise InvalidSequenceError("scales must be strictly positive")
    terms1 = 1.0 / lam[:horizon] ** 2
    terms2 = (np.abs(lam[:horizon] - lam[1:horizon + 1]) ** 2
              / (lam[:horizon] ** 2 + lam[1:horizon + 1] ** 2))
    sums1 = np.cumsum(terms1)
    sums2 = np.cumsum(terms2)
    window = max(1, horizon // 10)

    def looks_convergent(terms):
        return bool(np.mean(terms[-window:]) < cauchy_tol)

    return AdmissibilityReport(sums1, sums2,
                               looks_convergent(terms1),
                               looks_convergent(terms2))


def tail_weight_product(seq: LambdaSequence, start: int) -> float:
    """prod_{i >= start} lambda_i^2 / (1 + lambda_i^2).

    For the linear sequence the full product is pi/sinh(pi) and tails are
    obtained by dividing out the leading factors.  Other kinds are summed
    numerically until the terms are indistinguishable from 1.
    """
    if seq.kind == "linear":
        full = math.pi / math.sinh(math.pi)
        head = 1.0
        for i in range(1, start):
            head *= i * i / (1.0 + i * i)
        return full / head
    log_total = 0.0
    i = start
    while True:
        lam2 = seq.value(i) ** 2
        term = lam2 / (1.0 + lam2)
        log_total += math.log(term)
        if 1.0 - term < 1e-17:
            return math.exp(log_total)
        i += 1
        if seq.kind == "custom" and i > len(seq.custom_values):
            raise TruncationExceededError(
                "custom sequence ends before its tail product settles")
        if i - start > 10 ** 6:
            raise InvalidSequenceError("tail product did not settle")


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductVector:
    """N explicit factors with reference factors k_{tail_start}, ... behind."""

    seq: LambdaSequence
    factors: tuple[ExpKernelVector, ...]
    tail_start: int

    def __init__(self, seq: LambdaSequence,
                 factors: Iterable[ExpKernelVector],
                 tail_start: int | None = None):
        factors = tuple(factors)
        if tail_start is None:
            tail_start = len(factors) + 1
        object.__setattr__(self, "seq", seq)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "tail_start", int(tail_start))

    @property
    def width(self) -> int:
        return len(self.factors)

    def shifted_down(self) -> "ProductVector":
        """Drop the first factor; the next reference vector joins the head."""
        new = self.factors[1:] + (self.seq.reference(self.tail_start),)
        return ProductVector(self.seq, new, self.tail_start + 1)


def reference_state(seq: LambdaSequence, n_factors: int) -> ProductVector:
    return ProductVector(seq, [seq.reference(i) for i in range(1, n_factors + 1)])


def product_inner(f: ProductVector, g: ProductVector) -> complex:
    """(f, g) as the product of factor inner products; tails must align."""
    if f.width != g.width or f.tail_start != g.tail_start:
        raise ValueError("states must share truncation and tail alignment")
    total = 1.0 + 0.0j
    for a, b in zip(f.factors, g.factors):
        total *= inner_product(a, b)
    return total


@dataclass(frozen=True)
class ShiftResult:
    vector: ProductVector
    fidelity: float


def s0_apply(v: ProductVector, h: ExpKernelVector) -> ShiftResult:
    """Shift the half-line factor h into slot one.

    The old last factor leaves the truncation window; the reported fidelity
    |(f_N, k_N)| measures how close it was to the reference it displaces.
    """
    if v.width == 0:
        raise TruncationExceededError("no factors to shift")
    k_last = v.seq.reference(v.width)
    fid = abs(inner_product(v.factors[-1], k_last))
    new = (h,) + v.factors[:-1]
    return ShiftResult(ProductVector(v.seq, new, v.tail_start), fid)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

TailKind = Literal["identity", "damping"]


@dataclass(frozen=True)
class TensorOperator:
    """Sum of elementary tensors sum_t c_t O_1 x O_2 x ... acting on the
    truncated product space.

    Each term lists its explicit factor operators; every slot past them is
    the identity ("identity" tail) or multiplication by exp(-x)
    ("damping" tail).  The all-damping term with no explicit factors is
    the limit operator Delta.
    """

    terms: tuple[tuple[complex, tuple[HalfLineOperator, ...], TailKind], ...]

    def __init__(self, terms: Iterable[tuple[complex, Sequence[HalfLineOperator], TailKind]]):
        packed = []
        for c, factors, tail in terms:
            if tail not in ("identity", "damping"):
                raise ValueError("unknown tail kind %r" % (tail,))
            packed.append((complex(c), tuple(factors), tail))
        object.__setattr__(self, "terms", tuple(packed))

    @property
    def width(self) -> int:
        return max((len(f) for _, f, _ in self.terms), default=0)

    def scaled(self, c: complex) -> "TensorOperator":
        return TensorOperator([(c * w, f, t) for w, f, t in self.terms])

    def __add__(self, other: "TensorOperator") -> "TensorOperator":
        return TensorOperator(self.terms + other.terms)

    def adjoint(self) -> "TensorOperator":
        return TensorOperator(
            [(np.conj(c), tuple(op.adjoint() for op in f), t)
             for c, f, t in self.terms])


def identity_operator() -> TensorOperator:
    return TensorOperator([(1.0, (), "identity")])


def delta_operator() -> TensorOperator:
    """Delta: exp(-x) damping on every slot including the implicit tail."""
    return TensorOperator([(1.0, (), "damping")])


def _slot_element(op: HalfLineOperator | TailKind,
                  g: ExpKernelVector, f: ExpKernelVector) -> complex:
    if op == "identity":
        return inner_product(g, f)
    if op == "damping":
        return inner_product(g, f.shifted(1.0))
    return op.matrix_element(g, f)


def pairing(g: ProductVector, a: TensorOperator, f: ProductVector) -> complex:
    """(g, A f) on the truncated space, tails resolved in closed form."""
    if f.width != g.width or f.tail_start != g.tail_start:
        raise ValueError("states must share truncation and tail alignment")
    n = f.width
    total = 0.0 + 0.0j
    for c, factors, tail in a.terms:
        if len(factors) > n:
            raise TruncationExceededError(
                "operator touches %d slots, state has %d" % (len(factors), n))
        val = c
        for i in range(n):
            op = factors[i] if i < len(factors) else tail
            val *= _slot_element(op, g.factors[i], f.factors[i])
        if tail == "damping":
            val *= tail_weight_product(f.seq, f.tail_start)
        total += val
    return total


def pi_lambda_power(a: TensorOperator, n: int, n_factors: int) -> TensorOperator:
    """(pi Lambda)^n applied to a: n damping slots in front of a shifted copy."""
    if n < 0:
        raise ValueError("power must be nonnegative")
    if n + a.width > n_factors:
        raise TruncationExceededError(
            "shifting by %d pushes the operator past %d factors"
            % (n, n_factors))
    damp = tuple(ExpMultiplier(1.0) for _ in range(n))
    return TensorOperator([(c, damp + f, t) for c, f, t in a.terms])


def pi_apply(h_op: HalfLineOperator, k_op: TensorOperator,
             n_factors: int) -> TensorOperator:
    """pi applied to the product operator (k_op tensor h_op).

    The half-line factor becomes slot one and every factor of k_op moves
    up by one slot.
    """
    if k_op.width + 1 > n_factors:
        raise TruncationExceededError("no room to shift the factors up")
    return TensorOperator(
        [(c, (h_op,) + f, t) for c, f, t in k_op.terms])


def _compose_factor(x: HalfLineOperator, y: HalfLineOperator) -> HalfLineOperator:
    """Pointwise operator product for the closed factor classes."""
    if isinstance(x, IdentityOperator):
        return y
    if isinstance(y, IdentityOperator):
        return x
    if isinstance(x, ExpMultiplier) and isinstance(y, ExpMultiplier):
        return ExpMultiplier(x.rate + y.rate)
    if isinstance(x, ExpMultiplier) and isinstance(y, RankOneSum):
        return RankOneSum([(bra, ket.shifted(x.rate), w)
                           for bra, ket, w in y.parts])
    if isinstance(x, RankOneSum) and isinstance(y, ExpMultiplier):
        return RankOneSum([(bra.shifted(np.conj(y.rate)), ket, w)
                           for bra, ket, w in x.parts])
    if isinstance(x, RankOneSum) and isinstance(y, RankOneSum):
        parts = []
        for bra1, ket1, w1 in x.parts:
            for bra2, ket2, w2 in y.parts:
                parts.append((bra2, ket1, w1 * w2 * inner_product(bra1, ket2)))
        return RankOneSum(parts)
    raise TypeError("cannot compose %r with %r" % (type(x), type(y)))


def multiply(a: TensorOperator, b: TensorOperator) -> TensorOperator:
    """Product of two tensor operators, composed slot by slot."""
    out = []
    for ca, fa, ta in a.terms:
        for cb, fb, tb in b.terms:
            width = max(len(fa), len(fb))
            factors = []
            for i in range(width):
                xa = fa[i] if i < len(fa) else _tail_op(ta)
                xb = fb[i] if i < len(fb) else _tail_op(tb)
                factors.append(_compose_factor(xa, xb))
            if ta == "identity" and tb == "identity":
                tail: TailKind = "identity"
            elif {ta, tb} == {"identity", "damping"}:
                tail = "damping"
            else:
                raise TypeError("product of two damping tails leaves the "
                                "closed operator class")
            out.append((ca * cb, tuple(factors), tail))
    return TensorOperator(out)


def _tail_op(kind: TailKind) -> HalfLineOperator:
    return IdentityOperator() if kind == "identity" else ExpMultiplier(1.0)


# ---------------------------------------------------------------------------
# the limit operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeltaPairingResult:
    value: complex
    curve: np.ndarray
    tail_factor: float


def delta_pairing(f: ProductVector, g: ProductVector) -> DeltaPairingResult:
    """(f, Delta g) together with the approach curve n -> (f, (pi Lambda)^n(I) g).

    The curve runs n = 0 .. N over the explicit factors; the reported value
    includes the closed-form tail factor past the truncation.
    """
    n = f.width
    ident = identity_operator()
    curve = np.array([pairing(f, pi_lambda_power(ident, k, n), g)
                      for k in range(n + 1)])
    tail = tail_weight_product(f.seq, f.tail_start)
    value = pairing(f, delta_operator(), g)
    return DeltaPairingResult(value, curve, tail)
