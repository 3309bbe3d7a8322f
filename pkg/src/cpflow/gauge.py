"""The gauge-parameter group acting on units.

A local cocycle is parameterized by four complex numbers (a, b, c, y)
with |a| <= 1 and Re(y) >= 0.  It acts on the unit labeled z by moving
the label to a z + b and multiplying by exp(lambda t), where the rate
lambda depends on the branch:

    |a| < 1:  lambda = -y - |v + z|^2 (1 - |a|^2) / 2 + i Im(conj(c) z)
              with v = -(conj(a) b + c) / (1 - |a|^2)
    |a| = 1:  lambda = -(y + i Im(a conj(b) z))

All rates are stored per unit time so composition is additive.

The composition law is cross-validated against sequential action.  The
printed form of the law carries two sign slips (the i Im(conj(c) b') term
and the r correction); compose() uses the action-consistent signs, which
are the only ones keeping Re(y) >= 0 closed under composition, and
compose_printed() keeps the literal form so the discrepancy can be
reported with a reproducer.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


class InvalidParameterError(ValueError):
    """A gauge parameter violates the invariants of its declared class."""


GENERAL = "general-contractive"
UNITARY = "unitary"
ISOMETRIC = "isometric"
FLOW = "flow"
RAW = "raw"  # unvalidated container, used only for cross-checking formulas

_TOL = 1e-12


@dataclass(frozen=True)
class GaugeParam:
    a: complex
    b: complex = 0.0
    c: complex = 0.0
    y: complex = 0.0
    klass: str = GENERAL
    relax_isometric: bool = False

    def __post_init__(self):
        for name in ("a", "b", "c", "y"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        self.validate()

    def validate(self):
        a, b, c, y = self.a, self.b, self.c, self.y
        if self.klass == RAW:
            return
        if abs(a) > 1.0 + _TOL:
            raise InvalidParameterError("|a| must not exceed 1")
        if y.real < -_TOL:
            raise InvalidParameterError("Re(y) must be nonnegative")
        if self.klass in (UNITARY, ISOMETRIC):
            if abs(abs(a) - 1.0) > _TOL:
                raise InvalidParameterError("%s class needs |a| = 1" % self.klass)
            if abs(a * c + b) > _TOL:
                raise InvalidParameterError("%s class needs ac + b = 0" % self.klass)
            if not self.relax_isometric and abs(y.real) > _TOL:
                raise InvalidParameterError(
                    "%s class needs Re(y) = 0 (set relax_isometric to allow "
                    "Re(y) >= 0)" % self.klass)
        elif self.klass == FLOW:
            if max(abs(b), abs(c), abs(y)) > _TOL:
                raise InvalidParameterError("flow class needs b = c = y = 0")
        elif self.klass != GENERAL:
            raise InvalidParameterError("unknown class %r" % self.klass)

    @property
    def on_unit_circle(self) -> bool:
        return abs(abs(self.a) - 1.0) <= _TOL


def identity_param(klass: str = GENERAL) -> GaugeParam:
    return GaugeParam(1.0, 0.0, 0.0, 0.0, klass=klass)


@dataclass(frozen=True)
class UnitAction:
    """Result of acting on the unit labeled z: new label and rate.

    The cocycle satisfies C(t) U_z(t) = exp(exponent_rate * t) U_new(t).
    """

    new_label: complex
    exponent_rate: complex


def act(g: GaugeParam, z: complex) -> UnitAction:
    z = complex(z)
    a, b, c, y = g.a, g.b, g.c, g.y
    label = a * z + b
    if g.on_unit_circle:
        rate = -(y + 1j * (a * np.conj(b) * z).imag)
    else:
        v = -(np.conj(a) * b + c) / (1.0 - abs(a) ** 2)
        rate = (-y - 0.5 * abs(v + z) ** 2 * (1.0 - abs(a) ** 2)
                + 1j * (np.conj(c) * z).imag)
    return UnitAction(label, complex(rate))


def adjoint(g: GaugeParam) -> GaugeParam:
    """Parameter of the adjoint cocycle: a -> conj(a), b <-> c, y -> conj(y)."""
    return replace(g, a=np.conj(g.a), b=g.c, c=g.b, y=np.conj(g.y))


def r_term(g: GaugeParam, gp: GaugeParam) -> float:
    """The nonnegative correction entering the composed y parameter.

    Zero when either factor has |a| = 1.
    """
    if g.on_unit_circle or gp.on_unit_circle:
        return 0.0
    a, b, c = g.a, g.b, g.c
    ap, bp, cp = gp.a, gp.b, gp.c
    da = 1.0 - abs(a) ** 2
    dap = 1.0 - abs(ap) ** 2
    daap = 1.0 - abs(a * ap) ** 2
    val = (abs(np.conj(ap) * bp + cp) ** 2 / dap
           + abs(bp * da - np.conj(a) * b - c) ** 2 / da
           - abs(np.conj(a * ap) * (a * bp + b)
                 + np.conj(ap) * c + cp) ** 2 / daap)
    return float(val.real) if isinstance(val, complex) else float(val)


def _composed_class(g: GaugeParam, gp: GaugeParam) -> str:
    if g.klass == gp.klass and g.klass in (UNITARY, ISOMETRIC, FLOW):
        return g.klass
    return GENERAL


def compose(g: GaugeParam, gp: GaugeParam) -> GaugeParam:
    """Parameter of C C', acting first with gp then with g.

    Uses the action-consistent signs
        y'' = y + y' - i Im(conj(c) b') + r / 2,
    which sequential application of act() forces and which keep
    Re(y'') >= 0 (r >= 0).
    """
    a2 = g.a * gp.a
    b2 = g.a * gp.b + g.b
    c2 = np.conj(gp.a) * g.c + gp.c
    y2 = (g.y + gp.y - 1j * (np.conj(g.c) * gp.b).imag
          + 0.5 * r_term(g, gp))
    return GaugeParam(a2, b2, c2, y2, klass=_composed_class(g, gp),
                      relax_isometric=g.relax_isometric or gp.relax_isometric)


def compose_printed(g: GaugeParam, gp: GaugeParam) -> GaugeParam:
    """The composition law in its literal printed form,
        y'' = y + y' + i Im(conj(c) b') - r / 2,
    kept for cross-validation; see formula_discrepancy_report.
    """
    a2 = g.a * gp.a
    b2 = g.a * gp.b + g.b
    c2 = np.conj(gp.a) * g.c + gp.c
    y2 = (g.y + gp.y + 1j * (np.conj(g.c) * gp.b).imag
          - 0.5 * r_term(g, gp))
    return GaugeParam(a2, b2, c2, y2, klass=RAW)


def action_composition_residual(g: GaugeParam, gp: GaugeParam, sample_zs,
                                law=compose) -> float:
    """Oracle: compare the composition law against sequential action.

    Returns the max over sampled z of the exponent mismatch plus the label
    mismatch; the label part vanishes identically for the affine law.
    """
    composed = law(g, gp)
    worst = 0.0
    for z in sample_zs:
        z = complex(z)
        first = act(gp, z)
        second = act(g, first.new_label)
        direct = act(composed, z)
        label_gap = abs(second.new_label - direct.new_label)
        rate_gap = abs(first.exponent_rate + second.exponent_rate
                       - direct.exponent_rate)
        worst = max(worst, label_gap + rate_gap)
    return worst


def formula_discrepancy_report(g: GaugeParam, gp: GaugeParam,
                               sample_zs) -> dict:
    """Machine-readable comparison of the two composition-law variants.

    Contains the oracle residual of each variant and a reproducer (the
    parameter tuples and sample labels).
    """
    res_used = action_composition_residual(g, gp, sample_zs, law=compose)
    res_printed = action_composition_residual(g, gp, sample_zs,
                                              law=compose_printed)
    def tup(p):
        return [[p.a.real, p.a.imag], [p.b.real, p.b.imag],
                [p.c.real, p.c.imag], [p.y.real, p.y.imag]]
    return {
        "kind": "formula-discrepancy",
        "field": "composed y parameter",
        "residual_action_consistent": res_used,
        "residual_printed": res_printed,
        "discrepant": res_printed > 1e-10 >= res_used,
        "note": ("printed law differs by the sign of i*Im(conj(c)*b') and "
                 "of the r/2 correction; the action-consistent signs are "
                 "the ones closing Re(y) >= 0"),
        "reproducer": {
            "g": tup(g),
            "g_prime": tup(gp),
            "sample_labels": [[complex(z).real, complex(z).imag]
                              for z in sample_zs],
        },
    }


@dataclass(frozen=True)
class Reachability:
    reachable: bool
    witness: tuple[complex, complex] | None
    obstruction: str | None


def pair_reachable(src, dst, allowed: str = "a1") -> Reachability:
    """Can the affine label action send the pair src to the pair dst?

    allowed = "a1" restricts to a = 1 (translations only, the constraint
    arising in the examples); "unit" allows any |a| = 1.  The unique
    candidate is a = (z2' - z1') / (z2 - z1), b = z1' - a z1.
    """
    z1, z2 = (complex(v) for v in src)
    z1p, z2p = (complex(v) for v in dst)
    if z1 == z2 or z1p == z2p:
        raise InvalidParameterError("pairs must consist of distinct labels")
    a = (z2p - z1p) / (z2 - z1)
    b = z1p - a * z1
    if allowed == "a1":
        if abs(a - 1.0) <= _TOL:
            return Reachability(True, (a, b), None)
        return Reachability(False, None,
                            "requires a = %r with a != 1" % a)
    if allowed == "unit":
        if abs(abs(a) - 1.0) <= _TOL:
            return Reachability(True, (a, b), None)
        return Reachability(False, None,
                            "requires a = %r with |a| != 1" % a)
    raise InvalidParameterError("unknown constraint set %r" % allowed)


def single_reachable(z0: complex, z1: complex) -> Reachability:
    """One-label transitivity under a = 1: witness b = z1 - z0."""
    return Reachability(True, (1.0 + 0.0j, complex(z1) - complex(z0)), None)


# ---------------------------------------------------------------------------
# random sampling helpers (seeded by the caller)
# ---------------------------------------------------------------------------

def random_param(rng: np.random.Generator, klass: str = GENERAL) -> GaugeParam:
    def cplx(scale=1.0):
        return complex(rng.normal(scale=scale), rng.normal(scale=scale))

    if klass == FLOW:
        return GaugeParam(rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform()),
                          klass=FLOW)
    if klass in (UNITARY, ISOMETRIC):
        a = np.exp(2j * np.pi * rng.uniform())
        b = cplx()
        return GaugeParam(a, b, -np.conj(a) * b, 1j * rng.normal(),
                          klass=klass)
    a = rng.uniform(0, 0.95) * np.exp(2j * np.pi * rng.uniform())
    return GaugeParam(a, cplx(), cplx(), complex(rng.uniform(0, 2),
                                                 rng.normal()))
