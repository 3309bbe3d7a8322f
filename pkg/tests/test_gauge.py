"""Gauge parameter algebra: action, adjoints, composition, transitivity."""

import numpy as np
import pytest

from cpflow.gauge import (
    FLOW,
    GENERAL,
    ISOMETRIC,
    UNITARY,
    GaugeParam,
    InvalidParameterError,
    act,
    action_composition_residual,
    adjoint,
    compose,
    compose_printed,
    formula_discrepancy_report,
    identity_param,
    pair_reachable,
    r_term,
    random_param,
    single_reachable,
)

RNG = np.random.default_rng(20240823)
ZS = [complex(RNG.normal(), RNG.normal()) for _ in range(25)]


class TestAction:
    def test_identity(self):
        out = act(identity_param(), 2 + 1j)
        assert out.new_label == 2 + 1j
        assert out.exponent_rate == 0.0

    def test_unitary_translation(self):
        g = GaugeParam(1.0, 1.0, -1.0, 0.0, klass=UNITARY)
        out = act(g, 0.0)
        assert out.new_label == pytest.approx(1.0)
        assert out.exponent_rate == pytest.approx(0.0)

    def test_flow_rate(self):
        g = GaugeParam(0.5, klass=FLOW)
        out = act(g, 2.0)
        assert out.new_label == pytest.approx(1.0)
        assert out.exponent_rate == pytest.approx(-1.5)

    def test_contractive_rates_have_nonpositive_real_part(self):
        for _ in range(200):
            g = random_param(RNG)
            for z in ZS[:5]:
                assert act(g, z).exponent_rate.real <= 1e-12


class TestValidation:
    def test_contraction_bound(self):
        with pytest.raises(InvalidParameterError):
            GaugeParam(1.5)

    def test_negative_real_y(self):
        with pytest.raises(InvalidParameterError):
            GaugeParam(0.5, y=-1.0)

    def test_unitary_constraint(self):
        with pytest.raises(InvalidParameterError):
            GaugeParam(1.0, 1.0, 1.0, 0.0, klass=UNITARY)

    def test_isometric_follows_print(self):
        with pytest.raises(InvalidParameterError):
            GaugeParam(1.0, 1.0, -1.0, 0.5, klass=ISOMETRIC)

    def test_isometric_relax_switch(self):
        g = GaugeParam(1.0, 1.0, -1.0, 0.5, klass=ISOMETRIC,
                       relax_isometric=True)
        assert g.y == 0.5

    def test_flow_constraint(self):
        with pytest.raises(InvalidParameterError):
            GaugeParam(0.5, b=1.0, klass=FLOW)


class TestAdjoint:
    def test_involution(self):
        g = random_param(RNG)
        gg = adjoint(adjoint(g))
        for name in "abcy":
            assert getattr(gg, name) == pytest.approx(getattr(g, name))

    def test_unitary_adjoint_action(self):
        g = random_param(RNG, UNITARY)
        for z in ZS[:5]:
            out = act(adjoint(g), z)
            assert out.new_label == pytest.approx(
                np.conj(g.a) * (z - g.b))

    def test_unitary_adjoint_is_inverse(self):
        g = random_param(RNG, UNITARY)
        e = compose(g, adjoint(g))
        assert e.a == pytest.approx(1.0)
        assert abs(e.b) < 1e-12
        assert abs(e.c) < 1e-12
        assert abs(e.y) < 1e-12


class TestComposition:
    def test_identity_neutral(self):
        g = random_param(RNG)
        for left in (compose(identity_param(), g),
                     compose(g, identity_param())):
            for name in "abcy":
                assert getattr(left, name) == pytest.approx(
                    getattr(g, name))

    def test_flow_closure(self):
        g = compose(random_param(RNG, FLOW), random_param(RNG, FLOW))
        assert g.klass == FLOW

    def test_associativity(self):
        worst = 0.0
        for _ in range(1000):
            a, b, c = (random_param(RNG) for _ in range(3))
            p1 = compose(compose(a, b), c)
            p2 = compose(a, compose(b, c))
            worst = max(worst, max(abs(getattr(p1, n) - getattr(p2, n))
                                   for n in "abcy"))
        assert worst < 1e-12

    def test_contractive_closure(self):
        for _ in range(500):
            g = compose(random_param(RNG), random_param(RNG))
            assert abs(g.a) <= 1.0 + 1e-12
            assert g.y.real >= -1e-12

    def test_r_nonnegative(self):
        assert min(r_term(random_param(RNG), random_param(RNG))
                   for _ in range(20000)) >= -1e-12

    def test_r_zero_on_circle(self):
        g = random_param(RNG, UNITARY)
        gp = random_param(RNG)
        assert r_term(g, gp) == 0.0


class TestActionOracle:
    def test_unitary_class(self):
        for _ in range(100):
            g, gp = random_param(RNG, UNITARY), random_param(RNG, UNITARY)
            assert action_composition_residual(g, gp, ZS) < 1e-12

    def test_flow_class(self):
        for _ in range(100):
            g, gp = random_param(RNG, FLOW), random_param(RNG, FLOW)
            assert action_composition_residual(g, gp, ZS) < 1e-12

    def test_general_class(self):
        for _ in range(100):
            g, gp = random_param(RNG), random_param(RNG)
            assert action_composition_residual(g, gp, ZS) < 1e-12

    def test_printed_law_deviates_and_is_reported(self):
        found = False
        for _ in range(50):
            g, gp = random_param(RNG), random_param(RNG)
            report = formula_discrepancy_report(g, gp, ZS)
            if report["discrepant"]:
                found = True
                assert report["residual_action_consistent"] < 1e-12
                assert report["residual_printed"] > 1e-10
                assert "reproducer" in report
                break
        assert found

    def test_printed_law_agrees_when_terms_vanish(self):
        g = GaugeParam(0.5, 0.0, 0.0, 0.0)
        gp = GaugeParam(0.25, 0.0, 0.0, 0.0)
        assert action_composition_residual(g, gp, ZS,
                                           law=compose_printed) < 1e-12


class TestTransitivity:
    def test_rotation_obstruction(self):
        res = pair_reachable((0.0, 1.0), (0.0, 1j), "a1")
        assert not res.reachable
        assert "1j" in res.obstruction

    def test_rotation_allowed_on_circle(self):
        res = pair_reachable((0.0, 1.0), (0.0, 1j), "unit")
        assert res.reachable
        assert res.witness[0] == pytest.approx(1j)
        assert abs(res.witness[1]) < 1e-12

    def test_same_pair_reachable(self):
        res = pair_reachable((0.0, 1.0), (0.0, 1.0), "a1")
        assert res.reachable

    def test_degenerate_pairs_rejected(self):
        with pytest.raises(InvalidParameterError):
            pair_reachable((1.0, 1.0), (0.0, 1.0), "a1")

    def test_single_unit_translation(self):
        for _ in range(100):
            z0 = complex(RNG.normal(), RNG.normal())
            z1 = complex(RNG.normal(), RNG.normal())
            wit = single_reachable(z0, z1)
            a, b = wit.witness
            assert a * z0 + b == pytest.approx(z1)
