from __future__ import annotations

import math

import numpy as np
import pytest

from kinlang.model import (ExternalForce, InteractionForce, ModelError, ModelSpec,
                           double_well_monotonicity_radius, eval_external,
                           eval_interaction, splitting_from_outside_convexity,
                           validate_assumptions)

FD = 1e-6


def dw(beta=1.0, gamma=10.0, u=1.0, dim=1, inter=None):
    return ModelSpec(external=ExternalForce.double_well(beta, dim=dim),
                     interaction=inter or InteractionForce.none(),
                     gamma=gamma, u=u, dim=dim)


class TestExternalForce:
    def test_double_well_values(self):
        spec = dw()
        assert eval_external(spec, np.array([0.0])) == pytest.approx(0.0)
        # the quartic branch has a zero of the force at |x| = 1
        assert eval_external(spec, np.array([1.0])) == pytest.approx(0.0)
        # outer branch is -3 beta x
        assert eval_external(spec, np.array([3.0])) == pytest.approx(-9.0)

    def test_double_well_splitting_constants(self):
        ext = ExternalForce.double_well(2.5, dim=1)
        assert ext.kappa == pytest.approx(5.0)
        assert ext.lip_k == pytest.approx(5.0)
        assert ext.lip_g == pytest.approx(22.5)

    def test_monotonicity_radius_oracle(self):
        # symmetric pairs +-a in the quartic branch violate monotonicity up
        # to separation 2*sqrt(3); the stored radius pads by one grid step
        r = double_well_monotonicity_radius()
        assert 2 * math.sqrt(3) <= r <= 2 * math.sqrt(3) + 0.02

    def test_splitting_recomposes(self):
        spec = dw(beta=0.7, dim=2)
        x = np.random.default_rng(3).normal(size=(256, 2)) * 3
        recomposed = -x @ spec.external.matrix_k.T + spec.external.g(x)
        assert np.allclose(recomposed, spec.external.force(x), atol=1e-12)

    def test_gradient_matches_potential(self):
        for spec in (dw(beta=1.3, dim=3), dw(beta=1.0, dim=1)):
            x = np.random.default_rng(11).normal(size=(1000, spec.dim)) * 3
            force = eval_external(spec, x)
            fd = np.empty_like(force)
            for j in range(spec.dim):
                e = np.zeros(spec.dim)
                e[j] = FD
                fd[:, j] = -(spec.external.potential(x + e)
                             - spec.external.potential(x - e)) / (2 * FD)
            scale = np.maximum(np.abs(force), 1.0)
            assert np.all(np.abs(force - fd) <= 1e-6 * scale)

    def test_quadratic_gradient_matches_potential(self):
        k = np.array([[2.0, 0.3], [0.3, 1.0]])
        spec = ModelSpec(external=ExternalForce.quadratic(k),
                         interaction=InteractionForce.none(), gamma=2.0, u=1.0, dim=2)
        x = np.random.default_rng(5).normal(size=(1000, 2))
        force = eval_external(spec, x)
        fd = np.empty_like(force)
        for j in range(2):
            e = np.zeros(2)
            e[j] = FD
            fd[:, j] = -(spec.external.potential(x + e)
                         - spec.external.potential(x - e)) / (2 * FD)
        assert np.all(np.abs(force - fd) <= 1e-6 * np.maximum(np.abs(force), 1.0))

    def test_deterministic_and_dimension_preserving(self):
        spec = dw(dim=3)
        x = np.random.default_rng(0).normal(size=(17, 3))
        a = eval_external(spec, x)
        b = eval_external(spec, x)
        assert a.shape == x.shape
        assert np.array_equal(a, b)

    def test_rejects_nonfinite(self):
        with pytest.raises(ModelError):
            eval_external(dw(), np.array([np.nan]))

    def test_rejects_bad_k(self):
        with pytest.raises(ModelError):
            ExternalForce.quadratic(np.array([[0.0]]))

    def test_outside_convexity_splitting(self):
        got = splitting_from_outside_convexity(k=3.0, lip_h=6.0, outside_radius=2.0, l=0.5)
        assert got["kappa"] == pytest.approx(1.5)
        assert got["radius"] == pytest.approx(2 * 2.0 * 6.0 / (0.5 * 3.0))
        with pytest.raises(ModelError):
            splitting_from_outside_convexity(k=3.0, lip_h=6.0, outside_radius=2.0, l=0.9)


class TestInteractionForce:
    def test_linear(self):
        spec = dw(inter=InteractionForce.linear(0.5))
        out = eval_interaction(spec, np.array([7.0]), np.array([2.0]))
        assert out == pytest.approx(1.0)
        assert spec.interaction.lip == pytest.approx(0.5)

    def test_mollified_coincident_is_zero(self):
        inter = InteractionForce.mollified_coulomb(1.0, p=2.0, q=1.0)
        x = np.array([0.3, -0.7, 1.1])
        assert np.allclose(inter.pair_force(x, x), 0.0)

    def test_mollified_matches_finite_differences(self):
        inter = InteractionForce.mollified_coulomb(1.0, p=2.0, q=1.0)
        x = np.array([1.0])
        y = np.array([0.0])
        fd = -(inter.potential(x + FD, y) - inter.potential(x - FD, y)) / (2 * FD)
        assert inter.pair_force(x, y)[0] == pytest.approx(float(fd), rel=1e-6)

    def test_mollified_log_matches_finite_differences(self):
        inter = InteractionForce.mollified_log(p=2.0, q=0.5)
        pts = np.random.default_rng(4).normal(size=(50, 2, 2))
        x, y = pts[:, 0], pts[:, 1]
        for j in range(2):
            e = np.zeros(2)
            e[j] = FD
            fd = -(inter.potential(x + e, y) - inter.potential(x - e, y)) / (2 * FD)
            assert np.allclose(inter.pair_force(x, y)[:, j], fd, atol=1e-5)

    def test_singular_mollifier_rejected(self):
        with pytest.raises(ModelError):
            InteractionForce.mollified_coulomb(1.0, p=2.0, q=0.0)

    def test_lipschitz_estimate_not_falsified(self):
        inter = InteractionForce.mollified_coulomb(2.0, p=2.0, q=0.7)
        spec = dw(inter=inter)
        report = validate_assumptions(spec, samples=4000, seed=8)
        assert report.ok, report.violations


class TestValidateAssumptions:
    def test_double_well_not_falsified(self):
        report = validate_assumptions(dw(), samples=5000, seed=1)
        assert report.ok
        assert report.estimates["lip_g_observed"] <= 9.0 + 1e-9

    def test_quadratic_not_falsified(self):
        spec = ModelSpec(external=ExternalForce.quadratic(np.eye(2)),
                         interaction=InteractionForce.none(), gamma=2.0, u=1.0, dim=2)
        assert validate_assumptions(spec, samples=2000, seed=2).ok

    def test_understated_interaction_lipschitz_is_caught(self):
        lying = InteractionForce(kind="linear", lip=1.0, params={"k": 2.0})
        spec = dw(inter=lying)
        report = validate_assumptions(spec, samples=500, seed=3)
        assert not report.ok
        assert any(v.check == "interaction_lipschitz" for v in report.violations)
        bad = [v for v in report.violations if v.check == "interaction_lipschitz"][0]
        assert bad.observed > bad.declared

    def test_understated_radius_is_caught(self):
        ext = ExternalForce(kind="double_well", dim=1, matrix_k=np.array([[2.0]]),
                            kappa=2.0, lip_k=2.0, lip_g=9.0, radius=0.5,
                            params={"beta": 1.0})
        spec = ModelSpec(external=ext, interaction=InteractionForce.none(),
                         gamma=10.0, u=1.0, dim=1)
        report = validate_assumptions(spec, samples=5000, seed=4)
        assert any(v.check == "external_monotonicity" for v in report.violations)

    def test_rejects_zero_samples(self):
        with pytest.raises(ModelError):
            validate_assumptions(dw(), samples=0)

    def test_antisymmetry_checked_for_split(self):
        spec = ModelSpec(external=ExternalForce.zero(1),
                         interaction=InteractionForce.linear_difference(1.5, dim=1),
                         gamma=2.0, u=1.0, dim=1)
        assert validate_assumptions(spec, samples=1000, seed=5).ok


class TestJsonRoundTrip:
    def test_round_trip_double_well(self):
        spec = dw(beta=2.0, gamma=8.0, u=0.5, inter=InteractionForce.linear(0.1))
        back = ModelSpec.from_json(spec.to_json())
        assert back.gamma == spec.gamma and back.u == spec.u
        assert back.external.params["beta"] == 2.0
        assert back.interaction.params["k"] == 0.1

    def test_round_trip_quadratic_matrix(self):
        k = np.array([[2.0, 0.5], [0.5, 1.0]])
        spec = ModelSpec(external=ExternalForce.quadratic(k),
                         interaction=InteractionForce.none(), gamma=3.0, u=1.0, dim=2)
        back = ModelSpec.from_json(spec.to_json())
        assert np.allclose(back.external.matrix_k, k)

    def test_round_trip_mollified(self):
        spec = ModelSpec(external=ExternalForce.quadratic(np.eye(2)),
                         interaction=InteractionForce.mollified_coulomb(2.0, p=3.0, q=0.5),
                         gamma=4.0, u=1.0, dim=2)
        back = ModelSpec.from_json(spec.to_json())
        assert back.interaction.params == spec.interaction.params
        assert back.interaction.lip == pytest.approx(spec.interaction.lip)

    def test_round_trip_linear_difference(self):
        spec = ModelSpec(external=ExternalForce.zero(1),
                         interaction=InteractionForce.linear_difference(1.5, dim=1),
                         gamma=2.0, u=1.0, dim=1)
        back = ModelSpec.from_json(spec.to_json())
        assert back.interaction.has_split
        assert back.interaction.split_kappa == pytest.approx(1.5)

    def test_invalid_params_rejected(self):
        with pytest.raises(ModelError):
            ModelSpec(external=ExternalForce.double_well(1.0),
                      interaction=InteractionForce.none(), gamma=-1.0, u=1.0, dim=1)
        with pytest.raises(ModelError):
            ModelSpec(external=ExternalForce.double_well(1.0),
                      interaction=InteractionForce.none(), gamma=1.0, u=0.0, dim=1)
