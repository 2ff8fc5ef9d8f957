from __future__ import annotations

import math

import numpy as np
import pytest

import kinlang.coupling as cp
from kinlang import rng
from kinlang.coupling import (CoupledState, CouplingControl, marginal_check,
                              pair_state, rc_value, sc_value, simulate_coupled,
                              step_coupled_pair)
from kinlang.dynamics import IntegratorConfig, gaussian_ensemble, simulate
from kinlang.metrics import GroundMetric
from kinlang.model import ExternalForce, InteractionForce, ModelSpec
from kinlang.constants import derive_constants


def quad(gamma=2.0, inter=None):
    return ModelSpec(external=ExternalForce.quadratic(np.eye(1)),
                     interaction=inter or InteractionForce.none(),
                     gamma=gamma, u=1.0, dim=1)


class TestBlend:
    def test_zero_at_origin(self, dw_spec, dw_constants):
        control = CouplingControl(mode="reflection_mix", xi=0.1)
        z = np.zeros((1, 1))
        assert rc_value(control, dw_spec, dw_constants, z, z)[0] == 0.0

    def test_zero_far_outside_gap(self, dw_spec, dw_constants):
        # scale a direction until the gap exceeds offset + 2 xi
        control = CouplingControl(mode="reflection_mix", xi=0.1)
        z = np.array([[1.0]])
        w = np.array([[1.0]])
        m = GroundMetric.from_constants(dw_spec, dw_constants, "rho")
        gap = float(m.delta_zw(z, w)[0])
        scale = (dw_constants.glue_offset + 2 * control.xi) / gap
        rc = rc_value(control, dw_spec, dw_constants, scale * z, scale * w)
        assert rc[0] == 0.0

    def test_one_on_the_saturated_set(self, dw_spec, dw_constants):
        control = CouplingControl(mode="reflection_mix", xi=0.05)
        gamma = dw_spec.gamma
        w = np.array([[control.xi * gamma]])  # |z + w/gamma| = xi exactly
        z = np.zeros((1, 1))
        assert rc_value(control, dw_spec, dw_constants, z, w)[0] == pytest.approx(1.0)

    def test_identity_partition_random(self, dw_spec, dw_constants):
        control = CouplingControl(mode="reflection_mix", xi=1e-3)
        g = np.random.default_rng(0)
        z = 3 * g.normal(size=(100000, 1))
        w = 3 * g.normal(size=(100000, 1))
        rc = rc_value(control, dw_spec, dw_constants, z, w)
        sc = sc_value(rc)
        assert np.all(np.abs(rc ** 2 + sc ** 2 - 1.0) <= 1e-12)
        assert np.all((rc >= 0) & (rc <= 1))

    def test_synchronous_mode_forces_zero(self, dw_spec, dw_constants):
        control = CouplingControl(mode="synchronous", xi=1e-3)
        z = np.array([[1.0]])
        assert rc_value(control, dw_spec, dw_constants, z, z)[0] == 0.0

    def test_degenerate_offset_forces_zero(self, quad_spec, quad_constants):
        control = CouplingControl(mode="reflection_mix", xi=1e-3)
        z = np.array([[1.0]])
        assert quad_constants.glue_offset == 0.0
        assert rc_value(control, quad_spec, quad_constants, z, z)[0] == 0.0

    def test_default_width_scales_with_cutoff(self, dw_constants, quad_constants):
        c1 = CouplingControl.for_constants(dw_constants)
        assert c1.xi == pytest.approx(1e-3 * dw_constants.small_cutoff)
        c2 = CouplingControl.for_constants(quad_constants)
        assert c2.xi == pytest.approx(1e-8)


class TestReflection:
    def test_reflection_matrix_orthogonal(self):
        e = np.random.default_rng(1).normal(size=3)
        e /= np.linalg.norm(e)
        h = np.eye(3) - 2 * np.outer(e, e)
        assert np.allclose(h @ h.T, np.eye(3), atol=1e-14)

    def test_reflected_normals_keep_identity_covariance(self):
        gen = np.random.default_rng(2)
        e = gen.normal(size=2)
        e /= np.linalg.norm(e)
        xi = gen.normal(size=(200000, 2))
        reflected = xi - 2 * (xi @ e)[:, None] * e[None, :]
        cov = reflected.T @ reflected / len(reflected)
        # chi-square style bound: entries within 5 / sqrt(n) of the identity
        assert np.all(np.abs(cov - np.eye(2)) < 5 / math.sqrt(200000))


class TestCoupledPair:
    def test_identical_copies_stay_glued(self, dw_spec, dw_constants):
        control = CouplingControl(mode="synchronous", xi=1e-3)
        cfg = IntegratorConfig(step=0.01, horizon=1.0, seed=3)
        state = pair_state(dw_spec, (np.array([0.7]), np.array([-0.2])),
                           (np.array([0.7]), np.array([-0.2])), n=16)
        traj = simulate_coupled(dw_spec, state, control, cfg, dw_constants,
                                dump_times=np.linspace(0, 1, 6), law="none")
        assert np.array_equal(traj.ax, traj.bx)
        assert np.array_equal(traj.ay, traj.by)

    def test_synchronous_quadratic_contracts_at_rate(self, quad_spec, quad_constants):
        # deterministic difference: r(t) <= exp(-c t) r(0) up to O(h)
        mc = quad_constants
        control = CouplingControl(mode="synchronous", xi=1e-3)
        h = 1e-3
        cfg = IntegratorConfig(step=h, horizon=5.0, seed=4)
        state = pair_state(quad_spec, (np.array([1.0]), np.array([0.0])),
                           (np.array([-1.0]), np.array([0.5])))
        metric = GroundMetric.from_constants(quad_spec, mc, "r_strong")
        dumps = np.linspace(0, 5, 26)
        traj = simulate_coupled(quad_spec, state, control, cfg, mc,
                                dump_times=dumps, law="none")
        r = traj.distance_series(metric)[:, 0]
        bound = r[0] * np.exp(-mc.c_strong * traj.times) * (1 + 10 * h)
        assert np.all(r <= bound + 1e-14)
        # differential form between consecutive dumps: the squared distance
        # shrinks at least at rate 2 gamma lam along the whole path
        dt = np.diff(traj.times)
        assert np.all(r[1:] <= r[:-1] * np.exp(-mc.c_strong * dt) * (1 + 10 * h))

    def test_q_noise_increment_formula(self, dw_spec, dw_constants):
        # saturated blend, Euler scheme: the Q update must carry exactly
        # sqrt(8 u / gamma) rc (e . dB) e  on top of the drift part
        control = CouplingControl(mode="reflection_mix", xi=0.05)
        g, u = dw_spec.gamma, dw_spec.u
        h = 1e-3
        cfg = IntegratorConfig(step=h, horizon=h, seed=5, scheme="euler_maruyama")
        first = (np.array([0.3]), np.array([0.1]))
        second = (np.array([0.3]), np.array([0.1 - control.xi * g * 2]))
        state = pair_state(dw_spec, first, second)
        rc = rc_value(control, dw_spec, dw_constants, state.z, state.w)
        assert rc[0] == pytest.approx(1.0)
        e = state.e.copy()
        q0 = state.q.copy()
        from kinlang.model import eval_external
        drift = (h / g) * u * (eval_external(dw_spec, state.ax)
                               - eval_external(dw_spec, state.bx))
        out = step_coupled_pair(dw_spec, state, control, cfg, dw_constants,
                                step_index=0, law="none")
        xi_rc = rng.normals(cfg.seed, rng.SUB_REFLECT, 0, (1, 1))
        expected = q0 + drift + math.sqrt(8 / g * u) * (e * xi_rc) * math.sqrt(h) * e
        assert np.allclose(out.q, expected, atol=1e-12)

    def test_synchronous_first_copy_matches_uncoupled_bitwise(self, dw_spec, dw_constants):
        control = CouplingControl(mode="synchronous", xi=1e-3)
        cfg = IntegratorConfig(step=0.01, horizon=0.5, seed=6)
        n = 8
        gen = np.random.default_rng(7)
        fx, fy = gen.normal(size=(n, 1)), gen.normal(size=(n, 1))
        sx, sy = fx + 1.0, fy.copy()
        state = CoupledState(ax=fx, ay=fy, bx=sx, by=sy, gamma=dw_spec.gamma)
        traj = simulate_coupled(dw_spec, state, control, cfg, dw_constants,
                                dump_times=[0.5], law="none")
        from kinlang.dynamics import Ensemble
        solo = simulate(dw_spec, Ensemble(x=fx, y=fy), cfg, system="classical",
                        dump_times=[0.5])
        assert np.array_equal(traj.ax[-1], solo.x[-1])
        assert np.array_equal(traj.ay[-1], solo.y[-1])

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blow_up_detected(self, dw_constants):
        stiff = ModelSpec(external=ExternalForce.quadratic(np.eye(1) * 1e9),
                          interaction=InteractionForce.none(), gamma=0.1, u=1.0, dim=1)
        control = CouplingControl(mode="synchronous", xi=1e-3)
        cfg = IntegratorConfig(step=5.0, horizon=500.0, scheme="euler_maruyama")
        state = pair_state(stiff, (np.array([1.0]), np.array([0.0])),
                           (np.array([0.0]), np.array([0.0])))
        from kinlang.dynamics import BlowUpError
        with pytest.raises(BlowUpError):
            simulate_coupled(stiff, state, control, cfg, dw_constants, law="none")


class TestComponentwise:
    def test_no_interaction_decouples_to_pairs(self, dw_spec, dw_constants):
        control = CouplingControl(mode="reflection_mix", xi=0.05)
        cfg = IntegratorConfig(step=0.01, horizon=0.3, seed=8)
        gen = np.random.default_rng(9)
        n = 6
        state = CoupledState(ax=gen.normal(size=(n, 1)), ay=gen.normal(size=(n, 1)),
                             bx=gen.normal(size=(n, 1)), by=gen.normal(size=(n, 1)),
                             gamma=dw_spec.gamma)
        a = simulate_coupled(dw_spec, state, control, cfg, dw_constants,
                             dump_times=[0.3], componentwise=True)
        b = simulate_coupled(dw_spec, state, control, cfg, dw_constants,
                             dump_times=[0.3], law="replica_proxy")
        assert np.array_equal(a.ax, b.ax) and np.array_equal(a.bx, b.bx)

    def test_identical_initializations_synchronous_all_zero(self):
        inter = InteractionForce.linear(0.05)
        spec = quad(inter=inter)
        mc = derive_constants(spec)
        control = CouplingControl(mode="synchronous", xi=1e-3)
        cfg = IntegratorConfig(step=0.01, horizon=0.5, seed=10)
        gen = np.random.default_rng(11)
        x = gen.normal(size=(12, 1))
        y = gen.normal(size=(12, 1))
        state = CoupledState(ax=x, ay=y, bx=x.copy(), by=y.copy(), gamma=spec.gamma)
        traj = simulate_coupled(spec, state, control, cfg, mc,
                                dump_times=[0.5], componentwise=True)
        assert np.array_equal(traj.ax, traj.bx) and np.array_equal(traj.ay, traj.by)


class TestViews:
    def test_unit_direction_norm_in_zero_one(self, dw_spec):
        gen = np.random.default_rng(19)
        state = CoupledState(ax=gen.normal(size=(64, 2)), ay=gen.normal(size=(64, 2)),
                             bx=gen.normal(size=(64, 2)), by=gen.normal(size=(64, 2)),
                             gamma=dw_spec.gamma)
        norms = np.linalg.norm(state.e, axis=-1)
        assert np.all((np.abs(norms - 1.0) < 1e-12) | (norms == 0.0))
        # views recomputed from primaries
        assert np.allclose(state.q, state.z + state.w / dw_spec.gamma)


class TestGluedDecay:
    def test_mean_glued_distance_non_increasing(self, dw_spec, dw_constants):
        # implementable shadow of the contraction guarantee: the mean
        # glued distance never rises beyond two standard errors
        control = CouplingControl.for_constants(dw_constants, mode="reflection_mix")
        cfg = IntegratorConfig(step=0.01, horizon=5.0, seed=17)
        ens = gaussian_ensemble(0.0, 0.0, 0.5, n=2000, dim=1, seed=18)
        state = CoupledState(ax=ens.x, ay=ens.y, bx=ens.x + 1.5, by=ens.y,
                             gamma=dw_spec.gamma)
        traj = simulate_coupled(dw_spec, state, control, cfg, dw_constants,
                                dump_times=np.linspace(0, 5, 11), law="none")
        rho = GroundMetric.from_constants(dw_spec, dw_constants, "rho")
        d = traj.distance_series(rho)
        means = d.mean(axis=1)
        ses = d.std(axis=1, ddof=1) / np.sqrt(d.shape[1])
        rises = np.diff(means) - 2 * (ses[1:] + ses[:-1])
        assert np.all(rises <= 0)


class TestMonitor:
    def test_two_regime_monitor_on_double_well(self, dw_spec, dw_constants):
        from kinlang.coupling import contraction_monitor
        control = CouplingControl.for_constants(dw_constants, mode="reflection_mix")
        cfg = IntegratorConfig(step=0.01, horizon=4.0, seed=20)
        ens = gaussian_ensemble(0.0, 0.0, 0.5, n=1000, dim=1, seed=21)
        state = CoupledState(ax=ens.x, ay=ens.y, bx=ens.x + 1.5, by=ens.y,
                             gamma=dw_spec.gamma)
        traj = simulate_coupled(dw_spec, state, control, cfg, dw_constants,
                                dump_times=np.linspace(0, 4, 9), law="none")
        mon = contraction_monitor(traj, dw_spec, dw_constants)
        assert np.all(np.isfinite(mon["mean_rho"]))
        # for this configuration every pair starts and stays in the
        # small-distance regime, where reflection glues them together
        assert mon["fraction_inside"][0] == 1.0
        assert mon["fraction_inside"][-1] >= mon["fraction_inside"][0] - 1e-12
        assert mon["mean_rho"][-1] < mon["mean_rho"][0]


class TestMarginalCheck:
    def test_synchronous_first_component_statistics_exact(self, dw_spec, dw_constants):
        control = CouplingControl(mode="synchronous", xi=1e-3)
        cfg = IntegratorConfig(step=0.01, horizon=0.5, seed=12)
        n = 64
        ens = gaussian_ensemble(0.0, 0.0, 1.0, n=n, dim=1, seed=13)
        state = CoupledState(ax=ens.x, ay=ens.y, bx=ens.x + 2.0, by=ens.y,
                             gamma=dw_spec.gamma)
        dumps = np.linspace(0, 0.5, 6)
        traj = simulate_coupled(dw_spec, state, control, cfg, dw_constants,
                                dump_times=dumps, law="none")
        solo = simulate(dw_spec, ens, cfg, system="classical", dump_times=dumps)
        # the first coupled component IS the uncoupled run, so its moment
        # z-scores vanish identically
        report = marginal_check(traj, solo, solo, threshold=4.0)
        first_rows = [r for r in report.observables if r[0] == "first"]
        assert all(r[2] == 0.0 for r in first_rows)

    def test_zero_noise_exact_equality(self, dw_spec, dw_constants, monkeypatch):
        real = cp.rng.normals
        monkeypatch.setattr(cp.rng, "normals",
                            lambda seed, sub, step, shape: np.zeros(shape))
        import kinlang.dynamics as dyn
        monkeypatch.setattr(dyn.rng, "normals",
                            lambda seed, sub, step, shape: np.zeros(shape))
        control = CouplingControl(mode="reflection_mix", xi=0.05)
        cfg = IntegratorConfig(step=0.01, horizon=0.4, seed=14)
        ens = gaussian_ensemble(0.5, 0.0, 1.0, n=16, dim=1, seed=15)
        state = CoupledState(ax=ens.x, ay=ens.y, bx=ens.x, by=ens.y,
                             gamma=dw_spec.gamma)
        dumps = [0.0, 0.2, 0.4]
        traj = simulate_coupled(dw_spec, state, control, cfg, dw_constants,
                                dump_times=dumps, law="none")
        from kinlang.dynamics import Ensemble
        solo = simulate(dw_spec, Ensemble(x=ens.x, y=ens.y), cfg,
                        system="classical", dump_times=dumps)
        report = marginal_check(traj, solo, solo)
        assert report.ok and report.max_abs_z == 0.0
