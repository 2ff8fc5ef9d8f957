"""Couplings of two kinetic Langevin copies.

A coupled step evolves a batch of pairs ``((X, Y), (X', Y'))`` that share
their Brownian increments.  Per pair and per step, two blending
coefficients ``rc`` (reflection) and ``sc`` (synchronous) with
``rc^2 + sc^2 = 1`` split the velocity noise between two independent
increment families:

    first copy:   sc * xi_sc + rc * xi_rc
    second copy:  sc * xi_sc + rc * (Id - 2 e e^T) xi_rc

where ``e`` is the unit vector along ``Q = Z + W / gamma`` (zero when Q
vanishes).  ``rc`` is a Lipschitz product of two clamps: it vanishes on
the hyperplane Q = 0 and wherever the gluing gap exceeds the gluing
offset by the smoothing width ``xi``, and saturates at 1 once ``|Q| >=
xi`` inside the gap region.  A vanishing gluing offset (or synchronous
mode) makes the coupling purely synchronous.  Coefficients and ``e`` are
frozen at the start of each step.

Law terms inside nonlinear coupled runs are approximated by the empirical
marginals of the coupled batch itself; the componentwise variant couples
N independent nonlinear copies (law supplied externally, e.g. by a large
proxy run) against one N-particle system, slot by slot.
"""

from __future__ import annotations

import math

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import rng
from .constants import MetricConstants
from .dynamics import BlowUpError, DynamicsError, IntegratorConfig, interaction_mean
from .metrics import GroundMetric, small_norm, twisted_norm
from .model import ModelSpec, eval_external

Array = np.ndarray

MODES = ("synchronous", "reflection_mix", "componentwise")
Q_TINY = 1e-12


@dataclass(frozen=True)
class CouplingControl:
    mode: str = "reflection_mix"
    xi: float = 1e-3

    def __post_init__(self):
        if self.mode not in MODES:
            raise DynamicsError(f"unknown coupling mode {self.mode!r}")
        if self.xi <= 0:
            raise DynamicsError("smoothing width xi must be positive")

    @staticmethod
    def for_constants(constants: MetricConstants, mode: str = "reflection_mix",
                      scale: float = 1e-3, floor: float = 1e-8) -> "CouplingControl":
        """Default smoothing width: a small fraction of the cutoff, floored."""
        cut = constants.small_cutoff
        xi = max(scale * cut, floor) if np.isfinite(cut) and cut > 0 else floor
        return CouplingControl(mode=mode, xi=xi)

    def resolved_by(self, spec, step: float) -> bool:
        """Whether a step size resolves the blend transition.

        The per-step kick of |Q| under full reflection is
        ``sqrt(8 u step / gamma)``; widths below it are skipped over by
        the discrete chain, which then hovers at the kick scale instead
        of synchronizing (visible in the width-refinement study).
        """
        return self.xi >= math.sqrt(8.0 * spec.u * step / spec.gamma)


@dataclass(frozen=True)
class CoupledState:
    """Batch of coupled pairs; views Z, W, Q, e are recomputed on demand."""

    ax: Array
    ay: Array
    bx: Array
    by: Array
    gamma: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("ax", "ay", "bx", "by"):
            object.__setattr__(self, name,
                               np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        if not (self.ax.shape == self.ay.shape == self.bx.shape == self.by.shape):
            raise DynamicsError("coupled state shape mismatch")

    @property
    def n(self) -> int:
        return self.ax.shape[0]

    @property
    def dim(self) -> int:
        return self.ax.shape[1]

    @property
    def z(self) -> Array:
        return self.ax - self.bx

    @property
    def w(self) -> Array:
        return self.ay - self.by

    @property
    def q(self) -> Array:
        return self.z + self.w / self.gamma

    @property
    def e(self) -> Array:
        q = self.q
        norm = np.linalg.norm(q, axis=-1, keepdims=True)
        return np.where(norm > Q_TINY, q / np.maximum(norm, Q_TINY), 0.0)

    def require_finite(self) -> None:
        for a in (self.ax, self.ay, self.bx, self.by):
            if not np.all(np.isfinite(a)):
                raise BlowUpError(self.t)


def pair_state(spec: ModelSpec, first, second, n: int = 1) -> CoupledState:
    """Coupled state from two phase points, replicated n times."""
    fx, fy = np.atleast_1d(first[0]), np.atleast_1d(first[1])
    sx, sy = np.atleast_1d(second[0]), np.atleast_1d(second[1])
    return CoupledState(ax=np.tile(fx, (n, 1)), ay=np.tile(fy, (n, 1)),
                        bx=np.tile(sx, (n, 1)), by=np.tile(sy, (n, 1)),
                        gamma=spec.gamma)


# ---------------------------------------------------------------------------
# rc / sc
# ---------------------------------------------------------------------------

def rc_value(control: CouplingControl, spec: ModelSpec, constants: MetricConstants,
             z: Array, w: Array) -> Array:
    """Reflection blend in [0, 1]: product of two Lipschitz clamps.

    Identically zero in synchronous mode or when the gluing offset
    vanishes, in which case the coupling is purely synchronous.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if control.mode == "synchronous" or not constants.glue_offset > 0:
        return np.zeros(z.shape[:-1])
    xi = control.xi
    g = spec.gamma
    qn = np.linalg.norm(z + w / g, axis=-1)
    rl = twisted_norm(z, w, spec.external.matrix_k, constants.tau, g, spec.u)
    gap = small_norm(z, w, constants.alpha, g) - constants.eps * rl
    ramp_q = np.clip(qn / xi, 0.0, 1.0)
    ramp_gap = np.clip((constants.glue_offset + xi - gap) / xi, 0.0, 1.0)
    return ramp_q * ramp_gap


def sc_value(rc: Array) -> Array:
    return np.sqrt(np.maximum(1.0 - np.asarray(rc) ** 2, 0.0))


# ---------------------------------------------------------------------------
# coupled stepping
# ---------------------------------------------------------------------------

def _unit_q(z: Array, w: Array, gamma: float) -> Array:
    q = z + w / gamma
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    return np.where(norm > Q_TINY, q / np.maximum(norm, Q_TINY), 0.0)


def _coupled_noise_arrays(z: Array, w: Array, gamma: float, rc: Array,
                          cfg: IntegratorConfig, step_index: int
                          ) -> tuple[Array, Array]:
    n, d = z.shape
    xi_sc = rng.normals(cfg.seed, rng.SUB_MAIN, step_index, (n, d))
    if np.all(rc == 0.0):
        # purely synchronous: both copies share the increment bitwise
        return xi_sc, xi_sc
    xi_rc = rng.normals(cfg.seed, rng.SUB_REFLECT, step_index, (n, d))
    sc = sc_value(rc)[:, None]
    rc = np.asarray(rc)[:, None]
    e = _unit_q(z, w, gamma)
    reflected = xi_rc - 2.0 * np.sum(e * xi_rc, axis=-1, keepdims=True) * e
    return sc * xi_sc + rc * xi_rc, sc * xi_sc + rc * reflected


def _advance_copy(x, y, force, noise, h, gamma, u, scheme):
    if scheme == "euler_maruyama":
        return (x + h * y,
                y + h * (-gamma * y + u * force) + np.sqrt(2.0 * gamma * u * h) * noise)
    decay = np.exp(-gamma * h)
    y_kicked = y + h * u * force
    return (x + (1.0 - decay) / gamma * y_kicked,
            decay * y_kicked + np.sqrt(u * (1.0 - decay * decay)) * noise)


def _pair_step_arrays(spec: ModelSpec, arrays: tuple, control: CouplingControl,
                      cfg: IntegratorConfig, constants: MetricConstants,
                      step_index: int, law: str,
                      law_force=None, componentwise: bool = False) -> tuple:
    ax, ay, bx, by = arrays
    z, w = ax - bx, ay - by
    rc = rc_value(control, spec, constants, z, w)
    noise_a, noise_b = _coupled_noise_arrays(z, w, spec.gamma, rc, cfg, step_index)
    if componentwise:
        if law_force is not None:
            force_a = eval_external(spec, ax) + law_force(ax, step_index)
        else:
            force_a = _pair_drift(spec, ax, ax, "replica_proxy")
        force_b = eval_external(spec, bx) + interaction_mean(spec, bx)
    else:
        force_a = _pair_drift(spec, ax, ax, law)
        force_b = _pair_drift(spec, bx, bx, law)
    h, g, u = cfg.step, spec.gamma, spec.u
    ax, ay = _advance_copy(ax, ay, force_a, noise_a, h, g, u, cfg.scheme)
    bx, by = _advance_copy(bx, by, force_b, noise_b, h, g, u, cfg.scheme)
    return ax, ay, bx, by


def step_coupled_pair(spec: ModelSpec, state: CoupledState, control: CouplingControl,
                      cfg: IntegratorConfig, constants: MetricConstants,
                      step_index: int = 0, law: str = "replica_proxy") -> CoupledState:
    """One step of a batch of coupled pairs sharing one model.

    ``law`` selects how nonlinear terms are fed: ``"replica_proxy"`` uses
    the batch's own empirical marginals, ``"analytic_zero"`` substitutes
    the exactly-centered law mean of the unconfined theory, ``"none"``
    drops the interaction (classical dynamics).
    """
    arrays = _pair_step_arrays(spec, (state.ax, state.ay, state.bx, state.by),
                               control, cfg, constants, step_index, law)
    out = CoupledState(ax=arrays[0], ay=arrays[1], bx=arrays[2], by=arrays[3],
                       gamma=spec.gamma, t=state.t + cfg.step)
    out.require_finite()
    return out


def _pair_drift(spec: ModelSpec, x: Array, marginal_x: Array, law: str) -> Array:
    inter = spec.interaction
    unconfined = law == "analytic_zero"
    base = np.zeros_like(x) if unconfined else eval_external(spec, x)
    if law == "none" or inter.kind == "none":
        return base
    if unconfined:
        if not inter.has_split:
            raise DynamicsError("analytic-zero law needs an interaction splitting")
        # centered theory: the law mean stays at the origin exactly
        mean_term = -(x - 0.0) @ inter.split_matrix.T
        if inter.split_g is not None:
            raise DynamicsError("analytic-zero law only supports a vanishing perturbation")
        return base + mean_term
    if inter.kind == "linear":
        return base + inter.params["k"] * marginal_x.mean(axis=0)
    if inter.has_split and inter.split_g is None:
        return base - (x - marginal_x.mean(axis=0)) @ inter.split_matrix.T
    pair = inter.pair_force(x[:, None, :], marginal_x[None, :, :])
    return base + pair.mean(axis=1)


def step_coupled_componentwise(spec: ModelSpec, state: CoupledState,
                               control: CouplingControl, cfg: IntegratorConfig,
                               constants: MetricConstants, step_index: int = 0,
                               law_force: Optional[Callable[[Array, int], Array]] = None
                               ) -> CoupledState:
    """One step of the componentwise coupling.

    First components evolve as N independent nonlinear copies whose law
    term comes from ``law_force(x, step_index)`` (e.g. a large-proxy
    empirical mean, possibly time dependent) or, if omitted, from their
    own empirical marginal.  Second components evolve as the N-particle
    system.  Each slot carries its own blend and reflection direction; the
    shared interaction means are recomputed every step.
    """
    arrays = _pair_step_arrays(spec, (state.ax, state.ay, state.bx, state.by),
                               control, cfg, constants, step_index, "replica_proxy",
                               law_force=law_force, componentwise=True)
    out = CoupledState(ax=arrays[0], ay=arrays[1], bx=arrays[2], by=arrays[3],
                       gamma=spec.gamma, t=state.t + cfg.step)
    out.require_finite()
    return out


# ---------------------------------------------------------------------------
# coupled trajectory driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoupledTrajectory:
    times: Array
    ax: Array
    ay: Array
    bx: Array
    by: Array
    rc_mean: Array

    def state_at(self, idx: int, gamma: float) -> CoupledState:
        return CoupledState(ax=self.ax[idx], ay=self.ay[idx], bx=self.bx[idx],
                            by=self.by[idx], gamma=gamma, t=float(self.times[idx]))

    def distance_series(self, metric: GroundMetric) -> Array:
        """Per-time per-pair distances under any ground metric: (T, R)."""
        return metric.dist_zw(self.ax - self.bx, self.ay - self.by)


def simulate_coupled(spec: ModelSpec, state0: CoupledState, control: CouplingControl,
                     cfg: IntegratorConfig, constants: MetricConstants,
                     dump_times=None, law: str = "replica_proxy",
                     componentwise: bool = False,
                     law_force: Optional[Callable[[Array, int], Array]] = None
                     ) -> CoupledTrajectory:
    n_steps = cfg.n_steps
    if dump_times is None:
        dump_times = np.array([cfg.horizon])
    dump_steps = set(np.unique(np.clip(np.round(np.asarray(dump_times) / cfg.step), 0,
                                       n_steps).astype(int)).tolist())
    ts, axs, ays, bxs, bys, rcs = [], [], [], [], [], []
    state0.require_finite()
    arrays = (state0.ax, state0.ay, state0.bx, state0.by)

    def record(arrays, t):
        ax, ay, bx, by = arrays
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise BlowUpError(t)
        ts.append(t)
        axs.append(ax.copy()), ays.append(ay.copy())
        bxs.append(bx.copy()), bys.append(by.copy())
        rcs.append(float(np.mean(rc_value(control, spec, constants,
                                          ax - bx, ay - by))))

    if 0 in dump_steps:
        record(arrays, state0.t)
    from .model import ModelError
    for k in range(n_steps):
        try:
            arrays = _pair_step_arrays(spec, arrays, control, cfg, constants, k, law,
                                       law_force=law_force, componentwise=componentwise)
        except ModelError as err:
            # a non-finite position reaching the force evaluators IS a blow-up
            raise BlowUpError(state0.t + k * cfg.step) from err
        if (k + 1) in dump_steps:
            record(arrays, state0.t + (k + 1) * cfg.step)
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise BlowUpError(state0.t + n_steps * cfg.step)
    return CoupledTrajectory(times=np.array(ts), ax=np.stack(axs), ay=np.stack(ays),
                             bx=np.stack(bxs), by=np.stack(bys), rc_mean=np.array(rcs))


# ---------------------------------------------------------------------------
# marginal validity check
# ---------------------------------------------------------------------------

def contraction_monitor(traj: CoupledTrajectory, spec: ModelSpec,
                        constants: MetricConstants) -> dict:
    """Per-dump diagnostics of the two-regime contraction mechanism.

    Splits the pairs at the gluing offset each dump time and reports the
    population fraction and mean distance of each regime: outside pairs
    (gap >= offset) contract in the twisted norm, inside pairs in the
    rescaled small norm.  Useful for watching a run migrate from the
    synchronous to the reflection regime.
    """
    z = traj.ax - traj.bx
    w = traj.ay - traj.by
    rho = GroundMetric.from_constants(spec, constants, "rho")
    rl = twisted_norm(z, w, spec.external.matrix_k, constants.tau,
                      spec.gamma, spec.u)
    rs = small_norm(z, w, constants.alpha, spec.gamma)
    gap = rs - constants.eps * rl
    offset = constants.glue_offset
    inside = gap < offset
    frac_inside = inside.mean(axis=1)
    prof = constants.profile

    def masked_mean(values, mask):
        out = np.full(values.shape[0], np.nan)
        for k in range(values.shape[0]):
            if mask[k].any():
                out[k] = float(values[k][mask[k]].mean())
        return out

    return {"times": traj.times,
            "fraction_inside": frac_inside,
            "mean_rl_outside": masked_mean(rl, ~inside),
            "mean_f_rs_inside": masked_mean(prof.value(rs), inside),
            "mean_rho": rho.dist_zw(z, w).mean(axis=1)}


@dataclass(frozen=True)
class MarginalReport:
    observables: tuple
    max_abs_z: float
    flagged: tuple

    @property
    def ok(self) -> bool:
        return len(self.flagged) == 0


def marginal_check(coupled: CoupledTrajectory, independent_first,
                   independent_second, threshold: float = 4.0) -> MarginalReport:
    """Compare time-marginal moments of each coupled component against
    uncoupled simulations of the same laws.

    Each observable (per-component mean and second moment of position and
    velocity) is compared at every dump time; deviations beyond
    ``threshold`` combined standard errors are flagged.
    """
    rows = []
    flagged = []
    for name, coup, ind in (("first", (coupled.ax, coupled.ay), independent_first),
                            ("second", (coupled.bx, coupled.by), independent_second)):
        for obs, axis_arrays in (("mean_x", (coup[0], ind.x)),
                                 ("mean_y", (coup[1], ind.y)),
                                 ("second_x", (coup[0] ** 2, ind.x ** 2)),
                                 ("second_y", (coup[1] ** 2, ind.y ** 2))):
            c_arr, i_arr = axis_arrays
            zmax = _max_z(c_arr, i_arr)
            rows.append((name, obs, zmax))
            if zmax > threshold:
                flagged.append((name, obs, zmax))
    return MarginalReport(observables=tuple(rows),
                          max_abs_z=max(r[2] for r in rows),
                          flagged=tuple(flagged))


def _max_z(a: Array, b: Array) -> float:
    # a, b: (T, R, d); z-score of the difference of means at each time/coord
    na, nb = a.shape[1], b.shape[1]
    ma, mb = a.mean(axis=1), b.mean(axis=1)
    va, vb = a.var(axis=1, ddof=1), b.var(axis=1, ddof=1)
    se = np.sqrt(va / na + vb / nb)
    z = np.abs(ma - mb) / np.maximum(se, 1e-300)
    z = np.where(np.abs(ma - mb) < 1e-12, 0.0, z)
    return float(z.max())
