"""Command-line interface.

Subcommands: ``constants``, ``simulate``, ``couple``, ``contract``,
``chaos``, ``moments``, ``unconfined``.  Every command reads a JSON config
(``-c/--config``), optionally overridden by ``--seed``, ``--out``,
``--replicas`` and ``--step``, and writes its artifacts into a run
directory named by the config hash.

Exit codes: 0 on success, 2 when the run completed but assumption
diagnostics fired (results carry no guarantee), 1 on any runtime error
(missing or malformed config included), in which case no partial outputs
are written.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..constants import derive_constants
from ..coupling import CouplingControl, simulate_coupled
from ..dynamics import Ensemble, IntegratorConfig, simulate, trajectory_to_rows
from ..metrics import GroundMetric
from ..model import ModelSpec
from .config import ConfigError, ExperimentConfig, config_hash, load_config
from .experiments import _draw_initial, build_initial_pair, run_experiment
from .record import write_csv, write_record


def _load_doc(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err


def _apply_overrides(doc: dict, args) -> dict:
    doc = dict(doc)
    integ = dict(doc.get("integrator", {}))
    if args.seed is not None:
        integ["seed"] = args.seed
    if args.step is not None:
        integ["step"] = args.step
    if integ:
        doc["integrator"] = integ
    if getattr(args, "replicas", None) is not None:
        doc["replicas"] = args.replicas
    if args.out is not None:
        doc["out"] = args.out
    return doc


def _out_root(cfg: ExperimentConfig) -> Path:
    return cfg.out if cfg.out is not None else Path("runs")


def cmd_constants(args) -> int:
    doc = _load_doc(args.config)
    model_doc = doc.get("model", doc)
    spec = ModelSpec.from_dict(model_doc)
    constants = derive_constants(spec)
    payload = constants.to_dict()
    payload["config_hash"] = config_hash(model_doc)
    text = json.dumps(payload, sort_keys=True, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 2 if constants.diagnostics else 0


def _experiment_config(args, force_experiment: str | None = None) -> ExperimentConfig:
    doc = _apply_overrides(_load_doc(args.config), args)
    if force_experiment is not None:
        doc["experiment"] = force_experiment
    doc.setdefault("experiment", "moments")
    return load_config(doc)


def cmd_simulate(args) -> int:
    cfg = _experiment_config(args)
    spec = cfg.spec
    x, y = _draw_initial(cfg.initial, spec, cfg.replicas, cfg.seed, 7)
    icfg = IntegratorConfig(step=cfg.step, horizon=cfg.horizon, scheme=cfg.scheme,
                            seed=cfg.seed)
    system = "particles" if spec.interaction.kind != "none" else "classical"
    if spec.external.kind == "zero" and spec.interaction.has_split:
        system = "unconfined"
    traj = simulate(spec, Ensemble(x=x, y=y), icfg, system=system,
                    dump_times=cfg.dump_times)
    run_dir = _out_root(cfg) / cfg.hash
    run_dir.mkdir(parents=True, exist_ok=True)
    if args.binary:
        np.savez_compressed(run_dir / "trajectory.npz", times=traj.times,
                            x=traj.x, y=traj.y)
    header, rows = trajectory_to_rows(traj)
    write_csv(run_dir / "trajectory.csv", header, rows)
    meta = {"config_hash": cfg.hash, "seed": cfg.seed, "system": system,
            "step": cfg.step, "horizon": cfg.horizon}
    (run_dir / "metadata.json").write_text(json.dumps(meta, sort_keys=True, indent=1))
    print(run_dir)
    return 0


def cmd_couple(args) -> int:
    cfg = _experiment_config(args)
    spec = cfg.spec
    constants = derive_constants(spec)
    mode = cfg.coupling_mode or "reflection_mix"
    control = (CouplingControl(mode=mode, xi=cfg.coupling_xi)
               if cfg.coupling_xi is not None
               else CouplingControl.for_constants(constants, mode=mode))
    state = build_initial_pair(cfg)
    icfg = IntegratorConfig(step=cfg.step, horizon=cfg.horizon, scheme=cfg.scheme,
                            seed=cfg.seed)
    law = "replica_proxy" if spec.interaction.kind != "none" else "none"
    traj = simulate_coupled(spec, state, control, icfg, constants,
                            dump_times=cfg.dump_times, law=law)
    cols = ["t", "rs", "rl", "delta", "rho", "abs_z", "abs_q", "rc"]
    rho = GroundMetric.from_constants(spec, constants, "rho")
    rs = GroundMetric.from_constants(spec, constants, "r_s")
    rl = GroundMetric.from_constants(spec, constants, "r_l")
    z = traj.ax - traj.bx
    w = traj.ay - traj.by
    rows = np.column_stack([
        traj.times,
        rs.dist_zw(z, w).mean(axis=1),
        rl.dist_zw(z, w).mean(axis=1),
        rho.delta_zw(z, w).mean(axis=1),
        rho.dist_zw(z, w).mean(axis=1),
        np.linalg.norm(z, axis=-1).mean(axis=1),
        np.linalg.norm(z + w / spec.gamma, axis=-1).mean(axis=1),
        traj.rc_mean,
    ])
    run_dir = _out_root(cfg) / cfg.hash
    run_dir.mkdir(parents=True, exist_ok=True)
    write_csv(run_dir / "coupled.csv", cols, rows)
    meta = {"config_hash": cfg.hash, "seed": cfg.seed, "xi": control.xi,
            "mode": control.mode, "constants": constants.to_dict()}
    (run_dir / "metadata.json").write_text(json.dumps(meta, sort_keys=True, indent=1))
    print(run_dir)
    return 2 if constants.diagnostics else 0


def _run_and_write(cfg: ExperimentConfig) -> int:
    record = run_experiment(cfg)
    run_dir = write_record(record, _out_root(cfg))
    print(run_dir)
    return 2 if record.flagged else 0


def cmd_contract(args) -> int:
    doc = _load_doc(args.config)
    exp = doc.get("experiment", "contract_classical")
    if exp not in ("contract_strong", "contract_classical", "contract_nonlinear",
                   "unconfined_contract"):
        exp = "contract_classical"
    args_doc = _apply_overrides(doc, args)
    args_doc["experiment"] = exp
    return _run_and_write(load_config(args_doc))


def cmd_chaos(args) -> int:
    doc = _apply_overrides(_load_doc(args.config), args)
    doc.setdefault("experiment", "chaos")
    if doc["experiment"] not in ("chaos", "unconfined_chaos"):
        doc["experiment"] = "chaos"
    return _run_and_write(load_config(doc))


def cmd_moments(args) -> int:
    doc = _apply_overrides(_load_doc(args.config), args)
    doc["experiment"] = "moments"
    return _run_and_write(load_config(doc))


def cmd_unconfined(args) -> int:
    doc = _apply_overrides(_load_doc(args.config), args)
    if doc.get("experiment") != "unconfined_chaos":
        doc["experiment"] = "unconfined_contract"
    return _run_and_write(load_config(doc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kinlang",
                                     description="coupled kinetic Langevin laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {"constants": cmd_constants, "simulate": cmd_simulate,
                "couple": cmd_couple, "contract": cmd_contract,
                "chaos": cmd_chaos, "moments": cmd_moments,
                "unconfined": cmd_unconfined}
    for name, fn in handlers.items():
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--step", type=float, default=None)
        if name not in ("constants",):
            p.add_argument("--replicas", type=int, default=None)
        if name == "simulate":
            p.add_argument("--binary", action="store_true",
                           help="also dump the trajectory as .npz")
        p.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # runtime failures: no partial outputs
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
