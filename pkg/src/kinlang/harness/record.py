"""Run persistence.

Each run writes into ``<out>/<config-hash>/``: a ``record.json`` with the
constants snapshot, statistics, seeds and diagnostics, plus one CSV per
curve.  The directory name is the canonical-JSON hash of the config, so
re-running the same config overwrites its own directory and two different
configs never collide.  All numbers are written at full double precision;
rerunning with the same (config, seed) reproduces every byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .experiments import ExperimentRecord


def record_json(record: ExperimentRecord) -> str:
    return json.dumps(record.to_dict(), sort_keys=True, indent=1)


def write_record(record: ExperimentRecord, out_root: Path) -> Path:
    run_dir = Path(out_root) / record.config_hash
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "record.json").write_text(record_json(record))
    for name, (columns, rows) in record.curves.items():
        write_csv(run_dir / f"{name}.csv", columns, rows)
    return run_dir


def write_csv(path: Path, columns, rows) -> None:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        np.savetxt(fh, rows, delimiter=",", fmt="%.17g")
