"""On-disk formats.

* field JSON: ``{"N": N, "coeffs": [[re, im], ...]}`` in ``k = -N..N`` order
* field binary: little-endian float64 ``re, im`` pairs, same order
* invariant trace: CSV with columns ``t,mass,momentum,hamiltonian,
  hamiltonian_eps,energy_eps,h1,h2``, 17 significant digits
* trajectory directory: ``manifest.json``, ``invariants.csv`` and
  ``snapshots/`` (one binary record per snapshot plus ``index.json``)
* experiment report directory: ``report.json`` plus one CSV per table
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .integrator import SolverConfig, Termination, Trajectory
from .invariants import CSV_COLUMNS, InvariantRecord
from .model import ModelParams
from .spectral import Cutoff, SpectralField

_LE_F64 = np.dtype("<f8")


class ChecksumError(ValueError):
    pass


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Path) -> str:
    return sha256_bytes(Path(path).read_bytes())


# --- fields -------------------------------------------------------------------


def field_to_json(f: SpectralField) -> dict:
    return {"N": f.num_modes, "coeffs": [[float(c.real), float(c.imag)] for c in f.coeffs]}


def field_from_json(obj: dict) -> SpectralField:
    n = obj["N"]
    coeffs = np.array([complex(re, im) for re, im in obj["coeffs"]])
    if coeffs.size != 2 * n + 1:
        raise ValueError(f"expected {2 * n + 1} coefficients for N={n}, got {coeffs.size}")
    return SpectralField(coeffs)


def field_to_bytes(f: SpectralField) -> bytes:
    return f.coeffs.view(np.float64).astype(_LE_F64).tobytes()


def field_from_bytes(data: bytes) -> SpectralField:
    raw = np.frombuffer(data, dtype=_LE_F64)
    if raw.size % 2 or (raw.size // 2) % 2 == 0:
        raise ValueError(f"binary field record has invalid length {len(data)} bytes")
    return SpectralField(raw[0::2] + 1j * raw[1::2])


def save_field(f: SpectralField, path: Path) -> str:
    """Write JSON (``.json``) or binary (anything else); return the sha256 of the file."""
    path = Path(path)
    data = (json.dumps(field_to_json(f)) + "\n").encode() if path.suffix == ".json" else field_to_bytes(f)
    path.write_bytes(data)
    return sha256_bytes(data)


def load_field(path: Path, sha256: str | None = None) -> SpectralField:
    data = Path(path).read_bytes()
    if sha256 is not None and sha256_bytes(data) != sha256.lower():
        raise ChecksumError(f"checksum mismatch for {path}")
    if Path(path).suffix == ".json":
        return field_from_json(json.loads(data))
    return field_from_bytes(data)


# --- invariant CSV ------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def invariants_to_csv(records: list[InvariantRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(v) for v in r.as_row()])
    return buf.getvalue()


def invariants_from_csv(text: str) -> list[InvariantRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"invariant CSV header must be {','.join(CSV_COLUMNS)}")
    return [InvariantRecord(*map(float, row)) for row in rows[1:] if row]


# --- trajectories -------------------------------------------------------------


def params_to_dict(p: ModelParams) -> dict:
    return {"sigma": p.sigma, "cutoff": p.cutoff.K, "oversample": p.oversample, "nonlinear": p.nonlinear}


def params_from_dict(d: dict) -> ModelParams:
    return ModelParams(d["sigma"], Cutoff(d["cutoff"]), d["oversample"], d.get("nonlinear", True))


def save_trajectory(traj: Trajectory, out_dir: Path, snapshots: bool = True, extra: dict | None = None) -> Path:
    out_dir = Path(out_dir)
    snap_dir = out_dir / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    checksums = {}
    csv_text = invariants_to_csv(traj.invariant_trace)
    (out_dir / "invariants.csv").write_text(csv_text)
    checksums["invariants.csv"] = sha256_bytes(csv_text.encode())

    index = []
    stored = traj.snapshots if snapshots else [traj.snapshots[0], traj.snapshots[-1]]
    for i, (t, f) in enumerate(stored):
        name = f"{i:06d}.bin"
        index.append({"t": t, "file": name, "sha256": save_field(f, snap_dir / name)})
    index_text = json.dumps(index, indent=1) + "\n"
    (snap_dir / "index.json").write_text(index_text)
    checksums["snapshots/index.json"] = sha256_bytes(index_text.encode())

    manifest = {
        "params": params_to_dict(traj.params),
        "config": asdict(traj.config),
        "termination": traj.termination.value,
        "num_modes": traj.initial.num_modes,
        "checksums": checksums,
        **(extra or {}),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out_dir


def load_trajectory(run_dir: Path) -> Trajectory:
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    checks = manifest["checksums"]
    for rel, digest in checks.items():
        if sha256_file(run_dir / rel) != digest:
            raise ChecksumError(f"checksum mismatch for {run_dir / rel}")
    traj = Trajectory(params_from_dict(manifest["params"]), SolverConfig(**manifest["config"]))
    traj.termination = Termination(manifest["termination"])
    traj.invariant_trace = invariants_from_csv((run_dir / "invariants.csv").read_text())
    for entry in json.loads((run_dir / "snapshots" / "index.json").read_text()):
        f = load_field(run_dir / "snapshots" / entry["file"], entry["sha256"])
        traj.snapshots.append((float(entry["t"]), f))
    return traj


# --- reports ------------------------------------------------------------------


def report_dir_name(name: str, seed: int, timestamp: float | None = None) -> str:
    ts = time.strftime("%Y%m%dT%H%M%S", time.gmtime(time.time() if timestamp is None else timestamp))
    return f"{name}-{ts}-seed{seed}"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def save_report(report, root: Path, timestamp: float | None = None) -> Path:
    out = Path(root) / report_dir_name(report.name, report.seed, timestamp)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, default=_json_default) + "\n")
    for tname, cols in report.tables.items():
        keys = list(cols)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for row in zip(*(cols[k] for k in keys)):
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
        (out / f"{tname}.csv").write_text(buf.getvalue())
    return out
