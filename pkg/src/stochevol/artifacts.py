"""Artifact serialization: CSV with round-trip floats, JSON reports, SVG plots, manifests."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

MANIFEST = "manifest.json"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def csv_bytes(header, rows) -> bytes:
    """RFC-4180 CSV, CRLF line ends, floats in shortest round-trip form."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue().encode("utf-8")


def matrix_csv(A, t: float, h: float) -> bytes:
    A = np.asarray(A, dtype=float)
    header = [f"n={A.shape[0]}", f"h={h!r}", f"t={float(t)!r}"] + [""] * (A.shape[1] - 3)
    return csv_bytes(header[:max(A.shape[1], 3)], A.tolist())


def trajectory_csv(times, blocks: dict[str, np.ndarray]) -> bytes:
    """Columns ``t`` followed by ``<name>_<i>`` for each block of states ``(M+1, n)``."""
    header = ["t"]
    cols = [np.asarray(times, dtype=float)[:, None]]
    for name, states in blocks.items():
        states = np.asarray(states, dtype=float)
        header += [f"{name}_{i}" for i in range(states.shape[1])]
        cols.append(states)
    return csv_bytes(header, np.hstack(cols).tolist())


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _finite(o):
    if isinstance(o, float) and not np.isfinite(o):
        return repr(float(o))
    if isinstance(o, dict):
        return {str(k): _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, np.ndarray):
        return _finite(o.tolist())
    if isinstance(o, np.generic):
        return _finite(o.item())
    return o


def json_bytes(obj) -> bytes:
    return (json.dumps(_finite(obj), indent=2, sort_keys=True, default=_json_default) + "\n").encode("utf-8")


def svg_plot(series: list[dict], title: str, xlabel: str, ylabel: str, loglog: bool = False) -> bytes:
    """Line chart; each series is ``{"x", "y", "label", optional "style"}``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "stochevol", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for s in series:
            ax.plot(s["x"], s["y"], s.get("style", "-"), label=s.get("label"))
        if loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if any(s.get("label") for s in series):
            ax.legend()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


@dataclass
class RunArtifacts:
    """Everything a run emits; keys are file names relative to the output directory."""

    config: dict = field(default_factory=dict)
    seed: int | None = None
    data: dict[str, bytes] = field(default_factory=dict)
    reports: dict[str, bytes] = field(default_factory=dict)
    plots: dict[str, bytes] = field(default_factory=dict)
    status: str = "ok"

    def files(self) -> dict[str, bytes]:
        out = {}
        for group in (self.data, self.reports, self.plots):
            for name, blob in group.items():
                if name in out or name == MANIFEST:
                    raise ValueError(f"duplicate or reserved artifact name {name!r}")
                out[name] = blob
        return out


def versions() -> dict:
    import scipy

    return {"stochevol": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def sha256(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def _atomic_write(path: Path, blob: bytes) -> None:
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _archive_manifest(out: Path) -> Path | None:
    cur = out / MANIFEST
    if not cur.exists():
        return None
    k = 1
    while (out / f"manifest.prev-{k}.json").exists():
        k += 1
    dest = out / f"manifest.prev-{k}.json"
    os.replace(cur, dest)
    return dest


def emit_outputs(artifacts: RunArtifacts, directory) -> Path:
    """Write every artifact atomically, then the manifest; returns the manifest path.

    A failure removes the files written by this call.  An existing manifest
    is archived as ``manifest.prev-<k>.json``.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = artifacts.files()
    written = []
    try:
        for name, blob in sorted(files.items()):
            target = out / name
            if target.parent != out:
                target.parent.mkdir(parents=True, exist_ok=True)
            _atomic_write(target, blob)
            written.append(target)
        manifest = {
            "config": artifacts.config,
            "seed": artifacts.seed,
            "status": artifacts.status,
            "versions": versions(),
            "files": [{"name": n, "sha256": sha256(b), "bytes": len(b)} for n, b in sorted(files.items())],
        }
        _archive_manifest(out)
        _atomic_write(out / MANIFEST, json_bytes(manifest))
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return out / MANIFEST


def verify_manifest(path) -> list[str]:
    """Names of listed files whose content no longer matches the recorded hash."""
    path = Path(path)
    manifest = json.loads(path.read_text())
    bad = []
    for entry in manifest["files"]:
        f = path.parent / entry["name"]
        if not f.exists() or sha256(f.read_bytes()) != entry["sha256"]:
            bad.append(entry["name"])
    return bad
