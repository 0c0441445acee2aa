"""
Result Serialization

CSV and JSON emission with fixed number formatting (17 significant digits
in CSV, shortest round-trip floats in JSON, sorted keys) so identical runs
produce byte-identical files, plus the run manifest that lists every output
with its content hash.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .errors import ConfigError
from .flows import StepDiagnostics, Trajectory, conserved_table
from .services.fingerprint import file_digest
from .states import PeakonState, Sector

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


# ==========================================================================
# PRIMITIVES
# ==========================================================================

def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples to JSON types; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps(data: Any) -> str:
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(data: Any, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data), encoding="utf-8")
    return path


def write_csv(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    return path


# ==========================================================================
# TRAJECTORIES
# ==========================================================================

def trajectory_frame(tr: Trajectory) -> pd.DataFrame:
    """Columns t, q1..qn, p1..pn in original index order."""
    data = {"t": tr.times}
    for j in range(tr.n):
        data[f"q{j + 1}"] = tr.q[:, j]
    for j in range(tr.n):
        data[f"p{j + 1}"] = tr.p[:, j]
    return pd.DataFrame(data)


def factorization_frame(times: Sequence[float], states: Sequence[PeakonState]) -> pd.DataFrame:
    """Translation-free output of the factorization route.

    Columns t, p1..pn (original order) and gap1..gap(n-1), the positive
    consecutive canonical gaps.
    """
    rows = []
    for t, s in zip(times, states):
        row = {"t": float(t)}
        row.update({f"p{j + 1}": float(v) for j, v in enumerate(s.p)})
        row.update({f"gap{j + 1}": float(v) for j, v in enumerate(s.sector.ordering_gaps(s.q))})
        rows.append(row)
    return pd.DataFrame(rows)


def read_trajectory_csv(path, sector: Sector) -> Trajectory:
    """Rebuild a Trajectory from a trajectory CSV.

    Raises:
        ConfigError: If the file is missing or malformed
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"trajectory file not found: {path}", field="trajectory")
    frame = pd.read_csv(path, float_precision="round_trip")
    q_cols = [c for c in frame.columns if c.startswith("q")]
    p_cols = [c for c in frame.columns if c.startswith("p")]
    if "t" not in frame.columns or not q_cols or len(q_cols) != len(p_cols):
        raise ConfigError(f"{path} is not a trajectory CSV (need t, q1..qn, p1..pn)", field="trajectory")
    q_cols.sort(key=lambda c: int(c[1:]))
    p_cols.sort(key=lambda c: int(c[1:]))
    times = frame["t"].to_numpy(dtype=float)
    q = frame[q_cols].to_numpy(dtype=float)
    p = frame[p_cols].to_numpy(dtype=float)
    return Trajectory(
        times=times, q=q, p=p, sector=sector,
        ledger=conserved_table(times, q, p),
        diagnostics=StepDiagnostics(t_reached=float(times[-1])),
    )


# ==========================================================================
# MANIFEST
# ==========================================================================

def library_versions() -> Dict[str, str]:
    import pydantic
    import scipy

    return {
        "peakon_toda": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
    }


@dataclass
class RunManifest:
    """Record of a run: config echo, outputs with hashes and metadata."""
    command: str
    output_dir: Path
    config: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)
    files: List[Dict[str, str]] = field(default_factory=list)

    def add(self, path, kind: str) -> None:
        path = Path(path)
        self.files.append({
            "path": path.relative_to(self.output_dir).as_posix()
            if path.is_relative_to(self.output_dir) else path.as_posix(),
            "kind": kind,
            "sha256": file_digest(path),
        })

    def write_csv(self, frame: pd.DataFrame, name: str, kind: str) -> Path:
        path = write_csv(frame, self.output_dir / name)
        self.add(path, kind)
        return path

    def write_json(self, data: Any, name: str, kind: str) -> Path:
        path = write_json(data, self.output_dir / name)
        self.add(path, kind)
        return path

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config,
            "metadata": self.metadata,
            "files": self.files,
            "versions": library_versions(),
        }

    def save(self, name: str = "manifest.json") -> Path:
        path = write_json(self.to_dict(), self.output_dir / name)
        logger.info(f"Wrote manifest with {len(self.files)} file(s) to {path}")
        return path


def load_json(path) -> Optional[Dict]:
    path = Path(path)
    if not path.is_file():
        return None
    return json.loads(path.read_text(encoding="utf-8"))
