"""Machine-readable experiment reports (versioned JSON + CSV)."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import subprocess
from dataclasses import asdict, dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1


def build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except (OSError, subprocess.TimeoutExpired):
        pass
    return "unknown"


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    rows: list[dict]
    seeds: dict
    schema_version: int = SCHEMA_VERSION
    build: str = field(default_factory=build_id)
    created: str = field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat()
    )

    def to_json(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    def to_csv(self, path) -> Path:
        """Row values only; identical to the JSON rows field."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        columns: list[str] = []
        for row in self.rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=columns)
            writer.writeheader()
            writer.writerows(self.rows)
        return path

    def save(self, out_dir, stem: str | None = None):
        out_dir = Path(out_dir)
        stem = stem or self.experiment
        return self.to_json(out_dir / f"{stem}.json"), self.to_csv(out_dir / f"{stem}.csv")

    @classmethod
    def from_json(cls, path) -> "ExperimentReport":
        data = json.loads(Path(path).read_text())
        return cls(**data)
