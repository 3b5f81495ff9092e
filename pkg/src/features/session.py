from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from src.features.settings import SettingsManager

TOOL_VERSION = "1.0.0"
MAX_RECENT_RUNS = 10
MANIFEST_NAME = "manifest.json"


class SessionManager:
    def __init__(self, settings: SettingsManager) -> None:
        self._settings = settings

    def add_recent_run(self, path: str) -> None:
        runs = self._settings.get_recent_runs()
        if path in runs:
            runs.remove(path)
        runs.insert(0, path)
        self._settings.set_recent_runs(runs[:MAX_RECENT_RUNS])

    def get_recent_runs(self) -> list[RecentRun]:
        """Recent run directories that still hold a readable manifest; the rest are dropped from the settings."""
        stored = self._settings.get_recent_runs()
        runs = [run for run in map(RecentRun.load, stored) if run is not None]
        if len(runs) != len(stored):
            self._settings.set_recent_runs([run.path for run in runs])
        return runs


@dataclass(frozen=True)
class RecentRun:
    path: str
    label: str
    master_seed: int | None
    finished: str

    @classmethod
    def load(cls, path: str) -> RecentRun | None:
        try:
            data = json.loads((Path(path) / MANIFEST_NAME).read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return None
        if not isinstance(data, dict):
            return None
        return cls(path, _run_label(data.get("config")), data.get("master_seed"), str(data.get("finished", "")))

    def describe(self) -> str:
        return f"{self.path}  [{self.label}] seed={self.master_seed} {self.finished}"


def _run_label(config) -> str:
    if not isinstance(config, dict):
        return "?"
    if "plan" in config:
        return "verify"
    resolved = config.get("resolved")
    if isinstance(resolved, list):
        return "sweep:" + ",".join(str(item.get("experiment", "?")) for item in resolved if isinstance(item, dict))
    if isinstance(resolved, dict):
        label = str(resolved.get("experiment", "?"))
        return f"plotdata:{label}" if "figure" in config else label
    return "?"


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as file:
        for chunk in iter(lambda: file.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    config: dict
    master_seed: int
    started: str = field(default_factory=utc_now)
    finished: str = ""
    files: dict[str, str] = field(default_factory=dict)
    record_checksums: list[str] = field(default_factory=list)
    tool_version: str = TOOL_VERSION

    def add_file(self, path: Path) -> None:
        path = Path(path)
        self.files[path.name] = sha256_file(path)

    def add_csv_records(self, path: Path) -> None:
        lines = Path(path).read_bytes().splitlines()
        # header excluded
        self.record_checksums.extend(sha256_bytes(line) for line in lines[1:])

    def finish(self) -> None:
        self.finished = utc_now()

    def as_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "config": self.config,
            "master_seed": self.master_seed,
            "started": self.started,
            "finished": self.finished,
            "files": dict(sorted(self.files.items())),
            "record_checksums": list(self.record_checksums),
        }
