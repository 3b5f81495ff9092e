from __future__ import annotations

import json
import os

from PySide6.QtCore import QSettings

SETTINGS_ENV = "CORNERGROWTH_SETTINGS"


class SettingsManager:
    def __init__(self, path: str | None = None) -> None:
        path = path or os.environ.get(SETTINGS_ENV)
        if path:
            self._settings = QSettings(str(path), QSettings.Format.IniFormat)
        else:
            self._settings = QSettings("CornerGrowth", "CornerGrowth")

    def file_name(self) -> str:
        return self._settings.fileName()

    def sync(self) -> None:
        self._settings.sync()

    def set_workers(self, workers: int) -> None:
        self._settings.setValue("run/workers", int(workers))

    def get_workers(self) -> int | None:
        value = self._settings.value("run/workers")
        try:
            return int(value) if value not in (None, "") else None
        except (TypeError, ValueError):
            return None

    def set_out_dir(self, path: str) -> None:
        self._settings.setValue("export/out_dir", path)

    def get_out_dir(self) -> str:
        value = self._settings.value("export/out_dir", "")
        return str(value)

    def set_far_multiplier(self, value: float) -> None:
        self._settings.setValue("busemann/far_multiplier", float(value))

    def get_far_multiplier(self) -> float | None:
        value = self._settings.value("busemann/far_multiplier")
        try:
            return float(value) if value not in (None, "") else None
        except (TypeError, ValueError):
            return None

    def set_seed(self, seed: int) -> None:
        # stored as text: QSettings ini values lose precision above 2^63
        self._settings.setValue("run/seed", str(int(seed)))

    def get_seed(self) -> int | None:
        value = self._settings.value("run/seed")
        try:
            return int(str(value)) if value not in (None, "") else None
        except ValueError:
            return None

    def set_recent_runs(self, runs: list[str]) -> None:
        self._settings.setValue("session/recent_runs", json.dumps(runs))

    def get_recent_runs(self) -> list[str]:
        value = self._settings.value("session/recent_runs")
        if not value:
            return []
        try:
            data = json.loads(str(value))
            return data if isinstance(data, list) else []
        except json.JSONDecodeError:
            return []

    def defaults(self) -> dict:
        """Persisted run defaults, keyed like config file entries; unset keys are omitted."""
        values = {
            "workers": self.get_workers(),
            "far_multiplier": self.get_far_multiplier(),
            "seed": self.get_seed(),
        }
        return {key: value for key, value in values.items() if value is not None}

    def reset(self) -> None:
        self._settings.clear()
        self._settings.sync()
