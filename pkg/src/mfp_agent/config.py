"""Runtime configuration: a JSON config file with flag-style overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any


@dataclass(frozen=True)
class AppConfig:
    manifest_path: str | None = None
    grammar_path: str | None = None
    knowledge_path: str | None = None
    templates_path: str | None = None
    chunk_size: int = 3
    resource_threshold: int = 100  # quantity at/above this needs an extra confirm
    sheet_threshold: int = 200  # estimated sheets at/above this, likewise
    seed: int = 0
    host: str = "127.0.0.1"
    port: int = 8571
    profile_dir: str | None = None  # where per-user defaults are stored
    auto_advance: bool = True

    def merged(self, overrides: dict[str, Any]) -> "AppConfig":
        known = {f.name for f in fields(AppConfig)}
        clean = {k: v for k, v in overrides.items() if k in known and v is not None}
        return replace(self, **clean)


def load_config(path: str | Path | None = None,
                overrides: dict[str, Any] | None = None) -> AppConfig:
    cfg = AppConfig()
    if path is not None:
        raw = json.loads(Path(path).read_text("utf-8"))
        unknown = set(raw) - {f.name for f in fields(AppConfig)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cfg.merged(raw)
    if overrides:
        cfg = cfg.merged(overrides)
    return cfg


class ProfileStore:
    """Per-profile persisted defaults, one JSON file per profile id."""

    def __init__(self, directory: str | Path | None):
        self.directory = Path(directory) if directory else None

    def _path(self, profile: str) -> Path | None:
        if self.directory is None:
            return None
        safe = "".join(c for c in profile if c.isalnum() or c in "-_") or "default"
        return self.directory / f"{safe}.json"

    def load(self, profile: str) -> tuple[dict[str, Any], bool]:
        """Return (defaults, seen_before)."""
        path = self._path(profile)
        if path is None or not path.exists():
            return {}, False
        return json.loads(path.read_text("utf-8")), True

    def save(self, profile: str, defaults: dict[str, Any]) -> None:
        path = self._path(profile)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(defaults, indent=2, sort_keys=True), "utf-8")
