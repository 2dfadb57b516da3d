from __future__ import annotations

import re
import tomllib
from pathlib import Path

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.core.models import ExperimentConfig


class Settings(BaseSettings):
    """Central configuration loaded from environment / .env file."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="D2D_",
        case_sensitive=False,
    )

    # ── Logging ─────────────────────────────────────────────────
    log_level: str = "INFO"
    log_json: bool = False

    # ── Runner ──────────────────────────────────────────────────
    max_workers: int = 1
    output_dir: str = "results"
    write_message_log: bool = False

    # ── Hindsight solver ────────────────────────────────────────
    hindsight_max_iters: int = 3000
    hindsight_tol: float = 1e-9
    hindsight_polish: bool = True

    # ── Test oracles ────────────────────────────────────────────
    lp_oracle_max_sources: int = 12


# Singleton
_settings: Settings | None = None


def get_settings() -> Settings:
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


# ── Experiment files ────────────────────────────────────────────


class ConfigError(Exception):
    """An experiment file failed to parse or validate."""

    def __init__(self, diagnostics: list[str]) -> None:
        self.diagnostics = diagnostics
        super().__init__("\n".join(diagnostics))


_TOML_POSITION = re.compile(r"\(at line (\d+), column \d+\)")
_TABLE = re.compile(r"^\s*\[\[?\s*([A-Za-z0-9_.\-]+)\s*\]\]?\s*(#.*)?$")


def _find_key(lines: list[str], table: str, index: int, key: str) -> int | None:
    key_re = re.compile(rf"^\s*{re.escape(key)}\s*=")
    current, seen = "", -1
    for lineno, line in enumerate(lines, start=1):
        header = _TABLE.match(line)
        if header:
            current = header.group(1)
            seen += current == table
            continue
        if key_re.match(line) and current == table and seen == index:
            return lineno
    return None


def _locate(lines: list[str], loc: tuple[int | str, ...]) -> int | None:
    """Best-effort 1-based line of the key a validation error points at."""
    keys = [part for part in loc if isinstance(part, str)]
    if not keys:
        return None
    index = loc[1] if len(loc) > 1 and isinstance(loc[1], int) else 0

    top_level = _find_key(lines, "", -1, keys[0])
    if top_level is not None:
        return top_level
    # Union members show up as trailing loc parts, so try the deepest real key first.
    for key in reversed(keys[1:]):
        line = _find_key(lines, keys[0], index, key)
        if line is not None:
            return line
    seen = -1
    for lineno, line in enumerate(lines, start=1):
        header = _TABLE.match(line)
        if header and header.group(1) == keys[0]:
            seen += 1
            if seen == index:
                return lineno
    return None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config: {exc.strerror or exc}"]) from exc

    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # Before 3.14 the position only appears inside the message.
        match = _TOML_POSITION.search(str(exc))
        line = getattr(exc, "lineno", None) or (int(match.group(1)) if match else None)
        message = getattr(exc, "msg", None) or _TOML_POSITION.sub("", str(exc)).strip()
        where = f"{path}:{line}" if line else str(path)
        raise ConfigError([f"{where}: {message}"]) from exc

    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        lines = text.splitlines()
        diagnostics = []
        for error in exc.errors():
            loc = tuple(error["loc"])
            line = _locate(lines, loc)
            where = f"{path}:{line}" if line else str(path)
            dotted = ".".join(str(part) for part in loc) or "<root>"
            diagnostics.append(f"{where}: {dotted}: {error['msg']}")
        raise ConfigError(diagnostics) from exc
    return _resolve_paths(config, path.parent)


def _resolve_paths(config: ExperimentConfig, base: Path) -> ExperimentConfig:
    """Make file references relative to the config file's directory."""

    def resolve(value: str | None) -> str | None:
        if value is None or Path(value).is_absolute():
            return value
        return str(base / value)

    update: dict = {}
    if config.workload.trace_path:
        update["workload"] = config.workload.model_copy(
            update={"trace_path": resolve(config.workload.trace_path)}
        )
    if config.dynamics is not None:
        update["dynamics"] = config.dynamics.model_copy(
            update={
                "schedule_path": resolve(config.dynamics.schedule_path),
                "mobility_path": resolve(config.dynamics.mobility_path),
            }
        )
    return config.model_copy(update=update) if update else config
