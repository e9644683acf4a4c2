"""Service configuration: a TOML or JSON file plus environment overrides.

Only paths, budgets, auth tokens, and network binding live here; behavior
knobs stay function parameters.  Unknown keys are rejected so a typo in a
config file fails loudly at startup instead of silently using defaults.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .cube import CubeError


class ConfigError(CubeError):
    pass


def packaged_data(filename: str) -> Path:
    """Path to a file shipped inside the package's data directory."""
    return Path(str(resources.files("cubetutor.data").joinpath(filename)))


@dataclass
class TutorConfig:
    data_dir: Path = Path("cubetutor-data")
    profiles_dir: Path | None = None  # default: <data_dir>/profiles
    transcripts_path: Path | None = None  # default: <data_dir>/transcripts.jsonl
    reports_path: Path | None = None  # default: <data_dir>/reports.jsonl
    library_path: Path | None = None  # default: packaged demo library
    valence_path: Path | None = None  # default: packaged lexicon
    abuse_path: Path | None = None
    templates_path: Path | None = None
    corpus_path: Path | None = None  # default: packaged audit corpus
    node_budget: int = 200_000
    step_cap: int = 32
    register: str = "standard"
    host: str = "127.0.0.1"
    port: int = 8000
    tokens: dict[str, str] = field(default_factory=dict)  # bearer token -> username

    def __post_init__(self) -> None:
        if self.register not in ("standard", "simplified"):
            raise ConfigError(f"unknown register {self.register!r}")
        if not 0 < self.port < 65536:
            raise ConfigError(f"port {self.port} out of range")
        if self.node_budget < 1 or self.step_cap < 1:
            raise ConfigError("budgets must be positive")

    def resolved_profiles_dir(self) -> Path:
        return self.profiles_dir or self.data_dir / "profiles"

    def resolved_transcripts_path(self) -> Path:
        return self.transcripts_path or self.data_dir / "transcripts.jsonl"

    def resolved_reports_path(self) -> Path:
        return self.reports_path or self.data_dir / "reports.jsonl"

    def resolved_library_path(self) -> Path:
        return self.library_path or packaged_data("demo_library.json")

    def resolved_corpus_path(self) -> Path:
        return self.corpus_path or packaged_data("eec_corpus.csv")


_PATH_KEYS = (
    "data_dir",
    "profiles_dir",
    "transcripts_path",
    "reports_path",
    "library_path",
    "valence_path",
    "abuse_path",
    "templates_path",
    "corpus_path",
)

# environment overrides for paths and binding, e.g. CUBETUTOR_PORT
ENV_PREFIX = "CUBETUTOR_"
_ENV_KEYS = _PATH_KEYS + ("host", "port")


def _parse_file(path: Path) -> dict:
    if path.suffix == ".toml":
        return tomllib.loads(path.read_text())
    if path.suffix == ".json":
        return json.loads(path.read_text())
    raise ConfigError(f"config must be .toml or .json, got {path.name!r}")


def load_config(
    path: str | Path | None = None, env: dict[str, str] | None = None
) -> TutorConfig:
    data: dict = {}
    if path is not None:
        file_path = Path(path)
        if not file_path.exists():
            raise ConfigError(f"config file {file_path} does not exist")
        data = _parse_file(file_path)

    known = {f.name for f in fields(TutorConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    environ = os.environ if env is None else env
    for key in _ENV_KEYS:
        value = environ.get(ENV_PREFIX + key.upper())
        if value is not None:
            data[key] = value

    if "port" in data:
        try:
            data["port"] = int(data["port"])
        except ValueError as exc:
            raise ConfigError(f"port must be an integer, got {data['port']!r}") from exc
    for key in _PATH_KEYS:
        if data.get(key) is not None:
            data[key] = Path(data[key])
    if "tokens" in data and not (
        isinstance(data["tokens"], dict)
        and all(isinstance(k, str) and isinstance(v, str) for k, v in data["tokens"].items())
    ):
        raise ConfigError("tokens must map bearer token strings to usernames")
    try:
        return TutorConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
