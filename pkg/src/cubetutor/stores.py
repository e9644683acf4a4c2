"""File-backed persistence: profiles, append-only transcripts, libraries.

Everything is embedded (no database): profiles are one JSON file per user
written via temp-file-then-rename, transcripts are append-only JSON lines
with a per-line checksum, libraries are numbered snapshot files.  The
classes double as the storage interface; a database-backed swap only has
to match their methods.
"""
from __future__ import annotations

import json
import os
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path

from .cube import CubeError
from .macros import MacroLibrary


class StoreError(CubeError):
    pass


@dataclass
class UserProfile:
    username: str
    gender: str = ""
    score: int = 0
    games_won: int = 0
    skill_level: str = ""
    games_played: int = 0
    avg_game_minutes: float | None = None
    role: str = "student"  # reserved for future role-based views

    def __post_init__(self) -> None:
        if not self.username:
            raise StoreError("profile needs a username")
        if self.score < 0 or self.games_won < 0 or self.games_played < 0:
            raise StoreError("profile counts must be non-negative")
        if self.games_won > self.games_played:
            raise StoreError("games_won cannot exceed games_played")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "UserProfile":
        return cls(**data)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


class ProfileStore:
    """One JSON file per user under ``root``; writes are atomic per record."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, username: str) -> Path:
        key = username.lower()
        if not key.replace("-", "").replace("_", "").isalnum():
            raise StoreError(f"unusable username {username!r}")
        return self.root / f"{key}.json"

    def get(self, username: str) -> UserProfile | None:
        path = self._path(username)
        if not path.exists():
            return None
        return UserProfile.from_json(json.loads(path.read_text()))

    def put(self, profile: UserProfile) -> None:
        _atomic_write(
            self._path(profile.username),
            json.dumps(profile.to_json(), indent=2, sort_keys=True) + "\n",
        )

    def usernames(self) -> tuple[str, ...]:
        return tuple(
            sorted(
                json.loads(p.read_text())["username"]
                for p in self.root.glob("*.json")
            )
        )


def _line_payload(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class JsonlStore:
    """Append-only JSON lines, one ``{"crc": ..., "record": ...}`` per line.

    Appends write the whole line in a single O_APPEND write, so concurrent
    appenders interleave whole lines.  Lines that fail JSON parsing or the
    checksum are moved to a ``.quarantine`` side file on load and skipped;
    the store keeps working.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: dict) -> None:
        payload = _line_payload(record)
        line = _line_payload({"crc": zlib.crc32(payload.encode()), "record": record})
        fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        try:
            os.write(fd, (line + "\n").encode())
        finally:
            os.close(fd)

    def load(self) -> list[dict]:
        if not self.path.exists():
            return []
        records: list[dict] = []
        bad: list[str] = []
        for line in self.path.read_text().splitlines():
            if not line.strip():
                continue
            try:
                wrapper = json.loads(line)
                record = wrapper["record"]
                if zlib.crc32(_line_payload(record).encode()) != wrapper["crc"]:
                    raise ValueError("checksum mismatch")
            except (ValueError, KeyError, TypeError):
                bad.append(line)
                continue
            records.append(record)
        if bad:
            quarantine = self.path.with_name(self.path.name + ".quarantine")
            with open(quarantine, "a") as f:
                f.writelines(b + "\n" for b in bad)
            survivors = [
                ln for ln in self.path.read_text().splitlines()
                if ln.strip() and ln not in bad
            ]
            _atomic_write(self.path, "".join(s + "\n" for s in survivors))
        return records


class TranscriptStore(JsonlStore):
    """Conversation log; every line carries the fixed transcript fields."""

    FIELDS = ("timestamp", "session", "speaker", "text", "sentiment", "intent", "strike_count")

    def append(self, record: dict) -> None:
        missing = [f for f in self.FIELDS if f not in record]
        if missing:
            raise StoreError(f"transcript record missing fields: {missing}")
        super().append(record)


class LibraryStore:
    """Numbered macro-library snapshots under one directory.

    ``save`` never overwrites: it writes ``library-vN.json`` for the next N
    and points ``current`` at it.  ``load`` follows the pointer unless a
    version is named.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def versions(self) -> list[int]:
        out = []
        for p in self.root.glob("library-v*.json"):
            stem = p.stem.removeprefix("library-v")
            if stem.isdigit():
                out.append(int(stem))
        return sorted(out)

    def save(self, library: MacroLibrary) -> int:
        version = (self.versions()[-1] + 1) if self.versions() else 1
        path = self.root / f"library-v{version}.json"
        library.save(path)
        _atomic_write(self.root / "current", f"{version}\n")
        return version

    def load(self, version: int | None = None) -> MacroLibrary:
        if version is None:
            pointer = self.root / "current"
            if not pointer.exists():
                raise StoreError("library store is empty")
            version = int(pointer.read_text().strip())
        path = self.root / f"library-v{version}.json"
        if not path.exists():
            raise StoreError(f"no library version {version}")
        return MacroLibrary.load(path)
