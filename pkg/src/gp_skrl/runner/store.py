"""Append-only, content-addressed artifact store.

Layout under the root::

    <kind>/<address>/        files plus record.json
    refs/<kind>/<scenario>   address of the most recent record of that kind for a scenario
    .staging/                half-written records, renamed into place when complete
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import uuid
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from gp_skrl import __version__
from gp_skrl.errors import ArtifactConflictError, MissingArtifactError

RECORD_FILE = "record.json"


def file_digest(path: Path) -> str:
    """SHA-256 of the bytes; ``.npz`` archives hash their arrays since zip entries carry write times."""
    h = hashlib.sha256()
    if path.suffix == ".npz":
        with np.load(path, allow_pickle=False) as data:
            for name in sorted(data.files):
                array = np.ascontiguousarray(data[name])
                h.update(f"{name}:{array.dtype.str}:{array.shape}".encode())
                h.update(array.tobytes())
        return h.hexdigest()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class ArtifactRecord:
    """Provenance of one stored artifact."""

    kind: str
    scenario: str
    config_hash: str
    seed: int
    code_version: str
    files: dict[str, str]
    volatile: list[str] = field(default_factory=list)
    parents: dict[str, str] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)
    address: str = ""

    def identity(self) -> dict[str, Any]:
        """Everything the address is derived from; volatile file contents are left out."""
        return {
            "kind": self.kind,
            "scenario": self.scenario,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "code_version": self.code_version,
            "files": {k: v for k, v in sorted(self.files.items()) if k not in self.volatile},
            "parents": dict(sorted(self.parents.items())),
        }

    def compute_address(self) -> str:
        text = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ArtifactRecord:
        return cls(**json.loads(text))


@dataclass(frozen=True)
class StoredArtifact:
    record: ArtifactRecord
    path: Path

    def file(self, name: str) -> Path:
        if name not in self.record.files:
            raise MissingArtifactError(
                f"{self.record.kind} artifact {self.record.address[:12]} has no file {name!r}. "
                f"Available: {sorted(self.record.files)}"
            )
        return self.path / name


Writer = Callable[[Path], None]


class ArtifactStore:
    """Records are written once; writing identical content again returns the existing record."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    def _staging(self) -> Path:
        path = self.root / ".staging" / uuid.uuid4().hex
        path.mkdir(parents=True)
        return path

    def put(
        self,
        kind: str,
        writer: Writer,
        *,
        scenario: str,
        config_hash: str,
        seed: int,
        volatile: list[str] | None = None,
        parents: dict[str, str] | None = None,
        extra: dict[str, Any] | None = None,
    ) -> StoredArtifact:
        """Let ``writer`` fill a staging directory, address the result and move it into place."""
        staging = self._staging()
        try:
            writer(staging)
            files = {
                p.relative_to(staging).as_posix(): file_digest(p)
                for p in sorted(staging.rglob("*"))
                if p.is_file()
            }
            record = ArtifactRecord(
                kind=kind,
                scenario=scenario,
                config_hash=config_hash,
                seed=seed,
                code_version=__version__,
                files=files,
                volatile=sorted(volatile or []),
                parents=dict(parents or {}),
                extra=dict(extra or {}),
            )
            record.address = record.compute_address()
            (staging / RECORD_FILE).write_text(record.to_json())
            final = self.root / kind / record.address
            if final.exists():
                existing = self.load_record(kind, record.address)
                if existing.identity() != record.identity():
                    raise ArtifactConflictError(f"{kind} address {record.address} already holds different content")
                logger.debug("{} {} already stored", kind, record.address[:12])
                return self._finish(record, final, scenario)
            final.parent.mkdir(parents=True, exist_ok=True)
            os.replace(staging, final)
            logger.info("stored {} {} for {}", kind, record.address[:12], scenario)
            return self._finish(record, final, scenario)
        finally:
            if staging.exists():
                shutil.rmtree(staging, ignore_errors=True)

    def _finish(self, record: ArtifactRecord, final: Path, scenario: str) -> StoredArtifact:
        ref = self.root / "refs" / record.kind / scenario
        ref.parent.mkdir(parents=True, exist_ok=True)
        tmp = ref.with_suffix(".tmp")
        tmp.write_text(record.address)
        os.replace(tmp, ref)
        return StoredArtifact(record, final)

    def load_record(self, kind: str, address: str) -> ArtifactRecord:
        path = self.root / kind / address / RECORD_FILE
        if not path.is_file():
            raise MissingArtifactError(f"no {kind} artifact at address {address}")
        return ArtifactRecord.from_json(path.read_text())

    def get(self, kind: str, address: str, *, verify: bool = True) -> StoredArtifact:
        """Load a record and check every non-volatile file against its digest."""
        record = self.load_record(kind, address)
        path = self.root / kind / address
        if verify:
            for name, digest in record.files.items():
                target = path / name
                if not target.is_file():
                    raise MissingArtifactError(f"{kind} {address[:12]} is missing {name}")
                if name not in record.volatile and file_digest(target) != digest:
                    raise ArtifactConflictError(f"{kind} {address[:12]}: {name} does not match its recorded digest")
        return StoredArtifact(record, path)

    def latest(self, kind: str, scenario: str) -> StoredArtifact:
        """Most recent artifact of ``kind`` for ``scenario``."""
        ref = self.root / "refs" / kind / scenario
        if not ref.is_file():
            raise MissingArtifactError(
                f"no {kind} artifact for scenario {scenario!r} in {self.root}; run the upstream stage first"
            )
        return self.get(kind, ref.read_text().strip())

    def has(self, kind: str, scenario: str) -> bool:
        return (self.root / "refs" / kind / scenario).is_file()
