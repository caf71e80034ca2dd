"""Durable run storage: append-only per-run ledgers plus shared caches.

Each run is a directory ``runs/<run_id>/`` holding an append-only,
line-delimited ``ledger`` (versioned header line, then one JSON entry per
line) and a ``meta.json`` with the run's identity and open/finalized state.
Caches (``caches/{pages,whois,embeddings}``) are content-addressed and
shared across runs.

Crash safety: an append is flushed and fsynced before it returns, and
readers ignore a torn trailing line (one without a final newline), so an
interrupted append leaves either the whole entry or effectively nothing.
One writer per run; any number of concurrent readers.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

LEDGER_FORMAT = "geaudit-ledger"
LEDGER_VERSION = 1


class StoreError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunId:
    run_id: str
    created_at: str
    config_digest: str


@dataclass(frozen=True)
class LedgerEntry:
    run_id: str
    seq: int
    kind: str
    payload: dict


def _atomic_write_json(path: Path, obj: dict) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(obj, ensure_ascii=False, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)


class RunStore:
    """Root directory handle: runs/ plus the shared content-addressed caches."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    def cache_dir(self, name: str) -> Path:
        if name not in ("pages", "whois", "embeddings"):
            raise StoreError(f"unknown cache {name!r}")
        path = self.root / "caches" / name
        path.mkdir(parents=True, exist_ok=True)
        return path

    def create_run(self, run_id: str, config_digest: str, created_at: str) -> "Run":
        run_dir = self.runs_dir / run_id
        if run_dir.exists():
            raise StoreError(f"run {run_id!r} already exists")
        run_dir.mkdir(parents=True)
        _atomic_write_json(
            run_dir / "meta.json",
            {
                "run_id": run_id,
                "created_at": created_at,
                "config_digest": config_digest,
                "status": "open",
                "version": LEDGER_VERSION,
            },
        )
        header = {
            "format": LEDGER_FORMAT,
            "kind": "header",
            "run_id": run_id,
            "version": LEDGER_VERSION,
        }
        with open(run_dir / "ledger", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return Run(run_dir)

    def open_run(self, run_id: str) -> "Run":
        run_dir = self.runs_dir / run_id
        if not (run_dir / "meta.json").exists():
            raise StoreError(f"unknown run {run_id!r}")
        return Run(run_dir)

    def list_runs(self) -> list[RunId]:
        if not self.runs_dir.exists():
            return []
        out = []
        for meta_path in sorted(self.runs_dir.glob("*/meta.json")):
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            out.append(
                RunId(
                    run_id=meta["run_id"],
                    created_at=meta["created_at"],
                    config_digest=meta["config_digest"],
                )
            )
        return out


class Run:
    """One run's ledger: strictly increasing sequence numbers, never mutated."""

    def __init__(self, run_dir: str | Path):
        self.run_dir = Path(run_dir)
        self._ledger_path = self.run_dir / "ledger"
        self._write_lock = threading.Lock()
        meta = self._meta()
        self.run_id = meta["run_id"]

    def _meta(self) -> dict:
        return json.loads((self.run_dir / "meta.json").read_text(encoding="utf-8"))

    @property
    def finalized(self) -> bool:
        return self._meta()["status"] == "finalized"

    @property
    def id(self) -> RunId:
        meta = self._meta()
        return RunId(meta["run_id"], meta["created_at"], meta["config_digest"])

    def _read_lines(self) -> list[str]:
        data = self._ledger_path.read_bytes()
        text = data.decode("utf-8")
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()  # clean final newline
        elif lines:
            lines.pop()  # torn trailing line from an interrupted append
        return lines

    def _check_header(self, line: str) -> None:
        try:
            header = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StoreError(f"{self._ledger_path}: bad header") from exc
        if header.get("format") != LEDGER_FORMAT:
            raise StoreError(f"{self._ledger_path}: not a run ledger")
        if header.get("version") != LEDGER_VERSION:
            raise StoreError(
                f"{self._ledger_path}: unsupported ledger version {header.get('version')}"
            )

    def append(self, kind: str, payload: dict) -> int:
        """Append one entry; durable (fsynced) before returning its sequence."""
        return self.append_batch([(kind, payload)])[0]

    def append_batch(self, entries: list[tuple[str, dict]]) -> list[int]:
        """Append entries in order with one read, one write, and one fsync.

        Durability granularity is the batch: either every entry in it is on
        disk when this returns, or (after a crash) the ledger ends at some
        entry boundary within the batch and the torn tail is repaired on the
        next append.  Bulk stages use this to avoid per-entry file scans.
        """
        for _, payload in entries:
            if not isinstance(payload, dict):
                raise StoreError("payload must be a JSON object")
        with self._write_lock:
            if self.finalized:
                raise StoreError(f"run {self.run_id} is finalized")
            lines = self._read_lines()
            self._check_header(lines[0])
            next_seq = len(lines)  # header occupies line 1; first entry gets seq 1
            seqs = list(range(next_seq, next_seq + len(entries)))
            encoded = "".join(
                json.dumps({"kind": kind, "payload": payload, "seq": seq},
                           ensure_ascii=False, sort_keys=True) + "\n"
                for (kind, payload), seq in zip(entries, seqs)
            )
            # repair a torn tail (crash mid-append) before extending the file
            good_bytes = sum(len(l.encode("utf-8")) + 1 for l in lines)
            with open(self._ledger_path, "r+b") as fh:
                fh.truncate(good_bytes)
                fh.seek(good_bytes)
                fh.write(encoded.encode("utf-8"))
                fh.flush()
                os.fsync(fh.fileno())
            return seqs

    def append_many(self, kind: str, payloads: list[dict]) -> list[int]:
        return self.append_batch([(kind, p) for p in payloads])

    def scan(self, kind: str | None = None) -> Iterator[LedgerEntry]:
        """Entries in sequence order; repeated scans see a stable prefix."""
        lines = self._read_lines()
        if not lines:
            raise StoreError(f"{self._ledger_path}: empty ledger")
        self._check_header(lines[0])
        for lineno, line in enumerate(lines[1:], start=2):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreError(f"{self._ledger_path}:{lineno}: bad entry") from exc
            if kind is not None and obj["kind"] != kind:
                continue
            yield LedgerEntry(
                run_id=self.run_id, seq=obj["seq"], kind=obj["kind"], payload=obj["payload"]
            )

    def last_entry(self, kind: str) -> LedgerEntry | None:
        last = None
        for entry in self.scan(kind):
            last = entry
        return last

    def finalize(self) -> None:
        with self._write_lock:
            meta = self._meta()
            meta["status"] = "finalized"
            _atomic_write_json(self.run_dir / "meta.json", meta)
