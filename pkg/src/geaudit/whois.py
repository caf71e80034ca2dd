"""Minimal WHOIS (port 43) client with one referral hop and a TTL cache.

WHOIS text is an input to publisher classification, so lookups must degrade
gracefully: failures produce a record with empty text and a status, never an
exception.  ``mode="off"`` short-circuits every lookup to a ``skipped``
record for fully offline runs.
"""

from __future__ import annotations

import json
import re
import socket
import threading
import time
from dataclasses import dataclass
from pathlib import Path

STATUS_OK = "ok"
STATUS_TIMEOUT = "timeout"
STATUS_LOOKUP_FAILED = "lookup_failed"
STATUS_SKIPPED = "skipped"

DEFAULT_ROOT_SERVER = "whois.iana.org"
DEFAULT_TTL_SECONDS = 30 * 24 * 3600

_REFERRAL_RE = re.compile(
    r"^\s*(?:refer|whois|registrar whois server):\s*(\S+)\s*$",
    re.IGNORECASE | re.MULTILINE,
)


@dataclass(frozen=True)
class WhoisRecord:
    domain: str
    raw_text: str
    fetched_at: float
    server_chain: tuple[str, ...]
    status: str

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "raw_text": self.raw_text,
            "fetched_at": self.fetched_at,
            "server_chain": list(self.server_chain),
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> WhoisRecord:
        return cls(
            domain=d["domain"],
            raw_text=d["raw_text"],
            fetched_at=float(d["fetched_at"]),
            server_chain=tuple(d["server_chain"]),
            status=d["status"],
        )


def query_server(server: str, domain: str, timeout: float) -> str:
    """One raw WHOIS query: send ``domain\\r\\n``, read until close.

    ``server`` may carry an explicit ``host:port`` (real registries always
    use 43; tests use loopback ports).
    """
    host, _, port = server.partition(":")
    with socket.create_connection((host, int(port) if port else 43), timeout=timeout) as sock:
        sock.settimeout(timeout)
        sock.sendall(domain.encode("idna", errors="strict") + b"\r\n")
        chunks = []
        while True:
            chunk = sock.recv(4096)
            if not chunk:
                break
            chunks.append(chunk)
    return b"".join(chunks).decode("utf-8", errors="replace")


def parse_referral(text: str) -> str | None:
    m = _REFERRAL_RE.search(text)
    return m.group(1) if m else None


class WhoisClient:
    """Cached WHOIS lookups starting at the IANA root (one referral hop)."""

    def __init__(
        self,
        cache_dir: str | Path | None = None,
        *,
        mode: str = "on",
        root_server: str = DEFAULT_ROOT_SERVER,
        timeout: float = 10.0,
        ttl_seconds: float = DEFAULT_TTL_SECONDS,
        clock=time.time,
        query_fn=query_server,
    ):
        if mode not in ("on", "off"):
            raise ValueError(f"whois mode must be 'on' or 'off', got {mode!r}")
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.mode = mode
        self.root_server = root_server
        self.timeout = timeout
        self.ttl_seconds = ttl_seconds
        self._clock = clock
        self._query = query_fn
        self._memory: dict[str, WhoisRecord] = {}
        self._locks_mutex = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}

    def _lock_for(self, domain: str) -> threading.Lock:
        with self._locks_mutex:
            lock = self._locks.get(domain)
            if lock is None:
                lock = self._locks[domain] = threading.Lock()
            return lock

    def _cache_path(self, domain: str) -> Path:
        return self.cache_dir / f"{domain}.json"

    def _from_cache(self, domain: str) -> WhoisRecord | None:
        record = self._memory.get(domain)
        if record is None and self.cache_dir is not None:
            path = self._cache_path(domain)
            if path.exists():
                record = WhoisRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))
                self._memory[domain] = record
        if record is None:
            return None
        if self.mode == "off" or self._clock() - record.fetched_at < self.ttl_seconds:
            return record
        return None

    def _store(self, record: WhoisRecord) -> None:
        self._memory[record.domain] = record
        if self.cache_dir is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            self._cache_path(record.domain).write_text(
                json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True),
                encoding="utf-8",
            )

    def lookup(self, domain: str) -> WhoisRecord:
        """WhoisRecord for a registrable domain; never raises for lookups."""
        domain = domain.strip().lower()
        with self._lock_for(domain):  # single-flight per domain
            cached = self._from_cache(domain)
            if cached is not None:
                return cached
            if self.mode == "off":
                return WhoisRecord(domain, "", self._clock(), (), STATUS_SKIPPED)
            record = self._lookup_remote(domain)
            if record.ok:  # failures stay uncached so a later run can retry
                self._store(record)
            return record

    def _lookup_remote(self, domain: str) -> WhoisRecord:
        now = self._clock()
        try:
            text = self._query(self.root_server, domain, self.timeout)
        except socket.timeout:
            return WhoisRecord(domain, "", now, (self.root_server,), STATUS_TIMEOUT)
        except (OSError, UnicodeError):
            return WhoisRecord(domain, "", now, (self.root_server,), STATUS_LOOKUP_FAILED)
        chain = (self.root_server,)
        referral = parse_referral(text)
        if referral and referral.lower() != self.root_server.lower():
            try:
                referred_text = self._query(referral, domain, self.timeout)
                if referred_text.strip():
                    text = referred_text
                chain = (self.root_server, referral)
            except (OSError, UnicodeError):
                pass  # keep the root response; one hop is best-effort
        if not text.strip():
            return WhoisRecord(domain, "", now, chain, STATUS_LOOKUP_FAILED)
        return WhoisRecord(domain, text, now, chain, STATUS_OK)
