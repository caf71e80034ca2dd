"""Page fetching, visible-text extraction, and HTML structural features.

Pages are fetched once and cached by URL digest; downstream stages only ever
see :class:`PageSnapshot` objects.  Feature definitions follow the audit's
published rules: ``link_count`` counts every <a> tag, ``ul_count`` every
<ul>, ``heading_count`` the h2..h6 tags, ``text_length`` the visible text in
Unicode code points, and ``text_density`` is text_length per heading with
the denominator clamped to 1 on heading-free pages (those pages stay in the
sample, flagged).
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import urllib.robotparser
from urllib.parse import urlsplit
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path

import requests

from .domains import normalize_domain

STATUS_OK = "ok"
STATUS_HTTP_ERROR = "http_error"
STATUS_TIMEOUT = "timeout"
STATUS_ROBOTS_DENIED = "robots_denied"
STATUS_TOO_LARGE = "too_large"

DEFAULT_SIZE_CAP = 5 * 1024 * 1024
DEFAULT_TTL_SECONDS = 7 * 24 * 3600
DEFAULT_USER_AGENT = "geaudit/0.1 (+research; contact: see repository)"


class HarvestError(Exception):
    """Local misuse (e.g. offline cache miss); never used for remote failures."""


@dataclass(frozen=True)
class PageSnapshot:
    url: str
    status: str
    http_code: int | None
    html_bytes: bytes
    extracted_text: str
    fetched_at: float

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


@dataclass(frozen=True)
class StructFeatures:
    link_count: int
    ul_count: int
    heading_count: int
    text_length: int
    text_density: float

    @property
    def density_clamped(self) -> bool:
        return self.heading_count == 0

    def to_dict(self) -> dict:
        return {
            "link_count": self.link_count,
            "ul_count": self.ul_count,
            "heading_count": self.heading_count,
            "text_length": self.text_length,
            "text_density": self.text_density,
            "density_clamped": self.density_clamped,
        }


_BLOCK_TAGS = frozenset(
    """address article aside blockquote br caption dd details dialog div dl dt
    fieldset figcaption figure footer form h1 h2 h3 h4 h5 h6 header hgroup hr
    li main nav ol option p pre section summary table tbody td tfoot th thead
    tr ul""".split()
)
_SKIP_TAGS = frozenset({"script", "style", "template"})
_HEADING_TAGS = frozenset({"h2", "h3", "h4", "h5", "h6"})


class _PageParser(HTMLParser):
    """One tolerant pass collecting visible text chunks and tag counts."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self.link_count = 0
        self.ul_count = 0
        self.heading_count = 0
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag == "a":
            self.link_count += 1
        elif tag == "ul":
            self.ul_count += 1
        elif tag in _HEADING_TAGS:
            self.heading_count += 1
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self.chunks.append("\n")

    def handle_startendtag(self, tag, attrs):
        if tag == "a":
            self.link_count += 1
        elif tag == "ul":
            self.ul_count += 1
        elif tag in _HEADING_TAGS:
            self.heading_count += 1
        if tag in _BLOCK_TAGS:
            self.chunks.append("\n")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag in _BLOCK_TAGS:
            self.chunks.append("\n")

    def handle_data(self, data):
        if self._skip_depth == 0 and data:
            self.chunks.append(data)

    def visible_text(self) -> str:
        lines = []
        for line in "".join(self.chunks).split("\n"):
            collapsed = " ".join(line.split())
            if collapsed:
                lines.append(collapsed)
        return "\n".join(lines)


def _decode(html: str | bytes) -> str:
    if isinstance(html, bytes):
        return html.decode("utf-8", errors="replace")
    return html


def _parse(html: str | bytes) -> _PageParser:
    parser = _PageParser()
    parser.feed(_decode(html))
    parser.close()
    return parser


def extract_text(html: str | bytes) -> str:
    """Visible text: script/style/template and comments dropped, block
    boundaries as newlines, entities decoded, whitespace collapsed."""
    return _parse(html).visible_text()


def extract_features(html: str | bytes) -> StructFeatures:
    """Structural features from the same single extraction pass."""
    parser = _parse(html)
    text_length = len(parser.visible_text())
    return StructFeatures(
        link_count=parser.link_count,
        ul_count=parser.ul_count,
        heading_count=parser.heading_count,
        text_length=text_length,
        text_density=text_length / max(1, parser.heading_count),
    )


def _url_digest(url: str) -> str:
    return hashlib.sha256(url.encode("utf-8")).hexdigest()


class PageCache:
    """Disk cache of snapshots keyed by URL digest: <html bytes> + JSON sidecar."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def _paths(self, url: str) -> tuple[Path, Path]:
        digest = _url_digest(url)
        base = self.directory / digest[:2]
        return base / f"{digest}.html", base / f"{digest}.json"

    def get(self, url: str) -> PageSnapshot | None:
        html_path, meta_path = self._paths(url)
        if not meta_path.exists():
            return None
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        html = html_path.read_bytes() if html_path.exists() else b""
        return PageSnapshot(
            url=meta["url"],
            status=meta["status"],
            http_code=meta.get("http_code"),
            html_bytes=html,
            extracted_text=meta.get("extracted_text", ""),
            fetched_at=float(meta["fetched_at"]),
        )

    def put(self, snapshot: PageSnapshot) -> None:
        html_path, meta_path = self._paths(snapshot.url)
        meta_path.parent.mkdir(parents=True, exist_ok=True)
        if snapshot.html_bytes:
            html_path.write_bytes(snapshot.html_bytes)
        meta = {
            "url": snapshot.url,
            "status": snapshot.status,
            "http_code": snapshot.http_code,
            "extracted_text": snapshot.extracted_text,
            "fetched_at": snapshot.fetched_at,
        }
        meta_path.write_text(
            json.dumps(meta, ensure_ascii=False, sort_keys=True), encoding="utf-8"
        )


class Harvester:
    """Polite concurrent fetcher over a snapshot cache.

    ``offline=True`` serves strictly from cache and raises
    :class:`HarvestError` on a miss — remote failures are only ever encoded
    in ``PageSnapshot.status`` (connection failures count as timeouts).
    """

    def __init__(
        self,
        cache_dir: str | Path,
        *,
        user_agent: str = DEFAULT_USER_AGENT,
        timeout: float = 15.0,
        size_cap: int = DEFAULT_SIZE_CAP,
        ttl_seconds: float = DEFAULT_TTL_SECONDS,
        offline: bool = False,
        respect_robots: bool = True,
        politeness_delay: float = 0.5,
        max_workers: int = 8,
        clock=time.time,
    ):
        self.cache = PageCache(cache_dir)
        self.user_agent = user_agent
        self.timeout = timeout
        self.size_cap = size_cap
        self.ttl_seconds = ttl_seconds
        self.offline = offline
        self.respect_robots = respect_robots
        self.politeness_delay = politeness_delay
        self.max_workers = max_workers
        self._clock = clock
        self._session = requests.Session()
        self._session.max_redirects = 5
        self._robots: dict[str, urllib.robotparser.RobotFileParser | None] = {}
        self._locks_mutex = threading.Lock()
        self._url_locks: dict[str, threading.Lock] = {}
        self._host_locks: dict[str, threading.Lock] = {}
        self._last_request: dict[str, float] = {}

    def _lock_for(self, table: dict[str, threading.Lock], key: str) -> threading.Lock:
        with self._locks_mutex:
            lock = table.get(key)
            if lock is None:
                lock = table[key] = threading.Lock()
            return lock

    def _robots_allows(self, url: str) -> bool:
        if not self.respect_robots:
            return True
        parts = urlsplit(url)
        site = f"{parts.scheme}://{parts.netloc}"
        if site not in self._robots:
            parser: urllib.robotparser.RobotFileParser | None
            parser = urllib.robotparser.RobotFileParser()
            try:
                resp = self._session.get(
                    f"{site}/robots.txt",
                    timeout=self.timeout,
                    headers={"User-Agent": self.user_agent},
                )
                if resp.status_code == 200:
                    parser.parse(resp.text.splitlines())
                else:
                    parser = None  # no usable robots.txt: allow
            except requests.RequestException:
                parser = None
            self._robots[site] = parser
        parser = self._robots[site]
        return parser is None or parser.can_fetch(self.user_agent, url)

    def _politeness_wait(self, host: str) -> None:
        if self.politeness_delay <= 0:
            return
        last = self._last_request.get(host)
        if last is not None:
            remaining = self.politeness_delay - (self._clock() - last)
            if remaining > 0:
                time.sleep(remaining)

    def _fetch_remote(self, url: str, host: str) -> PageSnapshot:
        now = self._clock()
        if not self._robots_allows(url):
            return PageSnapshot(url, STATUS_ROBOTS_DENIED, None, b"", "", now)
        self._politeness_wait(host)
        try:
            resp = self._session.get(
                url,
                timeout=self.timeout,
                headers={"User-Agent": self.user_agent},
                stream=True,
            )
            body = b""
            for chunk in resp.iter_content(chunk_size=65536):
                body += chunk
                if len(body) > self.size_cap:
                    resp.close()
                    return PageSnapshot(url, STATUS_TOO_LARGE, None, b"", "", now)
        except requests.Timeout:
            return PageSnapshot(url, STATUS_TIMEOUT, None, b"", "", now)
        except requests.TooManyRedirects:
            return PageSnapshot(url, STATUS_HTTP_ERROR, None, b"", "", now)
        except requests.RequestException:
            # connection-level failures are recorded like timeouts
            return PageSnapshot(url, STATUS_TIMEOUT, None, b"", "", now)
        finally:
            self._last_request[host] = self._clock()
        if resp.status_code != 200:
            return PageSnapshot(url, STATUS_HTTP_ERROR, resp.status_code, b"", "", now)
        return PageSnapshot(url, STATUS_OK, 200, body, extract_text(body), now)

    def fetch(self, url: str, *, force: bool = False) -> PageSnapshot:
        """Snapshot for ``url``, served from cache unless expired or forced."""
        host = normalize_domain(url).host
        with self._lock_for(self._url_locks, url):  # single-flight per URL
            cached = self.cache.get(url)
            if cached is not None:
                fresh = self._clock() - cached.fetched_at < self.ttl_seconds
                if self.offline or (fresh and not force):
                    return cached
            if self.offline:
                raise HarvestError(f"offline mode with no cached snapshot for {url}")
            with self._lock_for(self._host_locks, host):  # one in flight per host
                snapshot = self._fetch_remote(url, host)
            self.cache.put(snapshot)
            return snapshot

    def fetch_many(self, urls: list[str]) -> dict[str, PageSnapshot]:
        """Fetch snapshots concurrently; per-host requests stay serialized."""
        from concurrent.futures import ThreadPoolExecutor

        unique = list(dict.fromkeys(urls))
        if self.offline or len(unique) <= 1:
            return {url: self.fetch(url) for url in unique}
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            snapshots = pool.map(self.fetch, unique)
            return dict(zip(unique, snapshots))


def write_page_fixtures(snapshots: list[PageSnapshot], path: str | Path) -> int:
    """Serialize snapshots to a line-delimited fixture file (html as base64).

    The companion to :func:`seed_page_fixtures`; together they let a recorded
    page corpus travel with a repository and be replayed into any cache, the
    same way answer fixtures travel via the recorder.
    """
    import base64

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"kind": "header", "format": "geaudit-pages", "version": 1}) + "\n")
        for snapshot in snapshots:
            fh.write(
                json.dumps(
                    {
                        "kind": "page",
                        "url": snapshot.url,
                        "status": snapshot.status,
                        "http_code": snapshot.http_code,
                        "html_b64": base64.b64encode(snapshot.html_bytes).decode("ascii"),
                        "extracted_text": snapshot.extracted_text,
                        "fetched_at": snapshot.fetched_at,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )
    return len(snapshots)


def seed_page_fixtures(path: str | Path, cache: PageCache) -> int:
    """Load a page fixture file into a cache; returns the snapshot count."""
    import base64

    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise HarvestError(f"{path}: empty page fixture file")
    header = json.loads(lines[0])
    if header.get("format") != "geaudit-pages" or header.get("version") != 1:
        raise HarvestError(f"{path}: not a v1 page fixture file")
    count = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            cache.put(
                PageSnapshot(
                    url=obj["url"],
                    status=obj["status"],
                    http_code=obj["http_code"],
                    html_bytes=base64.b64decode(obj["html_b64"]),
                    extracted_text=obj["extracted_text"],
                    fetched_at=float(obj["fetched_at"]),
                )
            )
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise HarvestError(f"{path}:{lineno}: bad page fixture line ({exc})") from exc
        count += 1
    return count
