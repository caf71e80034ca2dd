"""URL host normalization and registrable-domain reduction.

Citation grouping and manifest matching both key on domains, so this module
is the single place where a URL becomes a (full host, registrable domain)
pair.  Registrable-domain reduction is public-suffix aware: a bundled
suffix table lists multi-label public suffixes (co.uk, or.jp, ...) and an
implicit wildcard rule treats every unknown top-level label as a suffix.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from urllib.parse import urlsplit


class DomainError(ValueError):
    """Raised for URLs without a usable web host."""


@dataclass(frozen=True)
class DomainParts:
    """Normalized host plus its public-suffix-reduced registrable domain.

    ``host`` keeps the full lowercased hostname for reporting (the manifest
    subdomain rule and per-host verdicts need it); ``registrable`` is the
    suffix-plus-one-label domain used for cross-source grouping.
    """

    host: str
    registrable: str


def _load_suffix_table() -> frozenset[str]:
    text = (
        importlib.resources.files("geaudit.data")
        .joinpath("public_suffixes.txt")
        .read_text(encoding="utf-8")
    )
    entries = set()
    for line in text.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            entries.add(line)
    return frozenset(entries)


_MULTI_LABEL_SUFFIXES = _load_suffix_table()


def _is_ip_literal(host: str) -> bool:
    if host.startswith("[") and host.endswith("]"):
        return True  # bracketed IPv6
    parts = host.split(".")
    return len(parts) == 4 and all(p.isdigit() for p in parts)


def normalize_host(host: str) -> str:
    """Lowercase a hostname and strip any trailing dot. Idempotent."""
    return host.strip().lower().rstrip(".")


def registrable_domain(host: str) -> str:
    """Reduce a normalized hostname to its registrable domain.

    IP literals and single-label hosts are returned unchanged.  For named
    hosts the longest matching public suffix (from the bundled table, or
    the implicit single-label rule) is extended by one label.
    """
    host = normalize_host(host)
    if _is_ip_literal(host):
        return host
    labels = host.split(".")
    if len(labels) <= 1:
        return host
    # longest listed suffix wins; fall back to the last label
    suffix_len = 1
    for take in range(2, len(labels)):
        candidate = ".".join(labels[-take:])
        if candidate in _MULTI_LABEL_SUFFIXES:
            suffix_len = take
    if suffix_len >= len(labels):
        return host
    return ".".join(labels[-(suffix_len + 1):])


def normalize_domain(url: str) -> DomainParts:
    """Normalize an absolute URL to its host and registrable domain.

    Strips scheme, userinfo, port, path, query, and fragment; lowercases the
    host.  Raises :class:`DomainError` for relative URLs and for schemes
    without a web host (``mailto:``, ``tel:``, ...).
    """
    if not isinstance(url, str) or not url.strip():
        raise DomainError("empty URL")
    parts = urlsplit(url.strip())
    host = parts.hostname
    if not parts.scheme or not host:
        raise DomainError(f"no web host in URL: {url!r}")
    host = normalize_host(host)
    if not host:
        raise DomainError(f"no web host in URL: {url!r}")
    return DomainParts(host=host, registrable=registrable_domain(host))


def normalize_manifest_entry(entry: str) -> str:
    """Normalize a manifest domain entry, accepting bare domains or URLs.

    Manifest files are human-edited, so ``HTTPS://Democrats.org/`` and
    ``democrats.org`` both normalize to ``democrats.org``.  The result is a
    registrable-or-deeper hostname with no scheme, port, or path.
    """
    entry = entry.strip()
    if not entry:
        raise DomainError("empty manifest entry")
    if "://" in entry:
        return normalize_domain(entry).host
    # bare host, possibly with a stray path
    host = entry.split("/", 1)[0]
    host = host.split(":", 1)[0]
    host = normalize_host(host)
    if not host or "." not in host:
        raise DomainError(f"manifest entry is not a domain: {entry!r}")
    return host


def host_matches(host: str, manifest_domain: str) -> bool:
    """True when ``host`` equals ``manifest_domain`` or is a subdomain of it.

    Matching is on whole dot-separated labels, so ``democratsnews.example``
    never matches a ``democrats.example`` entry.
    """
    host = normalize_host(host)
    manifest_domain = normalize_host(manifest_domain)
    return host == manifest_domain or host.endswith("." + manifest_domain)
