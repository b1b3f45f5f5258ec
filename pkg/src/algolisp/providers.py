"""Plumbing for external model services: JSON-over-HTTP plus an on-disk cache.

Translation, mask filling, and sentence embeddings are external artifacts;
this module gives their clients one tiny shared transport with atomic
response caching so repeated runs are reproducible and cheap.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import urllib.error
import urllib.request
from pathlib import Path


class ProviderUnavailable(RuntimeError):
    """An external provider could not produce a usable response."""


class DiskCache:
    """String-keyed JSON cache with atomic writes; safe across processes."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        digest = hashlib.sha256(key.encode("utf-8")).hexdigest()
        return self.directory / f"{digest}.json"

    def get(self, key: str):
        path = self._path(key)
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except json.JSONDecodeError:
            return None  # partial/corrupt entry: treat as a miss

    def put(self, key: str, value) -> None:
        path = self._path(key)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(value, fh, ensure_ascii=False)
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise


def post_json(url: str, payload: dict, timeout: float = 30.0) -> dict:
    """POST a JSON body and decode a JSON reply, or raise ProviderUnavailable."""
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        url, data=body, headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))
    except (urllib.error.URLError, OSError, ValueError) as exc:
        raise ProviderUnavailable(f"POST {url} failed: {exc}") from exc


class CachedEndpoint:
    """One JSON endpoint with optional response caching keyed by request."""

    def __init__(self, url: str, cache_dir: str | Path | None = None, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout
        self.cache = DiskCache(cache_dir) if cache_dir else None

    def call(self, payload: dict) -> dict:
        key = self.url + "\n" + json.dumps(payload, sort_keys=True)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
        reply = post_json(self.url, payload, timeout=self.timeout)
        if self.cache is not None:
            self.cache.put(key, reply)
        return reply
