"""Content-addressed JSON cache for q-expansions and recognised minimal polynomials."""
import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional

from config.logging_config import log
from config.settings import get_settings
from src.core.errors import CacheCorruptionError

CODE_VERSION = "1.0.0"


def cache_key(kind: str, d: int, c: int, char_index: Optional[int] = None,
              coeffs: Optional[int] = None, prec: Optional[int] = None,
              version: str = CODE_VERSION) -> str:
    """SHA-256 of the canonical JSON of the record parameters."""
    fields = {"kind": kind, "d": d, "c": c, "char": char_index, "coeffs": coeffs,
              "prec": prec, "version": version}
    canonical = json.dumps(fields, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _checksum(payload: Any) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ResultCache:
    """JSON records under a cache directory, written atomically and checksummed."""

    def __init__(self, cache_dir: Optional[str] = None):
        """
        Initialize the cache.

        Args:
            cache_dir: Directory for cache records (defaults to settings.cache_dir)
        """
        self.cache_dir = Path(cache_dir or get_settings().cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0
        log.info(f"ResultCache initialized at {self.cache_dir}")

    def _path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def _load(self, key: str) -> Dict:
        path = self._path(key)
        try:
            with open(path, "r", encoding="utf-8") as f:
                record = json.load(f)
        except json.JSONDecodeError as e:
            raise CacheCorruptionError(f"cannot decode {path.name}: {e}") from e
        if not isinstance(record, dict) or "payload" not in record or "checksum" not in record:
            raise CacheCorruptionError(f"malformed record {path.name}")
        if _checksum(record["payload"]) != record["checksum"]:
            raise CacheCorruptionError(f"checksum mismatch in {path.name}")
        return record["payload"]

    def get(self, key: str) -> Optional[Any]:
        """
        Read a record.

        Args:
            key: Cache key from ``cache_key``

        Returns:
            The stored payload, or None when missing or corrupt
        """
        if not self._path(key).exists():
            self.misses += 1
            return None
        try:
            payload = self._load(key)
        except CacheCorruptionError as e:
            log.warning(f"Discarding cache entry: {e}")
            self._path(key).unlink(missing_ok=True)
            self.misses += 1
            return None
        self.hits += 1
        log.debug(f"Cache hit {key[:12]}")
        return payload

    def put(self, key: str, payload: Any) -> Any:
        """Write a record through a temporary file and an atomic rename."""
        record = {"checksum": _checksum(payload), "payload": payload}
        fd, tmp = tempfile.mkstemp(dir=self.cache_dir, prefix=f".{key[:12]}-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(record, f, sort_keys=True)
            os.replace(tmp, self._path(key))
        except OSError:
            Path(tmp).unlink(missing_ok=True)
            raise
        log.debug(f"Cache put {key[:12]}")
        return payload

    def get_or_compute(self, key: str, compute, encode=lambda x: x, decode=lambda x: x):
        """Cached value of ``compute()``; ``encode``/``decode`` map to and from JSON."""
        payload = self.get(key)
        if payload is not None:
            return decode(payload)
        value = compute()
        self.put(key, encode(value))
        return value

    def clear(self) -> int:
        count = 0
        for path in self.cache_dir.glob("*.json"):
            path.unlink()
            count += 1
        log.info(f"Cleared {count} cache entries")
        return count
