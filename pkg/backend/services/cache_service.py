"""
Cache Service - memoizes exact LHV results

Classical maxima and facet certificates depend only on the inequality, so
they are keyed by operation name plus the inequality's text serialization.
"""

import hashlib
import logging
import time
from typing import Any, Callable, Dict, NamedTuple, Optional

logger = logging.getLogger(__name__)


class _Entry(NamedTuple):
    value: Any
    stored_at: float
    operation: str


class ResultCache:
    """
    In-memory TTL cache shared by the orchestrator and the HTTP service

    Full caches drop their oldest 10% of entries before inserting.
    """

    def __init__(self, ttl_seconds: int = 86400, max_size: int = 256):
        """
        Args:
            ttl_seconds: lifetime of an entry
            max_size: entry count that triggers eviction
        """
        self._entries: Dict[str, _Entry] = {}
        self.ttl_seconds = ttl_seconds
        self.max_size = max_size
        self.hits = 0
        self.misses = 0

    @staticmethod
    def digest(operation: str, serialized: str) -> str:
        return hashlib.md5(f"{operation}\n{serialized}".encode()).hexdigest()

    def lookup(self, operation: str, serialized: str) -> Optional[Any]:
        key = self.digest(operation, serialized)
        entry = self._entries.get(key)
        if entry is not None:
            if time.monotonic() - entry.stored_at < self.ttl_seconds:
                self.hits += 1
                logger.debug(f"Cache hit: {operation} {key[:8]}")
                return entry.value
            del self._entries[key]
        self.misses += 1
        return None

    def store(self, operation: str, serialized: str, value: Any):
        if len(self._entries) >= self.max_size:
            self._evict_oldest()
        key = self.digest(operation, serialized)
        self._entries[key] = _Entry(value, time.monotonic(), operation)
        logger.debug(f"Cached {operation} {key[:8]}")

    def memoize(self, operation: str, serialized: str, compute: Callable[[], Any]) -> Any:
        """Return the cached result or compute, store and return it"""
        value = self.lookup(operation, serialized)
        if value is None:
            value = compute()
            self.store(operation, serialized, value)
        return value

    def _evict_oldest(self):
        if not self._entries:
            return
        by_age = sorted(self._entries, key=lambda k: self._entries[k].stored_at)
        drop = max(1, len(by_age) // 10)
        for key in by_age[:drop]:
            del self._entries[key]
        logger.info(f"Evicted {drop} cache entries")

    def invalidate(self, operation: str, serialized: str):
        self._entries.pop(self.digest(operation, serialized), None)

    def clear(self):
        self._entries.clear()
        self.hits = 0
        self.misses = 0
        logger.info("Result cache cleared")

    def __len__(self) -> int:
        return len(self._entries)

    def get_stats(self) -> Dict:
        total = self.hits + self.misses
        hit_rate = (self.hits / total * 100) if total > 0 else 0
        return {
            "entries": len(self._entries),
            "max_size": self.max_size,
            "hits": self.hits,
            "misses": self.misses,
            "hit_rate": f"{hit_rate:.1f}%",
            "ttl_seconds": self.ttl_seconds,
        }
