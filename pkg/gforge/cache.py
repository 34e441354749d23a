"""
Redis-backed cache for computed witnesses.

A normal-form sentence determines its witness once the strategy is fixed, so
the key is a digest of the serialized normal form plus the strategy label and
the value is the witness document. With Redis unset or unreachable, lookups
are misses and stores are no-ops.
"""
from __future__ import annotations

import asyncio
import hashlib
import logging
import os
from typing import Any, Awaitable, Optional

from gforge.normal_form import NormalFormSentence, serialize_normal_form
from gforge.witness_engine import TypeFamily, format_witness, parse_witness

REDIS_OP_TIMEOUT_SECONDS = 3.0
KEY_PREFIX = "gforge:witness"

logger = logging.getLogger(__name__)

try:
    from redis.asyncio import Redis, from_url as redis_from_url
except Exception:  # pragma: no cover - redis is optional
    redis_from_url = None
    Redis = Any  # type: ignore

REDIS_URL = os.environ.get("REDIS_URL")
DEFAULT_WITNESS_TTL_SECONDS = int(os.environ.get("GFORGE_CACHE_TTL_SECONDS", "86400"))


def _connect() -> Optional[Redis]:
    if not REDIS_URL:
        logger.info("REDIS_URL not set; witness cache off")
        return None
    if redis_from_url is None:
        logger.info("redis package missing; witness cache off")
        return None
    try:
        return redis_from_url(REDIS_URL, encoding="utf-8", decode_responses=True)
    except Exception as exc:  # pragma: no cover - bad URL
        logger.warning("Witness cache off, cannot use %s: %s", REDIS_URL, exc)
        return None


_redis: Optional[Redis] = _connect()
_cache_enabled: bool = _redis is not None


def cache_enabled() -> bool:
    return _cache_enabled and _redis is not None


async def _guarded(op: str, pending: Awaitable[Any]) -> tuple[bool, Any]:
    """Await one Redis call under the timeout; (False, None) on any failure."""
    try:
        return True, await asyncio.wait_for(pending, timeout=REDIS_OP_TIMEOUT_SECONDS)
    except asyncio.TimeoutError:
        logger.debug("Redis %s timed out", op)
    except Exception as exc:  # pragma: no cover - network errors
        logger.debug("Redis %s failed: %s", op, exc)
    return False, None


def witness_key(nf: NormalFormSentence, strategy: str) -> str:
    digest = hashlib.sha256(serialize_normal_form(nf).encode("utf-8")).hexdigest()
    return f"{KEY_PREFIX}:{digest}:{strategy}"


async def get_cached_witness(nf: NormalFormSentence, strategy: str) -> Optional[TypeFamily]:
    if not cache_enabled():
        return None
    key = witness_key(nf, strategy)
    ok, raw = await _guarded(f"GET {key}", _redis.get(key))
    if not ok or raw is None:
        return None
    try:
        witness = parse_witness(raw)
    except ValueError:
        logger.debug("Ignoring undecodable witness at %s", key)
        return None
    logger.info("Witness cache hit for %s", strategy)
    return witness


async def set_cached_witness(
    nf: NormalFormSentence,
    strategy: str,
    witness: TypeFamily,
    ttl_seconds: int | None = None,
) -> None:
    if not cache_enabled():
        return
    key = witness_key(nf, strategy)
    ttl = ttl_seconds or DEFAULT_WITNESS_TTL_SECONDS
    await _guarded(f"SET {key}", _redis.set(key, format_witness(witness), ex=ttl))


async def redis_health() -> str:
    """Return "disabled", "ok", or "unavailable" when PING fails or times out."""
    if not cache_enabled():
        return "disabled"
    ok, _ = await _guarded("PING", _redis.ping())
    return "ok" if ok else "unavailable"
