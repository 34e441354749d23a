from __future__ import annotations

import asyncio
import re

from gforge import cache
from gforge.witness_engine import eliminate


def test_cache_is_disabled_without_redis_url():
    assert not cache.cache_enabled()
    assert asyncio.run(cache.redis_health()) == "disabled"


def test_witness_key_depends_on_the_normal_form(normal_form):
    _, serial = normal_form("serial")
    _, edge = normal_form("edge-out")
    key = cache.witness_key(serial, "auto+shrink")
    assert re.fullmatch(r"gforge:witness:[0-9a-f]{64}:auto\+shrink", key)
    assert key == cache.witness_key(normal_form("serial")[1], "auto+shrink")
    assert key != cache.witness_key(edge, "auto+shrink")
    assert key != cache.witness_key(serial, "model")


def test_disabled_cache_misses_and_ignores_stores(normal_form):
    _, nf = normal_form("serial")
    w = eliminate(nf)

    async def roundtrip():
        await cache.set_cached_witness(nf, "eliminate", w)
        return await cache.get_cached_witness(nf, "eliminate")

    assert asyncio.run(roundtrip()) is None


class _FakeRedis:
    def __init__(self):
        self.store = {}

    async def get(self, key):
        return self.store.get(key)

    async def set(self, key, value, ex=None):
        self.store[key] = value

    async def ping(self):
        return True


def test_enabled_cache_round_trips_witnesses(monkeypatch, normal_form):
    fake = _FakeRedis()
    monkeypatch.setattr(cache, "_redis", fake)
    monkeypatch.setattr(cache, "_cache_enabled", True)
    _, nf = normal_form("serial")
    w = eliminate(nf)

    async def roundtrip():
        await cache.set_cached_witness(nf, "eliminate", w)
        return await cache.get_cached_witness(nf, "eliminate"), await cache.redis_health()

    found, health = asyncio.run(roundtrip())
    assert found == w
    assert health == "ok"
    fake.store[cache.witness_key(nf, "eliminate")] = "not a witness"
    assert asyncio.run(cache.get_cached_witness(nf, "eliminate")) is None
