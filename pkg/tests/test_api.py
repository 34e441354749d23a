from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from gforge.api import app
from gforge.corpus import entry
from gforge.structure_lab import FiniteStructure
from gforge.witness_engine import realized_family, write_witness


@pytest.fixture
def witness_file(tmp_path):
    sig = entry("edge-out").sentence().signature
    b = FiniteStructure.from_facts(sig, 2, [("P", (0,)), ("Q", (1,)), ("R", (0, 1))])
    path = tmp_path / "witness.txt"
    write_witness(realized_family(b), path)
    return path


@pytest.fixture
def client(monkeypatch, witness_file):
    monkeypatch.setenv("GFORGE_LAZY_WITNESS", str(witness_file))
    with TestClient(app) as c:
        yield c


@pytest.fixture
def bare_client(monkeypatch):
    monkeypatch.delenv("GFORGE_LAZY_WITNESS", raising=False)
    with TestClient(app) as c:
        yield c


def test_root(bare_client):
    r = bare_client.get("/")
    assert r.status_code == 200
    assert r.json()["app"] == "gforge"


def test_health_without_structure(bare_client):
    body = bare_client.get("/health").json()
    assert body["status"] == "ok"
    assert body["redis"] == "disabled"
    assert body["structure_loaded"] is False


def test_queries_need_a_structure(bare_client):
    assert bare_client.get("/type", params={"tuple": "0:0"}).status_code == 503
    assert bare_client.get("/witness", params={"k": 1}).status_code == 503
    assert bare_client.post("/extension", params={"layer": 0, "type_index": 0}).status_code == 503


def test_unreadable_witness_leaves_the_api_unloaded(monkeypatch, tmp_path):
    monkeypatch.setenv("GFORGE_LAZY_WITNESS", str(tmp_path / "missing.txt"))
    with TestClient(app) as c:
        assert c.get("/health").json()["structure_loaded"] is False
        assert c.get("/type", params={"tuple": "0:0"}).status_code == 503


def test_health_describes_the_structure(client):
    body = client.get("/health").json()
    assert body["structure_loaded"] is True
    assert body["width"] == 2
    assert body["modulus"] == "30"
    assert body["primes"] == [2, 3, 5]


def test_witness_levels(client):
    r = client.get("/witness", params={"k": 1})
    assert r.status_code == 200
    assert len(r.json()["types"]) == 2
    assert client.get("/witness", params={"k": 3}).status_code == 404
    assert client.get("/witness", params={"k": -1}).status_code == 422


def test_type_query(client):
    r = client.get("/type", params={"tuple": "0:0,1:0"})
    assert r.status_code == 200
    body = r.json()
    assert body["tuple"] == "0:0,1:0"
    assert body["type"].startswith("{")
    assert isinstance(body["bits"], int)
    single = client.get("/type", params={"tuple": "1:7"}).json()
    assert single["guarded"] is True


@pytest.mark.parametrize("text", ["0:0,0:0", "5:0", "0:99", "zero"])
def test_type_query_rejects_bad_tuples(client, text):
    assert client.get("/type", params={"tuple": text}).status_code == 400


def test_extension_of_the_empty_tuple(client):
    types = client.get("/witness", params={"k": 1}).json()["types"]
    for index, text in enumerate(types):
        r = client.post("/extension", params={"layer": 0, "type_index": index})
        assert r.status_code == 200
        body = r.json()
        assert body["element"] == f"0:{index}"
        assert body["type"] == text
        assert body["realized"] is True


def test_extension_realizes_types_above_the_tuple(client):
    count = len(client.get("/witness", params={"k": 2}).json()["types"])
    above = 0
    for beta in range(6):
        for index in range(count):
            r = client.post("/extension", params={"tuple": f"0:{beta}", "layer": 1, "type_index": index})
            assert r.status_code == 200
            body = r.json()
            assert body["element"].startswith("1:")
            if body["above_current"]:
                above += 1
                assert body["realized"] is True
    assert above == 6


def test_extension_rejects_bad_requests(client):
    assert client.post("/extension", params={"tuple": "0:0", "layer": 1, "type_index": 9}).status_code == 404
    assert client.post("/extension", params={"tuple": "0:0", "layer": 0, "type_index": 0}).status_code == 400
    assert client.post("/extension", params={"tuple": "0:0,1:0", "layer": 0, "type_index": 0}).status_code == 400
    assert client.post("/extension", params={"tuple": "0:0"}).status_code == 422
