"""
gforge query API: types and extension demands against a deterministic lazy structure.

The structure is built at startup from the witness file named by
GFORGE_LAZY_WITNESS; it is far too large to materialize, so every answer is
computed on demand from the hash.
"""
from __future__ import annotations

import logging
import os
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException, Query

from gforge.cache import redis_health
from gforge.model_builder import (
    LazyStructure,
    build_deterministic,
    format_lazy_tuple,
    parse_lazy_tuple,
    solve_extension,
)
from gforge.type_algebra import AtomicType, is_guarded_type, prefix_reduct
from gforge.witness_engine import densify, read_witness

logger = logging.getLogger(__name__)

_lazy: LazyStructure | None = None


def load_structure(path: str) -> LazyStructure:
    w = read_witness(path)
    lazy = build_deterministic(densify(w))
    logger.info("lazy structure from %s: width %s, modulus %s", path, lazy.width, lazy.modulus)
    return lazy


@asynccontextmanager
async def lifespan(app: FastAPI):
    global _lazy
    path = os.environ.get("GFORGE_LAZY_WITNESS", "").strip()
    if path:
        try:
            _lazy = load_structure(path)
        except (OSError, ValueError) as e:
            # Endpoints answer 503 until a usable witness is configured
            logger.warning("Could not load witness %s: %s", path, e)
            _lazy = None
    try:
        yield
    finally:
        _lazy = None


app = FastAPI(
    title="gforge",
    description="Type and extension queries against a deterministic finite model",
    version="0.1.0",
    lifespan=lifespan,
)


def _structure() -> LazyStructure:
    if _lazy is None:
        raise HTTPException(status_code=503, detail="no structure loaded; set GFORGE_LAZY_WITNESS")
    return _lazy


def _elements(text: str):
    try:
        return parse_lazy_tuple(text)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@app.get("/")
async def root():
    """Root path for liveness checks and discovery; use /health for health checks."""
    return {"app": "gforge", "health": "/health", "type": "/type", "extension": "/extension"}


@app.get("/health")
async def health():
    """Health check, including Redis cache status and whether a structure is loaded."""
    body = {"status": "ok", "redis": await redis_health(), "structure_loaded": _lazy is not None}
    if _lazy is not None:
        body.update(width=_lazy.width, modulus=str(_lazy.modulus), primes=list(_lazy.ladder.primes))
    return body


@app.get("/witness")
async def witness_level(k: int = Query(..., ge=0, description="arity of the listed types")):
    """Witness k-types in hash order; /extension refers to them by position."""
    lazy = _structure()
    if k > lazy.width:
        raise HTTPException(status_code=404, detail=f"the witness has no level {k}")
    return {"k": k, "types": [str(t) for t in lazy.witness.types(k)]}


@app.get("/type")
async def tuple_type(tuple: str = Query(..., description="elements as layer:index, comma-separated")):
    lazy = _structure()
    elements = _elements(tuple)
    try:
        tau = lazy.type_of(elements)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return {
        "tuple": format_lazy_tuple(elements),
        "type": str(tau),
        "bits": tau.bits,
        "guarded": is_guarded_type(tau),
    }


@app.post("/extension")
async def extension(
    tuple: str = Query("", description="elements as layer:index, comma-separated"),
    layer: int = Query(..., ge=0, description="a layer not used by the tuple"),
    type_index: int = Query(..., ge=0, description="position of the target type in /witness?k=len(tuple)+1"),
):
    """Solve for the element of ``layer`` that extends the tuple to the chosen witness type."""
    lazy = _structure()
    elements = _elements(tuple)
    k = len(elements)
    if k + 1 > lazy.width:
        raise HTTPException(status_code=400, detail=f"tuples of length {k} cannot be extended within width {lazy.width}")
    level = lazy.witness.levels[k + 1]
    if type_index >= len(level):
        raise HTTPException(status_code=404, detail=f"level {k + 1} has {len(level)} types")
    tau2 = AtomicType(level[type_index], k + 1, lazy.signature)
    try:
        beta = solve_extension(lazy, elements, layer, tau2)
        current = lazy.type_of(elements)
        realized = lazy.type_of(elements + [(layer, beta)])
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    # The requested type is realized whenever it sits above the tuple's current type
    return {
        "element": f"{layer}:{beta}",
        "type": str(realized),
        "above_current": prefix_reduct(tau2, k) == current,
        "realized": realized == tau2,
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run("gforge.api:app", host="127.0.0.1", port=8000)
