"""
Bell inequality workbench - HTTP service
FastAPI application exposing catalog, bounds, facet certificates and violations
"""

import logging
from contextlib import asynccontextmanager
from typing import List, Literal, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from bell_orchestrator import BellOrchestrator
from config import VERSION, OptimizationConfig, settings
from models.errors import BellError, CatalogError, ResourceGuardError
from models.reports import (
    BoundReport,
    CatalogEntry,
    Ghz4TableReport,
    ThresholdReport,
    TightnessReport,
    ViolationReport,
)

logging.basicConfig(level=getattr(logging, settings.LOG_LEVEL))
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Initialize resources on startup, cleanup on shutdown"""
    logger.info("Starting Bell inequality workbench...")
    app.state.orchestrator = BellOrchestrator()
    await app.state.orchestrator.initialize()
    logger.info("Application started successfully")
    yield
    logger.info("Shutting down...")
    await app.state.orchestrator.cleanup()


app = FastAPI(
    title="Bell Inequality Workbench API",
    description="Classical bounds, facet certificates and quantum violations of three-party qudit Bell inequalities",
    version=VERSION,
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.ALLOWED_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class ViolationRequest(BaseModel):
    name: str
    state: Literal["ghz", "w", "product"] = "ghz"
    settings: Literal["reference", "optimize"] = "reference"
    noise: float = Field(default=0.0, ge=0.0, le=1.0)
    restarts: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None


def _orchestrator() -> BellOrchestrator:
    return app.state.orchestrator


async def _call(func, *args, **kwargs):
    """Run a blocking computation off the event loop, mapping domain errors to HTTP errors"""
    try:
        return await run_in_threadpool(func, *args, **kwargs)
    except CatalogError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except ResourceGuardError as e:
        raise HTTPException(status_code=413, detail=str(e))
    except BellError as e:
        raise HTTPException(status_code=400, detail=str(e))


@app.get("/")
async def root():
    return {
        "status": "healthy",
        "service": "Bell Inequality Workbench",
        "version": VERSION
    }


@app.get("/health")
async def health_check():
    health_status = await _orchestrator().check_health()
    return JSONResponse(
        status_code=200 if health_status["healthy"] else 503,
        content=health_status
    )


@app.get("/api/catalog", response_model=List[CatalogEntry])
async def get_catalog(
    form: Optional[Literal["probability", "correlation"]] = None,
    d: Optional[int] = Query(default=None, ge=2)
):
    return await _call(_orchestrator().list_catalog, form=form, d=d)


@app.get("/api/bound/{name}", response_model=BoundReport)
async def get_bound(name: str):
    return await _call(_orchestrator().bound, name)


@app.get("/api/tight/{name}", response_model=TightnessReport)
async def get_tight(name: str):
    """Facet certificate; guarded by MAX_FACET_D, which the HTTP surface never lifts"""
    return await _call(_orchestrator().tight, name)


@app.post("/api/violate", response_model=ViolationReport)
async def post_violate(request: ViolationRequest):
    update = {}
    if request.restarts is not None:
        update["restarts"] = request.restarts
    if request.seed is not None:
        update["seed"] = request.seed
    config = OptimizationConfig(**update)
    return await _call(
        _orchestrator().violate,
        request.name,
        state=request.state,
        settings_mode=request.settings,
        noise=request.noise,
        config=config,
    )


@app.get("/api/ghz4-table", response_model=Ghz4TableReport)
async def get_ghz4_table():
    return await _call(_orchestrator().ghz4_table)


@app.get("/api/thresholds", response_model=List[ThresholdReport])
async def get_thresholds(restarts: Optional[int] = Query(default=None, ge=1)):
    config = OptimizationConfig(restarts=restarts) if restarts else OptimizationConfig()
    return await _call(_orchestrator().thresholds, config)


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "main:app",
        host="0.0.0.0",
        port=8000,
        log_level="info"
    )
