from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from .api.routes import router
from .config import settings
from .utils.logger import logger


# ─── FastAPI app ───────────────────────────────────────────────────────────────

@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info(
        f"Exchange lab started (dense budget {settings.DENSE_BUDGET}, "
        f"net cap {settings.NET_MAX_POINTS}, workers {settings.WORKERS}, seed {settings.SEED})"
    )
    yield
    logger.info("Server shutting down")


app = FastAPI(
    title="Coherent Exchange Lab",
    description="Simulations of coherent state exchange, the cooperative exchange game, "
    "near-perfect completeness and universal embezzlement",
    version="1.0.0",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(router)

# Run with:
#   uvicorn src.main:app --host 0.0.0.0 --port 8000
