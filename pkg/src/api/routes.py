import asyncio
from typing import Any, Dict, List, Literal, Optional, Union

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from ..config import settings
from ..errors import BoundViolation
from ..managers.experiment_manager import run_experiment
from ..utils.logger import logger

router = APIRouter()


# ─── Request / Response schemas ───────────────────────────────────────────────

class ExchangeRequest(BaseModel):
    N: int = Field(ge=1)
    a: float = 0.0
    theta: float = 0.0
    direction: Literal["forward", "backward"] = "forward"
    backend: Literal["dense", "gram"] = "dense"
    method: Literal["direct", "intermediate"] = "direct"
    dump_state: bool = False


class GamePlayRequest(BaseModel):
    N: int = Field(ge=1)
    backend: Literal["dense", "gram"] = "gram"


class OptimizeRequest(BaseModel):
    d: int = Field(ge=1)
    restarts: int = Field(default=20, ge=1)
    max_iters: int = Field(default=500, ge=1)
    tol: float = 1e-9
    y_dim: Optional[int] = None
    warm_start: Optional[Literal["idle", "marking", "prescribed"]] = None
    warm_start_N: int = 1
    seed: int = settings.SEED
    dump_state: bool = False


class ChainCheckRequest(BaseModel):
    d: int = Field(ge=1)
    draws: int = Field(default=100, ge=1)
    seed: int = settings.SEED


class CompletenessRequest(BaseModel):
    c: float
    N: int = Field(ge=1)
    m: int = 2
    p: Optional[float] = None
    s: float = 0.0
    backend: Literal["dense", "gram"] = "dense"
    residual_dims: Optional[List[int]] = None
    sweep_points: int = 0


class EmbezzleRequest(BaseModel):
    N: int = Field(ge=1)
    epsilon: float
    m: int = 2
    dims: Union[int, List[int]] = 2
    target: Union[Literal["random", "zero", "bell"], List[List[float]], Dict[str, Any]] = "random"
    backend: Literal["dense", "gram"] = "gram"
    seed: int = settings.SEED
    dump_state: bool = False


async def _run(kind: str, params: dict, seed: int = 0, dump_state: bool = False):
    try:
        return await asyncio.to_thread(run_experiment, kind, params, seed, dump_state)
    except BoundViolation as e:
        logger.error(f"{kind}: assertion failed: {e}")
        raise HTTPException(status_code=500, detail=f"Consistency check failed: {e}")
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


# ─── Health ───────────────────────────────────────────────────────────────────

@router.get("/api/health")
async def health():
    return {
        "status": "ok",
        "dense_budget": settings.DENSE_BUDGET,
        "net_max_points": settings.NET_MAX_POINTS,
        "workers": settings.WORKERS,
        "seed": settings.SEED,
    }


# ─── Exchange ─────────────────────────────────────────────────────────────────

@router.post("/api/exchange")
async def run_exchange(req: ExchangeRequest):
    params = req.model_dump(exclude={"dump_state"})
    return await _run("exchange", params, dump_state=req.dump_state)


# ─── Game endpoints ───────────────────────────────────────────────────────────

@router.post("/api/game/play")
async def play_game(req: GamePlayRequest):
    return await _run("game-play", req.model_dump())


@router.get("/api/game/bound/{d}")
async def game_bound(d: int):
    return await _run("game-bound", {"d": d})


@router.post("/api/game/optimize")
async def optimize_game(req: OptimizeRequest):
    params = req.model_dump(exclude={"seed", "dump_state"})
    return await _run("game-optimize", params, req.seed, req.dump_state)


@router.post("/api/game/chain-check")
async def chain_check(req: ChainCheckRequest):
    return await _run("game-chain-check", req.model_dump(exclude={"seed"}), req.seed)


# ─── Completeness / Embezzlement ──────────────────────────────────────────────

@router.post("/api/completeness")
async def completeness(req: CompletenessRequest):
    params = req.model_dump(exclude_none=True)
    return await _run("completeness", params)


@router.post("/api/embezzle")
async def embezzle(req: EmbezzleRequest):
    params = req.model_dump(exclude={"seed", "dump_state"})
    return await _run("embezzle", params, req.seed, req.dump_state)
