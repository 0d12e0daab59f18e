from pydantic import BaseModel, Field, model_validator
from typing import Any, Dict, List, Literal, Optional


REQUIRED_PARAMETERS: Dict[str, List[str]] = {
    "exchange": ["N"],
    "game-play": ["N"],
    "game-bound": ["d"],
    "game-optimize": ["d"],
    "game-chain-check": ["d"],
    "completeness": ["c", "N"],
    "embezzle": ["N", "epsilon"],
}


class SeesawConfig(BaseModel):
    d: int = Field(ge=1)
    restarts: int = Field(default=20, ge=1)
    max_iters: int = Field(default=500, ge=1)
    tol: float = Field(default=1e-9, gt=0)
    seed: int = Field(default=0, ge=0)
    y_dim: Optional[int] = Field(default=None, ge=1)
    workers: int = Field(default=1, ge=1)
    warm_start: Optional[Literal["idle", "marking", "prescribed"]] = None
    warm_start_N: int = Field(default=1, ge=1)

    @property
    def residual_dim(self) -> int:
        return self.y_dim if self.y_dim is not None else 3 * self.d


class ExperimentRecord(BaseModel):
    kind: Literal[
        "exchange", "game-play", "game-bound", "game-optimize", "game-chain-check", "completeness", "embezzle"
    ]
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seed: int = Field(ge=0)
    output: str
    name: Optional[str] = None

    @model_validator(mode="after")
    def check_required(self):
        missing = [key for key in REQUIRED_PARAMETERS[self.kind] if key not in self.parameters]
        if missing:
            raise ValueError(f"{self.kind} record is missing parameters {missing}")
        return self

    @property
    def label(self) -> str:
        return self.name or f"{self.kind}:{self.output}"


class ExperimentManifest(BaseModel):
    experiments: List[ExperimentRecord]
    workers: int = Field(default=1, ge=1)
    tables: List[Dict[str, Any]] = Field(default_factory=list)
