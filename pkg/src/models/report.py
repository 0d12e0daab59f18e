from pydantic import BaseModel, Field
from typing import Any, Dict, List, Optional, Union


class ExchangeReport(BaseModel):
    N: int
    a: float
    theta: float
    N1: Optional[float] = None
    method: str
    direction: str
    backend: str
    residual_overlap: float
    overlap_formula: float
    abs_diff: float
    output_fidelity: float
    stage_overlaps: List[float] = Field(default_factory=list)
    state: Optional[Dict[str, Any]] = None
    gram_matrix: Optional[List[List[List[List[float]]]]] = None


class GamePlayReport(BaseModel):
    N: int
    backend: str
    win_probability: float
    closed_form: float
    abs_diff: float
    d: Union[int, str]
    upper_bound: float
    entropy_deficit: Optional[float] = None


class GameBoundReport(BaseModel):
    d: int
    upper_bound: float
    non_closure_N: int
    non_closure_value: float
    unentangled_cap: Optional[float] = None


class SeesawSummary(BaseModel):
    d: int
    best_value: float
    value_kind: str = "best-found"
    upper_bound: float
    gap_to_bound: float
    restarts: int
    best_restart: int
    iterations_per_restart: List[int]
    seed: int
    trajectories: List[List[float]] = Field(default_factory=list)
    strategy: Optional[Dict[str, Any]] = None


class ChainEntry(BaseModel):
    overlap: float
    fidelity: float
    cap: float
    trace_norm: float
    entropy_deficit: float


class ChainCheckReport(BaseModel):
    d: int
    draws: int
    seed: int
    trace_norm_floor: float
    min_entropy_deficit: float
    max_entropy_deficit: float
    max_overlap_minus_fidelity: float
    max_fidelity_minus_cap: float
    entries: List[ChainEntry] = Field(default_factory=list)


class CompletenessReport(BaseModel):
    c: float
    s: float
    p: float
    N: int
    m: int
    backend: str
    acceptance: float
    yes_formula: float
    abs_diff: float
    no_ceiling: float
    cap: float
    sweep: List[List[float]] = Field(default_factory=list)


class EmbezzleReport(BaseModel):
    m: int
    dims: List[int]
    N: int
    epsilon: float
    backend: str
    net_size: int
    covering_radius: float
    net_index: int
    net_distance: float
    residual_overlap: float
    fidelity: float
    guarantee: float
    state: Optional[Dict[str, Any]] = None
