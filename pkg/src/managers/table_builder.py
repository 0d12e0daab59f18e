"""CSV tables comparing simulated values with their closed forms."""
import re
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..config import settings
from ..errors import BoundViolation, DomainError
from ..models.experiment import SeesawConfig
from ..services import completeness, exchange, game, gram, optimizer
from ..utils.logger import logger
from ..utils.serialization import render_csv, write_text

TABLE_KINDS = ("exchange", "game", "bound", "completeness", "optimizer")
AGREEMENT_TOL = 1e-10

_RANGE = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")


def parse_int_range(text: str, log_steps: int = 0) -> List[int]:
    """``"a..b"`` (inclusive, or ``log_steps`` geometric points), ``"a,b,c"`` or a single integer."""
    text = str(text).strip()
    match = _RANGE.match(text)
    if match:
        lo, hi = int(match.group(1)), int(match.group(2))
        if lo < 1 or hi < lo:
            raise DomainError(f"Malformed range: {text}")
        if log_steps:
            if log_steps < 2:
                raise DomainError(f"--log-steps needs at least 2 points, got {log_steps}")
            points = np.rint(np.geomspace(lo, hi, log_steps)).astype(int)
            return sorted({int(p) for p in points})
        return list(range(lo, hi + 1))
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise DomainError(f"Malformed range: {text}")
    if not values:
        raise DomainError(f"Malformed range: {text}")
    return values


def parse_float_list(text: str) -> List[float]:
    try:
        values = [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise DomainError(f"Malformed value list: {text}")
    if not values:
        raise DomainError(f"Malformed value list: {text}")
    return values


def _exchange_rows(spec: Dict[str, Any], workers: int) -> Tuple[List[str], List[Sequence[Any]]]:
    rows = []
    for a in parse_float_list(spec.get("a", "0")):
        for N in parse_int_range(spec["N"], spec.get("log_steps", 0)):
            overlap = gram.residual_overlap(N, a)
            formula = exchange.overlap_formula(N, a)
            rows.append([N, a, overlap, formula, abs(overlap - formula)])
    return ["N", "a", "residual_overlap", "overlap_formula", "abs_diff"], rows


def _game_rows(spec: Dict[str, Any], workers: int) -> Tuple[List[str], List[Sequence[Any]]]:
    rows = []
    for N in parse_int_range(spec["N"], spec.get("log_steps", 0)):
        strategy = game.prescribed_strategy(N)
        value = game.play(strategy, "gram")
        closed_form = 1.0 - 1.0 / (2 * N)
        rows.append([N, value, closed_form, abs(value - closed_form), game.fannes_bound_from_log2(strategy.log2_d)])
    return ["N", "win_prob", "closed_form", "abs_diff", "upper_bound_d"], rows


def _bound_rows(spec: Dict[str, Any], workers: int) -> Tuple[List[str], List[Sequence[Any]]]:
    rows = []
    for d in parse_int_range(spec["d"], spec.get("log_steps", 0)):
        rows.append([d, game.fannes_upper_bound(d), game.non_closure_witness(d)])
    return ["d", "upper_bound", "non_closure_N"], rows


def _completeness_rows(spec: Dict[str, Any], workers: int) -> Tuple[List[str], List[Sequence[Any]]]:
    grid = [
        (c, N, m)
        for c in parse_float_list(spec.get("c", "0.5"))
        for N in parse_int_range(spec["N"], spec.get("log_steps", 0))
        for m in parse_int_range(spec.get("m", "2"))
    ]
    backend = spec.get("backend", "dense")

    def row(point):
        c, N, m = point
        model = completeness.make_model(c, c, 0.0, m)
        simulated = completeness.run_final_round(model, N, backend).acceptance_probability
        formula = completeness.yes_acceptance_formula(c, N)
        diff = abs(simulated - formula)
        if diff > AGREEMENT_TOL:
            raise BoundViolation(f"Completeness c={c} N={N} m={m}: {simulated!r} vs formula {formula!r}")
        return [c, N, m, simulated, formula, diff]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(row, grid))
    return ["c", "N", "m", "acceptance", "yes_formula", "abs_diff"], rows


def _optimizer_rows(spec: Dict[str, Any], workers: int) -> Tuple[List[str], List[Sequence[Any]]]:
    rows = []
    for d in parse_int_range(spec["d"]):
        config = SeesawConfig(
            d=d,
            restarts=int(spec.get("restarts", 20)),
            max_iters=int(spec.get("max_iters", 500)),
            seed=int(spec.get("seed", settings.SEED)),
            workers=workers,
        )
        report = optimizer.seesaw(config)
        rows.append([d, report.best_value, report.upper_bound, report.upper_bound - report.best_value])
    return ["d", "seesaw_value", "upper_bound", "gap"], rows


TABLES = {
    "exchange": _exchange_rows,
    "game": _game_rows,
    "bound": _bound_rows,
    "completeness": _completeness_rows,
    "optimizer": _optimizer_rows,
}


def build_table(spec: Dict[str, Any], workers: int = 1) -> str:
    kind = spec.get("kind")
    if kind not in TABLES:
        raise DomainError(f"Unknown table kind: {kind}")
    header, rows = TABLES[kind](spec, workers)
    logger.info(f"Built {kind} table with {len(rows)} rows")
    return render_csv(header, rows)


def write_table(spec: Dict[str, Any], path: str, workers: int = 1):
    write_text(path, build_table(spec, workers))
