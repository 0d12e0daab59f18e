import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from ..config import settings
from ..errors import BoundViolation, DomainError, IdenticalStates
from ..models.experiment import ExperimentManifest, ExperimentRecord, SeesawConfig
from ..models.report import (
    ChainCheckReport,
    ChainEntry,
    CompletenessReport,
    EmbezzleReport,
    ExchangeReport,
    GameBoundReport,
    GamePlayReport,
    SeesawSummary,
)
from ..services import completeness, embezzlement, exchange, game, gram, optimizer
from ..services.statevec import (
    PureState,
    SubsystemLayout,
    inner,
    make_state,
    random_state,
)
from ..utils.logger import logger
from ..utils.serialization import matrix_to_json, render_json, state_from_json, state_to_json, write_text
from .table_builder import write_table

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ASSERTION = 3


# ─── Single experiments ───────────────────────────────────────────────────────

def exchange_pair(a: float, theta: float = 0.0):
    """phi = (|11>+|22>)/sqrt(2) and psi = e^{i theta}(a phi + sqrt(1-a^2)|00>) on qutrit pairs."""
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"a must lie in [0, 1], got {a}")
    phi = game.target_phi()
    amps = a * phi.amplitudes + math.sqrt(1.0 - a * a) * game.zero_pair().amplitudes
    amps = np.exp(1j * theta) * amps
    return phi, make_state(phi.layout, amps)


def _phase_only_report(phi: PureState, psi: PureState, N: int, direction: str, dump_state: bool) -> ExchangeReport:
    """States equal up to a phase: one player applies the phase and the resource stays as it is."""
    source, target = (phi, psi) if direction == "forward" else (psi, phi)
    outcome = exchange.phase_only_outcome(source, target, direction)
    logger.info(f"Exchange N={N} a=1 {direction}: phase only")
    return ExchangeReport(
        N=N,
        a=1.0,
        theta=float(np.angle(inner(phi, psi))),
        N1=None,
        method="phase_only",
        direction=direction,
        backend=outcome.backend,
        residual_overlap=outcome.residual_overlap,
        overlap_formula=1.0,
        abs_diff=abs(outcome.residual_overlap - 1.0),
        output_fidelity=abs(inner(target, outcome.output_state)),
        state=state_to_json(outcome.output_state) if dump_state else None,
    )


def _gram_export(resource: exchange.ExchangeResource):
    """One N x N Gram matrix per exchange stage."""
    return [matrix_to_json(gram.gram_matrix(resource.N, stage.a)) for stage in resource.stages or (resource,)]


def run_exchange(params: Dict[str, Any], seed: int, dump_state: bool = False) -> ExchangeReport:
    N = int(params["N"])
    a = float(params.get("a", 0.0))
    direction = params.get("direction", "forward")
    backend = params.get("backend", "dense")
    method = params.get("method", "direct")
    phi, psi = exchange_pair(a, float(params.get("theta", 0.0)))
    if method == "intermediate":
        resource = exchange.build_intermediate_resource(phi, psi, N)
        expected = math.prod(exchange.overlap_formula(N, stage.a) for stage in resource.stages)
    elif method == "direct":
        try:
            resource = exchange.build_resource(phi, psi, N)
        except IdenticalStates:
            return _phase_only_report(phi, psi, N, direction, dump_state)
        expected = exchange.overlap_formula(N, resource.a)
    else:
        raise DomainError(f"Unknown exchange method: {method}")

    source, target = (phi, psi) if direction == "forward" else (psi, phi)
    outcome = exchange.exchange(source, resource, direction, backend)
    diff = abs(outcome.residual_overlap - expected)
    if diff > 1e-12:
        raise BoundViolation(f"Residual overlap {outcome.residual_overlap!r} differs from formula {expected!r}")
    report = ExchangeReport(
        N=N,
        a=resource.a,
        theta=resource.theta,
        N1=resource.N1,
        method=resource.method,
        direction=direction,
        backend=backend,
        residual_overlap=outcome.residual_overlap,
        overlap_formula=expected,
        abs_diff=diff,
        output_fidelity=abs(inner(target, outcome.output_state)),
        stage_overlaps=list(outcome.stage_overlaps),
        state=state_to_json(outcome.output_state) if dump_state else None,
        gram_matrix=_gram_export(resource) if dump_state and backend == "gram" else None,
    )
    logger.info(f"Exchange N={N} a={a} {direction}/{backend}: overlap {outcome.residual_overlap!r}")
    return report


def run_game_play(params: Dict[str, Any], seed: int, dump_state: bool = False) -> GamePlayReport:
    N = int(params["N"])
    backend = params.get("backend", "gram")
    strategy = game.prescribed_strategy(N)
    value = game.play(strategy, backend)
    closed_form = 1.0 - 1.0 / (2 * N)
    diff = abs(value - closed_form)
    if diff > 1e-10:
        raise BoundViolation(f"Win probability {value!r} differs from 1 - 1/(2N) = {closed_form!r}")
    deficit = None
    if backend == "dense":
        identity = np.eye(3 * strategy.d)
        deficit = game.bound_chain_check(strategy, identity, identity).entropy_deficit
        if abs(deficit - 1.0) > 1e-10:
            raise BoundViolation(f"Entropy deficit {deficit!r} is not one bit")
    logger.info(f"Game play N={N} {backend}: {value!r}")
    return GamePlayReport(
        N=N,
        backend=backend,
        win_probability=value,
        closed_form=closed_form,
        abs_diff=diff,
        d=strategy.reported_d,
        upper_bound=game.fannes_bound_from_log2(strategy.log2_d),
        entropy_deficit=deficit,
    )


def run_game_bound(params: Dict[str, Any], seed: int, dump_state: bool = False) -> GameBoundReport:
    d = int(params["d"])
    witness = game.non_closure_witness(d)
    return GameBoundReport(
        d=d,
        upper_bound=game.fannes_upper_bound(d),
        non_closure_N=witness,
        non_closure_value=1.0 - 1.0 / (2 * witness),
        unentangled_cap=game.unentangled_upper_bound() if d == 1 else None,
    )


def _warm_start(config: SeesawConfig) -> Optional[game.Strategy]:
    if config.warm_start == "idle":
        return game.idle_strategy(config.d)
    if config.warm_start == "marking":
        return game.marking_strategy(config.d)
    if config.warm_start == "prescribed":
        strategy = game.prescribed_strategy(config.warm_start_N)
        if strategy.d != config.d:
            raise DomainError(f"Prescribed N={config.warm_start_N} has d={strategy.d}, config has d={config.d}")
        return strategy.materialized
    return None


def strategy_to_json(strategy: game.Strategy) -> Dict[str, Any]:
    return {
        "d": strategy.d,
        "shared_state": state_to_json(strategy.shared_state),
        "alice": matrix_to_json(strategy.alice.matrix),
        "bob": matrix_to_json(strategy.bob.matrix),
    }


def run_game_optimize(params: Dict[str, Any], seed: int, dump_state: bool = False) -> SeesawSummary:
    config = SeesawConfig(seed=seed, **{key: value for key, value in params.items() if key != "seed"})
    report = optimizer.seesaw(config, _warm_start(config))
    return SeesawSummary(
        d=report.d,
        best_value=report.best_value,
        upper_bound=report.upper_bound,
        gap_to_bound=report.upper_bound - report.best_value,
        restarts=config.restarts,
        best_restart=report.best_restart,
        iterations_per_restart=report.iterations_per_restart,
        seed=seed,
        trajectories=report.per_restart_trajectories,
        strategy=strategy_to_json(report.best_strategy) if dump_state else None,
    )


def run_chain_check(params: Dict[str, Any], seed: int, dump_state: bool = False) -> ChainCheckReport:
    d = int(params["d"])
    draws = int(params.get("draws", 100))
    entries = []
    for child in np.random.SeedSequence(seed).spawn(draws):
        rng = np.random.default_rng(child)
        shared = random_state(game.shared_layout(d), rng)
        u_a, u_b = game.random_chain_unitaries(d, rng)
        result = game.bound_chain_check(shared, u_a, u_b)
        if abs(result.entropy_deficit - 1.0) > 1e-10:
            raise BoundViolation(f"Entropy deficit {result.entropy_deficit!r} is not one bit")
        entries.append(
            ChainEntry(
                overlap=result.overlap,
                fidelity=result.fidelity,
                cap=result.cap,
                trace_norm=result.trace_norm,
                entropy_deficit=result.entropy_deficit,
            )
        )
    deficits = [entry.entropy_deficit for entry in entries]
    logger.info(f"Chain check d={d}: {draws} draws passed")
    return ChainCheckReport(
        d=d,
        draws=draws,
        seed=seed,
        trace_norm_floor=1.0 / (2.0 * math.log2(3 * d)),
        min_entropy_deficit=min(deficits),
        max_entropy_deficit=max(deficits),
        max_overlap_minus_fidelity=max(entry.overlap - entry.fidelity for entry in entries),
        max_fidelity_minus_cap=max(entry.fidelity - entry.cap for entry in entries),
        entries=entries,
    )


def run_completeness(params: Dict[str, Any], seed: int, dump_state: bool = False) -> CompletenessReport:
    c = float(params["c"])
    N = int(params["N"])
    m = int(params.get("m", 2))
    p = float(params.get("p", c))
    s = float(params.get("s", 0.0))
    backend = params.get("backend", "dense")
    model = completeness.make_model(p, c, s, m, params.get("residual_dims"))
    outcome = completeness.run_final_round(model, N, backend)
    expected = completeness.acceptance_formula(p, c, 1.0 - 1.0 / N)
    diff = abs(outcome.acceptance_probability - expected)
    if diff > 1e-10:
        raise BoundViolation(f"Acceptance {outcome.acceptance_probability!r} differs from formula {expected!r}")
    ceiling, cap = completeness.no_case_ceiling(c, s)
    sweep = []
    points = int(params.get("sweep_points", 0))
    if points:
        sweep = [list(pair) for pair in completeness.no_case_sweep(c, s, N, m, points, backend)]
    logger.info(f"Completeness c={c} p={p} N={N} m={m} {backend}: {outcome.acceptance_probability!r}")
    return CompletenessReport(
        c=c,
        s=s,
        p=p,
        N=N,
        m=m,
        backend=backend,
        acceptance=outcome.acceptance_probability,
        yes_formula=completeness.yes_acceptance_formula(c, N),
        abs_diff=diff,
        no_ceiling=ceiling,
        cap=cap,
        sweep=sweep,
    )


def embezzle_target(kind: Any, layout: SubsystemLayout, seed: int) -> PureState:
    if isinstance(kind, dict):
        return state_from_json(kind)
    if isinstance(kind, list):
        return make_state(layout, [complex(re, im) for re, im in kind])
    amps = np.zeros(layout.total_dim, dtype=complex)
    if kind == "zero":
        amps[0] = 1.0
    elif kind == "bell":
        amps[0] = amps[-1] = 1 / math.sqrt(2)
    elif kind == "random":
        return random_state(layout, np.random.default_rng(seed))
    else:
        raise DomainError(f"Unknown embezzlement target: {kind}")
    return make_state(layout, amps)


def run_embezzle(params: Dict[str, Any], seed: int, dump_state: bool = False) -> EmbezzleReport:
    m = int(params.get("m", 2))
    dims = params.get("dims", 2)
    N = int(params["N"])
    epsilon = float(params["epsilon"])
    backend = params.get("backend", "gram")
    family = embezzlement.universal_family(m, dims, N, epsilon, seed=seed)
    target = embezzle_target(params.get("target", "random"), family.layout, seed)
    outcome = embezzlement.embezzle(family, target, backend)
    return EmbezzleReport(
        m=m,
        dims=family.layout.dims,
        N=N,
        epsilon=epsilon,
        backend=outcome.backend,
        net_size=len(family),
        covering_radius=family.covering_radius,
        net_index=outcome.net_index,
        net_distance=outcome.net_distance,
        residual_overlap=outcome.residual_overlap,
        fidelity=outcome.fidelity,
        guarantee=(1.0 - 1.0 / N) * (1.0 - epsilon ** 2 / 2.0),
        state=state_to_json(outcome.output_state) if dump_state else None,
    )


EXPERIMENTS: Dict[str, Callable[..., BaseModel]] = {
    "exchange": run_exchange,
    "game-play": run_game_play,
    "game-bound": run_game_bound,
    "game-optimize": run_game_optimize,
    "game-chain-check": run_chain_check,
    "completeness": run_completeness,
    "embezzle": run_embezzle,
}


def run_experiment(kind: str, params: Dict[str, Any], seed: int, dump_state: bool = False) -> BaseModel:
    if kind not in EXPERIMENTS:
        raise DomainError(f"Unknown experiment kind: {kind}")
    return EXPERIMENTS[kind](params, seed, dump_state)


# ─── Manifests ────────────────────────────────────────────────────────────────

@dataclass
class RecordResult:
    record: ExperimentRecord
    report: Optional[BaseModel] = None
    exit_code: int = EXIT_OK
    error: str = ""


def load_manifest(path: str) -> ExperimentManifest:
    with open(path, encoding="utf-8") as handle:
        return ExperimentManifest.model_validate(json.load(handle))


class ExperimentManager:
    def __init__(self, manifest: ExperimentManifest, base_dir: Optional[str] = None, workers: Optional[int] = None):
        self.manifest = manifest
        self.base_dir = base_dir if base_dir is not None else settings.OUTPUT_DIR
        self.workers = workers or manifest.workers or settings.WORKERS
        self.results: List[RecordResult] = []

    def _execute(self, record: ExperimentRecord) -> RecordResult:
        try:
            report = run_experiment(record.kind, record.parameters, record.seed)
            return RecordResult(record, report)
        except BoundViolation as e:
            return RecordResult(record, exit_code=EXIT_ASSERTION, error=str(e))
        except ValueError as e:
            return RecordResult(record, exit_code=EXIT_INVALID, error=str(e))

    def output_path(self, output: str) -> str:
        return os.path.join(self.base_dir, output)

    def _write_tables(self) -> int:
        for spec in self.manifest.tables:
            try:
                write_table(spec, self.output_path(spec["output"]), self.workers)
            except BoundViolation as e:
                logger.error(f"Table {spec.get('output')} failed: {e}")
                return EXIT_ASSERTION
            except (KeyError, ValueError) as e:
                logger.error(f"Table {spec.get('output')} is invalid: {e}")
                return EXIT_INVALID
        return EXIT_OK

    def run(self) -> int:
        """Run every record, then write outputs in manifest order. Returns the exit code."""
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            self.results = list(pool.map(self._execute, self.manifest.experiments))

        for result in self.results:
            if result.report is not None:
                write_text(self.output_path(result.record.output), render_json(result.report))
            else:
                logger.error(f"Record {result.record.label} failed: {result.error}")

        code = max((result.exit_code for result in self.results), default=EXIT_OK)
        if code == EXIT_OK:
            code = self._write_tables()
        logger.info(f"Manifest finished: {len(self.results)} records, exit code {code}")
        return code
