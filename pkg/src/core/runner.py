"""ExperimentRunner: orchestrates the replications of one experiment.

Each replication builds its network, draws one shared trace, runs every
configured policy on it slot by slot, solves the hindsight benchmark and
writes its CSV outputs. Replications are independent and go to a process
pool when ``max_workers > 1``; replication k uses seed ``seed + k``.
"""

from __future__ import annotations

import asyncio
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import ExitStack
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from src.analysis.hindsight import aggregate, best_static, hindsight_slot_costs
from src.analysis.regret import compute_regret, cosine_similarity, regret_bound, running_average
from src.core.config import Settings, get_settings
from src.core.logging import configure_logging, get_logger, replication_context
from src.core.models import (
    ExperimentConfig,
    ExperimentSummary,
    MetricsSeries,
    PolicyKind,
    PolicySeries,
    PolicySummary,
    ReplicationSummary,
)
from src.data.schedules import CostOverride, CostSchedule, NetworkTimeline
from src.data.trace_io import read_cost_overrides, read_mobility
from src.data.workload import generate_trace
from src.network.cache import CacheState
from src.network.requests import Trace
from src.network.topology import Network, build_network, random_positions
from src.policies.base import CachingPolicy
from src.policies.baselines import ReactivePolicy, ReactiveState
from src.policies.docp import DocpPolicy, DocpState, MessageLog, StepParams, initial_cache
from src.reports.csv_writer import write_metrics_csv, write_snapshots
from src.reports.generator import generate_experiment_report

logger = get_logger("runner")


class ExperimentAlreadyRunning(Exception):
    pass


class OutputPathError(OSError):
    pass


@dataclass(frozen=True)
class RunOptions:
    """Settings resolved against the experiment file, passed to worker processes."""

    hindsight_max_iters: int
    hindsight_tol: float
    hindsight_polish: bool
    write_message_log: bool
    audit_locality: bool
    log_level: str = "INFO"
    log_json: bool = False

    @classmethod
    def resolve(cls, config: ExperimentConfig, settings: Settings) -> RunOptions:
        h = config.hindsight
        return cls(
            hindsight_max_iters=h.max_iters if h.max_iters is not None else settings.hindsight_max_iters,
            hindsight_tol=h.tol if h.tol is not None else settings.hindsight_tol,
            hindsight_polish=h.polish if h.polish is not None else settings.hindsight_polish,
            write_message_log=(
                config.output.message_log
                if config.output.message_log is not None
                else settings.write_message_log
            ),
            audit_locality=config.output.audit_locality,
            log_level=settings.log_level,
            log_json=settings.log_json,
        )


# ── Replication setup ───────────────────────────────────────────


@dataclass(frozen=True)
class PreparedReplication:
    replication: int
    seed: int
    network: Network
    schedule: Optional[CostSchedule]
    initial_caches: dict[str, CacheState]
    trace: Trace


def build_experiment_network(config: ExperimentConfig, rng: np.random.Generator) -> Network:
    section = config.network
    positions = section.positions
    if positions is None:
        positions = random_positions(section.device_count, section.cell_size_m, rng)
    return build_network(
        positions,
        section.range_m,
        section.cost_bands,
        section.bs_cost,
        catalog_size=config.catalog_size,
        capacities=section.capacity_list(),
        c_max=section.c_max,
    )


def load_schedule(config: ExperimentConfig, net: Network) -> Optional[CostSchedule]:
    dynamics = config.dynamics
    if dynamics is None:
        return None
    overrides = [
        CostOverride(t, i, j, None if cost == "cmax" else float(cost))
        for t, i, j, cost in dynamics.overrides
    ]
    if dynamics.schedule_path:
        overrides.extend(read_cost_overrides(dynamics.schedule_path))
    mobility = None
    if dynamics.mobility_path:
        mobility = read_mobility(
            dynamics.mobility_path, config.network.range_m, config.network.cost_bands
        )
    schedule = CostSchedule(tuple(overrides), mobility)
    schedule.check_against(net)
    return None if schedule.is_empty else schedule


def prepare_replication(config: ExperimentConfig, replication: int) -> PreparedReplication:
    seed = config.seed + replication
    placement_rng, cache_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)
    )
    net = build_experiment_network(config, placement_rng)
    schedule = load_schedule(config, net)

    initial_caches = {
        spec.label: initial_cache(net, spec.initial_cache, cache_rng)
        for spec in config.policies
        if spec.kind is PolicyKind.DOCP
    }
    # Adversarial traces may only look at the initial state of the learner.
    probe = next(iter(initial_caches.values())).total_allocation() if initial_caches else None

    trace = generate_trace(config.generator_spec(replication), net, probe)
    trace.check_against(net)
    trace = Trace(trace.requests, schedule)
    return PreparedReplication(replication, seed, net, schedule, initial_caches, trace)


def build_policies(
    config: ExperimentConfig,
    prepared: PreparedReplication,
    *,
    audit: bool = False,
) -> list[CachingPolicy]:
    net = prepared.network
    horizon = len(prepared.trace)
    policies: list[CachingPolicy] = []
    for spec in config.policies:
        if spec.kind is PolicyKind.DOCP:
            state = DocpState(
                cache=prepared.initial_caches[spec.label],
                step_schedule=spec.step_schedule,
                params=StepParams.from_network(net, horizon),
                gamma_override=spec.gamma,
            )
            policies.append(DocpPolicy(state, name=spec.label, audit=audit))
        else:
            policies.append(
                ReactivePolicy(
                    spec.kind,
                    ReactiveState.empty(net.device_count),
                    catalog_size=net.catalog_size,
                    name=spec.label,
                    mlru_variant=spec.mlru_variant,
                )
            )
    return policies


def _message_log_name(label: str) -> str:
    return "messages.jsonl" if label == PolicyKind.DOCP.value else f"messages_{label}.jsonl"


# ── One replication ─────────────────────────────────────────────


def run_replication(
    config: ExperimentConfig,
    replication: int,
    output_dir: Optional[str | Path],
    options: RunOptions,
) -> MetricsSeries:
    """Run every policy on one shared trace and score it against hindsight."""
    with replication_context(replication, config.seed + replication):
        return _run_replication(config, replication, output_dir, options)


def _run_replication(
    config: ExperimentConfig,
    replication: int,
    output_dir: Optional[str | Path],
    options: RunOptions,
) -> MetricsSeries:
    start_time = time.monotonic()
    prepared = prepare_replication(config, replication)
    net, trace = prepared.network, prepared.trace
    horizon = len(trace)
    logger.info(
        "replication_started",
        horizon=horizon,
        devices=net.device_count,
        j_star=net.j_star,
    )

    directory = Path(output_dir) if output_dir is not None else None
    policies = build_policies(config, prepared, audit=options.audit_locality)
    snapshots = {s for s in config.output.snapshot_slots if 1 <= s <= horizon} | {horizon}
    costs = {p.name: np.zeros(horizon) for p in policies}
    allocations: dict[str, dict[int, list[float]]] = {p.name: {} for p in policies}
    timeline = NetworkTimeline(net, prepared.schedule)

    with ExitStack() as stack:
        if directory is not None and options.write_message_log:
            for policy in policies:
                if isinstance(policy, DocpPolicy):
                    policy.on_messages = stack.enter_context(
                        MessageLog(directory / _message_log_name(policy.name))
                    )

        for req in trace:
            slot_net = timeline.network_at(req.slot)
            for policy in policies:
                costs[policy.name][req.slot - 1] = policy.serve(req, slot_net)
                if req.slot in snapshots:
                    allocations[policy.name][req.slot] = policy.allocation().tolist()

    hindsight = best_static(
        aggregate(trace),
        net,
        options.hindsight_max_iters,
        options.hindsight_tol,
        polish=options.hindsight_polish,
    )
    benchmark = hindsight_slot_costs(trace, hindsight.cache, net)

    series = []
    for policy in policies:
        policy_costs = costs[policy.name]
        series.append(
            PolicySeries(
                name=policy.name,
                costs=policy_costs.tolist(),
                running_average=running_average(policy_costs).tolist(),
                regret=compute_regret(policy_costs, benchmark).tolist(),
                allocations=allocations[policy.name],
                audit_failures=list(getattr(policy, "audit_failures", [])),
            )
        )

    elapsed = time.monotonic() - start_time
    metrics = MetricsSeries(
        replication=replication,
        seed=prepared.seed,
        horizon=horizon,
        policies=series,
        hindsight_total=float(benchmark.sum()),
        hindsight_slot_costs=benchmark.tolist(),
        hindsight_allocation=hindsight.cache.total_allocation().tolist(),
        hindsight_converged=hindsight.converged,
        regret_bound=regret_bound(net.c_star, net.max_capacity, net.j_star, horizon),
        duration_seconds=elapsed,
    )

    if directory is not None:
        write_metrics_csv(metrics, directory / "metrics.csv")
        write_snapshots(metrics, directory)

    logger.info(
        "replication_completed",
        duration=f"{elapsed:.1f}s",
        hindsight_average=metrics.hindsight_total / horizon,
        **{f"{s.name}_average": s.final_running_average for s in series},
    )
    return metrics


# ── Summaries ───────────────────────────────────────────────────


def summarize_replication(metrics: MetricsSeries) -> ReplicationSummary:
    policies = []
    for series in metrics.policies:
        similarity = {
            slot: cosine_similarity(alloc, metrics.hindsight_allocation)
            for slot, alloc in sorted(series.allocations.items())
        }
        policies.append(
            PolicySummary(
                name=series.name,
                final_running_average=series.final_running_average,
                final_regret=series.final_regret,
                within_bound=series.final_regret <= metrics.regret_bound,
                allocation_similarity=similarity,
            )
        )
    return ReplicationSummary(
        replication=metrics.replication,
        seed=metrics.seed,
        horizon=metrics.horizon,
        hindsight_average=metrics.hindsight_total / metrics.horizon,
        regret_bound=metrics.regret_bound,
        policies=policies,
        duration_seconds=metrics.duration_seconds,
    )


def summarize(results: list[MetricsSeries], config_path: Optional[str] = None) -> ExperimentSummary:
    replications = [summarize_replication(m) for m in results]
    names = [p.name for p in replications[0].policies] if replications else []
    return ExperimentSummary(
        config_path=config_path,
        replications=replications,
        mean_running_average={
            name: float(np.mean([m.policy(name).final_running_average for m in results]))
            for name in names
        },
        mean_final_regret={
            name: float(np.mean([m.policy(name).final_regret for m in results])) for name in names
        },
    )


# ── Runner ──────────────────────────────────────────────────────


def _init_worker(log_json: bool, log_level: str) -> None:
    configure_logging(json_output=log_json, level=log_level)


class ExperimentRunner:
    """Runs the replications of one experiment, one experiment at a time."""

    def __init__(
        self,
        config: ExperimentConfig,
        *,
        output_dir: Optional[str | Path] = None,
        config_path: Optional[str] = None,
        settings: Optional[Settings] = None,
    ) -> None:
        self._config = config
        self._output_dir = Path(output_dir) if output_dir is not None else None
        self._config_path = config_path
        self._settings = settings or get_settings()
        self._lock = asyncio.Lock()

    @property
    def is_running(self) -> bool:
        return self._lock.locked()

    def _replication_dir(self, replication: int) -> Optional[Path]:
        if self._output_dir is None:
            return None
        if self._config.replications == 1:
            return self._output_dir
        return self._output_dir / f"replication_{replication}"

    def _prepare_output(self) -> None:
        if self._output_dir is None:
            return
        try:
            for k in range(self._config.replications):
                self._replication_dir(k).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OutputPathError(f"cannot write to {self._output_dir}: {exc.strerror or exc}") from exc

    async def run(self) -> list[MetricsSeries]:
        if self._lock.locked():
            raise ExperimentAlreadyRunning("an experiment is already in progress on this runner")

        async with self._lock:
            self._prepare_output()
            options = RunOptions.resolve(self._config, self._settings)
            replications = range(self._config.replications)
            workers = min(self._settings.max_workers, self._config.replications)
            logger.info(
                "experiment_started",
                replications=self._config.replications,
                workers=workers,
                horizon=self._config.horizon,
            )

            try:
                if workers > 1:
                    loop = asyncio.get_running_loop()
                    with ProcessPoolExecutor(
                        max_workers=workers,
                        initializer=_init_worker,
                        initargs=(options.log_json, options.log_level),
                    ) as pool:
                        results = await asyncio.gather(*(
                            loop.run_in_executor(
                                pool, run_replication,
                                self._config, k, self._replication_dir(k), options,
                            )
                            for k in replications
                        ))
                else:
                    results = []
                    for k in replications:
                        results.append(await asyncio.to_thread(
                            run_replication, self._config, k, self._replication_dir(k), options
                        ))
            except Exception as e:
                logger.error("replication_failed", error=str(e))
                raise

            results = list(results)
            summary = summarize(results, self._config_path)
            if self._output_dir is not None:
                try:
                    (self._output_dir / "summary.json").write_text(
                        summary.model_dump_json(indent=2) + "\n",
                        encoding="utf-8",
                    )
                    (self._output_dir / "report.md").write_text(
                        generate_experiment_report(summary), encoding="utf-8"
                    )
                except OSError as exc:
                    raise OutputPathError(f"cannot write to {self._output_dir}: {exc}") from exc

            logger.info("experiment_completed", **{
                f"{name}_average": value for name, value in summary.mean_running_average.items()
            })
            return results


def run_experiment(
    config: ExperimentConfig,
    output_dir: Optional[str | Path] = None,
    *,
    config_path: Optional[str] = None,
    settings: Optional[Settings] = None,
) -> list[MetricsSeries]:
    """Run every replication of ``config``; one MetricsSeries per replication."""
    runner = ExperimentRunner(
        config, output_dir=output_dir, config_path=config_path, settings=settings
    )
    return asyncio.run(runner.run())
