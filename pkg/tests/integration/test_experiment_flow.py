"""Integration tests for the experiment runner: one config in, CSVs and summaries out."""

from __future__ import annotations

import asyncio
import json

import numpy as np
import pytest

from src.core.config import Settings
from src.core.models import (
    DynamicsSection,
    ExperimentConfig,
    ExperimentSummary,
    InitialCache,
    NetworkSection,
    OutputSection,
    PolicyKind,
    PolicySpec,
)
from src.core.runner import (
    ExperimentAlreadyRunning,
    ExperimentRunner,
    OutputPathError,
    build_policies,
    prepare_replication,
    run_experiment,
)
from src.data.schedules import NetworkTimeline
from src.policies.docp import docp_step
from src.reports.csv_writer import read_allocation_csv, read_metrics_csv


@pytest.fixture
def settings() -> Settings:
    return Settings(_env_file=None, hindsight_max_iters=500)


class TestRunExperiment:
    def test_outputs_written(self, small_config, settings, tmp_path):
        (metrics,) = run_experiment(small_config, tmp_path, settings=settings)
        for name in ("metrics.csv", "allocation_t10.csv", "allocation_t300.csv", "summary.json", "report.md"):
            assert (tmp_path / name).exists(), name

        columns = read_metrics_csv(tmp_path / "metrics.csv")
        assert list(columns) == ["docp", "mlru", "lazy_lru"]
        assert all(len(c["cost"]) == 300 for c in columns.values())

        allocation = read_allocation_csv(tmp_path / "allocation_t300.csv")
        assert list(allocation) == ["docp", "mlru", "lazy_lru", "hindsight"]
        assert all(len(v) == 20 for v in allocation.values())
        assert metrics.horizon == 300

    def test_series_invariants(self, small_config, settings):
        (metrics,) = run_experiment(small_config, settings=settings)
        benchmark = np.asarray(metrics.hindsight_slot_costs)
        assert benchmark.sum() == pytest.approx(metrics.hindsight_total)
        for series in metrics.policies:
            costs = np.asarray(series.costs)
            np.testing.assert_allclose(series.running_average, np.cumsum(costs) / np.arange(1, 301))
            np.testing.assert_allclose(series.regret, np.cumsum(costs - benchmark))
            assert set(series.allocations) == {10, 300}
            assert costs.min() >= 0.0
            assert costs.max() <= 10.0

    def test_docp_within_regret_bound(self, small_config, settings):
        (metrics,) = run_experiment(small_config, settings=settings)
        assert metrics.policy("docp").final_regret <= metrics.regret_bound

    def test_locality_audit_passes(self, small_config, settings):
        config = small_config.model_copy(update={"output": OutputSection(audit_locality=True)})
        (metrics,) = run_experiment(config, settings=settings)
        assert metrics.policy("docp").audit_failures == []

    def test_cold_start_costs_bs(self, settings):
        config = ExperimentConfig(
            seed=0,
            horizon=1,
            catalog_size=2,
            network=NetworkSection(device_count=1, positions=[(0.0, 0.0)], capacities=1),
            policies=[PolicySpec(kind=PolicyKind.DOCP, initial_cache=InitialCache.ZEROS)],
        )
        (metrics,) = run_experiment(config, settings=settings)
        assert metrics.policy("docp").costs == [10.0]
        assert metrics.hindsight_total == pytest.approx(0.0, abs=1e-9)
        assert metrics.policy("docp").final_regret == pytest.approx(10.0)

    def test_same_seed_same_bytes(self, small_config, settings, tmp_path):
        run_experiment(small_config, tmp_path / "a", settings=settings)
        run_experiment(small_config, tmp_path / "b", settings=settings)
        for name in ("metrics.csv", "allocation_t10.csv", "allocation_t300.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_replications_get_their_own_seed_and_directory(self, small_config, settings, tmp_path):
        config = small_config.model_copy(update={"replications": 2})
        results = run_experiment(config, tmp_path, settings=settings)
        assert [m.seed for m in results] == [7, 8]
        assert (tmp_path / "replication_0" / "metrics.csv").exists()
        assert (tmp_path / "replication_1" / "metrics.csv").exists()
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert [r["seed"] for r in summary["replications"]] == [7, 8]
        assert set(summary["mean_running_average"]) == {"docp", "mlru", "lazy_lru"}
        parsed = ExperimentSummary.model_validate_json(
            (tmp_path / "summary.json").read_text(encoding="utf-8")
        )
        assert [r.seed for r in parsed.replications] == [7, 8]
        assert parsed.replications[0].policies[0].name == "docp"

    def test_unwritable_output(self, small_config, settings, tmp_path):
        blocker = tmp_path / "taken"
        blocker.write_text("not a directory", encoding="utf-8")
        with pytest.raises(OutputPathError):
            run_experiment(small_config, blocker, settings=settings)


class TestDynamics:
    def _pair_config(self, dynamics: DynamicsSection) -> ExperimentConfig:
        return ExperimentConfig(
            seed=5,
            horizon=60,
            catalog_size=10,
            network=NetworkSection(device_count=2, positions=[(0.0, 0.0), (80.0, 0.0)], capacities=2),
            policies=[PolicySpec(kind=PolicyKind.DOCP)],
            dynamics=dynamics,
            output=OutputSection(message_log=True),
        )

    def test_severed_link_keeps_messages_local(self, settings, tmp_path):
        config = self._pair_config(DynamicsSection(overrides=[(1, 0, 1, "cmax")]))
        run_experiment(config, tmp_path, settings=settings)
        records = [
            json.loads(line)
            for line in (tmp_path / "messages.jsonl").read_text(encoding="utf-8").splitlines()
        ]
        assert records
        assert all(r["from"] == r["to"] for r in records)

    def test_linked_pair_exchanges_messages(self, settings, tmp_path):
        run_experiment(self._pair_config(DynamicsSection()), tmp_path, settings=settings)
        records = [
            json.loads(line)
            for line in (tmp_path / "messages.jsonl").read_text(encoding="utf-8").splitlines()
        ]
        assert any(r["from"] != r["to"] for r in records)

    def test_link_severed_mid_run_carries_no_traffic(self):
        config = self._pair_config(DynamicsSection(overrides=[(30, 0, 1, "cmax")]))
        prepared = prepare_replication(config, 0)
        (policy,) = build_policies(config, prepared)
        timeline = NetworkTimeline(prepared.network, prepared.schedule)

        shared_before = False
        for req in prepared.trace:
            result = docp_step(policy.state, req, timeline.network_at(req.slot))
            policy.state = result.state
            partner = 1 - req.user
            if req.slot < 30:
                shared_before |= result.plan.shares.get(partner, 0.0) > 0.0
            else:
                assert result.plan.shares.get(partner, 0.0) == 0.0
                assert all(m.recipient == req.user for m in result.messages)
        assert shared_before

    def test_schedule_and_mobility_files(self, settings, tmp_path):
        schedule = tmp_path / "schedule.csv"
        schedule.write_text("10,0,1,cmax\n30,0,1,2.0\n", encoding="utf-8")
        mobility = tmp_path / "mobility.csv"
        mobility.write_text("45,1,2000.0,0.0\n", encoding="utf-8")
        config = self._pair_config(
            DynamicsSection(schedule_path=str(schedule), mobility_path=str(mobility))
        )
        prepared = prepare_replication(config, 0)
        assert prepared.schedule.change_slots == (10, 30, 45)
        assert prepared.trace.schedule is prepared.schedule

        (metrics,) = run_experiment(config, settings=settings)
        assert metrics.policy("docp").final_regret <= metrics.regret_bound


class TestExperimentRunner:
    async def test_run_is_awaitable(self, small_config, settings):
        runner = ExperimentRunner(small_config, settings=settings)
        results = await runner.run()
        assert len(results) == 1
        assert not runner.is_running

    async def test_rejects_concurrent_runs(self, small_config, settings):
        runner = ExperimentRunner(small_config, settings=settings)
        first = asyncio.create_task(runner.run())
        await asyncio.sleep(0)
        assert runner.is_running
        with pytest.raises(ExperimentAlreadyRunning):
            await runner.run()
        await first
