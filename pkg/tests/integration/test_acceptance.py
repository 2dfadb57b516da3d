"""Full-scale acceptance runs: 8 devices in a 1.5 km cell, 100 files, C=6, T=4000.

Slow; run with ``pytest -m slow``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from src.analysis.regret import cosine_similarity
from src.core.config import Settings, load_config
from src.core.models import DynamicsSection, GeneratorKind, PolicyKind, PolicySpec
from src.core.runner import run_experiment

pytestmark = pytest.mark.slow

REFERENCE_CONFIG = Path(__file__).resolve().parents[2] / "configs" / "reference.toml"


@pytest.fixture(scope="module")
def settings() -> Settings:
    return Settings(_env_file=None, max_workers=4)


@pytest.fixture(scope="module")
def reference_runs(settings):
    base = load_config(REFERENCE_CONFIG)
    config = base.model_copy(
        update={
            "replications": 10,
            "output": base.output.model_copy(update={"audit_locality": True}),
        }
    )
    return run_experiment(config, settings=settings)


class TestFullScale:
    def test_docp_beats_reactive_baselines(self, reference_runs):
        mean = {
            name: np.mean([m.policy(name).final_running_average for m in reference_runs])
            for name in ("docp", "mlru", "lazy_lru")
        }
        assert mean["docp"] < mean["mlru"]
        assert mean["docp"] < mean["lazy_lru"]

    def test_docp_close_to_best_static(self, reference_runs):
        docp = np.mean([m.policy("docp").final_running_average for m in reference_runs])
        best = np.mean([m.hindsight_total / m.horizon for m in reference_runs])
        assert docp <= 1.15 * best

    def test_regret_within_bound(self, reference_runs):
        for metrics in reference_runs:
            assert metrics.policy("docp").final_regret <= metrics.regret_bound

    def test_every_docp_slot_passes_the_locality_audit(self, reference_runs):
        for metrics in reference_runs:
            assert metrics.policy("docp").audit_failures == []

    def test_allocation_moves_towards_hindsight(self, reference_runs):
        for metrics in reference_runs:
            allocations = metrics.policy("docp").allocations
            early = cosine_similarity(allocations[10], metrics.hindsight_allocation)
            late = cosine_similarity(allocations[metrics.horizon], metrics.hindsight_allocation)
            assert late > early


class TestAdversarial:
    def test_regret_within_bound_on_cyclic_trace(self, settings):
        base = load_config(REFERENCE_CONFIG)
        config = base.model_copy(
            update={
                "workload": base.workload.model_copy(update={"kind": GeneratorKind.ADVERSARIAL_CYCLIC}),
                "replications": 3,
            }
        )
        for metrics in run_experiment(config, settings=settings):
            assert metrics.policy("docp").final_regret <= metrics.regret_bound


class TestNoRegret:
    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_average_regret_shrinks_with_horizon(self, seed, settings):
        base = load_config(REFERENCE_CONFIG)
        averages = []
        for horizon in (500, 1000, 2000, 4000):
            config = base.model_copy(
                update={"seed": seed, "horizon": horizon, "policies": [PolicySpec(kind=PolicyKind.DOCP)]}
            )
            (metrics,) = run_experiment(config, settings=settings)
            averages.append(metrics.policy("docp").final_regret / horizon)
        assert all(a > b for a, b in zip(averages, averages[1:]))


class TestDynamicCosts:
    def test_mid_run_sever_keeps_audit_and_bound(self, settings):
        base = load_config(REFERENCE_CONFIG)
        config = base.model_copy(
            update={
                "dynamics": DynamicsSection(overrides=[(2000, 0, 1, "cmax"), (2000, 2, 3, "cmax")]),
                "output": base.output.model_copy(update={"audit_locality": True}),
                "replications": 3,
            }
        )
        for metrics in run_experiment(config, settings=settings):
            docp = metrics.policy("docp")
            assert docp.audit_failures == []
            assert docp.final_regret <= metrics.regret_bound
