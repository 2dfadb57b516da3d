from __future__ import annotations

from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


# ── Enums ───────────────────────────────────────────────────────


class StepSchedule(str, Enum):
    CONSTANT_T = "constant_T"
    INVERSE_SQRT_T = "inverse_sqrt_t"
    DOUBLING = "doubling"


class InitialCache(str, Enum):
    UNIFORM = "uniform"
    ZEROS = "zeros"
    RANDOM = "random"


class PolicyKind(str, Enum):
    DOCP = "docp"
    LRU = "lru"
    LFU = "lfu"
    MLRU = "mlru"
    LAZY_LRU = "lazy_lru"


class MlruVariant(str, Enum):
    ONE = "one"
    ALL = "all"


class GeneratorKind(str, Enum):
    ZIPF_IID = "zipf_iid"
    SHIFTING_ZIPF = "shifting_zipf"
    ADVERSARIAL_CYCLIC = "adversarial_cyclic"
    REPLAY = "replay"


# ── Experiment configuration ────────────────────────────────────


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NetworkSection(_Section):
    device_count: int = Field(default=8, ge=1)
    cell_size_m: float = Field(default=1500.0, gt=0)
    range_m: float = Field(default=500.0, ge=0)
    cost_bands: list[tuple[float, float]] = Field(
        default_factory=lambda: [(100.0, 2.0), (300.0, 5.0), (400.0, 7.0), (500.0, 9.0)],
        min_length=1,
    )
    bs_cost: float = Field(default=10.0, gt=0)
    positions: Optional[list[tuple[float, float]]] = None
    capacities: int | list[int] = 6
    c_max: Optional[float] = None

    @model_validator(mode="after")
    def _check_shapes(self) -> NetworkSection:
        if self.positions is not None and len(self.positions) != self.device_count:
            raise ValueError(
                f"{len(self.positions)} positions given for device_count={self.device_count}"
            )
        if isinstance(self.capacities, list) and len(self.capacities) != self.device_count:
            raise ValueError(
                f"{len(self.capacities)} capacities given for device_count={self.device_count}"
            )
        for _, cost in self.cost_bands:
            if cost >= self.bs_cost:
                raise ValueError(f"band cost {cost} must be below bs_cost {self.bs_cost}")
        return self

    def capacity_list(self) -> list[int]:
        if isinstance(self.capacities, int):
            return [self.capacities] * self.device_count
        return list(self.capacities)


class GeneratorSpec(_Section):
    """How request traces are produced; ``seed`` and ``horizon`` are filled per replication."""

    kind: GeneratorKind = GeneratorKind.ZIPF_IID
    zipf_exponent: float = Field(default=0.9, gt=0)
    user_weights: Optional[list[float]] = None
    shift_period: int = Field(default=500, ge=1)
    trace_path: Optional[str] = None
    seed: int = 0
    horizon: int = Field(default=4000, ge=1)

    @model_validator(mode="after")
    def _check_spec(self) -> GeneratorSpec:
        if self.user_weights is not None:
            if any(w < 0 for w in self.user_weights):
                raise ValueError("user_weights must be non-negative")
            if abs(sum(self.user_weights) - 1.0) > 1e-9:
                raise ValueError(f"user_weights sum to {sum(self.user_weights)}, not 1")
        if self.kind is GeneratorKind.REPLAY and not self.trace_path:
            raise ValueError("replay workloads need trace_path")
        return self


class PolicySpec(_Section):
    kind: PolicyKind
    name: Optional[str] = None
    step_schedule: StepSchedule = StepSchedule.CONSTANT_T
    gamma: Optional[float] = Field(default=None, gt=0)
    initial_cache: InitialCache = InitialCache.UNIFORM
    mlru_variant: MlruVariant = MlruVariant.ONE

    @property
    def label(self) -> str:
        return self.name or self.kind.value


class HindsightSection(_Section):
    max_iters: Optional[int] = Field(default=None, ge=1)
    tol: Optional[float] = Field(default=None, ge=0)
    polish: Optional[bool] = None


class DynamicsSection(_Section):
    """Slot-specific link costs from inline overrides, a schedule file or a mobility script."""

    schedule_path: Optional[str] = None
    mobility_path: Optional[str] = None
    overrides: list[tuple[int, int, int, float | Literal["cmax"]]] = Field(default_factory=list)


class OutputSection(_Section):
    directory: Optional[str] = None
    snapshot_slots: list[int] = Field(default_factory=lambda: [10])
    message_log: Optional[bool] = None
    audit_locality: bool = False


def _default_policies() -> list[PolicySpec]:
    return [
        PolicySpec(kind=PolicyKind.DOCP),
        PolicySpec(kind=PolicyKind.MLRU),
        PolicySpec(kind=PolicyKind.LAZY_LRU),
    ]


class ExperimentConfig(_Section):
    schema_version: Literal[1] = 1
    seed: int = 0
    horizon: int = Field(default=4000, ge=1)
    replications: int = Field(default=1, ge=1)
    catalog_size: int = Field(default=100, ge=1)
    network: NetworkSection = Field(default_factory=NetworkSection)
    workload: GeneratorSpec = Field(default_factory=GeneratorSpec)
    policies: list[PolicySpec] = Field(default_factory=_default_policies, min_length=1)
    hindsight: HindsightSection = Field(default_factory=HindsightSection)
    dynamics: Optional[DynamicsSection] = None
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _check_experiment(self) -> ExperimentConfig:
        for capacity in self.network.capacity_list():
            if capacity >= self.catalog_size:
                raise ValueError(f"capacity {capacity} must be below catalog_size {self.catalog_size}")
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ValueError(f"policy names must be unique, got {labels}")
        return self

    def generator_spec(self, replication: int) -> GeneratorSpec:
        return self.workload.model_copy(
            update={"seed": self.seed + replication, "horizon": self.horizon}
        )


# ── Results ─────────────────────────────────────────────────────


class PolicySeries(BaseModel):
    name: str
    costs: list[float]
    running_average: list[float]
    regret: list[float]
    allocations: dict[int, list[float]] = Field(default_factory=dict)
    audit_failures: list[int] = Field(default_factory=list)

    @property
    def final_regret(self) -> float:
        return self.regret[-1] if self.regret else 0.0

    @property
    def final_running_average(self) -> float:
        return self.running_average[-1] if self.running_average else 0.0


class MetricsSeries(BaseModel):
    replication: int
    seed: int
    horizon: int
    policies: list[PolicySeries]
    hindsight_total: float
    hindsight_slot_costs: list[float]
    hindsight_allocation: list[float]
    hindsight_converged: bool
    regret_bound: float
    duration_seconds: float = 0.0

    def policy(self, name: str) -> PolicySeries:
        for series in self.policies:
            if series.name == name:
                return series
        raise KeyError(name)


class PolicySummary(BaseModel):
    name: str
    final_running_average: float
    final_regret: float
    within_bound: bool
    allocation_similarity: dict[int, float] = Field(default_factory=dict)


class ReplicationSummary(BaseModel):
    replication: int
    seed: int
    horizon: int
    hindsight_average: float
    regret_bound: float
    policies: list[PolicySummary]
    duration_seconds: float


class ExperimentSummary(BaseModel):
    config_path: Optional[str] = None
    replications: list[ReplicationSummary]
    mean_running_average: dict[str, float]
    mean_final_regret: dict[str, float]
