"""
Pydantic schemas for configuration, simulation records and analysis results
"""

from typing import Annotated, Any, Dict, List, Literal, Optional
import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)


def _split_list(value: Any) -> Any:
    """Accept comma-separated text for list fields read from flat config files"""
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


ScaleList = Annotated[List[int], BeforeValidator(_split_list)]
AlphaList = Annotated[List[float], BeforeValidator(_split_list)]


# ==================== Configuration ====================


class GrowthConfig(BaseModel):
    """Preferential-attachment growth parameters"""

    n0: int = Field(3, ge=1)
    m_new: int = Field(1, ge=1)
    pa_offset: float = Field(0.0, ge=0.0)
    default_weight: float = Field(1.0, gt=0.0)
    direction_mix: float = Field(0.5, ge=0.0, le=1.0)

    model_config = ConfigDict(extra="forbid")


class DynamicsConfig(BaseModel):
    """Trade settlement and insolvency parameters"""

    theta: float = Field(2.0, gt=0.0)
    steps: int = Field(10000, ge=0)
    new_agent_probability: float = Field(0.1, ge=0.0, le=1.0)
    snapshot_every: int = Field(0, ge=0)
    growth: GrowthConfig = Field(default_factory=GrowthConfig)

    model_config = ConfigDict(extra="forbid")


class AnalysisConfig(BaseModel):
    """Knobs for topology and tail analysis"""

    degree_mode: Literal["in", "out", "total"] = "total"
    method: Literal["hill", "regression"] = "hill"
    s_min: Optional[float] = Field(None, gt=0.0)
    tail_fraction: float = Field(0.1, gt=0.0, lt=1.0)
    tail_side: Literal["loss", "gain", "absolute"] = "absolute"
    path_samples: int = Field(1000, ge=1)

    model_config = ConfigDict(extra="forbid")


class RenormConfig(BaseModel):
    """Box-covering scales and cover repetitions"""

    scales: ScaleList = Field(default_factory=lambda: [2, 3, 4, 6, 8])
    cover_seeds: int = Field(8, ge=1)
    restarts: int = Field(1, ge=1)

    model_config = ConfigDict(extra="forbid")

    @field_validator("scales")
    @classmethod
    def check_scales(cls, scales: List[int]) -> List[int]:
        if len(scales) < 3:
            raise ValueError("at least 3 scales are required")
        if any(scale < 1 for scale in scales):
            raise ValueError("box scales must be >= 1")
        return sorted(set(scales))


class RiskConfig(BaseModel):
    """Value-at-Risk queries"""

    alphas: AlphaList = Field(default_factory=lambda: [0.95, 0.99])
    x_min: Optional[float] = Field(None, gt=0.0)
    horizon: int = Field(1, ge=1)

    model_config = ConfigDict(extra="forbid")

    @field_validator("alphas")
    @classmethod
    def check_alphas(cls, alphas: List[float]) -> List[float]:
        if not alphas:
            raise ValueError("at least one alpha is required")
        for alpha in alphas:
            if not 0.0 < alpha < 1.0:
                raise ValueError(f"alpha {alpha} outside (0, 1)")
        return alphas


class RunConfig(BaseModel):
    """Complete experiment configuration"""

    seed: int = Field(0, ge=0)
    output_dir: str = "runs"
    dynamics: DynamicsConfig = Field(default_factory=DynamicsConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    renorm: RenormConfig = Field(default_factory=RenormConfig)
    risk: RiskConfig = Field(default_factory=RiskConfig)

    model_config = ConfigDict(extra="forbid")


# ==================== Network ====================


class Agent(BaseModel):
    """Read-only view of one agent"""

    id: int = Field(..., ge=0)
    energy: float
    in_links: Dict[int, float]
    out_links: Dict[int, float]
    alive: bool = True


# ==================== Dynamics ====================


class AvalancheRecord(BaseModel):
    """One collapse cascade"""

    step: int = Field(..., ge=0)
    r: int = Field(..., ge=1)
    k_t: int = Field(..., ge=0)
    seed_agent: int = Field(..., ge=0)


class StepReport(BaseModel):
    """Outcome of one simulation step"""

    step: int
    avalanches: List[AvalancheRecord] = []
    u_t: float
    links_added: int = 0
    links_removed: int = 0
    # Insolvent agents without in-links whose deficit was written off
    discharged: int = 0


class TopologySnapshot(BaseModel):
    """Degree sequences and totals recorded during a run"""

    step: int
    agents: int
    links: int
    u_t: float
    in_degrees: List[int]
    out_degrees: List[int]

    def degrees(self, mode: Literal["in", "out", "total"] = "total") -> List[int]:
        if mode == "in":
            return list(self.in_degrees)
        if mode == "out":
            return list(self.out_degrees)
        return [k_in + k_out for k_in, k_out in zip(self.in_degrees, self.out_degrees)]


class SimulationOutput(BaseModel):
    """Everything a run produces"""

    u_t: np.ndarray
    returns: np.ndarray
    avalanches: List[AvalancheRecord]
    reports: List[StepReport]
    snapshots: List[TopologySnapshot] = []
    final_network: Any
    config_echo: DynamicsConfig
    seed: int

    model_config = ConfigDict(arbitrary_types_allowed=True)


# ==================== Metrics ====================


class DegreeBin(BaseModel):
    count: int = Field(..., ge=1)
    p: float = Field(..., gt=0.0, le=1.0)


class DegreeHistogram(BaseModel):
    """Empirical degree distribution P(k)"""

    mode: Literal["in", "out", "total"]
    entries: Dict[int, DegreeBin]

    def probabilities(self) -> Dict[int, float]:
        return {k: entry.p for k, entry in self.entries.items()}


class ProfileRow(BaseModel):
    k: int = Field(..., ge=1)
    value: float
    samples: int = Field(..., ge=1)


class DegreeProfile(BaseModel):
    """Per-degree table of D(k), C(k) or l(k)"""

    name: Literal["D", "C", "l"]
    rows: List[ProfileRow]
    flagged: List[int] = []

    def values(self) -> Dict[int, float]:
        return {row.k: row.value for row in self.rows}


class TrendFit(BaseModel):
    """Least-squares line through a profile or a scaling relation"""

    slope: float
    intercept: float
    stderr: float
    p_value: float
    r2: float
    n: int


# ==================== Tails ====================


class CcdfPoints(BaseModel):
    """Empirical P(X >= s) at the distinct sample values"""

    s: List[float]
    fraction: List[float]

    @model_validator(mode="after")
    def check_shape(self) -> "CcdfPoints":
        if len(self.s) != len(self.fraction):
            raise ValueError("s and fraction must have equal length")
        return self


class TailFit(BaseModel):
    """Tail exponent estimate for a CCDF P(X >= s) ~ s^-m"""

    m_hat: float = Field(..., gt=0.0)
    s_min: float
    stderr: float = Field(..., ge=0.0)
    n_tail: int = Field(..., ge=10)
    method: Literal["regression", "hill"]
    note: Optional[str] = None


class BoundsCheck(BaseModel):
    """Placement of an exponent against a closed band"""

    classification: Literal["within", "below", "above"]
    note: str


# ==================== Renormalization ====================


class BoxCovering(BaseModel):
    """Partition of the giant component into boxes of diameter < l_b"""

    l_b: int = Field(..., ge=1)
    assignment: Dict[int, int]
    n_boxes: int = Field(..., ge=1)


class FractalFit(BaseModel):
    """Box-counting regressions over several scales"""

    scales: List[int]
    n_p: List[float]
    n_p_std: List[float]
    k_p: List[float]
    k_max: int
    d_b: Optional[float] = None
    d_k: Optional[float] = None
    r2_b: Optional[float] = None
    r2_k: Optional[float] = None
    degenerate: bool = False
    note: Optional[str] = None


# ==================== Risk ====================


class VaRQuery(BaseModel):
    """Confidence level, horizon and tail cutoff of a VaR question"""

    alpha: float = Field(..., gt=0.0, lt=1.0)
    horizon: int = Field(1, ge=1)
    x_min: float = Field(..., gt=0.0)


class VaREnvelope(BaseModel):
    """VaR at the two bounding exponents and at a fitted one"""

    var_lower: float
    var_upper: float
    var_point: Optional[float] = None
    m_hat: Optional[float] = None
    notes: List[str] = []


# ==================== Ingestion ====================


class ExternalSeries(BaseModel):
    """Dated positive observations of an external index"""

    label: str
    dates: List[str]
    values: List[float]
