# Copyright 2026 The semhyper authors
# Licensed under the MIT license

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
from typing_extensions import Self

__all__ = [
    "AcceptRule",
    "Action",
    "BaselineResult",
    "BetaTerms",
    "ChannelSet",
    "ConceptSet",
    "ConfigError",
    "DomainError",
    "ExperimentConfig",
    "FloatArray",
    "FollowerSolution",
    "GenerateSpec",
    "HseReport",
    "HypergameState",
    "InfeasibleOffloadError",
    "LeaderSolution",
    "NumericError",
    "Options",
    "OracleRefused",
    "OracleResult",
    "Outcome",
    "PairRecord",
    "PerceptionMode",
    "PerceptionState",
    "Player",
    "PlayResult",
    "ProjectConfig",
    "Real",
    "Role",
    "RoundRecord",
    "RxStrategy",
    "Scenario",
    "SchemaError",
    "Scheme",
    "SeedResult",
    "SemhyperError",
    "SimplexError",
    "Snapshot",
    "SolverError",
    "SolverSettings",
    "TaskSpec",
    "TxStrategy",
    "UpdateMode",
    "UtilityReport",
]

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]
BoolArray = npt.NDArray[np.bool_]
Real = Union[float, FloatArray]
Pair = Tuple["Player", "Player"]


class SemhyperError(Exception):
    """Base class for every error raised by semhyper."""


class ConfigError(SemhyperError, ValueError):
    """Invalid scenario, experiment configuration, or configuration file."""


class NumericError(SemhyperError, ArithmeticError):
    """Non-finite input to a closed-form formula."""


class DomainError(SemhyperError, ValueError):
    """Argument outside the domain of the requested formula."""


class InfeasibleOffloadError(DomainError):
    """Offload mass assigned to a receiver whose cloud link has zero rate."""


class SimplexError(DomainError):
    """Partial action masses that do not fit on the probability simplex."""


class SolverError(SemhyperError, RuntimeError):
    """A solver produced no usable strategy."""


class OracleRefused(SemhyperError):
    """Instance too large for exhaustive search."""


class SchemaError(SemhyperError, ValueError):
    """Trace rows that do not match the trace schema."""


class Action(IntEnum):
    """
    Receiver action for one incoming link.
    """

    accept = 0
    """Use the decoded concepts as received."""

    local = 1
    """Reason about missing concepts on the receiver."""

    cloud = 2
    """Offload reasoning to the shared cloud server."""

    drop = 3
    """Discard the link for this task."""


class Role(Enum):
    tx = "tx"
    rx = "rx"


class AcceptRule(Enum):
    """
    Direction of the squared-error threshold used for the accept action.
    """

    tolerance = "tolerance"
    """Accept when the squared error is at most the threshold (default)."""

    literal = "literal"
    """Accept when the squared error is at least the threshold."""


class UpdateMode(Enum):
    triggered = "triggered"
    always = "always"


class PerceptionMode(Enum):
    """
    How perceptions evolve inside the round loop.
    """

    learned = "learned"
    """Swap learning on observed outcomes (the hypergame)."""

    fixed = "fixed"
    """Perceptions never change (misperception equilibrium)."""

    truth = "truth"
    """Perceptions pinned to ground truth before every phase."""


class Scheme(Enum):
    hypergame = "hypergame"
    naive = "naive"
    complete = "complete"
    classical = "classical"


class Player(NamedTuple):
    role: Role
    index: int

    def __str__(self) -> str:
        return f"{self.role.value}{self.index}"


@dataclass(frozen=True)
class SolverSettings:
    bisection_tol: float = 1e-9
    fixedpoint_tol: float = 1e-8
    fd_step: float = 1e-5
    damping: float = 0.5
    max_iters: int = 200
    dual_step: float = 0.1
    split_grid: float = 0.01


def _readonly(values: Any) -> FloatArray:
    array = np.array(values, dtype=np.float64)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class ConceptSet:
    """
    Semantic concepts of every transmitter, indexed ``[k, r]``.
    """

    means: FloatArray
    variances: FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", _readonly(self.means))
        object.__setattr__(self, "variances", _readonly(self.variances))


@dataclass(frozen=True, eq=False)
class TaskSpec:
    """
    Receiver tasks. Per-concept arrays are indexed ``[j, k, r]``.
    """

    relevance: FloatArray
    compute_cost: FloatArray
    local_capacity: FloatArray
    cc_share: FloatArray

    def __post_init__(self) -> None:
        for name in ("relevance", "compute_cost", "local_capacity", "cc_share"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """
    Link parameters. Transmitter links are indexed ``[k, j]``, cloud links ``[j]``.
    """

    noise_variance: FloatArray
    decode_reliability: FloatArray
    channel_gain_std: FloatArray
    power: FloatArray

    def __post_init__(self) -> None:
        for name in (
            "noise_variance",
            "decode_reliability",
            "channel_gain_std",
            "power",
        ):
            object.__setattr__(self, name, _readonly(getattr(self, name)))


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    A complete problem instance. Immutable; arrays are read-only.
    """

    num_tx: int
    num_rx: int
    concepts_per_tx: int
    bit_alphabet_max: int
    bit_budget: float
    bandwidth: float
    noise_density: float
    alpha1: float
    alpha2: float
    tau_max: float
    drop_penalty: float
    reasoning_failure_penalty: float
    rate_distortion_scale: float
    accept_threshold: float
    cc_capacity: float
    learning_rate: float
    rng_seed: int
    concepts: ConceptSet
    tasks: TaskSpec
    channels: ChannelSet
    kappa_local: float = 1.0
    kappa_cc: float = 1.0
    accept_rule: AcceptRule = AcceptRule.tolerance
    outcome_samples: int = 64
    update_mode: UpdateMode = UpdateMode.triggered
    initial_relevance: float = 0.5
    solver: SolverSettings = SolverSettings()

    @property
    def players(self) -> List[Player]:
        """Leaders first, then followers, each by ascending index."""
        return [Player(Role.tx, k) for k in range(self.num_tx)] + [
            Player(Role.rx, j) for j in range(self.num_rx)
        ]

    @property
    def bit_values(self) -> FloatArray:
        return np.arange(self.bit_alphabet_max + 1, dtype=np.float64)


@dataclass
class TxStrategy:
    """
    Mixed bit allocations, ``probs[k, r, a]`` over bit values ``0..A_max``.
    """

    probs: FloatArray

    @property
    def expected_bits(self) -> FloatArray:
        values = np.arange(self.probs.shape[-1], dtype=np.float64)
        result: FloatArray = self.probs @ values
        return result

    def copy(self) -> Self:
        return type(self)(self.probs.copy())


@dataclass
class RxStrategy:
    """
    Link actions ``probs[j, k, action]`` and dual prices ``gamma[j, k, (local, cc)]``.
    """

    probs: FloatArray
    gamma: FloatArray

    def copy(self) -> Self:
        return type(self)(self.probs.copy(), self.gamma.copy())


@dataclass
class PerceptionState:
    """
    Every player's beliefs about every other player.

    The leading axis is always the perceiver. Leaders also hold a perceived copy of
    the full relevance tensor, ``relevance_by_tx[k, j, k', r]``.
    """

    tx_by_tx: FloatArray
    rx_by_tx: FloatArray
    relevance_by_tx: FloatArray
    tx_by_rx: FloatArray
    rx_by_rx: FloatArray

    def copy(self) -> Self:
        return type(self)(
            tx_by_tx=self.tx_by_tx.copy(),
            rx_by_tx=self.rx_by_tx.copy(),
            relevance_by_tx=self.relevance_by_tx.copy(),
            tx_by_rx=self.tx_by_rx.copy(),
            rx_by_rx=self.rx_by_rx.copy(),
        )


@dataclass(frozen=True)
class Outcome:
    """
    One realized round, visible to every player.
    """

    bits: IntArray
    decoded: BoolArray
    estimates: FloatArray
    errors: FloatArray
    actions: IntArray
    delays: FloatArray


@dataclass(frozen=True)
class BetaTerms:
    beta1: Real
    beta2: Real


@dataclass
class UtilityReport:
    tx_utilities: FloatArray
    rx_utilities: FloatArray
    qote: FloatArray
    surprise: FloatArray
    surprise_unbounded: BoolArray
    expected_bits: FloatArray
    recon_quality: FloatArray
    delays: FloatArray


@dataclass
class LeaderSolution:
    tx: int
    probs: FloatArray
    target_bits: FloatArray
    raw_bits: FloatArray
    lam: float
    stationarity_residual: float
    budget_slack: float
    feasible: bool = True

    @property
    def binding(self) -> bool:
        return self.lam > 0


@dataclass
class FollowerSolution:
    rx: int
    probs: FloatArray
    gamma: FloatArray
    accept: FloatArray
    bits: FloatArray
    other_cc_load: float
    fixed_point_iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    constraint_violations: Tuple[float, float] = (0.0, 0.0)
    reasoning: bool = True


@dataclass
class Snapshot:
    """
    Strategies and own-game objectives captured after one solve phase.
    """

    tx_probs: FloatArray
    rx_probs: FloatArray
    objectives: Dict[Player, float]


@dataclass
class HypergameState:
    tx: TxStrategy
    rx: RxStrategy
    perceptions: PerceptionState
    lambdas: FloatArray
    outcome_history: List[List[Outcome]] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    misperception_trace: Dict[Pair, List[float]] = field(default_factory=dict)
    iteration: int = 0
    strategy_change: float = float("inf")
    updates: int = 0


@dataclass
class HseReport:
    converged: bool
    strategy_change_norm: float
    gaps: Dict[str, float]
    misperception_final: Dict[str, float]
    vacuous: bool = False


@dataclass
class RoundRecord:
    round: int
    player: Player
    utility: float
    qote: Optional[float] = None
    bits: Optional[float] = None
    surprise: Optional[float] = None
    delay: Optional[float] = None
    misperception: Optional[float] = None


@dataclass
class PairRecord:
    """
    Misperception of one ordered pair after one round.
    """

    round: int
    perceived: Player
    perceiver: Player
    misperception: float


@dataclass
class PlayResult:
    state: HypergameState
    records: List[RoundRecord]
    converged: bool
    rounds: int
    pairs: List[PairRecord] = field(default_factory=list)


@dataclass
class BaselineResult:
    scheme: Scheme
    tx: TxStrategy
    rx: RxStrategy
    report: UtilityReport
    bits_total: float
    qote: FloatArray
    rounds: int = 0
    converged: bool = False
    records: List[RoundRecord] = field(default_factory=list)
    pairs: List[PairRecord] = field(default_factory=list)
    misperception: Dict[str, float] = field(default_factory=dict)
    hse: Optional[HseReport] = None
    lambdas: Optional[FloatArray] = None


@dataclass
class OracleResult:
    bits: FloatArray
    rx_probs: FloatArray
    tx_utility: float
    rx_utility: float
    feasible_points: int


@dataclass(frozen=True)
class GenerateSpec:
    seed: int
    shape: Tuple[int, int, int]
    decay: float


@dataclass
class ExperimentConfig:
    """
    One experiment invocation: where scenarios come from and what to run.
    """

    out: Path
    schemes: Sequence[Scheme]
    seeds: Sequence[int]
    rounds: int = 200
    scenario_path: Optional[Path] = None
    generate: Optional[GenerateSpec] = None
    sweeps: Sequence[str] = ()
    oracle: bool = False
    concurrency: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if (self.scenario_path is None) == (self.generate is None):
            raise ConfigError("exactly one of scenario path or generator is required")
        if self.rounds < 0:
            raise ConfigError(f"rounds must be non-negative, got {self.rounds}")
        unknown = sorted(set(self.sweeps) - {"perception", "relevance"})
        if unknown:
            raise ConfigError(f"unknown sweeps: {unknown!r}")


@dataclass
class SeedResult:
    """
    Everything one worker produced for one seed.
    """

    seed: int
    config_hash: str = ""
    trace: List[Dict[str, Any]] = field(default_factory=list)
    sweep: List[Dict[str, Any]] = field(default_factory=list)
    converged: Dict[str, bool] = field(default_factory=dict)
    hse: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    oracle: Optional[Dict[str, Any]] = None
    error: Optional[Exception] = None


@dataclass
class ProjectConfig:
    project_root: Optional[Path] = None
    pyproject_path: Optional[Path] = None
    schemes: List[Scheme] = field(default_factory=lambda: list(Scheme))
    rounds: int = 200
    seeds: List[int] = field(default_factory=lambda: [0])
    out: Path = Path("out")
    sweeps: List[str] = field(default_factory=list)


@dataclass
class Options:
    debug: bool = False
    quiet: bool = False
    concurrency: Optional[int] = None
    root: Optional[Path] = None
