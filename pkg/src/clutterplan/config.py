"""Planner configuration records.  All fields are plain values so a config
can be dumped next to results and loaded back."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .grasp import GripperModel
from .physics import SimConfig
from .sampling import SamplerConfig


@dataclass(frozen=True)
class RetrievalConfig:
    gamma: float = 0.8
    d_tree: int = 7
    d_sim: int = 3
    rc_star: float = 0.9      # a tree node counts as graspable at this score
    rg_star: float = 0.8      # grasp right away at the root at this score
    rgp_star: float = 1.0     # rollouts stop once this score is reached
    delta: float = 0.2
    binary_reward: bool = False
    max_expansions: int | None = 150
    t_max: float | None = None
    max_episode_actions: int = 16
    variant: str = "uct_top_m"
    c: float = 2.0
    m: int = 3
    early_stop: bool = True
    greedy_fast_threshold: float = 0.7
    seed: int = 0
    sim: SimConfig = field(default_factory=SimConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    gripper: GripperModel = field(default_factory=GripperModel)

    def __post_init__(self):
        for name in ("gamma", "rc_star", "rg_star", "rgp_star"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.max_expansions is not None and self.max_expansions < 0:
            raise ValueError("max_expansions must be >= 0")
        if self.t_max is not None and self.t_max <= 0:
            raise ValueError("t_max must be > 0")
        if self.d_tree < 1 or self.d_sim < 0 or self.max_episode_actions < 1:
            raise ValueError("depths and episode length must be positive")

    @property
    def eta(self) -> float:
        """Largest reward a single state can earn."""
        return 1.0 if self.binary_reward else 1.0 + self.delta

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class PmbsConfig(RetrievalConfig):
    n_envs: int = 4
    workers: int = 1
    pool_kind: str = "thread"
    variant: str = "ucb_virtual"
    c: float = 0.3
    t_max: float | None = 60.0
    max_expansions: int | None = None

    def __post_init__(self):
        super().__post_init__()
        if self.n_envs < 1:
            raise ValueError("n_envs must be >= 1")


@dataclass(frozen=True)
class RempRewardConfig:
    r_o: float = 0.7
    push_only_factor: float = 1.1
    beta: float = 0.5
    gamma: float = 0.9
    pick_fixed_cost: float = 0.10
    push_fixed_cost: float = 0.20

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0 or not 0.0 < self.gamma <= 1.0:
            raise ValueError("beta and gamma must lie in (0, 1]")


@dataclass(frozen=True)
class PmmrConfig:
    step_budget_s: float = 40.0
    top_k: int = 100
    c: float = 1.5
    n_envs: int = 4
    workers: int = 1
    max_iterations: int | None = None
    max_actions: int = 20
    rrt_time_tree: float = 0.2
    rrt_time_final: float = 2.0
    rrt_iterations: int | None = None   # when set, in-tree RRT stops on this count, not the clock
    theta_coeffs: tuple[float, float, float] = (-0.106, 0.231, -0.013)
    theta_floor: float = 0.2
    stop_at_lower_bound: bool = True
    seed: int = 0
    reward: RempRewardConfig = field(default_factory=RempRewardConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)

    def __post_init__(self):
        if self.step_budget_s <= 0 or self.top_k < 1 or self.n_envs < 1:
            raise ValueError("budget, top_k and n_envs must be positive")
        if self.rrt_iterations is not None and self.rrt_iterations < 1:
            raise ValueError("rrt_iterations must be >= 1")

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


def to_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)


def from_dict(cls, data: dict | None):
    """Build ``cls`` from a (possibly partial) nested dict; unknown keys are errors."""
    data = dict(data or {})
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    kw = {}
    nested = {"sim": SimConfig, "sampler": SamplerConfig, "gripper": GripperModel, "reward": RempRewardConfig}
    for k, v in data.items():
        if k in nested and isinstance(v, dict):
            v = from_dict(nested[k], v)
        elif k == "theta_coeffs":
            v = tuple(v)
        kw[k] = v
    return cls(**kw)
