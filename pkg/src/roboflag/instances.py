"""Problem instances and their seeded random generator."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from .dynamics import AttackerTrack, DefenderState, SampleGrid, ValidationError
from .intercept import FieldConfig, InterceptTable

GENERATOR_ID = "numpy.random.PCG64 via SeedSequence(entropy=seed)"

Heading = Literal["toward_origin", "uniform_random"]


@dataclass(frozen=True)
class GenParams:
    n: int = 3
    m: int = 5
    r_a_range: tuple[float, float] = (7.5, 15.0)
    v_a_range: tuple[float, float] = (1.0, 1.0)
    r_d_range: tuple[float, float] = (math.sqrt(2.0) * 2.0, 2.0 * math.sqrt(2.0) * 2.0)
    v_d_range: tuple[float, float] = (0.5, 1.0)
    R_dz: float = 2.0
    attacker_heading: Heading = "toward_origin"
    seed: int = 0
    epsilon: float = 0.01
    sample_time: float = 0.1

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            raise ValidationError("team sizes must be nonnegative")
        for name in ("r_a_range", "v_a_range", "r_d_range", "v_d_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ValidationError(f"{name} must satisfy 0 < min <= max, got {(lo, hi)}")
        if not self.R_dz > 0:
            raise ValidationError("R_dz must be positive")
        if not self.r_a_range[0] > self.R_dz:
            raise ValidationError("attackers must start outside the Defense Zone")
        if self.attacker_heading not in ("toward_origin", "uniform_random"):
            raise ValidationError(f"unknown heading {self.attacker_heading!r}")
        if self.epsilon < 0:
            raise ValidationError("epsilon must be nonnegative")


@dataclass
class InstanceSpec:
    field: FieldConfig
    defenders: list[DefenderState]
    attackers: list[AttackerTrack]
    grid: SampleGrid = field(default_factory=SampleGrid)
    epsilon: float = 0.01
    source: dict | None = None

    def __post_init__(self):
        if any(a.active != 1 for a in self.attackers):
            raise ValidationError("instance attackers must start active")
        if self.epsilon < 0:
            raise ValidationError("epsilon must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.defenders)

    @property
    def m(self) -> int:
        return len(self.attackers)

    def table(self) -> InterceptTable:
        return InterceptTable(self.defenders, self.attackers, self.field, self.grid)

    def to_dict(self) -> dict:
        out = {
            "defense_zone_radius": self.field.R_dz,
            "epsilon": self.epsilon,
            "sample_time": self.grid.T,
            "defenders": [{"x": d.x, "y": d.y, "vx": d.vx, "vy": d.vy} for d in self.defenders],
            "attackers": [{"p": a.p, "q": a.q, "vp": a.vp, "vq": a.vq} for a in self.attackers],
        }
        if self.source is not None:
            out["source"] = self.source
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceSpec":
        try:
            return cls(
                field=FieldConfig(R_dz=float(data["defense_zone_radius"])),
                defenders=[DefenderState(float(d["x"]), float(d["y"]), float(d["vx"]), float(d["vy"]))
                           for d in data["defenders"]],
                attackers=[AttackerTrack(float(a["p"]), float(a["q"]), float(a["vp"]), float(a["vq"]))
                           for a in data["attackers"]],
                grid=SampleGrid(T=float(data["sample_time"])),
                epsilon=float(data["epsilon"]),
                source=data.get("source"),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed instance: {exc!r}") from exc

    def with_epsilon(self, epsilon: float) -> "InstanceSpec":
        return InstanceSpec(self.field, self.defenders, self.attackers, self.grid, epsilon, self.source)


def _angle(rng: np.random.Generator) -> float:
    # uniform on (0, 2*pi]
    return 2.0 * math.pi - rng.uniform(0.0, 2.0 * math.pi)


def make_rng(seed: int | tuple[int, ...]) -> np.random.Generator:
    entropy = list(seed) if isinstance(seed, tuple) else seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def generate(params: GenParams, seed: int | tuple[int, ...] | None = None) -> InstanceSpec:
    """Random instance: attackers on an outer annulus, defenders on an inner one.

    Draw order is fixed (all attackers, then all defenders; per vehicle:
    radius, position angle, speed, heading angle) so an instance is a pure
    function of ``(params, seed)``.
    """
    seed = params.seed if seed is None else seed
    rng = make_rng(seed)
    attackers = []
    for _ in range(params.m):
        r = rng.uniform(*params.r_a_range)
        theta = _angle(rng)
        v = rng.uniform(*params.v_a_range)
        phi = _angle(rng)
        if params.attacker_heading == "toward_origin":
            phi = theta + math.pi
        attackers.append(AttackerTrack(r * math.cos(theta), r * math.sin(theta),
                                       v * math.cos(phi), v * math.sin(phi)))
    defenders = []
    for _ in range(params.n):
        r = rng.uniform(*params.r_d_range)
        theta = _angle(rng)
        v = rng.uniform(*params.v_d_range)
        phi = _angle(rng)
        defenders.append(DefenderState(r * math.cos(theta), r * math.sin(theta),
                                       v * math.cos(phi), v * math.sin(phi)))
    source = {"generator": GENERATOR_ID, "seed": list(seed) if isinstance(seed, tuple) else seed,
              "params": _params_echo(params)}
    return InstanceSpec(FieldConfig(R_dz=params.R_dz), defenders, attackers,
                        SampleGrid(T=params.sample_time), params.epsilon, source)


def _params_echo(params: GenParams) -> dict:
    d = asdict(params)
    d.pop("seed")
    for k, v in d.items():
        if isinstance(v, tuple):
            d[k] = list(v)
    return d
