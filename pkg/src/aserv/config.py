"""Run configuration: generator settings plus grid, filter, storage, and
HTTP options, loadable from a YAML file (path from ASERV_CONFIG or CLI).
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .datagen import GenConfig
from .epgrid import grid_number

ENV_VAR = "ASERV_CONFIG"


@dataclass(frozen=True)
class Config:
    units: int = 2
    objects_per_unit: int = 10_000
    cycles: int = 200
    side: float = 1.0
    ct: float = 1.0
    p: float = 0.5
    dmin: int = 1
    dmax: int = 5
    m: int = 21
    seed: int = 0

    alpha: float = 0.8
    r_min: float | None = None
    r_min_area_fraction: float = 0.03
    c: int = 1
    partitions: int | None = None
    epi_enabled: bool = True
    max_retries: int = 2

    backend: str = "memory"
    resp_host: str = "127.0.0.1"
    resp_port: int = 6379

    http_host: str = "127.0.0.1"
    http_port: int = 8787
    rate: float = 0.0
    position_file: str | None = None

    def __post_init__(self) -> None:
        self.gen_config()
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.r_min is not None and self.r_min <= 0:
            raise ValueError("r_min must be > 0")
        if not 0.0 < self.r_min_area_fraction < 1.0:
            raise ValueError("r_min_area_fraction must be in (0, 1)")
        if not 1 <= self.c <= self.m:
            raise ValueError(f"need 1 <= c <= m, got c={self.c} m={self.m}")
        if self.partitions is not None and self.partitions < 1:
            raise ValueError("partitions override must be >= 1")
        if self.backend not in ("memory", "resp"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.rate < 0:
            raise ValueError("rate must be >= 0 (0 = unpaced)")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def gen_config(self) -> GenConfig:
        return GenConfig(units=self.units,
                         objects_per_unit=self.objects_per_unit,
                         cycles=self.cycles, side=self.side, ct=self.ct,
                         p=self.p, dmin=self.dmin, dmax=self.dmax,
                         m=self.m, seed=self.seed)

    def resolved_r_min(self) -> float:
        if self.r_min is not None:
            return self.r_min
        return math.sqrt(self.r_min_area_fraction * self.side * self.side / math.pi)

    def required_partitions(self) -> int:
        return grid_number(self.alpha, self.resolved_r_min(), self.side * self.side)

    def warnings(self) -> list[str]:
        """Consistency notes surfaced at load time, not hard errors."""
        out = []
        if self.partitions is not None:
            needed = self.required_partitions()
            if self.partitions < needed:
                out.append(
                    f"partitions={self.partitions} is below the {needed} cells "
                    f"needed for query accuracy {self.alpha} at r_min="
                    f"{self.resolved_r_min():.4g}; probing accuracy may drop")
        return out


def from_dict(data: dict) -> Config:
    known = {f.name for f in dataclasses.fields(Config)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    return Config(**data)


def load_config(path: str | Path | None = None) -> Config:
    """Load from the given path, else $ASERV_CONFIG, else defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return Config()
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ValueError(f"config root must be a mapping, got {type(data).__name__}")
    return from_dict(data)


def dump_config(config: Config) -> str:
    return yaml.safe_dump(dataclasses.asdict(config), sort_keys=False)
