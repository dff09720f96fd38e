"""Solver configuration shared by the envelope, funnel and oracle paths."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np


@dataclass(frozen=True)
class SolverConfig:
    restarts: int = 64
    max_iters: int = 2000
    step_tolerance: float = 1e-10
    constraint_tolerance: float = 1e-6
    seed: int = 0
    grid_res: int = 200

    def __post_init__(self):
        for name, value in asdict(self).items():
            if name == "seed":
                if value < 0:
                    raise ValueError("seed must be non-negative")
            elif not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")

    def rng(self, *stream) -> np.random.Generator:
        """Independent generator for ``(seed, *stream)``; streams never overlap."""
        return np.random.default_rng([self.seed, *stream])

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


DEFAULT_CONFIG = SolverConfig()
