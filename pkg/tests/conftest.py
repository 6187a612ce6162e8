"""Shared fixtures and helpers for the test suite."""

from importlib.resources import files
from pathlib import Path

import numpy as np
import pytest

from harvestcomp import SpatialGrid
from harvestcomp.config import (
    apply_overrides,
    build_environment,
    load_config,
    simulation_config,
)

CONFIG_DIR = Path(str(files("harvestcomp") / "configs"))


def bundled_config(name: str) -> Path:
    return CONFIG_DIR / f"{name}.cfg"


def load_example(name: str, **overrides):
    """Bundled config -> (cfg, grid, env, sim) with optional key overrides."""
    cfg = load_config(bundled_config(name))
    if overrides:
        cfg = apply_overrides(cfg, {k: str(v) for k, v in overrides.items()})
    grid, env = build_environment(cfg)
    return cfg, grid, env, simulation_config(cfg)


def random_positive_profile(rng, grid: SpatialGrid, low: float = 0.3) -> np.ndarray:
    """Smooth strictly positive field: offset plus a few random harmonics."""
    x = grid.centers
    f = np.full(grid.n_cells, low + rng.uniform(0.5, 2.0))
    for k in range(1, 4):
        f += rng.uniform(-0.3, 0.3) * np.cos(k * np.pi * x / grid.length + rng.uniform(0, 7))
    return np.maximum(f, low)


def random_grid(rng, n_min: int = 8, n_max: int = 48) -> SpatialGrid:
    return SpatialGrid(
        length=float(rng.uniform(1.0, 6.0)), n_cells=int(rng.integers(n_min, n_max))
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
