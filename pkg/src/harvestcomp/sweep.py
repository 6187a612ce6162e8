"""Parameter sweeps over harvesting rates and the coexistence switch point.

Every cell re-solves the system from the same initial condition, so cells
are independent: they run on a bounded process pool, are gathered by index,
and the assembled result does not depend on worker count or scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .analysis import Outcome, OutcomeRecord, classify
from .dynamics import HarvestRates, SimulationConfig, run_to_time
from .errors import HarvestCompError
from .grid import Field
from .profiles import EnvironmentProfile

#: Constant initial density used for every species unless overridden.
DEFAULT_INITIAL_DENSITY = 2.1


@dataclass(frozen=True)
class CellFailure:
    """Marker stored in place of a record when a sweep cell fails."""

    alpha: float
    beta: float
    message: str


@dataclass(frozen=True)
class SwitchPoint:
    beta: float
    alpha_double_star: float
    bracket_width: float


@dataclass(frozen=True)
class SweepGrid:
    alphas: np.ndarray
    betas: np.ndarray
    records: list  # records[i][j] is the cell at (alphas[j], betas[i])

    def failures(self) -> list[CellFailure]:
        return [c for row in self.records for c in row if isinstance(c, CellFailure)]


def _default_initial(env: EnvironmentProfile) -> Field:
    return np.full(env.grid.n_cells, DEFAULT_INITIAL_DENSITY)


def simulate_cell(
    alpha: float,
    beta: float,
    env: EnvironmentProfile,
    cfg: SimulationConfig,
    u0: Field | None = None,
    v0: Field | None = None,
) -> OutcomeRecord:
    """One full simulation plus classification at a single (alpha, beta)."""
    u0 = _default_initial(env) if u0 is None else u0
    v0 = _default_initial(env) if v0 is None else v0
    rates = HarvestRates(alpha=alpha, beta=beta)
    final = run_to_time(u0, v0, env, rates, cfg)
    return classify(final, env, rates, cfg)


def _cell_task(pair, env, cfg, u0, v0):
    alpha, beta = pair
    try:
        return simulate_cell(alpha, beta, env, cfg, u0, v0)
    except HarvestCompError as exc:
        return CellFailure(alpha=alpha, beta=beta, message=str(exc))


def _run_cells(pairs, env, cfg, u0, v0, jobs):
    task = partial(_cell_task, env=env, cfg=cfg, u0=u0, v0=v0)
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(pairs) <= 1:
        return [task(p) for p in pairs]
    chunk = max(1, len(pairs) // (8 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(task, pairs, chunksize=chunk))


def sweep_alpha(
    beta: float,
    alpha_grid,
    env: EnvironmentProfile,
    cfg: SimulationConfig,
    jobs: int | None = None,
    u0: Field | None = None,
    v0: Field | None = None,
) -> list:
    """Independent runs along one row of harvesting rates."""
    alphas = np.asarray(alpha_grid, dtype=float)
    pairs = [(float(a), float(beta)) for a in alphas]
    return _run_cells(pairs, env, cfg, u0, v0, jobs)


def sweep_grid(
    alpha_grid,
    beta_grid,
    env: EnvironmentProfile,
    cfg: SimulationConfig,
    jobs: int | None = None,
    u0: Field | None = None,
    v0: Field | None = None,
) -> SweepGrid:
    """Full (alpha, beta) outcome matrix; rows indexed by beta."""
    alphas = np.asarray(alpha_grid, dtype=float)
    betas = np.asarray(beta_grid, dtype=float)
    pairs = [(float(a), float(b)) for b in betas for a in alphas]
    flat = _run_cells(pairs, env, cfg, u0, v0, jobs)
    n = len(alphas)
    records = [flat[i * n : (i + 1) * n] for i in range(len(betas))]
    return SweepGrid(alphas=alphas, betas=betas, records=records)


def _u_excluded(record) -> bool:
    return isinstance(record, OutcomeRecord) and record.outcome in (
        Outcome.ONLY_V,
        Outcome.EXTINCTION,
    )


def find_switch(
    beta: float,
    env: EnvironmentProfile,
    cfg: SimulationConfig,
    tol: float = 1e-3,
    eps: float | None = None,
    u0: Field | None = None,
    v0: Field | None = None,
) -> SwitchPoint | None:
    """Bisect for the largest harvesting effort that still lets the first
    species survive, between alpha = beta + eps and alpha = 1 - eps.

    Returns None when the outcome does not differ across that bracket
    (no switch to report).
    """
    if eps is None:
        eps = tol
    lo = beta + eps
    hi = 1.0 - eps
    if lo >= hi:
        return None
    cell = lambda a: simulate_cell(a, beta, env, cfg, u0, v0)
    lo_excl = _u_excluded(cell(lo))
    hi_excl = _u_excluded(cell(hi))
    if lo_excl == hi_excl:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _u_excluded(cell(mid)) == hi_excl:
            hi = mid
        else:
            lo = mid
    return SwitchPoint(beta=beta, alpha_double_star=0.5 * (lo + hi), bracket_width=hi - lo)
