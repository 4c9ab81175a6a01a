"""Grid-based best responses, Nash certificates, and the entanglement sweep.

All statements are relative to a finite strategy grid: a pair is reported
as a Nash equilibrium when no unilateral grid deviation improves that
player's payoff by more than eps.  The default grid is 65x33 over
[0, pi] x [0, pi/2], which contains the named strategies C = (0, 0),
D = (pi, 0) and Q = (0, pi/2) exactly (they sit on grid endpoints).

The entanglement sweep labels each gamma by the Nash status of (D, D) and
(Q, Q): classical while (D, D) holds, fully-quantum once (Q, Q) holds,
intermediate in between where neither does.  The two boundaries are then
bisected on those boolean indicators; with the default payoff table they
land at arcsin(sqrt(1/5)) and arcsin(sqrt(2/5)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .game import (
    DEFECT,
    GameConfig,
    QUANTUM,
    StrategyParams,
    grid_payoffs,
)

__all__ = [
    "StrategyGrid",
    "DEFAULT_GRID",
    "DEFAULT_EPS",
    "BestResponse",
    "NashCheck",
    "Equilibrium",
    "NashReport",
    "SweepSample",
    "ThresholdSweep",
    "ThresholdScanError",
    "REGION_CLASSICAL",
    "REGION_INTERMEDIATE",
    "REGION_QUANTUM",
    "best_response",
    "is_nash",
    "find_equilibria",
    "threshold_sweep",
    "sweep_csv_rows",
]

DEFAULT_EPS = 1e-6
_TIE_TOL = 1e-12
_GRID_SNAP_TOL = 1e-9
_CHUNK_ROWS = 256

REGION_CLASSICAL = "classical"
REGION_INTERMEDIATE = "intermediate"
REGION_QUANTUM = "fully-quantum"


@dataclass(frozen=True)
class StrategyGrid:
    """Inclusive (theta, phi) grid over [0, pi] x [0, pi/2]."""

    theta_steps: int = 65
    phi_steps: int = 33

    def __post_init__(self) -> None:
        if self.theta_steps < 3 or self.phi_steps < 3:
            raise ValueError(
                f"grid needs at least 3 steps per axis, got {self.theta_steps}x{self.phi_steps}"
            )

    @property
    def thetas(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.theta_steps)

    @property
    def phis(self) -> np.ndarray:
        return np.linspace(0.0, math.pi / 2, self.phi_steps)

    @property
    def size(self) -> int:
        return self.theta_steps * self.phi_steps

    def spec(self) -> str:
        return f"{self.theta_steps}x{self.phi_steps}"

    def index_of(self, params: StrategyParams) -> tuple[int, int]:
        """Grid indices of a strategy that lies on the grid."""
        ti = round(params.theta / math.pi * (self.theta_steps - 1))
        pi_ = round(params.phi / (math.pi / 2) * (self.phi_steps - 1))
        ti = min(max(ti, 0), self.theta_steps - 1)
        pi_ = min(max(pi_, 0), self.phi_steps - 1)
        if (
            abs(self.thetas[ti] - params.theta) > _GRID_SNAP_TOL
            or abs(self.phis[pi_] - params.phi) > _GRID_SNAP_TOL
        ):
            raise ValueError(f"{params} is not on the {self.spec()} grid")
        return ti, pi_

    def point(self, ti: int, pi_: int) -> StrategyParams:
        return StrategyParams(float(self.thetas[ti]), float(self.phis[pi_]))


DEFAULT_GRID = StrategyGrid()


@dataclass(frozen=True)
class BestResponse:
    strategy: StrategyParams
    payoff: float
    index: tuple[int, int]


@dataclass(frozen=True)
class NashCheck:
    nash: bool
    max_unilateral_gain: float
    gain_a: float
    gain_b: float


@dataclass(frozen=True)
class Equilibrium:
    s_a: StrategyParams
    s_b: StrategyParams
    payoff_a: float
    payoff_b: float
    max_unilateral_gain: float

    def to_dict(self) -> dict:
        return {
            "a": {"theta": self.s_a.theta, "phi": self.s_a.phi},
            "b": {"theta": self.s_b.theta, "phi": self.s_b.phi},
            "payoffs": [self.payoff_a, self.payoff_b],
            "max_unilateral_gain": self.max_unilateral_gain,
        }


@dataclass(frozen=True)
class NashReport:
    gamma: float
    grid: StrategyGrid
    eps: float
    equilibria: tuple[Equilibrium, ...]

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "grid": self.grid.spec(),
            "eps": self.eps,
            "certificate": "relative to the stated grid only",
            "equilibria": [e.to_dict() for e in self.equilibria],
        }


def _row_b(config: GameConfig) -> np.ndarray:
    """Player B's payoff row as seen from the mover's seat.

    The pipeline is seat-symmetric, so B moving against a fixed opponent
    sees outcome k with the probability A would see swap(k); scoring those
    probabilities with B's table entries reordered CD<->DC gives B's
    payoff without a second pipeline.
    """
    t = config.payoffs
    return np.array([t.cc[1], t.dc[1], t.cd[1], t.dd[1]], dtype=float)


def _deviation_surface(
    config: GameConfig, opponent: StrategyParams, grid: StrategyGrid, row: np.ndarray | None
) -> np.ndarray:
    return grid_payoffs(config, opponent, grid.thetas, grid.phis, table_row=row)


def _argmax_first(values: np.ndarray) -> tuple[int, float]:
    """Index of the first grid cell within a hair of the maximum.

    Ties (exact or within 1e-12) break toward the lowest row-major index,
    i.e. lowest theta index, then lowest phi index.
    """
    flat = values.ravel()
    best = float(flat.max())
    idx = int(np.argmax(flat >= best - _TIE_TOL))
    return idx, float(flat[idx])


def best_response(
    config: GameConfig, opponent: StrategyParams, grid: StrategyGrid = DEFAULT_GRID
) -> BestResponse:
    """Grid argmax of the moving player's payoff against a fixed opponent."""
    surface = _deviation_surface(config, opponent, grid, None)
    idx, payoff = _argmax_first(surface)
    ti, pi_ = divmod(idx, grid.phi_steps)
    return BestResponse(strategy=grid.point(ti, pi_), payoff=payoff, index=(ti, pi_))


def is_nash(
    config: GameConfig,
    pair: tuple[StrategyParams, StrategyParams],
    grid: StrategyGrid = DEFAULT_GRID,
    eps: float = DEFAULT_EPS,
) -> NashCheck:
    """Check a grid pair against all unilateral grid deviations."""
    s_a, s_b = pair
    ta, pa = grid.index_of(s_a)
    tb, pb = grid.index_of(s_b)

    surface_a = _deviation_surface(config, s_b, grid, None)
    gain_a = float(surface_a.max() - surface_a[ta, pa])
    surface_b = _deviation_surface(config, s_a, grid, _row_b(config))
    gain_b = float(surface_b.max() - surface_b[tb, pb])

    gain_a = max(gain_a, 0.0)
    gain_b = max(gain_b, 0.0)
    return NashCheck(
        nash=(gain_a <= eps and gain_b <= eps),
        max_unilateral_gain=max(gain_a, gain_b),
        gain_a=gain_a,
        gain_b=gain_b,
    )


def _pair_payoff_matrices(config: GameConfig, grid: StrategyGrid) -> tuple[np.ndarray, np.ndarray]:
    """Dense payoff bimatrix over all grid strategy pairs.

    Entry [i, j] is the payoff when row-major grid strategy i plays A and
    j plays B.  Assembled in row chunks to bound the transient complex
    amplitude arrays.
    """
    from .game import _E_CC, entangler_blocks, strategy_columns  # shared pipeline pieces

    forward, backward = entangler_blocks(config)
    psi = (forward @ _E_CC).reshape(2, 2)
    w = backward.reshape(4, 2, 2)
    cols = strategy_columns(config, grid.thetas, grid.phis)
    n = grid.size
    table_a = config.payoffs.row_a()
    table_b = config.payoffs.row_b()

    payoff_a = np.zeros((n, n))
    payoff_b = np.zeros((n, n))
    for start in range(0, n, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, n)
        for k in range(4):
            amp = np.zeros((stop - start, n), dtype=complex)
            for a in (0, 1):
                ya = cols[a][start:stop] @ w[k]
                for b in (0, 1):
                    coef = psi[a, b]
                    if coef == 0:
                        continue
                    amp += coef * (ya @ cols[b].T)
            prob = np.abs(amp) ** 2
            payoff_a[start:stop] += table_a[k] * prob
            payoff_b[start:stop] += table_b[k] * prob
    return payoff_a, payoff_b


def find_equilibria(
    config: GameConfig, grid: StrategyGrid = DEFAULT_GRID, eps: float = DEFAULT_EPS
) -> NashReport:
    """Exhaustive Nash scan over all grid strategy pairs.

    Deterministic: equilibria are listed in row-major order of
    (A index, B index).
    """
    payoff_a, payoff_b = _pair_payoff_matrices(config, grid)
    best_a = payoff_a.max(axis=0, keepdims=True)  # A deviates within a column
    best_b = payoff_b.max(axis=1, keepdims=True)  # B deviates within a row
    gain = np.maximum(best_a - payoff_a, best_b - payoff_b)
    hits = np.argwhere(gain <= eps)

    equilibria = []
    for i, j in hits:
        ta, pa = divmod(int(i), grid.phi_steps)
        tb, pb = divmod(int(j), grid.phi_steps)
        equilibria.append(
            Equilibrium(
                s_a=grid.point(ta, pa),
                s_b=grid.point(tb, pb),
                payoff_a=float(payoff_a[i, j]),
                payoff_b=float(payoff_b[i, j]),
                max_unilateral_gain=max(float(gain[i, j]), 0.0),
            )
        )
    return NashReport(gamma=config.gamma, grid=grid, eps=eps, equilibria=tuple(equilibria))


class ThresholdScanError(ValueError):
    """Region labels came out non-monotone (grid too coarse for the table)."""


@dataclass(frozen=True)
class SweepSample:
    gamma: float
    region: str
    dd_nash: bool
    qq_nash: bool


@dataclass(frozen=True)
class ThresholdSweep:
    samples: tuple[SweepSample, ...]
    gamma1: float | None
    gamma2: float | None
    grid: StrategyGrid
    bisection_tol: float
    eps: float

    def to_dict(self) -> dict:
        return {
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "method": "grid Nash indicators for (D,D) and (Q,Q), bisected",
            "grid": self.grid.spec(),
            "bisection_tol": self.bisection_tol,
            "eps": self.eps,
            "samples": [
                {
                    "gamma": s.gamma,
                    "region": s.region,
                    "dd_nash": s.dd_nash,
                    "qq_nash": s.qq_nash,
                }
                for s in self.samples
            ],
        }


def _region(dd: bool, qq: bool) -> str:
    if dd and qq:
        raise ThresholdScanError("(D,D) and (Q,Q) cannot both be Nash for this table")
    if dd:
        return REGION_CLASSICAL
    if qq:
        return REGION_QUANTUM
    return REGION_INTERMEDIATE


def _bisect_flip(
    indicator: Callable[[float], bool], low: float, high: float, tol: float
) -> float:
    """Boundary of a boolean indicator that flips exactly once in [low, high]."""
    low_value = indicator(low)
    while high - low > tol:
        mid = 0.5 * (low + high)
        if indicator(mid) == low_value:
            low = mid
        else:
            high = mid
    return 0.5 * (low + high)


def threshold_sweep(
    config: GameConfig,
    gamma_min: float = 0.0,
    gamma_max: float = math.pi / 2,
    samples: int = 33,
    grid: StrategyGrid = DEFAULT_GRID,
    bisection_tol: float = 1e-4,
    eps: float = DEFAULT_EPS,
) -> ThresholdSweep:
    """Label a gamma range by region and bisect the two region boundaries.

    gamma1 is the end of the classical region ((D, D) stops being Nash),
    gamma2 the start of the fully-quantum one ((Q, Q) becomes Nash).  A
    boundary is only estimated when the sampled range brackets it;
    otherwise it is reported as None.
    """
    if samples < 2:
        raise ValueError(f"need at least 2 sweep samples, got {samples}")
    if gamma_min >= gamma_max:
        raise ValueError(f"empty sweep range [{gamma_min}, {gamma_max}]")
    replace(config, gamma=gamma_min)  # range-validates both endpoints
    replace(config, gamma=gamma_max)

    def dd_nash(gamma: float) -> bool:
        cfg = replace(config, gamma=gamma)
        return is_nash(cfg, (DEFECT, DEFECT), grid, eps).nash

    def qq_nash(gamma: float) -> bool:
        cfg = replace(config, gamma=gamma)
        return is_nash(cfg, (QUANTUM, QUANTUM), grid, eps).nash

    gammas = np.linspace(gamma_min, gamma_max, samples)
    rows = []
    for gamma in gammas:
        dd = dd_nash(float(gamma))
        qq = qq_nash(float(gamma))
        rows.append(SweepSample(float(gamma), _region(dd, qq), dd, qq))

    _check_monotone(rows)

    gamma1 = _bracketed_boundary(rows, gammas, lambda s: s.dd_nash, dd_nash, bisection_tol)
    gamma2 = _bracketed_boundary(rows, gammas, lambda s: not s.qq_nash, qq_nash, bisection_tol)
    return ThresholdSweep(
        samples=tuple(rows),
        gamma1=gamma1,
        gamma2=gamma2,
        grid=grid,
        bisection_tol=bisection_tol,
        eps=eps,
    )


def _check_monotone(rows: list[SweepSample]) -> None:
    dd_flags = [s.dd_nash for s in rows]
    qq_flags = [s.qq_nash for s in rows]
    if any(b and not a for a, b in zip(dd_flags, dd_flags[1:])):
        raise ThresholdScanError(f"(D,D) Nash indicator not monotone: {dd_flags}")
    if any(a and not b for a, b in zip(qq_flags, qq_flags[1:])):
        raise ThresholdScanError(f"(Q,Q) Nash indicator not monotone: {qq_flags}")


def _bracketed_boundary(
    rows: list[SweepSample],
    gammas: np.ndarray,
    still_before: Callable[[SweepSample], bool],
    indicator: Callable[[float], bool],
    tol: float,
) -> float | None:
    flags = [still_before(s) for s in rows]
    if all(flags) or not flags[0]:
        return None
    last_true = max(i for i, f in enumerate(flags) if f)
    if last_true + 1 >= len(flags):
        return None
    return _bisect_flip(indicator, float(gammas[last_true]), float(gammas[last_true + 1]), tol)


def sweep_csv_rows(sweep: ThresholdSweep) -> list[tuple[str, str, str, str]]:
    """CSV rows in the documented column order: gamma, region, dd_nash, qq_nash."""
    return [
        (repr(s.gamma), s.region, str(s.dd_nash).lower(), str(s.qq_nash).lower())
        for s in sweep.samples
    ]
