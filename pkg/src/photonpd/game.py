"""The quantum prisoner's dilemma round: entangle, act, disentangle, measure.

A round is the pipeline J -> (U_A x U_B) -> J_dagger -> computational-basis
measurement, starting from |CC>.  Strategies are the two-parameter family
U(theta, phi) with theta in [0, pi], phi in [0, pi/2]; the entangling gate
J carries gamma in [0, pi/2] from a product initial state (gamma = 0) to a
maximally entangled one (gamma = pi/2).

Two interchangeable backends:

- "qubit": 4-dimensional two-qubit algebra with the closed-form entangler
  cos(gamma/2) I + i sin(gamma/2) (Dhat x Dhat).
- "optical": the full 4-mode 2-photon Fock pipeline using the assembled
  optical circuits (entangler with solved internal phases, one strategy
  interferometer per player, element-wise inverted entangler) and dual-rail
  readout, with leakage reported.

Vectorized grid evaluation (payoff_landscape and the helpers used by the
equilibrium scanner) goes through the exact dual-rail blocks of the same
assembled circuits, so both backends share one code path; block products
equal full-sector products because every element preserves the dual-rail
subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .elements import (
    ANGLE_RANGE_TOL,
    EntanglerPhases,
    circuit_unitary,
    cos_half,
    entangler_circuit,
    inverse_circuit,
    sin_half,
    solve_entangler_phases,
    strategy_circuit,
    strategy_target,
)
from .fock import GAME_SECTOR, Sector, apply, basis_state, dual_rail_block, project_dual_rail

__all__ = [
    "OUTCOMES",
    "BACKENDS",
    "StrategyParams",
    "COOPERATE",
    "DEFECT",
    "QUANTUM",
    "strategy_from_name",
    "PayoffTable",
    "DEFAULT_PAYOFFS",
    "GameConfig",
    "OutcomeDistribution",
    "GameResult",
    "EntanglerUnsolvedError",
    "initial_state",
    "strategy_matrix",
    "entangler_qubit",
    "play",
    "Landscape",
    "payoff_landscape",
    "grid_payoffs",
    "entangler_blocks",
    "strategy_columns",
    "opponent_matrix",
]

OUTCOMES = ("CC", "CD", "DC", "DD")
BACKENDS = ("qubit", "optical")

GAMMA_MAX = math.pi / 2

_E_CC = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
_DHAT = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)


def _check_range(name: str, value: float, low: float, high: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if not low - ANGLE_RANGE_TOL <= value <= high + ANGLE_RANGE_TOL:
        raise ValueError(f"{name} must be in [{low:.10g}, {high:.10g}], got {value!r}")


@dataclass(frozen=True)
class StrategyParams:
    """One player's move: theta in [0, pi], phi in [0, pi/2], radians."""

    theta: float
    phi: float

    def __post_init__(self) -> None:
        _check_range("theta", self.theta, 0.0, math.pi)
        _check_range("phi", self.phi, 0.0, math.pi / 2)


COOPERATE = StrategyParams(0.0, 0.0)
DEFECT = StrategyParams(math.pi, 0.0)
QUANTUM = StrategyParams(0.0, math.pi / 2)

_NAMED = {"C": COOPERATE, "D": DEFECT, "Q": QUANTUM}


def strategy_from_name(name: str) -> StrategyParams:
    """Resolve the named strategies C (cooperate), D (defect), Q."""
    key = name.strip().upper()
    if key not in _NAMED:
        raise ValueError(f"unknown strategy name {name!r} (expected C, D or Q)")
    return _NAMED[key]


@dataclass(frozen=True)
class PayoffTable:
    """Per-outcome (player A, player B) payoffs, keyed CC, CD, DC, DD."""

    cc: tuple[float, float] = (3.0, 3.0)
    cd: tuple[float, float] = (0.0, 5.0)
    dc: tuple[float, float] = (5.0, 0.0)
    dd: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self) -> None:
        for name in ("cc", "cd", "dc", "dd"):
            pair = getattr(self, name)
            if len(pair) != 2 or not all(math.isfinite(x) for x in pair):
                raise ValueError(f"payoff entry {name} must be two finite numbers, got {pair!r}")

    def row_a(self) -> np.ndarray:
        return np.array([self.cc[0], self.cd[0], self.dc[0], self.dd[0]], dtype=float)

    def row_b(self) -> np.ndarray:
        return np.array([self.cc[1], self.cd[1], self.dc[1], self.dd[1]], dtype=float)


DEFAULT_PAYOFFS = PayoffTable()


@dataclass(frozen=True)
class GameConfig:
    """Entanglement, payoff table, and evaluation backend for a game."""

    gamma: float
    payoffs: PayoffTable = DEFAULT_PAYOFFS
    backend: str = "qubit"

    def __post_init__(self) -> None:
        _check_range("gamma", self.gamma, 0.0, GAMMA_MAX)
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities of the four measurement outcomes CC, CD, DC, DD."""

    p_cc: float
    p_cd: float
    p_dc: float
    p_dd: float

    def __post_init__(self) -> None:
        probs = self.as_array()
        if np.any(probs < -1e-10) or np.any(probs > 1.0 + 1e-10):
            raise ValueError(f"probabilities out of [0, 1]: {probs}")
        if abs(float(probs.sum()) - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_cc, self.p_cd, self.p_dc, self.p_dd], dtype=float)


@dataclass(frozen=True)
class GameResult:
    """Outcome distribution and expected payoffs of one played round."""

    distribution: OutcomeDistribution
    payoff_a: float
    payoff_b: float
    backend: str
    leakage: float | None = None

    def to_dict(self) -> dict:
        return {
            "outcomes": list(OUTCOMES),
            "p": [float(x) for x in self.distribution.as_array()],
            "payoffs": [float(self.payoff_a), float(self.payoff_b)],
            "backend": self.backend,
            "leakage": None if self.leakage is None else float(self.leakage),
        }


class EntanglerUnsolvedError(Exception):
    """Optical backend requested but no valid entangler phases exist."""

    def __init__(self, gamma: float, residual: float):
        self.gamma = gamma
        self.residual = residual
        super().__init__(
            f"entangler phases unsolved at gamma={gamma!r} (best residual {residual:.3e})"
        )


def initial_state(gamma: float) -> np.ndarray:
    """Two-qubit state prepared by the entangler from |CC>."""
    _check_range("gamma", gamma, 0.0, GAMMA_MAX)
    half = gamma / 2.0
    return np.array([math.cos(half), 0.0, 0.0, 1j * math.sin(half)], dtype=complex)


def strategy_matrix(params: StrategyParams) -> np.ndarray:
    """The 2x2 unitary a player applies to their own qubit."""
    return strategy_target(params.theta, params.phi)


def entangler_qubit(gamma: float) -> np.ndarray:
    """Closed-form 4x4 entangler cos(gamma/2) I + i sin(gamma/2) (Dhat x Dhat)."""
    _check_range("gamma", gamma, 0.0, GAMMA_MAX)
    half = gamma / 2.0
    return math.cos(half) * np.eye(4, dtype=complex) + 1j * math.sin(half) * np.kron(_DHAT, _DHAT)


@lru_cache(maxsize=64)
def _solved_phases(gamma: float) -> EntanglerPhases:
    phases = solve_entangler_phases(gamma)
    if not phases.valid:
        raise EntanglerUnsolvedError(gamma, phases.residual)
    return phases


def play(config: GameConfig, s_a: StrategyParams, s_b: StrategyParams) -> GameResult:
    """Run one round and return the outcome distribution and payoffs."""
    if config.backend == "qubit":
        probs = _play_qubit(config.gamma, s_a, s_b)
        leakage = None
    else:
        probs, leakage = _play_optical(config.gamma, s_a, s_b)
    dist = OutcomeDistribution(*[float(p) for p in probs])
    table_a = config.payoffs.row_a()
    table_b = config.payoffs.row_b()
    return GameResult(
        distribution=dist,
        payoff_a=float(probs @ table_a),
        payoff_b=float(probs @ table_b),
        backend=config.backend,
        leakage=leakage,
    )


def _play_qubit(gamma: float, s_a: StrategyParams, s_b: StrategyParams) -> np.ndarray:
    j = entangler_qubit(gamma)
    u4 = np.kron(strategy_matrix(s_a), strategy_matrix(s_b))
    amps = j.conj().T @ (u4 @ (j @ _E_CC))
    return np.abs(amps) ** 2


def _play_optical(gamma: float, s_a: StrategyParams, s_b: StrategyParams):
    phases = _solved_phases(gamma)
    entangle = entangler_circuit(gamma, phases)
    stages = (
        entangle,
        strategy_circuit(s_a.theta, s_a.phi, mode_pair=(0, 1)),
        strategy_circuit(s_b.theta, s_b.phi, mode_pair=(2, 3)),
        inverse_circuit(entangle),
    )
    state = basis_state(GAME_SECTOR, (1, 0, 1, 0))
    for circuit in stages:
        state = apply(circuit_unitary(circuit, GAME_SECTOR), state)
    projection = project_dual_rail(state)
    return projection.probabilities(), projection.leakage


# --- vectorized grid evaluation ---


def entangler_blocks(config: GameConfig) -> tuple[np.ndarray, np.ndarray]:
    """Dual-rail 4x4 blocks of the entangler and its inverse for a backend."""
    if config.backend == "qubit":
        j = entangler_qubit(config.gamma)
        return j, j.conj().T
    phases = _solved_phases(config.gamma)
    entangle = entangler_circuit(config.gamma, phases)
    forward = dual_rail_block(circuit_unitary(entangle, GAME_SECTOR).matrix)
    backward = dual_rail_block(circuit_unitary(inverse_circuit(entangle), GAME_SECTOR).matrix)
    return forward, backward


def opponent_matrix(config: GameConfig, params: StrategyParams) -> np.ndarray:
    """2x2 strategy unitary under the configured backend."""
    if config.backend == "qubit":
        return strategy_matrix(params)
    circuit = strategy_circuit(params.theta, params.phi, mode_pair=(0, 1))
    return circuit_unitary(circuit, Sector(2, 1)).matrix


def strategy_columns(
    config: GameConfig, thetas: np.ndarray, phis: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Strategy-matrix columns over the row-major (theta, phi) grid.

    Returns (cols_c, cols_d), each shaped [len(thetas)*len(phis), 2]: the
    images of |C> and |D> under every grid strategy.  Row-major means theta
    varies slowest, matching landscape and report ordering everywhere.
    """
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    if config.backend == "qubit":
        c = np.repeat(cos_half(thetas), len(phis))
        s = np.repeat(sin_half(thetas), len(phis))
        ephi = np.exp(1j * np.tile(phis, len(thetas)))
        cols_c = np.stack([ephi * c, -s], axis=1)
        cols_d = np.stack([s + 0j, ephi.conj() * c], axis=1)
        return cols_c, cols_d
    sector = Sector(2, 1)
    n = len(thetas) * len(phis)
    cols_c = np.empty((n, 2), dtype=complex)
    cols_d = np.empty((n, 2), dtype=complex)
    k = 0
    for theta in thetas:
        for phi in phis:
            mat = circuit_unitary(strategy_circuit(theta, phi), sector).matrix
            cols_c[k] = mat[:, 0]
            cols_d[k] = mat[:, 1]
            k += 1
    return cols_c, cols_d


@dataclass(frozen=True)
class Landscape:
    """Moving player's expected payoff over a (theta, phi) grid."""

    thetas: np.ndarray = field(repr=False)
    phis: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    gamma: float = 0.0
    opponent: StrategyParams = COOPERATE
    backend: str = "qubit"


def payoff_landscape(
    config: GameConfig,
    opponent: StrategyParams,
    theta_steps: int = 65,
    phi_steps: int = 33,
) -> Landscape:
    """Expected payoff of the moving player against a fixed opponent.

    The grid is inclusive over [0, pi] x [0, pi/2]; values[i, j] is the
    payoff of strategy (thetas[i], phis[j]).  Deterministic: no
    randomness, fixed evaluation order.
    """
    if theta_steps < 2 or phi_steps < 2:
        raise ValueError(f"grid must be at least 2x2, got {theta_steps}x{phi_steps}")
    thetas = np.linspace(0.0, math.pi, theta_steps)
    phis = np.linspace(0.0, math.pi / 2, phi_steps)
    values = grid_payoffs(config, opponent, thetas, phis)
    return Landscape(
        thetas=thetas,
        phis=phis,
        values=values,
        gamma=config.gamma,
        opponent=opponent,
        backend=config.backend,
    )


def grid_payoffs(
    config: GameConfig,
    opponent: StrategyParams,
    thetas: np.ndarray,
    phis: np.ndarray,
    table_row: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorized payoffs of the moving player over an explicit grid.

    table_row gives the moving player's payoff per outcome in the order
    the outcomes appear from the mover's seat; it defaults to player A's
    row.  The equilibrium scanner passes a reordered row to score player
    B's unilateral deviations without re-deriving the pipeline.
    """
    forward, backward = entangler_blocks(config)
    psi = (forward @ _E_CC).reshape(2, 2)
    opp = opponent_matrix(config, opponent)
    # Opponent acts on the second qubit: temp[a, b'] = sum_b psi[a, b] opp[b', b].
    temp = psi @ opp.T
    w = backward.reshape(4, 2, 2)
    # amp[n, k] = sum_{a'} cols_c[n, a'] a0[k, a'] + cols_d[n, a'] a1[k, a']
    a0 = np.einsum("kab,b->ka", w, temp[0])
    a1 = np.einsum("kab,b->ka", w, temp[1])
    cols_c, cols_d = strategy_columns(config, thetas, phis)
    amp = cols_c @ a0.T + cols_d @ a1.T
    probs = np.abs(amp) ** 2
    row = config.payoffs.row_a() if table_row is None else np.asarray(table_row, dtype=float)
    payoff = probs @ row
    return payoff.reshape(len(thetas), len(phis))
