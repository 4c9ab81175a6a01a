"""Exact linear algebra on a truncated multimode Fock space.

Everything here lives inside one fixed photon-number sector (M modes, N
photons total).  All optical elements used by this package conserve total
photon number, so restricting to a single sector is exact, not an
approximation; it is what makes 1e-10 verification tolerances possible.

Canonical basis order is lexicographic *descending* on occupation lists,
e.g. for (M=4, N=2): |2,0,0,0>, |1,1,0,0>, |1,0,1,0>, ...  All matrices and
state vectors in this package use that order, and serialized fixtures rely
on it being stable.

The game space is the (4 modes, 2 photons) sector, with modes named
a, b, c, d = 0, 1, 2, 3.  Alice's dual-rail qubit lives on (a, b) and Bob's
on (c, d): |C> = |1,0> and |D> = |0,1> on each pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Sector",
    "FockBasisState",
    "StateVector",
    "OperatorMatrix",
    "GeneratorMatrix",
    "PhaseMatch",
    "DualRailProjection",
    "GAME_SECTOR",
    "MODE_A",
    "MODE_B",
    "MODE_C",
    "MODE_D",
    "DUAL_RAIL_OCCUPATIONS",
    "enumerate_basis",
    "basis_index",
    "basis_state",
    "hopping_generator",
    "number_generator",
    "cross_number_generator",
    "exponentiate",
    "identity_operator",
    "apply",
    "compose",
    "equal_up_to_global_phase",
    "project_dual_rail",
    "dual_rail_block",
    "matrix_to_json",
    "matrix_from_json",
    "vector_to_json",
    "vector_from_json",
]

HERMITICITY_TOL = 1e-12
UNITARITY_TOL = 1e-10

# Game-space mode names.
MODE_A, MODE_B, MODE_C, MODE_D = 0, 1, 2, 3


@dataclass(frozen=True, order=True)
class Sector:
    """A fixed-photon-number subspace: M modes, N photons total."""

    modes: int
    photons: int

    def __post_init__(self) -> None:
        if self.modes < 1:
            raise ValueError(f"need at least one mode, got {self.modes}")
        if self.photons < 0:
            raise ValueError(f"photon number must be >= 0, got {self.photons}")

    @property
    def dimension(self) -> int:
        return math.comb(self.photons + self.modes - 1, self.modes - 1)


GAME_SECTOR = Sector(modes=4, photons=2)

# One photon on each dual-rail pair, order CC, CD, DC, DD.
DUAL_RAIL_OCCUPATIONS: tuple[tuple[int, ...], ...] = (
    (1, 0, 1, 0),
    (1, 0, 0, 1),
    (0, 1, 1, 0),
    (0, 1, 0, 1),
)


@dataclass(frozen=True)
class FockBasisState:
    """Occupation-number basis ket |n_0, n_1, ..., n_{M-1}>."""

    occupations: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(n < 0 for n in self.occupations):
            raise ValueError(f"occupations must be non-negative: {self.occupations}")

    @property
    def total_photons(self) -> int:
        return sum(self.occupations)

    def __str__(self) -> str:
        return "|" + ",".join(str(n) for n in self.occupations) + ">"


def _compositions_desc(modes: int, photons: int) -> Iterable[tuple[int, ...]]:
    if modes == 1:
        yield (photons,)
        return
    for first in range(photons, -1, -1):
        for rest in _compositions_desc(modes - 1, photons - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def enumerate_basis(sector: Sector) -> tuple[FockBasisState, ...]:
    """All occupation lists of the sector, lexicographically descending.

    The order is deterministic and stable across runs; serialized states
    and matrices index into it.
    """
    return tuple(
        FockBasisState(occ) for occ in _compositions_desc(sector.modes, sector.photons)
    )


@lru_cache(maxsize=None)
def _index_table(sector: Sector) -> dict[tuple[int, ...], int]:
    return {state.occupations: i for i, state in enumerate(enumerate_basis(sector))}


def basis_index(sector: Sector, occupations: Sequence[int]) -> int:
    """Position of |occupations> in the canonical basis."""
    key = tuple(occupations)
    table = _index_table(sector)
    if key not in table:
        raise ValueError(f"{key} is not a basis state of {sector}")
    return table[key]


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over the canonical basis of one sector."""

    sector: Sector
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        amps = _readonly(self.amplitudes)
        if amps.shape != (self.sector.dimension,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, "
                f"sector dimension is {self.sector.dimension}"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, occupations: Sequence[int]) -> complex:
        return complex(self.amplitudes[basis_index(self.sector, occupations)])


def basis_state(sector: Sector, occupations: Sequence[int]) -> StateVector:
    """Unit vector on a single occupation-number ket."""
    amps = np.zeros(sector.dimension, dtype=complex)
    amps[basis_index(sector, occupations)] = 1.0
    return StateVector(sector, amps)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator on one sector, optionally certified unitary.

    The unitarity certificate is checked at construction: asserting
    ``unitary=True`` with U†U further than 1e-10 from the identity raises.
    Photon-number conservation is automatic — the matrix only exists inside
    a single sector.
    """

    sector: Sector
    matrix: np.ndarray = field(repr=False)
    unitary: bool = False

    def __post_init__(self) -> None:
        mat = _readonly(self.matrix)
        dim = self.sector.dimension
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} does not match sector dimension {dim}")
        if self.unitary:
            defect = float(np.max(np.abs(mat.conj().T @ mat - np.eye(dim))))
            if defect > UNITARITY_TOL:
                raise ValueError(f"unitarity certificate violated: defect {defect:.3e}")
        object.__setattr__(self, "matrix", mat)

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.sector, self.matrix.conj().T, unitary=self.unitary)


def identity_operator(sector: Sector) -> OperatorMatrix:
    return OperatorMatrix(sector, np.eye(sector.dimension, dtype=complex), unitary=True)


@dataclass(frozen=True)
class GeneratorMatrix:
    """A (anti-)hermitian generator; element unitaries are its exponentials."""

    sector: Sector
    matrix: np.ndarray = field(repr=False)
    kind: str = "hermitian"  # "hermitian" | "antihermitian"

    def __post_init__(self) -> None:
        if self.kind not in ("hermitian", "antihermitian"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        mat = _readonly(self.matrix)
        dim = self.sector.dimension
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} does not match sector dimension {dim}")
        defect = _hermiticity_defect(mat, self.kind)
        if defect > HERMITICITY_TOL:
            raise ValueError(
                f"generator is not {self.kind} (defect {defect:.3e} > {HERMITICITY_TOL})"
            )
        object.__setattr__(self, "matrix", mat)


def _hermiticity_defect(mat: np.ndarray, kind: str) -> float:
    if kind == "hermitian":
        return float(np.max(np.abs(mat - mat.conj().T)))
    return float(np.max(np.abs(mat + mat.conj().T)))


def _raising_lowering(sector: Sector, mode_i: int, mode_j: int) -> np.ndarray:
    """Matrix of a†_i a_j with the standard sqrt(n) ladder factors."""
    states = enumerate_basis(sector)
    table = _index_table(sector)
    mat = np.zeros((sector.dimension, sector.dimension), dtype=complex)
    for col, state in enumerate(states):
        occ = state.occupations
        if occ[mode_j] == 0:
            continue
        target = list(occ)
        target[mode_j] -= 1
        target[mode_i] += 1
        row = table[tuple(target)]
        mat[row, col] = math.sqrt(occ[mode_j] * (occ[mode_i] + 1))
    return mat


def _check_mode(sector: Sector, mode: int) -> None:
    if not 0 <= mode < sector.modes:
        raise ValueError(f"mode {mode} out of range for {sector}")


def hopping_generator(
    sector: Sector, mode_i: int, mode_j: int, symmetric: bool = True
) -> GeneratorMatrix:
    """Two-mode exchange generator.

    ``symmetric=True`` gives a†_i a_j + a†_j a_i (hermitian, the beam
    splitter generator); ``symmetric=False`` gives a†_i a_j − a†_j a_i
    (anti-hermitian, the real y-rotation generator).
    """
    _check_mode(sector, mode_i)
    _check_mode(sector, mode_j)
    if mode_i == mode_j:
        raise ValueError("hopping generator needs two distinct modes")
    hop = _raising_lowering(sector, mode_i, mode_j)
    if symmetric:
        return GeneratorMatrix(sector, hop + hop.conj().T, kind="hermitian")
    return GeneratorMatrix(sector, hop - hop.conj().T, kind="antihermitian")


def number_generator(sector: Sector, mode: int) -> GeneratorMatrix:
    """Occupation-number generator n_mode (diagonal, hermitian)."""
    _check_mode(sector, mode)
    diag = np.array([s.occupations[mode] for s in enumerate_basis(sector)], dtype=complex)
    return GeneratorMatrix(sector, np.diag(diag), kind="hermitian")


def cross_number_generator(sector: Sector, mode_i: int, mode_j: int) -> GeneratorMatrix:
    """Product generator n_i n_j (diagonal, hermitian) — the cross-Kerr exponent."""
    _check_mode(sector, mode_i)
    _check_mode(sector, mode_j)
    diag = np.array(
        [s.occupations[mode_i] * s.occupations[mode_j] for s in enumerate_basis(sector)],
        dtype=complex,
    )
    return GeneratorMatrix(sector, np.diag(diag), kind="hermitian")


def exponentiate(generator: GeneratorMatrix, scale: float, sign: int = 1) -> OperatorMatrix:
    """Exact unitary exponential of a generator.

    For hermitian G returns exp(sign * i * scale * G); for anti-hermitian G
    returns exp(sign * scale * G).  Computed by eigendecomposition of the
    hermitian form, so the result is exact to machine precision (no
    truncated series).
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    defect = _hermiticity_defect(generator.matrix, generator.kind)
    if defect > HERMITICITY_TOL:
        raise ValueError(f"generator is not {generator.kind} (defect {defect:.3e})")
    if generator.kind == "hermitian":
        herm = generator.matrix
        coeff = sign * scale
    else:
        # G anti-hermitian: G = -i H with H = iG hermitian, so
        # exp(sign*scale*G) = exp(-i*sign*scale*H).
        herm = 1j * generator.matrix
        coeff = -sign * scale
    eigvals, eigvecs = np.linalg.eigh(herm)
    phases = np.exp(1j * coeff * eigvals)
    mat = (eigvecs * phases) @ eigvecs.conj().T
    return OperatorMatrix(generator.sector, mat, unitary=True)


def apply(op: OperatorMatrix, state: StateVector) -> StateVector:
    if op.sector != state.sector:
        raise ValueError(f"sector mismatch: operator {op.sector}, state {state.sector}")
    return StateVector(state.sector, op.matrix @ state.amplitudes)


def compose(ops: Sequence[OperatorMatrix]) -> OperatorMatrix:
    """Operator product, written like a formula: the rightmost factor acts first.

    compose([A, B, C]) == A @ B @ C, i.e. C is applied to the state first.
    Circuits list elements in temporal order, so they assemble via
    compose(reversed(element_unitaries)).
    """
    if not ops:
        raise ValueError("compose needs at least one operator")
    sector = ops[0].sector
    for op in ops[1:]:
        if op.sector != sector:
            raise ValueError("compose: operators live on different sectors")
    mat = ops[0].matrix
    for op in ops[1:]:
        mat = mat @ op.matrix
    unitary = all(op.unitary for op in ops)
    return OperatorMatrix(sector, mat, unitary=unitary)


@dataclass(frozen=True)
class PhaseMatch:
    """Result of a global-phase-quotient comparison."""

    equal: bool
    phase: complex
    residual: float


def _as_matrix(value) -> np.ndarray:
    if isinstance(value, OperatorMatrix):
        return value.matrix
    return np.asarray(value, dtype=complex)


def equal_up_to_global_phase(u, v, tol: float = 1e-10) -> PhaseMatch:
    """Do two matrices agree up to one overall unit phase?

    The phase is read off the largest-magnitude matching entry and the
    residual is the max-norm of U − phase·V.  A global phase is
    unobservable in measurement statistics, so all verification in this
    package quotients it out.

    Accepts OperatorMatrix or anything array-like (including 2x2 / 4x4
    dual-rail blocks and state vectors).
    """
    mu = _as_matrix(u)
    mv = _as_matrix(v)
    if mu.shape != mv.shape:
        raise ValueError(f"shape mismatch: {mu.shape} vs {mv.shape}")
    overlap = mu * mv.conj()
    idx = np.unravel_index(np.argmax(np.abs(overlap)), overlap.shape)
    pivot = overlap[idx]
    if abs(pivot) == 0.0:
        phase = 1.0 + 0.0j
    else:
        phase = pivot / abs(pivot)
    residual = float(np.max(np.abs(mu - phase * mv)))
    return PhaseMatch(equal=residual <= tol, phase=complex(phase), residual=residual)


@dataclass(frozen=True)
class DualRailProjection:
    """Dual-rail readout of a 4-mode 2-photon state.

    qubit_amplitudes is ordered (CC, CD, DC, DD); leakage is the squared
    norm outside those four kets.
    """

    qubit_amplitudes: np.ndarray = field(repr=False)
    leakage: float

    def probabilities(self) -> np.ndarray:
        return np.abs(self.qubit_amplitudes) ** 2


@lru_cache(maxsize=None)
def _dual_rail_indices() -> tuple[int, ...]:
    return tuple(basis_index(GAME_SECTOR, occ) for occ in DUAL_RAIL_OCCUPATIONS)


def project_dual_rail(state: StateVector) -> DualRailProjection:
    """Read the four dual-rail amplitudes out of a game-sector state."""
    if state.sector != GAME_SECTOR:
        raise ValueError(f"dual-rail projection is defined on {GAME_SECTOR}, got {state.sector}")
    idx = np.array(_dual_rail_indices())
    amps = state.amplitudes[idx]
    leakage = float(np.sum(np.abs(state.amplitudes) ** 2) - np.sum(np.abs(amps) ** 2))
    return DualRailProjection(qubit_amplitudes=amps, leakage=max(leakage, 0.0))


def dual_rail_block(op) -> np.ndarray:
    """4x4 restriction of a game-sector operator to the dual-rail kets.

    Row/column order is (CC, CD, DC, DD).  Every element this package
    builds preserves the one-photon-per-pair subspace, so the block of a
    product equals the product of blocks.
    """
    mat = _as_matrix(op)
    if mat.shape != (GAME_SECTOR.dimension, GAME_SECTOR.dimension):
        raise ValueError("dual_rail_block expects an operator on the 4-mode 2-photon sector")
    idx = np.array(_dual_rail_indices())
    return mat[np.ix_(idx, idx)]


# --- JSON helpers (golden-file fixtures store complex data as [re, im]) ---


def _c2j(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def matrix_to_json(mat) -> list[list[list[float]]]:
    arr = _as_matrix(mat)
    return [[_c2j(z) for z in row] for row in arr]


def matrix_from_json(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)


def vector_to_json(vec) -> list[list[float]]:
    arr = np.asarray(vec, dtype=complex)
    return [_c2j(z) for z in arr]


def vector_from_json(data) -> np.ndarray:
    return np.array([complex(re, im) for re, im in data], dtype=complex)
