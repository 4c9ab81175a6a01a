"""Optical elements and the two gate constructions built from them.

Elements (beam splitter, phase shifter, conjugate phase pair, cross-Kerr
cell, mirror) are plain descriptions; ``element_unitary`` turns one into an
exact matrix on a chosen Fock sector.  A Circuit is an element list in
temporal order (first applied first).

Conventions, fixed once here and relied on everywhere else:

- B(theta) = exp[-i(theta/2)(a†b + b†a)], so a 50:50 splitter is
  B(pi/2) with B(pi/2)|1,0> = (|1,0> - i|0,1>)/sqrt(2).
- P(phi) = exp(i phi n) on one mode; a conjugate pair applies (+phi, -phi)
  to a mode pair and acts as a z-rotation on a dual-rail qubit.
- CrossKerr(chi) = exp(-i chi n_i n_j).  Self-Kerr terms are omitted.
- Mirror = identity: a fixed mirror phase would only shift the global
  phase, which every comparison here quotients out anyway.

Two constructions are provided.  The strategy circuit realizes the
two-parameter single-qubit family

    U(theta, phi) = [[e^{i phi} cos(theta/2),          sin(theta/2)],
                     [-sin(theta/2),         e^{-i phi} cos(theta/2)]]

on a dual-rail pair, exactly (global phase 1).  The entangler circuit
realizes the two-qubit gate that maps |CC> to
cos(gamma/2)|CC> + i sin(gamma/2)|DD>; its internal phases are found by
``solve_entangler_phases``.

The entangler circuit agrees with the target only on the dual-rail block:
outside it (for example on double occupations like |2,0,0,0>) the
interferometers act nontrivially and no phase choice can cancel them, so
all residuals are defined as max-norm distances on the 4x4 dual-rail block
after the global-phase quotient.  Every element used here preserves the
dual-rail subspace, which is also why leakage vanishes to machine
precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .fock import (
    GAME_SECTOR,
    GeneratorMatrix,
    OperatorMatrix,
    Sector,
    compose,
    cross_number_generator,
    dual_rail_block,
    enumerate_basis,
    equal_up_to_global_phase,
    exponentiate,
    hopping_generator,
    identity_operator,
)

__all__ = [
    "ANGLE_RANGE_TOL",
    "OpticalElement",
    "Circuit",
    "EntanglerPhases",
    "CommutatorReport",
    "beam_splitter",
    "phase_shifter",
    "conjugate_phase_pair",
    "cross_kerr",
    "mirror",
    "element_unitary",
    "circuit_unitary",
    "inverse_circuit",
    "rotation_y_circuit",
    "rotation_x_circuit",
    "cos_half",
    "sin_half",
    "strategy_target",
    "strategy_circuit",
    "entangler_target",
    "entangler_circuit",
    "solve_entangler_phases",
    "verify_commutators",
    "circuit_to_json",
    "circuit_from_json",
]

# Angle range checks accept rounded literals for the bounds (1.5708 passes
# as pi/2, 3.1416 as pi); genuinely out-of-range values are rejected.
ANGLE_RANGE_TOL = 1e-4

ELEMENT_KINDS = ("beam_splitter", "phase_shifter", "conjugate_phase_pair", "cross_kerr", "mirror")
_PAIR_KINDS = ("beam_splitter", "conjugate_phase_pair", "cross_kerr")


@dataclass(frozen=True)
class OpticalElement:
    """One passive cell: kind, the modes it touches, and its angle in radians.

    Angles are stored exactly as given (no range reduction).  A mirror has
    no angle; it keeps angle 0.
    """

    kind: str
    modes: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ELEMENT_KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}")
        expected = 2 if self.kind in _PAIR_KINDS else 1
        if len(self.modes) != expected:
            raise ValueError(f"{self.kind} takes {expected} mode(s), got {self.modes}")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError(f"{self.kind} modes must be distinct, got {self.modes}")
        if any(m < 0 for m in self.modes):
            raise ValueError(f"negative mode index in {self.modes}")
        if not math.isfinite(self.angle):
            raise ValueError(f"angle must be finite, got {self.angle}")
        if self.kind == "mirror" and self.angle != 0.0:
            raise ValueError("mirror carries no angle")


def beam_splitter(mode_i: int, mode_j: int, theta: float) -> OpticalElement:
    return OpticalElement("beam_splitter", (mode_i, mode_j), theta)


def phase_shifter(mode: int, phi: float) -> OpticalElement:
    return OpticalElement("phase_shifter", (mode,), phi)


def conjugate_phase_pair(mode_i: int, mode_j: int, phi: float) -> OpticalElement:
    """Phase +phi on mode_i and -phi on mode_j."""
    return OpticalElement("conjugate_phase_pair", (mode_i, mode_j), phi)


def cross_kerr(mode_i: int, mode_j: int, chi: float) -> OpticalElement:
    return OpticalElement("cross_kerr", (mode_i, mode_j), chi)


def mirror(mode: int) -> OpticalElement:
    return OpticalElement("mirror", (mode,))


@dataclass(frozen=True)
class Circuit:
    """Ordered element list, temporal order: elements[0] is applied first."""

    elements: tuple[OpticalElement, ...]
    label: str = ""
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.elements:
            raise ValueError("circuit needs at least one element")


def element_unitary(elem: OpticalElement, sector: Sector) -> OperatorMatrix:
    """Exact unitary of one element on the given sector."""
    for m in elem.modes:
        if not 0 <= m < sector.modes:
            raise ValueError(f"mode {m} of {elem.kind} out of range for {sector}")
    if elem.kind == "beam_splitter":
        gen = hopping_generator(sector, elem.modes[0], elem.modes[1], symmetric=True)
        return exponentiate(gen, elem.angle / 2.0, sign=-1)
    if elem.kind == "phase_shifter":
        diag = _occupation_diag(sector, {elem.modes[0]: 1.0})
        return exponentiate(diag, elem.angle, sign=1)
    if elem.kind == "conjugate_phase_pair":
        diag = _occupation_diag(sector, {elem.modes[0]: 1.0, elem.modes[1]: -1.0})
        return exponentiate(diag, elem.angle, sign=1)
    if elem.kind == "cross_kerr":
        gen = cross_number_generator(sector, elem.modes[0], elem.modes[1])
        return exponentiate(gen, elem.angle, sign=-1)
    return identity_operator(sector)


def _occupation_diag(sector: Sector, weights: dict[int, float]) -> GeneratorMatrix:
    """Diagonal hermitian generator sum_m weights[m] * n_m."""
    vals = [
        sum(w * state.occupations[m] for m, w in weights.items())
        for state in enumerate_basis(sector)
    ]
    return GeneratorMatrix(sector, np.diag(np.array(vals, dtype=complex)), kind="hermitian")


def circuit_unitary(circuit: Circuit, sector: Sector) -> OperatorMatrix:
    """Assembled unitary; the first listed element acts on the state first."""
    ops = [element_unitary(e, sector) for e in reversed(circuit.elements)]
    return compose(ops)


def inverse_circuit(circuit: Circuit) -> Circuit:
    """Element-wise inverse: reversed order, negated angles."""
    inv = tuple(
        e if e.kind == "mirror" else replace(e, angle=-e.angle)
        for e in reversed(circuit.elements)
    )
    return Circuit(inv, label=circuit.label + "^-1" if circuit.label else "inverse")


# --- rotation identities on a dual-rail pair ---


def rotation_y_circuit(half_angle: float, mode_pair: tuple[int, int] = (0, 1)) -> Circuit:
    """Optical realization of exp(-h (a†b - b†a)), h = half_angle.

    On the dual-rail qubit this is the real rotation
    [[cos h, -sin h], [sin h, cos h]].  The identity holds on the whole
    sector, not just the single-photon block, because conjugating the
    phase-pair generator by a 50:50 splitter turns it into the
    antisymmetric hopping generator.
    """
    i, j = mode_pair
    return Circuit(
        (
            beam_splitter(i, j, math.pi / 2),
            conjugate_phase_pair(i, j, -half_angle),
            beam_splitter(i, j, -math.pi / 2),
        ),
        label=f"rotation_y(half_angle={half_angle:.6g})",
    )


def rotation_x_circuit(half_angle: float, mode_pair: tuple[int, int] = (0, 1)) -> Circuit:
    """Optical realization of exp(-i h (a†b + b†a)), h = half_angle.

    Built by conjugating the y-rotation with a +-pi/4 conjugate phase pair.
    The trailing pair must carry the opposite phases of the leading one: a
    same-signed pair is a global phase times a relative phase on the pair
    and leaves the wrong axis (it yields the x-rotation times diag(1, i)
    instead of the x-rotation).
    """
    i, j = mode_pair
    return Circuit(
        (
            conjugate_phase_pair(i, j, math.pi / 4),
            beam_splitter(i, j, math.pi / 2),
            conjugate_phase_pair(i, j, half_angle),
            beam_splitter(i, j, -math.pi / 2),
            conjugate_phase_pair(i, j, -math.pi / 4),
        ),
        label=f"rotation_x(half_angle={half_angle:.6g})",
    )


# --- strategy gate ---


def cos_half(theta):
    """cos(theta/2) evaluated as sin((pi - theta)/2).

    This form is exactly 0.0 at theta = pi and exactly 1.0 at theta = 0,
    which keeps the named strategies (and the classical payoff embedding)
    exact in floating point instead of off by ~6e-17.
    """
    return np.sin((np.pi - np.asarray(theta, dtype=float)) / 2.0)


def sin_half(theta):
    """sin(theta/2); exactly 1.0 at theta = pi and 0.0 at theta = 0."""
    return np.sin(np.asarray(theta, dtype=float) / 2.0)


def strategy_target(theta: float, phi: float) -> np.ndarray:
    """The 2x2 strategy matrix U(theta, phi) on the (|C>, |D>) basis."""
    c = float(cos_half(theta))
    s = float(sin_half(theta))
    ephi = complex(math.cos(phi), math.sin(phi))
    return np.array([[ephi * c, s], [-s, ephi.conjugate() * c]], dtype=complex)


def strategy_circuit(theta: float, phi: float, mode_pair: tuple[int, int] = (0, 1)) -> Circuit:
    """Single-qubit strategy gate from two splitters, two mirrors, four shifters.

    Temporal layout: phase phi on the first rail, a 50:50 splitter, the two
    mirrors, a conjugate phase pair carrying theta/2, the inverse splitter,
    and phase -phi on the second rail.  The middle three elements form the
    y-rotation by -theta/2; the outer shifters supply the z-rotations, so
    the dual-rail block equals U(theta, phi) with global phase exactly 1.

    Angles outside theta in [0, pi], phi in [0, pi/2] are accepted but
    flagged in Circuit.warnings.
    """
    i, j = mode_pair
    warnings = []
    if not -ANGLE_RANGE_TOL <= theta <= math.pi + ANGLE_RANGE_TOL:
        warnings.append(f"theta={theta!r} outside [0, pi]")
    if not -ANGLE_RANGE_TOL <= phi <= math.pi / 2 + ANGLE_RANGE_TOL:
        warnings.append(f"phi={phi!r} outside [0, pi/2]")
    return Circuit(
        (
            phase_shifter(i, phi),
            beam_splitter(i, j, math.pi / 2),
            mirror(i),
            mirror(j),
            conjugate_phase_pair(i, j, theta / 2.0),
            beam_splitter(i, j, -math.pi / 2),
            phase_shifter(j, -phi),
        ),
        label=f"strategy(theta={theta:.6g},phi={phi:.6g})",
        warnings=tuple(warnings),
    )


# --- entangling gate ---


def _check_gamma(gamma: float) -> None:
    if not -ANGLE_RANGE_TOL <= gamma <= math.pi / 2 + ANGLE_RANGE_TOL:
        raise ValueError(f"gamma={gamma!r} outside [0, pi/2]")


def entangler_target(gamma: float, sector: Sector = GAME_SECTOR) -> OperatorMatrix:
    """Target entangling gate exp[i(gamma/2)(a†b - b†a)(c†d - d†c)].

    The prefactor i*gamma/2 is fixed by the defining requirement
    |CC> -> cos(gamma/2)|CC> + i sin(gamma/2)|DD>; on the dual-rail block
    the gate equals cos(gamma/2)*I + i sin(gamma/2)*(Dhat x Dhat).
    """
    _check_gamma(gamma)
    hop_ab = hopping_generator(sector, 0, 1, symmetric=False)
    hop_cd = hopping_generator(sector, 2, 3, symmetric=False)
    # Product of two commuting anti-hermitian generators is hermitian.
    product = GeneratorMatrix(sector, hop_ab.matrix @ hop_cd.matrix, kind="hermitian")
    return exponentiate(product, gamma / 2.0, sign=1)


@dataclass(frozen=True)
class EntanglerPhases:
    """Solved internal phases for the entangler circuit at one gamma.

    kerr_chi is the cross-Kerr strength actually used; kerr_mapping names
    its dependence on gamma ("chi=-2*gamma" except at the degenerate point
    gamma=0 where the literal "chi=gamma" already works).  residual is the
    max-norm distance between the assembled circuit and the target on the
    dual-rail block after the global-phase quotient, recomputed from the
    full circuit, not from the solver's internal shortcut.
    """

    gamma: float
    theta1: float
    theta2: float
    kerr_chi: float
    kerr_mapping: str
    residual: float
    valid: bool


def entangler_circuit(gamma: float, phases: EntanglerPhases) -> Circuit:
    """Entangler as splitters on both pairs, one cross-Kerr cell, two phase pairs.

    Temporal layout: 50:50 splitters on (a,b) and (c,d), the cross-Kerr
    cell coupling modes a and d, conjugate phase pairs theta1 on (a,b) and
    theta2 on (c,d), then the inverse splitters.
    """
    _check_gamma(gamma)
    if not phases.valid:
        raise ValueError(
            f"entangler phases for gamma={phases.gamma} are invalid "
            f"(residual {phases.residual:.3e})"
        )
    if abs(phases.gamma - gamma) > 1e-12:
        raise ValueError(f"phases were solved for gamma={phases.gamma}, not {gamma}")
    half = math.pi / 2
    return Circuit(
        (
            beam_splitter(0, 1, half),
            beam_splitter(2, 3, half),
            cross_kerr(0, 3, phases.kerr_chi),
            conjugate_phase_pair(0, 1, phases.theta1),
            conjugate_phase_pair(2, 3, phases.theta2),
            beam_splitter(0, 1, -half),
            beam_splitter(2, 3, -half),
        ),
        label=f"entangler(gamma={gamma:.6g})",
    )


def _bs_half_block() -> np.ndarray:
    """2x2 single-photon block of a 50:50 splitter B(pi/2)."""
    r = 1.0 / math.sqrt(2.0)
    return np.array([[r, -1j * r], [-1j * r, r]], dtype=complex)


def _circuit_block(theta1, theta2, chi, interferometer: np.ndarray) -> np.ndarray:
    """Dual-rail block of the entangler circuit, in closed form.

    Every element preserves the dual-rail subspace, so the block of the
    product is the product of blocks: F† . diag(phases) . F with F the
    two 50:50 splitters.  Supports vectorized theta arrays (appended axes).
    """
    t1 = np.asarray(theta1, dtype=float)
    t2 = np.asarray(theta2, dtype=float)
    d = np.stack(
        [
            np.exp(1j * (t1 + t2)),
            np.exp(1j * (t1 - t2 - chi)),
            np.exp(1j * (t2 - t1)),
            np.exp(-1j * (t1 + t2)),
        ],
        axis=-1,
    )
    f = interferometer
    # block = F† @ diag(d) @ F, batched over leading axes of d
    return np.einsum("ib,...b,bj->...ij", f.conj().T, d, f)


def _block_phase_residual(blocks: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Vectorized global-phase-quotient max-norm distance to the target block."""
    b = blocks.reshape(-1, 4, 4)
    overlap = b * target.conj()
    flat = np.abs(overlap).reshape(len(b), 16)
    idx = np.argmax(flat, axis=1)
    pivot = overlap.reshape(len(b), 16)[np.arange(len(b)), idx]
    mag = np.abs(pivot)
    phase = np.where(mag > 0, pivot / np.where(mag > 0, mag, 1.0), 1.0)
    resid = np.max(np.abs(b - phase[:, None, None] * target[None]), axis=(1, 2))
    return resid.reshape(blocks.shape[:-2])


def _canonical_phase(theta: float) -> float:
    """Fold a phase-pair angle into (-pi/2, pi/2].

    Shifting either angle by pi flips the sign of its phase pair, which is
    a global sign on the circuit; the residual is invariant, so the folded
    representative is used for continuity and fixtures.
    """
    t = (theta + math.pi / 2.0) % math.pi - math.pi / 2.0
    if t <= -math.pi / 2.0 + 1e-15:
        t += math.pi
    return t


_KERR_MAPPINGS: tuple[tuple[str, float], ...] = (
    ("chi=gamma", 1.0),
    ("chi=-2*gamma", -2.0),
    ("chi=-gamma", -1.0),
    ("chi=2*gamma", 2.0),
    ("chi=-4*gamma", -4.0),
    ("chi=4*gamma", 4.0),
)

_SCAN_POINTS = 181  # coarse scan resolution over (-pi, pi) per axis


@lru_cache(maxsize=256)
def solve_entangler_phases(gamma: float, tol: float = 1e-8) -> EntanglerPhases:
    """Find phase-pair angles making the entangler circuit hit its target.

    For each candidate Kerr-strength mapping (the literal chi = gamma
    first, then signed multiples) the solver runs a 181x181 coarse scan
    over (theta1, theta2) in [-pi, pi)^2 followed by coordinate-descent
    refinement down to 1e-10 steps, all on the 4x4 dual-rail block.  The
    first mapping whose refined residual (recomputed from the fully
    assembled circuit) meets tol wins.  Solutions are folded into
    (-pi/2, pi/2] per angle, which keeps the solved branch continuous in
    gamma.  Deterministic for fixed (gamma, tol).

    If no mapping succeeds the best candidate is returned with valid=False
    and its residual, signalling that the decomposition fails at this
    gamma under the conventions in force.
    """
    _check_gamma(gamma)
    target = dual_rail_block(entangler_target(gamma))
    f2 = _bs_half_block()
    interferometer = np.kron(f2, f2)
    axis = np.linspace(-math.pi, math.pi, _SCAN_POINTS, endpoint=False)

    best: EntanglerPhases | None = None
    for mapping_name, factor in _KERR_MAPPINGS:
        chi = factor * gamma

        def resid_at(t1: float, t2: float, chi=chi) -> float:
            block = _circuit_block(t1, t2, chi, interferometer)
            return float(_block_phase_residual(block[None], target)[0])

        t1g, t2g = np.meshgrid(axis, axis, indexing="ij")
        coarse = _block_phase_residual(
            _circuit_block(t1g, t2g, chi, interferometer), target
        )
        i0, j0 = np.unravel_index(np.argmin(coarse), coarse.shape)
        t1, t2 = float(axis[i0]), float(axis[j0])
        t1, t2 = _refine(resid_at, t1, t2, step=float(axis[1] - axis[0]))
        t1, t2 = _canonical_phase(t1), _canonical_phase(t2)

        candidate = EntanglerPhases(
            gamma=gamma,
            theta1=t1,
            theta2=t2,
            kerr_chi=chi,
            kerr_mapping=mapping_name,
            residual=_assembled_residual(gamma, t1, t2, chi),
            valid=False,
        )
        if candidate.residual <= tol:
            return replace(candidate, valid=True)
        if best is None or candidate.residual < best.residual:
            best = candidate
    assert best is not None
    return best


def _refine(resid_at, t1: float, t2: float, step: float) -> tuple[float, float]:
    """Coordinate-descent pattern search with halving steps."""
    current = resid_at(t1, t2)
    while step > 1e-11:
        moved = False
        for dt1, dt2 in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            trial = resid_at(t1 + dt1, t2 + dt2)
            if trial < current:
                t1, t2, current = t1 + dt1, t2 + dt2, trial
                moved = True
        if not moved:
            step /= 2.0
    return t1, t2


def _assembled_residual(gamma: float, theta1: float, theta2: float, chi: float) -> float:
    """Residual of the real assembled circuit, not the block shortcut."""
    probe = EntanglerPhases(gamma, theta1, theta2, chi, "probe", 0.0, True)
    circuit = entangler_circuit(gamma, probe)
    block = dual_rail_block(circuit_unitary(circuit, GAME_SECTOR))
    target = dual_rail_block(entangler_target(gamma))
    return equal_up_to_global_phase(block, target, tol=np.inf).residual


@dataclass(frozen=True)
class CommutatorReport:
    """Max-norms of the entangler's commutators with the classical gates.

    Keys: "DxD", "CxD", "DxC" for [J, Dhat x Dhat], [J, Chat x Dhat],
    [J, Dhat x Chat] on the dual-rail block.  All three must vanish for the
    classical strategy pairs to pass through the entangler untouched.
    """

    gamma: float
    norms: dict[str, float]

    @property
    def max_norm(self) -> float:
        return max(self.norms.values())


def verify_commutators(gamma: float) -> CommutatorReport:
    j_block = dual_rail_block(entangler_target(gamma))
    chat = np.eye(2, dtype=complex)
    dhat = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
    pairs = {
        "DxD": np.kron(dhat, dhat),
        "CxD": np.kron(chat, dhat),
        "DxC": np.kron(dhat, chat),
    }
    norms = {
        name: float(np.max(np.abs(j_block @ mat - mat @ j_block)))
        for name, mat in pairs.items()
    }
    return CommutatorReport(gamma=gamma, norms=norms)


# --- JSON circuit description ---


def circuit_to_json(circuit: Circuit) -> str:
    doc = {
        "label": circuit.label,
        "warnings": list(circuit.warnings),
        "elements": [
            {"kind": e.kind, "modes": list(e.modes), "angle": e.angle}
            for e in circuit.elements
        ],
    }
    return json.dumps(doc, indent=2)


def circuit_from_json(text: str) -> Circuit:
    doc = json.loads(text)
    elements = tuple(
        OpticalElement(e["kind"], tuple(e["modes"]), e.get("angle", 0.0))
        for e in doc["elements"]
    )
    return Circuit(elements, label=doc.get("label", ""), warnings=tuple(doc.get("warnings", ())))
