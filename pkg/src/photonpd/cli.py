"""Command-line front door: verification, play, sweeps, and data export.

Exit codes: 0 success, 1 failed verification or internal computation
error, 2 invalid arguments.  JSON output is a single object carrying
schema_version; CSV column orders are fixed (landscape: theta,phi,payoff;
sweep: gamma,region,dd_nash,qq_nash).  Machine-readable output is
byte-identical across reruns with identical flags.
"""

from __future__ import annotations

import json
import math
import re
import sys

import click
import numpy as np

from .elements import (
    circuit_to_json,
    circuit_unitary,
    entangler_circuit,
    entangler_target,
    solve_entangler_phases,
    strategy_circuit,
    strategy_target,
    verify_commutators,
)
from .equilibrium import (
    StrategyGrid,
    ThresholdScanError,
    sweep_csv_rows,
    threshold_sweep,
)
from .fock import (
    GAME_SECTOR,
    Sector,
    apply,
    basis_state,
    dual_rail_block,
    equal_up_to_global_phase,
    project_dual_rail,
)
from .game import (
    BACKENDS,
    GameConfig,
    StrategyParams,
    initial_state,
    payoff_landscape,
    play,
    strategy_from_name,
)

SCHEMA_VERSION = 1

CONVENTIONS = (
    "beam splitter: B(theta) = exp[-i(theta/2)(a'b + b'a)]; "
    "B(pi/2)|1,0> = (|1,0> - i|0,1>)/sqrt(2)",
    "phase shifter: P(phi) = exp(i phi n); conjugate pairs apply (+phi, -phi)",
    "cross-Kerr: K(chi) = exp(-i chi n_i n_j); self-Kerr terms omitted; mirrors = identity",
    "entangler target: exp[i(gamma/2)(a'b - b'a)(c'd - d'c)], fixed by "
    "|CC> -> cos(gamma/2)|CC> + i sin(gamma/2)|DD>",
    "entangler circuit Kerr strength is solved, not assumed; the solved mapping "
    "(chi = -2*gamma away from gamma = 0) is recorded with the phases",
    "all comparisons quotient out a global phase; entangler residuals are max-norms "
    "on the 4x4 dual-rail block (outside that block the interferometers act "
    "nontrivially by construction)",
)

_GRID_RE = re.compile(r"^(\d+)x(\d+)$")


def _parse_grid(value: str, flag: str) -> StrategyGrid:
    match = _GRID_RE.match(value.strip())
    if not match:
        raise click.UsageError(f"{flag}: expected THETAxPHI steps like 65x33, got {value!r}")
    try:
        return StrategyGrid(int(match.group(1)), int(match.group(2)))
    except ValueError as exc:
        raise click.UsageError(f"{flag}: {exc}") from exc


def _parse_strategy(value: str, flag: str) -> StrategyParams:
    text = value.strip()
    try:
        if "," in text:
            parts = text.split(",")
            if len(parts) != 2:
                raise ValueError(f"expected 'theta,phi', got {value!r}")
            return StrategyParams(float(parts[0]), float(parts[1]))
        return strategy_from_name(text)
    except ValueError as exc:
        raise click.UsageError(f"{flag}: {exc}") from exc


def _game_config(gamma: float, backend: str) -> GameConfig:
    try:
        return GameConfig(gamma=gamma, backend=backend)
    except ValueError as exc:
        raise click.UsageError(f"--gamma: {exc}") from exc


def _emit(text: str, output: str) -> None:
    if output == "-":
        click.echo(text, nl=False)
    else:
        with open(output, "w") as fh:
            fh.write(text)


def _json_text(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _csv_text(header: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


@click.group()
@click.version_option(package_name="photonpd")
def main() -> None:
    """Optical quantum prisoner's dilemma: exact simulator and game tools."""


# --- verify ---


def _strategy_checks() -> list[dict]:
    sector = Sector(2, 1)
    checks = []
    for theta in np.linspace(0.0, math.pi, 9):
        for phi in np.linspace(0.0, math.pi / 2, 5):
            circuit = strategy_circuit(float(theta), float(phi))
            built = circuit_unitary(circuit, sector).matrix
            match = equal_up_to_global_phase(built, strategy_target(float(theta), float(phi)))
            checks.append(
                {
                    "check": f"strategy circuit vs target (theta={theta:.4f}, phi={phi:.4f})",
                    "residual": match.residual,
                }
            )
    return checks


def _entangler_checks() -> list[dict]:
    checks = []
    for gamma in np.linspace(0.0, math.pi / 2, 10):
        gamma = float(gamma)
        phases = solve_entangler_phases(gamma)
        checks.append(
            {
                "check": f"entangler phases solved (gamma={gamma:.4f}, {phases.kerr_mapping})",
                "residual": phases.residual,
            }
        )
        if not phases.valid:
            continue
        circuit = entangler_circuit(gamma, phases)
        op = circuit_unitary(circuit, GAME_SECTOR)
        state = apply(op, basis_state(GAME_SECTOR, (1, 0, 1, 0)))
        projection = project_dual_rail(state)
        target_amps = initial_state(gamma)
        state_match = equal_up_to_global_phase(
            projection.qubit_amplitudes.reshape(1, 4), target_amps.reshape(1, 4)
        )
        block_match = equal_up_to_global_phase(
            dual_rail_block(op), dual_rail_block(entangler_target(gamma))
        )
        checks.append(
            {
                "check": f"entangler block vs target (gamma={gamma:.4f})",
                "residual": block_match.residual,
            }
        )
        checks.append(
            {
                "check": f"entangled |CC> amplitudes (gamma={gamma:.4f})",
                "residual": state_match.residual,
            }
        )
        checks.append(
            {
                "check": f"dual-rail leakage of entangled |CC> (gamma={gamma:.4f})",
                "residual": projection.leakage,
            }
        )
    return checks


def _commutator_checks() -> list[dict]:
    checks = []
    for gamma in np.linspace(0.0, math.pi / 2, 5):
        report = verify_commutators(float(gamma))
        for name, norm in report.norms.items():
            checks.append(
                {
                    "check": f"commutator [entangler, {name}] (gamma={gamma:.4f})",
                    "residual": norm,
                }
            )
    return checks


@main.command()
@click.option(
    "--scope",
    type=click.Choice(["strategy", "entangler", "commutators", "all"]),
    default="all",
    show_default=True,
)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["human", "json"]), default="human")
@click.option("--output", "-o", default="-", help="Output path, '-' for stdout.")
def verify(scope: str, tol: float, fmt: str, output: str) -> None:
    """Check the optical constructions against their targets."""
    if not tol > 0:
        raise click.UsageError(f"--tol: must be positive, got {tol}")
    checks: list[dict] = []
    if scope in ("strategy", "all"):
        checks.extend(_strategy_checks())
    if scope in ("entangler", "all"):
        checks.extend(_entangler_checks())
    if scope in ("commutators", "all"):
        checks.extend(_commutator_checks())
    for check in checks:
        check["tol"] = tol
        check["pass"] = bool(check["residual"] <= tol)
    passed = all(check["pass"] for check in checks)

    if fmt == "json":
        _emit(
            _json_text(
                {
                    "schema_version": SCHEMA_VERSION,
                    "scope": scope,
                    "tol": tol,
                    "passed": passed,
                    "checks": checks,
                    "conventions": list(CONVENTIONS),
                }
            ),
            output,
        )
    else:
        lines = [f"verify scope={scope} tol={tol:g}", ""]
        for check in checks:
            status = "PASS" if check["pass"] else "FAIL"
            lines.append(f"  [{status}] {check['check']}: residual {check['residual']:.3e}")
        lines.append("")
        lines.append("conventions in force:")
        lines.extend(f"  - {line}" for line in CONVENTIONS)
        lines.append("")
        lines.append(f"result: {'all checks passed' if passed else 'FAILURES present'}")
        _emit("\n".join(lines) + "\n", output)
    if not passed:
        sys.exit(1)


# --- play ---


@main.command(name="play")
@click.option("--gamma", type=float, required=True, help="Entanglement in [0, pi/2], radians.")
@click.option("--a", "a_spec", default="C", show_default=True, help="A's move: C, D, Q or 'theta,phi'.")
@click.option("--b", "b_spec", default="C", show_default=True, help="B's move: C, D, Q or 'theta,phi'.")
@click.option("--backend", type=click.Choice(list(BACKENDS)), default="qubit", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["human", "json", "csv"]), default="human")
@click.option("--output", "-o", default="-")
def play_cmd(gamma: float, a_spec: str, b_spec: str, backend: str, fmt: str, output: str) -> None:
    """Play one round and print the outcome distribution and payoffs."""
    s_a = _parse_strategy(a_spec, "--a")
    s_b = _parse_strategy(b_spec, "--b")
    config = _game_config(gamma, backend)
    result = play(config, s_a, s_b)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "gamma": gamma,
        "a": {"theta": s_a.theta, "phi": s_a.phi},
        "b": {"theta": s_b.theta, "phi": s_b.phi},
        **result.to_dict(),
    }
    if fmt == "json":
        _emit(_json_text(doc), output)
    elif fmt == "csv":
        header = (
            "gamma", "theta_a", "phi_a", "theta_b", "phi_b", "backend",
            "p_cc", "p_cd", "p_dc", "p_dd", "payoff_a", "payoff_b", "leakage",
        )
        p = result.distribution.as_array()
        row = tuple(
            repr(x)
            for x in (gamma, s_a.theta, s_a.phi, s_b.theta, s_b.phi)
        ) + (backend,) + tuple(repr(float(x)) for x in p) + (
            repr(result.payoff_a),
            repr(result.payoff_b),
            "" if result.leakage is None else repr(result.leakage),
        )
        _emit(_csv_text(header, [row]), output)
    else:
        lines = [
            f"gamma   {gamma:.10g}   backend {backend}",
            f"A plays theta={s_a.theta:.10g}, phi={s_a.phi:.10g}",
            f"B plays theta={s_b.theta:.10g}, phi={s_b.phi:.10g}",
            "",
        ]
        for name, prob in zip(("CC", "CD", "DC", "DD"), result.distribution.as_array()):
            lines.append(f"  P({name}) = {prob:.10f}")
        lines.append("")
        lines.append(f"payoffs: A = {result.payoff_a:.10g}, B = {result.payoff_b:.10g}")
        if result.leakage is not None:
            lines.append(f"dual-rail leakage: {result.leakage:.3e}")
        _emit("\n".join(lines) + "\n", output)


# --- sweep ---


@main.command()
@click.option("--from", "gamma_from", type=float, default=0.0, show_default=True)
@click.option("--to", "gamma_to", type=float, default=math.pi / 2, show_default="pi/2")
@click.option("--samples", type=int, default=33, show_default=True)
@click.option("--grid", "grid_spec", default="65x33", show_default=True)
@click.option("--bisect-tol", type=float, default=1e-4, show_default=True)
@click.option("--backend", type=click.Choice(list(BACKENDS)), default="qubit", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["human", "json", "csv"]), default="human")
@click.option("--output", "-o", default="-")
def sweep(
    gamma_from: float,
    gamma_to: float,
    samples: int,
    grid_spec: str,
    bisect_tol: float,
    backend: str,
    fmt: str,
    output: str,
) -> None:
    """Sweep gamma, label regions, and estimate the two thresholds."""
    grid = _parse_grid(grid_spec, "--grid")
    config = _game_config(gamma_from, backend)
    try:
        result = threshold_sweep(
            config,
            gamma_min=gamma_from,
            gamma_max=gamma_to,
            samples=samples,
            grid=grid,
            bisection_tol=bisect_tol,
        )
    except ThresholdScanError as exc:
        click.echo(f"sweep failed: {exc}", err=True)
        sys.exit(1)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc

    if fmt == "json":
        _emit(_json_text({"schema_version": SCHEMA_VERSION, **result.to_dict()}), output)
    elif fmt == "csv":
        _emit(_csv_text(("gamma", "region", "dd_nash", "qq_nash"), sweep_csv_rows(result)), output)
    else:
        lines = [f"threshold sweep over [{gamma_from:.6g}, {gamma_to:.6g}], grid {grid.spec()}", ""]
        for s in result.samples:
            lines.append(
                f"  gamma={s.gamma:.6f}  {s.region:<13} dd_nash={str(s.dd_nash).lower():<5} "
                f"qq_nash={str(s.qq_nash).lower()}"
            )
        lines.append("")
        g1 = "not bracketed" if result.gamma1 is None else f"{result.gamma1:.4f}"
        g2 = "not bracketed" if result.gamma2 is None else f"{result.gamma2:.4f}"
        lines.append(f"gamma1 ~= {g1} (end of classical region)")
        lines.append(f"gamma2 ~= {g2} (start of fully-quantum region)")
        _emit("\n".join(lines) + "\n", output)


# --- landscape ---


@main.command()
@click.option("--gamma", type=float, required=True)
@click.option("--opponent", "opp_spec", default="C", show_default=True)
@click.option("--grid", "grid_spec", default="65x33", show_default=True)
@click.option("--backend", type=click.Choice(list(BACKENDS)), default="qubit", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["human", "json", "csv"]), default="csv")
@click.option("--output", "-o", default="-")
def landscape(
    gamma: float, opp_spec: str, grid_spec: str, backend: str, fmt: str, output: str
) -> None:
    """Payoff landscape of the moving player against a fixed opponent."""
    grid = _parse_grid(grid_spec, "--grid")
    opponent = _parse_strategy(opp_spec, "--opponent")
    config = _game_config(gamma, backend)
    land = payoff_landscape(config, opponent, grid.theta_steps, grid.phi_steps)

    if fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "gamma": gamma,
            "opponent": {"theta": opponent.theta, "phi": opponent.phi},
            "backend": backend,
            "thetas": [float(x) for x in land.thetas],
            "phis": [float(x) for x in land.phis],
            "payoffs": [[float(v) for v in row] for row in land.values],
        }
        _emit(_json_text(doc), output)
    elif fmt == "csv":
        rows = [
            (repr(float(theta)), repr(float(phi)), repr(float(land.values[i, j])))
            for i, theta in enumerate(land.thetas)
            for j, phi in enumerate(land.phis)
        ]
        _emit(_csv_text(("theta", "phi", "payoff"), rows), output)
    else:
        i, j = np.unravel_index(int(np.argmax(land.values)), land.values.shape)
        lines = [
            f"landscape gamma={gamma:.6g} vs opponent theta={opponent.theta:.6g}, "
            f"phi={opponent.phi:.6g} ({backend})",
            f"grid {grid.spec()}: payoff min {land.values.min():.6g}, max {land.values.max():.6g}",
            f"argmax at theta={land.thetas[i]:.6g}, phi={land.phis[j]:.6g}",
        ]
        _emit("\n".join(lines) + "\n", output)


# --- circuit ---


@main.command()
@click.argument("kind", type=click.Choice(["strategy", "entangler"]))
@click.option("--theta", type=float, default=0.0, show_default=True)
@click.option("--phi", type=float, default=0.0, show_default=True)
@click.option("--gamma", type=float, default=math.pi / 2, show_default="pi/2")
@click.option("--output", "-o", default="-")
def circuit(kind: str, theta: float, phi: float, gamma: float, output: str) -> None:
    """Print a built circuit as its JSON element list."""
    if kind == "strategy":
        built = strategy_circuit(theta, phi)
    else:
        try:
            phases = solve_entangler_phases(gamma)
        except ValueError as exc:
            raise click.UsageError(f"--gamma: {exc}") from exc
        if not phases.valid:
            click.echo(
                f"no valid entangler phases at gamma={gamma} "
                f"(best residual {phases.residual:.3e})",
                err=True,
            )
            sys.exit(1)
        built = entangler_circuit(gamma, phases)
    _emit(circuit_to_json(built) + "\n", output)


# --- serve ---


@main.command()
@click.option("--host", default=None, help="Bind address (default from PHOTONPD_HOST or 127.0.0.1).")
@click.option("--port", type=int, default=None, help="Port (default from PHOTONPD_PORT or 8000).")
def serve(host: str | None, port: int | None) -> None:
    """Run the HTTP game service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig.from_env()
    if host is not None:
        config = config.with_bind(host=host)
    if port is not None:
        config = config.with_bind(port=port)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
