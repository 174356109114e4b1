"""``teq`` command line: JSON in, JSON or CSV out.

Results go to stdout (or ``--out``); stderr only carries one JSON object per
line for errors and warnings. Exit codes: 0 ok, 2 invalid input, 3 search
budget exhausted without a certificate, 4 I/O failure, 5 property failure.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Any, Optional

import click
import numpy as np

from . import checks, optics, povm as pv, ucost, usd
from .matcore import TeqError, Tolerance, matrix_from_json

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_EXHAUSTED = 3
EXIT_IO = 4
EXIT_PROPERTY = 5


class CliFailure(Exception):
    def __init__(self, exit_code: int, code: str, message: str, **details: Any):
        super().__init__(message)
        self.exit_code = exit_code
        self.code = code
        self.details = details


def _emit_stderr(kind: str, code: str, message: str, **details: Any) -> None:
    click.echo(json.dumps({kind: code, "message": message, **details}, default=str), err=True)


def _dumps(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def _read_input(source: Optional[str]) -> Any:
    """``source`` is inline JSON or a path; ``-`` reads stdin."""
    if source is None:
        raise CliFailure(EXIT_INVALID, "missing_input", "--input is required")
    text = source
    stripped = source.lstrip()
    if not stripped.startswith(("{", "[")):
        try:
            text = sys.stdin.read() if source == "-" else Path(source).read_text()
        except OSError as exc:
            raise CliFailure(EXIT_IO, "io_error", f"cannot read {source}: {exc.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliFailure(EXIT_INVALID, "bad_json", f"input is not valid JSON: {exc}")


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise CliFailure(EXIT_IO, "io_error", f"cannot write {out}: {exc.strerror}")


def _tolerance(tol: Optional[float]) -> Tolerance:
    if tol is None:
        return Tolerance.from_env()
    return Tolerance(validation_eps=tol)


def _run(fn) -> None:
    """Map library and CLI failures onto exit codes."""
    try:
        code = fn()
    except CliFailure as exc:
        _emit_stderr("error", exc.code, str(exc), **exc.details)
        sys.exit(exc.exit_code)
    except pv.PovmValidationError as exc:
        _emit_stderr("error", exc.code, str(exc), violations=exc.violations)
        sys.exit(EXIT_INVALID)
    except TeqError as exc:
        _emit_stderr("error", exc.code, str(exc), **exc.details)
        sys.exit(EXIT_INVALID)
    sys.exit(code or EXIT_OK)


input_option = click.option("--input", "source", help="JSON file path, '-' for stdin, or inline JSON.")
out_option = click.option("--out", type=click.Path(dir_okay=False), help="Write the result here instead of stdout.")
tol_option = click.option("--tol", type=float, default=None, help="Validation tolerance (default 1e-9 or $TEQ_TOL).")
budget_option = click.option("--budget", type=click.IntRange(min=1), default=10**6, show_default=True,
                             help="Maximum number of SVDs in the certificate search.")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Time-energy costs of unitaries, Kraus stacks and POVMs."""


@main.command("unitary-cost")
@input_option
@out_option
@tol_option
def unitary_cost(source, out, tol):
    """Max eigenphase of a unitary matrix."""
    def go():
        u = matrix_from_json(_read_input(source))
        _write(_dumps({"cost_rad": ucost.maxnorm_unitary(u, _tolerance(tol))}), out)
    _run(go)


@main.command("povm-cost")
@input_option
@out_option
@tol_option
@budget_option
def povm_cost(source, out, tol, budget):
    """Lower and upper cost bounds of a POVM, exact when certified."""
    def go():
        t = _tolerance(tol)
        povm = pv.Povm.from_json(_read_input(source), t)
        report = pv.povm_cost(povm, pv.EnumerationBudget(budget), t)
        _write(_dumps(report.to_json()), out)
        if report.exhausted and report.certificate is None:
            _emit_stderr("warning", "budget_exhausted",
                         "certificate search ran out of budget without a certificate")
            return EXIT_EXHAUSTED
        return EXIT_OK
    _run(go)


@main.command("partial-u-bounds")
@input_option
@out_option
@tol_option
def partial_u_bounds(source, out, tol):
    """Lower bounds for completing a stack of Kraus blocks to a unitary."""
    def go():
        t = _tolerance(tol)
        stack = ucost.KrausStack.from_json(_read_input(source), t)
        _write(_dumps(ucost.partial_u_bounds(stack, t).to_json()), out)
    _run(go)


@main.command("element-order-cost")
@input_option
@out_option
@tol_option
def element_order_cost(source, out, tol):
    """Cost of the element-wise embedding with outcomes in the given order."""
    def go():
        t = _tolerance(tol)
        povm = pv.Povm.from_json(_read_input(source), t)
        _write(_dumps({"cost_rad": pv.element_order_cost(povm, t)}), out)
    _run(go)


# -- usd -------------------------------------------------------------------

@main.group("usd")
def usd_group():
    """Optimal unambiguous discrimination of symmetric state families."""


@usd_group.command("build")
@input_option
@out_option
@tol_option
def usd_build(source, out, tol):
    """Construct the optimal USD POVM of a family."""
    def go():
        t = _tolerance(tol)
        fam = usd.family_from_json(_read_input(source), t)
        res = usd.optimal_usd_povm(fam, t)
        for w in res.warnings:
            _emit_stderr("warning", "usd", w)
        payload = {"p": res.p, "povm": res.povm.to_json(), "warnings": list(res.warnings)}
        _write(_dumps(payload), out)
    _run(go)


@usd_group.command("bound")
@input_option
@out_option
@tol_option
def usd_bound(source, out, tol):
    """Closed-form lower bound on the cost of the optimal USD POVM."""
    def go():
        t = _tolerance(tol)
        fam = usd.family_from_json(_read_input(source), t)
        for w in fam.warnings:
            _emit_stderr("warning", "usd", w)
        _write(_dumps({"lower_rad": usd.usd_cost_lower_bound(fam, t)}), out)
    _run(go)


def _k_range(grid: Optional[str]):
    if grid is None:
        return usd.DEFAULT_K_BARS
    try:
        lo, hi = (int(x) for x in grid.split(":"))
    except ValueError:
        raise CliFailure(EXIT_INVALID, "bad_grid", f"--grid must look like KMIN:KMAX, got {grid!r}")
    return tuple(range(lo, hi + 1))


@usd_group.command("sweep")
@out_option
@tol_option
@click.option("--intensity", "intensities", type=float, multiple=True,
              help="Mean photon number |alpha|^2; repeatable. Defaults to 0.1, 0.5, 1, 3.")
@click.option("--grid", default=None, help="K_bar range as KMIN:KMAX (default 2:30).")
@click.option("--trunc-dim", type=int, default=50, show_default=True)
def usd_sweep(out, tol, intensities, grid, trunc_dim):
    """Bound versus K_bar for coherent-state families, as CSV."""
    def go():
        rows, warns = usd.fig5_rows(intensities or usd.DEFAULT_INTENSITIES, _k_range(grid),
                                    trunc_dim, _tolerance(tol))
        for w in warns:
            _emit_stderr("warning", "usd", w)
        _write(usd.fig5_csv(rows), out)
    _run(go)


# -- optics ----------------------------------------------------------------

@main.group("optics")
def optics_group():
    """Beam splitters, PBS and energy splits."""


@optics_group.command("bs")
@out_option
@click.option("--reflectivity", type=float, required=True, help="|r| in [0, 1].")
def optics_bs(out, reflectivity):
    """Cheapest beam splitter with a given reflectivity."""
    def go():
        _write(_dumps({"cost_rad": optics.bs_optimal_cost(reflectivity)}), out)
    _run(go)


@optics_group.command("pbs")
@out_option
@click.option("--grid", type=click.IntRange(min=1), default=100, show_default=True,
              help="Number of global-phase grid points.")
def optics_pbs(out, grid):
    """Polarizing beam splitter cost, closed form and grid minimum."""
    def go():
        _write(_dumps({"cost_rad": optics.pbs_optimal_cost(),
                       "grid_cost_rad": optics.pbs_grid_cost(grid)}), out)
    _run(go)


@optics_group.command("split")
@out_option
@click.option("--cost", "costs", type=float, multiple=True, required=True,
              help="Element cost in radians; repeatable.")
@click.option("--total-time", type=float, default=1.0, show_default=True)
def optics_split(out, costs, total_time):
    """Energy-optimal time split over sequential elements."""
    def go():
        split = optics.optimal_time_split(
            optics.ElementCosts.of(*[(f"e{i}", c) for i, c in enumerate(costs)]), total_time)
        _write(_dumps({"total_time": split.total_time, "times": list(split.times),
                       "total_energy": split.total_energy, "degenerate": split.degenerate}), out)
    _run(go)


@optics_group.command("ratio")
@out_option
@click.option("--phi", type=float, default=None, help="Single angle; prints JSON.")
@click.option("--grid", type=click.IntRange(min=0), default=100, show_default=True,
              help="Number of grid points on [0.05, pi/2 - 0.05] when --phi is absent.")
@click.option("--total-time", type=float, default=1.0, show_default=True)
def optics_ratio(out, phi, grid, total_time):
    """Implementation-to-ideal energy ratio of the rank-2 optical POVM."""
    def go():
        if phi is not None:
            _write(_dumps({"phi_rad": phi,
                           "ratio": optics.implementation_energy_ratio(phi, total_time)}), out)
        else:
            _write(optics.fig4_sweep(optics.default_phi_grid(grid), total_time=total_time), out)
    _run(go)


# -- reproduce -------------------------------------------------------------

def _reproduce_bell1() -> dict:
    report = pv.povm_cost(optics.singlet_povm())
    impl = optics.bs_optimal_cost(1 / math.sqrt(2))
    return {"impl_rad": impl, "ideal_rad": report.lower,
            "optimal": bool(abs(impl - report.lower) <= 1e-9)}


def _reproduce_bell2() -> dict:
    ideal = ucost.maxnorm_unitary(optics.bell_two_state_unitary())
    lower = pv.povm_cost(optics.two_bell_povm()).lower
    # one BS at pi/4 plus two PBS at pi/2, optimal split with T = 1
    split = optics.optimal_time_split(
        optics.ElementCosts.of(("BS", optics.bs_optimal_cost(1 / math.sqrt(2))),
                               ("PBS1", optics.pbs_optimal_cost()),
                               ("PBS2", optics.pbs_optimal_cost())), 1.0)
    return {"ideal_rad": ideal, "povm_lower_rad": lower,
            "impl_lower_estimate": split.total_energy}


def _rank2_csv(points: int) -> str:
    lines = ["phi_rad,lower_rad,upper_rad,exact"]
    for phi in np.linspace(0, math.pi / 2, points + 2)[1:-1]:
        rep = pv.povm_cost(optics.rank2_povm(float(phi)))
        lines.append(f"{phi:.16g},{rep.lower:.16g},{rep.upper:.16g},{str(rep.exact).lower()}")
    return "\n".join(lines) + "\n"


@main.command("reproduce")
@click.argument("target", type=click.Choice(["bell1", "bell2", "fig4", "fig5", "rank2-sweep"]))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".", show_default=True,
              help="Directory for generated files.")
@click.option("--grid", type=click.IntRange(min=0), default=None,
              help="Grid size for fig4 (default 100) and rank2-sweep (default 30).")
def reproduce(target, out_dir, grid):
    """Regenerate a worked example or figure data set."""
    def go():
        directory = Path(out_dir)
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CliFailure(EXIT_IO, "io_error", f"cannot create {out_dir}: {exc.strerror}")

        def save(name: str, text: str) -> str:
            path = directory / name
            try:
                path.write_text(text)
            except OSError as exc:
                raise CliFailure(EXIT_IO, "io_error", f"cannot write {path}: {exc.strerror}")
            return str(path)

        if target == "bell1":
            summary = _reproduce_bell1()
        elif target == "bell2":
            summary = _reproduce_bell2()
        elif target == "fig4":
            points = 100 if grid is None else grid
            path = save("fig4.csv", optics.fig4_sweep(optics.default_phi_grid(points)))
            summary = {"files": [path], "rows": points}
        elif target == "fig5":
            rows, warns = usd.fig5_rows()
            files = [save("fig5.csv", usd.fig5_csv(rows)),
                     save("fig5.warnings.json", _dumps(warns))]
            summary = {"files": files, "rows": len(rows), "warnings": len(warns)}
        else:
            points = 30 if grid is None else grid
            path = save("rank2_sweep.csv", _rank2_csv(points))
            summary = {"files": [path], "rows": points}
        click.echo(_dumps({"target": target, **summary}), nl=False)
    _run(go)


@main.command("check")
@click.option("--seed", type=int, default=0, show_default=True)
@out_option
def check(seed, out):
    """Run the randomized invariant suites."""
    def go():
        report = checks.run_checks(seed)
        _write(_dumps(report), out)
        if report["failed"]:
            for d in report["details"]:
                if not d["passed"]:
                    _emit_stderr("error", "property_failure", d["name"], **d)
            return EXIT_PROPERTY
        return EXIT_OK
    _run(go)


if __name__ == "__main__":
    main()
