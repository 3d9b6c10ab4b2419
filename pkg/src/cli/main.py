"""CLI interface for StarkCheck."""
import json
import sys

import click
import mpmath as mp
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from config.logging_config import log
from config.settings import get_settings
from src.core import localrs
from src.core.cache import CODE_VERSION
from src.core.errors import InputError, StarkCheckError
from src.core.input_validator import InputValidator
from src.core.lfunc import adjoint_Lprime0, hecke_Lprime0
from src.core.qorders import Discriminant, antinorm, characters, class_group, order_invariants
from src.core.report import ReportFormatter
from src.core.thetaforms import theta_qexp
from src.core.units import elliptic_unit_conjugates, recognize_unit_minpoly
from src.core.verification import CHECKS, VerificationEngine

console = Console()


def _fail(message: str, code: int, title: str = "Error"):
    console.print(Panel(f"[red]✗ {message}[/red]", title=f"[bold red]{title}[/bold red]", border_style="red"))
    sys.exit(code)


def _order(disc: int, cond: int):
    try:
        d = Discriminant(disc, cond)
    except InputError as e:
        _fail(str(e), InputError.exit_code, "Invalid input")
    return d, class_group(d)


def _character(cg, index: int):
    chars = characters(cg)
    if not 0 <= index < len(chars):
        _fail(f"character index {index} out of range 0..{len(chars) - 1}", InputError.exit_code, "Invalid input")
    return chars[index]


@click.group()
@click.version_option(version=CODE_VERSION)
def cli():
    """
    StarkCheck - numerical verification of Stark and Rankin-Selberg identities.

    Checks identities for weight one dihedral forms attached to imaginary quadratic orders.
    """
    pass


@cli.command()
@click.option("--disc", "-d", type=int, required=True, help="Fundamental discriminant d < 0")
@click.option("--cond", "-c", type=int, default=1, show_default=True, help="Conductor c of the order")
@click.option("--char", "char_index", type=int, default=1, show_default=True, help="Character index (0 is trivial)")
@click.option("--prec", type=int, help="Working precision in bits")
@click.option("--coeffs", type=int, help="Coefficient bound B for q-expansions")
@click.option("--tol", "quadrature_tol", type=float, help="Quadrature tolerance")
@click.option("--primes", type=str, help="Primes for the mod-p regulator (comma-separated)")
@click.option("--cache", "cache_dir", type=click.Path(), envvar="CACHE_DIR", help="Cache directory")
@click.option("--out", "-o", "output", type=click.Path(), help="Write the JSON report here")
@click.option("--skip-petersson", is_flag=True, help="Skip the Petersson quadrature checks")
def run(disc, cond, char_index, prec, coeffs, quadrature_tol, primes, cache_dir, output, skip_petersson):
    """Run every identity check and write a JSON report."""
    validator = InputValidator()
    params = {"d": disc, "c": cond, "char_index": char_index, "prec": prec, "coeffs": coeffs,
              "quadrature_tol": quadrature_tol, "primes": validator.parse_primes(primes),
              "cache_dir": cache_dir, "output": output, "skip_petersson": skip_petersson}
    if primes is not None and params["primes"] is None:
        _fail(f"cannot parse prime list {primes!r}", InputError.exit_code, "Invalid input")
    result = validator.validate(params)
    if not result["valid"]:
        _fail(result["error"], InputError.exit_code, "Invalid input")
    config = result["config"]
    try:
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
            transient=True,
        ) as progress:
            task = progress.add_task("[cyan]Running checks...", total=None)
            engine = VerificationEngine(config)
            report = engine.run_all()
            progress.remove_task(task)
    except InputError as e:
        _fail(str(e), InputError.exit_code, "Invalid input")
    except KeyboardInterrupt:
        console.print("\n[yellow]✓ Interrupted by user[/yellow]")
        sys.exit(0)
    except Exception as e:
        log.error(f"CLI error: {e}", exc_info=True)
        _fail(f"Unexpected error: {e}", 1)

    formatter = ReportFormatter()
    console.print(formatter.rich_table(report))
    path = formatter.save_json(report, output)
    console.print(f"\n[green]✓ Report saved to:[/green] {path}")
    for record in report.unresolved:
        console.print(f"[yellow]! {record.check_id} unresolved: {record.error or 'no exact constant'}[/yellow]")
    sys.exit(report.exit_code())


@cli.command()
@click.option("--disc", "-d", type=int, required=True)
@click.option("--cond", "-c", type=int, default=1, show_default=True)
def classgroup(disc, cond):
    """Show Pic(O_c), its characters and the order invariants."""
    d, cg = _order(disc, cond)
    table = Table(title=f"Pic(O) for D = {d.D}")
    table.add_column("#")
    table.add_column("form")
    table.add_column("order")
    for i, form in enumerate(cg.forms):
        table.add_row(str(i), str(form), str(cg.element_order(i)))
    console.print(table)
    chars = characters(cg)
    for i, chi in enumerate(chars):
        console.print(f"  chi_{i}: exponents {chi.exponents} mod {chi.m}")
    console.print(Panel(json.dumps(order_invariants(d, cg=cg).as_dict(), indent=2),
                        title="[bold cyan]Invariants[/bold cyan]", border_style="cyan"))


@cli.command()
@click.option("--disc", "-d", type=int, required=True)
@click.option("--cond", "-c", type=int, default=1, show_default=True)
@click.option("--char", "char_index", type=int, default=1, show_default=True)
@click.option("--coeffs", type=int, default=30, show_default=True)
def theta(disc, cond, char_index, coeffs):
    """Print the first q-expansion coefficients of theta_chi."""
    d, cg = _order(disc, cond)
    chi = _character(cg, char_index)
    f = theta_qexp(d, chi, coeffs, cg)
    for n in range(1, coeffs + 1):
        a = f.coefficient(n)
        if not a.is_zero():
            console.print(f"  a_{n} = {a!r}")
    console.print(f"[bold]Level:[/bold] {f.level}")


@cli.command()
@click.option("--disc", "-d", type=int, required=True)
@click.option("--cond", "-c", type=int, default=1, show_default=True)
@click.option("--char", "char_index", type=int, default=1, show_default=True)
@click.option("--prec", type=int, default=None)
def lprime(disc, cond, char_index, prec):
    """L'(xi, 0) per embedding and L'(Ad, 0) for xi the antinorm of chi."""
    prec = prec or get_settings().default_prec
    d, cg = _order(disc, cond)
    chi = _character(cg, char_index)
    xi = antinorm(chi)
    try:
        with mp.workprec(prec):
            for j, value in hecke_Lprime0(d, xi, prec, cg=cg).items():
                console.print(f"  L'(xi, 0) [embedding {j}] = {mp.nstr(value, 30)}")
            adjoint = adjoint_Lprime0(d, xi, prec, cg)
            console.print(f"  L(eta, 0) = {adjoint.L_eta_0}")
            console.print(f"  L'(Ad, 0) = {mp.nstr(adjoint.value(), 30)}")
    except StarkCheckError as e:
        _fail(str(e), 1)


@cli.command()
@click.option("--disc", "-d", type=int, required=True)
@click.option("--cond", "-c", type=int, default=1, show_default=True)
@click.option("--prec", type=int, default=None)
def units(disc, cond, prec):
    """Elliptic unit conjugates and their minimal polynomial."""
    prec = prec or get_settings().default_prec
    d, cg = _order(disc, cond)
    with mp.workprec(prec):
        for i, value in elliptic_unit_conjugates(d, prec, cg):
            console.print(f"  {cg.forms[i]}: {mp.nstr(value, 20)}")
        if d.c > 1:
            try:
                poly, _, used = recognize_unit_minpoly(d, prec, cg)
            except StarkCheckError as e:
                _fail(str(e), 1)
            console.print(f"[bold]Minimal polynomial[/bold] ({used} bits, kappa {poly.kappa}): {poly.coeffs}")


@cli.command()
@click.option("--trials", type=int, default=100, show_default=True)
def local(trials):
    """Exact local Rankin-Selberg identities."""
    example = localrs.local_rs_zeta(dual=True)
    console.print(f"  Z = {example.zeta.as_text()}")
    console.print(f"  Psi = {example.psi.as_text()}")
    console.print(f"  L_p(f x f*) = zeta_p L_p(Ad): {localrs.unramified_factor_identity()}")
    sampled = localrs.specialisation_check(trials=trials)
    console.print(f"  specialisations: {sampled['trials'] - sampled['failures']}/{sampled['trials']} "
                  f"(worst error {sampled['worst_error']:.2e})")
    if not (example.psi == 1 and sampled["passed"]):
        sys.exit(1)


@cli.command(name="list-checks")
def list_checks():
    """Show the check ids and the identities they verify."""
    table = Table(title="Checks")
    table.add_column("id")
    table.add_column("anchor")
    table.add_column("identity")
    for check_id, anchor, description in CHECKS:
        table.add_row(check_id, anchor, description)
    console.print(table)


@cli.command()
def version():
    """Show version information."""
    console.print(
        Panel(
            f"[bold]StarkCheck v{CODE_VERSION}[/bold]\n\n"
            "[cyan]Stark units, Petersson norms and Rankin-Selberg periods[/cyan]\n"
            "for weight one dihedral forms",
            title="[bold yellow]StarkCheck[/bold yellow]",
            border_style="yellow",
        )
    )


def main():
    """Main entry point for CLI."""
    cli()


if __name__ == "__main__":
    main()
