"""Picost workbench CLI: run configurations and check amortised preorders between them"""

import functools
import json
import logging
import time
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import click
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table
from rich import box

from . import config, scenarios
from .costenv import EXTERNAL, Configuration, with_external
from .equivalence import Inconclusive, Proven, Verdict, verify_witness
from .errors import EnvError, PicostError, ScenarioError, SyntaxIssue, WitnessError
from .frontend import env_to_document, load_env, load_program, load_witness, pretty_system
from .reporting import Reporter, trace_model, verdict_model
from .semantics import (
    ActionOptions, ExplorationBounds, RunStrategy, abstract_actions, barbs, concrete_actions, explore, run, to_dot,
)
from .syntax import Owner, Value

# File logging at DEBUG, console only for warnings so stdout stays deterministic
file_handler = logging.FileHandler(config.get_log_file("picost"))
file_handler.setLevel(logging.DEBUG)
file_handler.setFormatter(logging.Formatter(config.LOG_FORMAT, datefmt=config.LOG_DATE_FORMAT))

console_handler = logging.StreamHandler()
console_handler.setLevel(logging.WARNING)
console_handler.setFormatter(logging.Formatter('%(message)s'))

logging.basicConfig(
    level=logging.DEBUG,
    handlers=[file_handler, console_handler]
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_PARSE = 65


def verdict_exit_code(verdict: Verdict) -> int:
    if isinstance(verdict, Proven):
        return EXIT_OK
    if isinstance(verdict, Inconclusive):
        return EXIT_INCONCLUSIVE
    return EXIT_REFUTED


def handled(fn: Callable) -> Callable:
    """Map workbench errors to exit codes with a red message"""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return fn(*args, **kwargs)
        except (SyntaxIssue, EnvError, WitnessError) as e:
            logger.error(f"Input rejected: {e}")
            Console().print(f"[red]Error: {escape(str(e))}[/red]")
            ctx.exit(EXIT_PARSE)
        except (ScenarioError, click.UsageError, ValueError) as e:
            logger.error(f"Usage error: {e}")
            Console().print(f"[red]Error: {escape(str(e))}[/red]")
            ctx.exit(EXIT_USAGE)
        except PicostError as e:
            logger.error(f"Command failed: {e}")
            Console().print(f"[red]Error: {escape(str(e))}[/red]")
            ctx.exit(EXIT_PARSE)
    return wrapper


def _options(*decorators: Callable) -> Callable:
    def apply(fn: Callable) -> Callable:
        for decorator in reversed(decorators):
            fn = decorator(fn)
        return fn
    return apply


source_options = _options(
    click.option('--program', type=click.Path(exists=True, dir_okay=False), help='Program file (.picost)'),
    click.option('--env', 'env_path', type=click.Path(exists=True, dir_okay=False), help='Cost environment (JSON)'),
    click.option('--seed-example', help='Shipped scenario id instead of files, e.g. ud(42)'),
)

right_options = _options(
    click.option('--right-program', type=click.Path(exists=True, dir_okay=False), help='Program on the right'),
    click.option('--right-env', type=click.Path(exists=True, dir_okay=False), help='Environment on the right'),
    click.option('--right-example', help='Shipped scenario id on the right'),
)

bounds_options = _options(
    click.option('--credit', type=int, default=None, help='Initial credit n0'),
    click.option('--credit-cap', type=int, default=config.CREDIT_CAP, show_default=True,
                 help='Largest credit tracked before a requirement counts as unbounded'),
    click.option('--tau-depth', type=int, default=config.TAU_DEPTH, show_default=True,
                 help='Longest tau sequence used to answer a challenge'),
    click.option('--state-cap', type=int, default=config.STATE_CAP, show_default=True,
                 help='Largest number of state pairs explored'),
    click.option('--negative-credits', is_flag=True, help='Debug mode: credits may go below zero'),
)

json_option = click.option('--json', 'as_json', is_flag=True, help='Print JSON instead of tables')


def _bounds(credit_cap: int, tau_depth: int, state_cap: int, negative_credits: bool) -> ExplorationBounds:
    return ExplorationBounds(tau_depth=tau_depth, state_cap=state_cap, credit_cap=credit_cap,
                             allow_negative_credit=negative_credits)


def load_configuration(program: Optional[str], env_path: Optional[str],
                       seed_example: Optional[str]) -> Tuple[Configuration, Tuple[Value, ...], str]:
    """Configuration from a shipped scenario or from a program/environment pair"""
    if seed_example:
        built = scenarios.build(seed_example)
        return built.configuration, built.value_universe, seed_example
    if not program or not env_path:
        raise click.UsageError("Give --seed-example, or both --program and --env")
    unit = load_program(program)
    if unit.system is None:
        raise SyntaxIssue(f"{program} has no system entry")
    return Configuration(load_env(env_path), unit.system), (), Path(program).name


def parse_observers(text: Optional[str]) -> Tuple[str, ...]:
    if not text:
        return ()
    observers = tuple(o.strip() for o in text.split(",") if o.strip())
    if "external" in observers and len(observers) > 1:
        raise click.UsageError("--observers external cannot be combined with named owners")
    return observers


def _observed(c: Configuration, observers: Tuple[str, ...]) -> Tuple[Configuration, frozenset]:
    if observers == ("external",):
        return Configuration(with_external(c.env, EXTERNAL), c.system), frozenset((EXTERNAL,))
    return c, frozenset(Owner(o) for o in observers)


@click.group()
@click.version_option(package_name="picost-workbench")
def cli():
    """Picost workbench - costed pi-calculus execution and amortised bisimulation checking"""
    pass


@cli.command(name="run")
@source_options
@click.option('--variant', help='Named run strategy of the scenario (e.g. no-store, store, cycle)')
@click.option('--steps', type=int, default=config.RUN_STEPS, show_default=True, help='Maximum number of reductions')
@json_option
@handled
def run_command(program, env_path, seed_example, variant, steps, as_json):
    """Execute reductions and report per-step weights and the final record"""
    start_time = time.time()
    c, _, name = load_configuration(program, env_path, seed_example)
    if seed_example:
        strategy = scenarios.run_variant(seed_example, variant)
    elif variant in (None, "cycle"):
        strategy = RunStrategy(until_cycle=variant == "cycle")
    else:
        raise click.UsageError(f"Programs only support the cycle variant, got {variant}")
    logger.info(f"Starting run of {name} (variant={variant}, steps={steps})")

    trace = run(c, steps, strategy)
    if as_json:
        click.echo(trace_model(trace).model_dump_json(indent=2))
    else:
        Reporter().render_trace(trace, title=f"Run of {name}" + (f" ({variant})" if variant else ""))

    elapsed = (time.time() - start_time) * 1000
    logger.info(f"Completed run command in {elapsed:.2f}ms")
    click.get_current_context().exit(EXIT_INCONCLUSIVE if trace.truncated else EXIT_OK)


@cli.command()
@source_options
@click.option('--observers', help='"external" or a comma separated list of owners; omit for concrete actions')
@json_option
@handled
def actions(program, env_path, seed_example, observers, as_json):
    """List the actions enabled in a configuration"""
    c, universe, name = load_configuration(program, env_path, seed_example)
    options = ActionOptions(universe=universe)
    chosen = parse_observers(observers)
    if chosen:
        c, owners = _observed(c, chosen)
        transitions = abstract_actions(c, owners, options=options)
    else:
        transitions = concrete_actions(c, options)
    logger.info(f"Listed {len(transitions)} actions of {name}")

    if as_json:
        click.echo(json.dumps([
            {"label": str(t.label), "weight": t.weight, "target": pretty_system(t.target.system)}
            for t in transitions
        ], indent=2))
    else:
        Reporter().render_actions(transitions, title=f"Actions of {name}")


def _check(view: str, program, env_path, seed_example, right_program, right_env, right_example,
           credit, credit_cap, tau_depth, state_cap, negative_credits, as_json, observers: Tuple[str, ...] = ()):
    start_time = time.time()
    bounds = _bounds(credit_cap, tau_depth, state_cap, negative_credits)
    right_given = right_program or right_env or right_example
    if seed_example in scenarios.COMPARISONS and not right_given:
        comparison = scenarios.COMPARISONS[seed_example]
        n0 = comparison.credit if credit is None else credit
        logger.info(f"Starting registered comparison {seed_example} at credit {n0}")
        verdict = scenarios.run_comparison(seed_example, n0, bounds)
        title = f"{comparison.left} against {comparison.right}"
    else:
        if not right_given:
            raise click.UsageError("Give a right configuration with --right-example or --right-program/--right-env")
        left, left_universe, left_name = load_configuration(program, env_path, seed_example)
        right, right_universe, right_name = load_configuration(right_program, right_env, right_example)
        n0 = credit or 0
        universe = tuple(dict.fromkeys(left_universe + right_universe))
        verdict = scenarios.compare(left, right, n0, view, observers, bounds, universe)
        title = f"{left_name} against {right_name}"

    if as_json:
        click.echo(verdict_model(verdict, n0).model_dump_json(indent=2))
    else:
        Reporter().render_verdict(verdict, n0, title=title)
    elapsed = (time.time() - start_time) * 1000
    logger.info(f"Completed check ({verdict.kind}) in {elapsed:.2f}ms")
    click.get_current_context().exit(verdict_exit_code(verdict))


@cli.command()
@source_options
@right_options
@bounds_options
@json_option
@handled
def check(**kwargs):
    """Amortised preorder over concrete actions (registered comparisons use their own view)"""
    _check("concrete", **kwargs)


@cli.command(name="check-abstract")
@source_options
@right_options
@bounds_options
@click.option('--observers', default="external", show_default=True,
              help='"external" or a comma separated list of observing owners')
@json_option
@handled
def check_abstract(observers, **kwargs):
    """Amortised preorder over the observers' abstract actions"""
    _check("abstract", observers=parse_observers(observers), **kwargs)


@cli.command(name="check-tau")
@source_options
@right_options
@bounds_options
@json_option
@handled
def check_tau(**kwargs):
    """Cost improvement: amortised preorder over reductions only"""
    _check("tau", **kwargs)


def _witness_path(witness: str) -> Path:
    path = Path(witness)
    if path.exists():
        return path
    try:
        return config.get_corpus_file(witness)
    except FileNotFoundError:
        raise click.UsageError(f"No witness file {witness} (neither a path nor a shipped corpus file)")


@cli.command(name="verify-witness")
@click.option('--witness', required=True, help='Witness family JSON (path or shipped corpus file name)')
@click.option('--tau-depth', type=int, default=config.TAU_DEPTH, show_default=True)
@click.option('--state-cap', type=int, default=config.STATE_CAP, show_default=True)
@click.option('--closure', type=int, default=config.WITNESS_CLOSURE, show_default=True,
              help='How many reached pairs beyond the listed instances to check')
@json_option
@handled
def verify_witness_command(witness, tau_depth, state_cap, closure, as_json):
    """Check every instance of a witness family against the transfer clauses"""
    start_time = time.time()
    family = load_witness(_witness_path(witness))
    report = verify_witness(family, ExplorationBounds(tau_depth=tau_depth, state_cap=state_cap), closure=closure)
    if as_json:
        click.echo(json.dumps({
            "passed": report.passed,
            "truncated": report.truncated,
            "reached": report.reached,
            "closure_truncated": report.closure_truncated,
            "entries": [{"name": e.name, "instances": e.instances, "failures": e.failures} for e in report.entries],
        }, indent=2))
    else:
        Reporter().render_witness_report(report, title=f"Witness {Path(witness).name}")
    elapsed = (time.time() - start_time) * 1000
    logger.info(f"Completed witness verification in {elapsed:.2f}ms")
    if report.failures:
        code = EXIT_REFUTED
    else:
        code = EXIT_INCONCLUSIVE if report.truncated else EXIT_OK
    click.get_current_context().exit(code)


@cli.command(name="barbs")
@source_options
@click.option('--depth', type=int, default=config.BARB_DEPTH, show_default=True, help='Reductions explored')
@json_option
@handled
def barbs_command(program, env_path, seed_example, depth, as_json):
    """Payable unrestricted prefixes reachable within the given depth"""
    c, _, name = load_configuration(program, env_path, seed_example)
    report = barbs(c, depth)
    found = sorted(f"{n}{d}" for n, d in report.barbs)
    if as_json:
        click.echo(json.dumps({"barbs": found, "truncated": report.truncated}, indent=2))
    else:
        console = Console()
        console.print(Panel.fit(
            f"[bold cyan]Barbs of {escape(name)}[/bold cyan] (depth {depth})\n"
            + ("\n".join(escape(b) for b in found) if found else "[yellow]none[/yellow]"),
            border_style="cyan"
        ))
        if report.truncated:
            console.print("[yellow]⚠ More states lie beyond the depth bound[/yellow]")
    click.get_current_context().exit(EXIT_INCONCLUSIVE if report.truncated else EXIT_OK)


@cli.command()
@click.argument('name', required=False)
@json_option
@handled
def example(name, as_json):
    """List shipped scenarios and comparisons, or show one scenario"""
    if name is None:
        Reporter().render_scenarios(scenarios.list_scenarios(), scenarios.COMPARISONS.values())
        return

    built = scenarios.build(name)
    system_text = pretty_system(built.system)
    if as_json:
        click.echo(json.dumps({
            "name": name,
            "system": system_text,
            "env": env_to_document(built.env).model_dump(mode="json"),
            "notes": built.notes,
        }, indent=2))
        return

    console = Console()
    console.print(Panel.fit(
        f"[bold cyan]{escape(name)}[/bold cyan]\n{escape(built.notes)}",
        border_style="cyan"
    ))
    console.print(escape(system_text))
    console.print(escape(built.env.describe()))
    variants = scenarios.RUN_VARIANTS.get(scenarios.parse_scenario_id(name)[0], {})
    if variants:
        console.print(f"[dim]Run variants: {', '.join(sorted(variants))}[/dim]")


@cli.command()
@source_options
@click.option('--observers', help='"external" or owners; omit for concrete actions')
@click.option('--state-cap', type=int, default=500, show_default=True, help='Largest number of states explored')
@click.option('--dot', 'as_dot', is_flag=True, help='Print the fragment in DOT format')
@handled
def graph(program, env_path, seed_example, observers, state_cap, as_dot):
    """Explore the weighted LTS fragment reachable from a configuration"""
    c, universe, name = load_configuration(program, env_path, seed_example)
    options = ActionOptions(universe=universe)
    chosen = parse_observers(observers)
    if chosen:
        c, owners = _observed(c, chosen)
        lts = explore(c, ExplorationBounds(state_cap=state_cap), lambda s: abstract_actions(s, owners, options=options))
    else:
        lts = explore(c, ExplorationBounds(state_cap=state_cap), lambda s: concrete_actions(s, options))

    if as_dot:
        click.echo(to_dot(lts), nl=False)
    else:
        table = Table(title=f"LTS of {escape(name)}", box=box.ROUNDED)
        table.add_column("States", justify="center")
        table.add_column("Transitions", justify="center")
        table.add_column("Truncated", justify="center")
        table.add_row(str(len(lts.states)), str(len(lts.edges)), "yes" if lts.truncated else "no")
        Console().print(table)
    click.get_current_context().exit(EXIT_INCONCLUSIVE if lts.truncated else EXIT_OK)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Console entry point; returns the process exit code"""
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="picost", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        Console().print("[yellow]Aborted[/yellow]")
        return EXIT_REFUTED
    return result if isinstance(result, int) else EXIT_OK


if __name__ == '__main__':
    raise SystemExit(main())
