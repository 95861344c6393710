"""Rich rendering of traces, actions, verdicts and witness reports, plus their JSON models"""

import logging
from typing import Iterable, Optional, Sequence

from rich import box
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from .costenv import funds_view
from .equivalence import Inconclusive, Proven, RefutedWithinBounds, Verdict, WitnessReport, format_credit
from .frontend import GameMoveModel, TraceModel, TraceStepModel, VerdictModel, pretty_system
from .scenarios import Comparison, ScenarioInfo
from .semantics import Trace, WeightedTransition, owner_funds_line, trace_to_json

logger = logging.getLogger(__name__)

_VERDICT_STYLE = {"Proven": "green", "RefutedWithinBounds": "red", "Inconclusive": "yellow"}


def trace_model(trace: Trace) -> TraceModel:
    return TraceModel(
        steps=[TraceStepModel(**step) for step in trace_to_json(trace)],
        final_record=trace.final.record,
        final_funds=funds_view(trace.final.env),
        complete=trace.complete,
        truncated=trace.truncated,
    )


def verdict_model(verdict: Verdict, credit: int) -> VerdictModel:
    cause = []
    if isinstance(verdict, RefutedWithinBounds):
        cause = [
            GameMoveModel(side=m.side, label=m.label, weight=m.weight, response_weight=m.response_weight,
                          required=format_credit(m.required), left=m.left, right=m.right)
            for m in verdict.cause
        ]
    return VerdictModel(
        kind=verdict.kind,
        credit=credit,
        required=format_credit(verdict.required),
        pairs=verdict.pairs,
        truncated=verdict.truncated,
        cause=cause,
        reason=verdict.reason if isinstance(verdict, Inconclusive) else "",
    )


class Reporter:
    """Console tables for the CLI commands"""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()

    def render_trace(self, trace: Trace, title: str = "Run"):
        self.console.print(Panel.fit(
            f"[bold cyan]{title}[/bold cyan]\n"
            f"Start: {escape(pretty_system(trace.initial.system))}\n"
            f"Funds: {owner_funds_line(trace.initial.env)}",
            border_style="cyan"
        ))

        table = Table(box=box.ROUNDED)
        table.add_column("#", justify="right", style="dim")
        table.add_column("Label", style="cyan")
        table.add_column("Weight", justify="right")
        table.add_column("Record", justify="right")
        table.add_column("Funds")
        for i, step in enumerate(trace.steps, 1):
            table.add_row(str(i), escape(str(step.label)), str(step.weight), str(step.config.record),
                          owner_funds_line(step.config.env))
        self.console.print(table)

        status = "maximal" if trace.complete else ("truncated" if trace.truncated else "incomplete")
        self.console.print(f"Final record: [bold]{trace.final.record}[/bold]  "
                           f"funds: {owner_funds_line(trace.final.env)}  ({len(trace.steps)} steps, {status})")

    def render_actions(self, transitions: Sequence[WeightedTransition], title: str = "Enabled actions"):
        if not transitions:
            self.console.print("[yellow]No actions enabled.[/yellow]")
            return
        table = Table(title=title, box=box.ROUNDED)
        table.add_column("Label", style="cyan")
        table.add_column("Weight", justify="right")
        table.add_column("Target")
        table.add_column("Funds after")
        for tr in transitions:
            table.add_row(escape(str(tr.label)), str(tr.weight), escape(pretty_system(tr.target.system)),
                          owner_funds_line(tr.target.env))
        self.console.print(table)

    def render_verdict(self, verdict: Verdict, credit: int, title: str = "Amortised preorder"):
        style = _VERDICT_STYLE[verdict.kind]
        lines = [
            f"[bold {style}]{verdict.kind}[/bold {style}]",
            f"Credit: {credit}",
            f"Required credit: {format_credit(verdict.required)}",
            f"Pairs explored: {verdict.pairs}" + (" (truncated)" if verdict.truncated else ""),
        ]
        if isinstance(verdict, Inconclusive):
            lines.append(f"Reason: {verdict.reason}")
        self.console.print(Panel.fit("\n".join(lines), title=title, border_style=style))

        if isinstance(verdict, Proven):
            self.console.print(f"[dim]Witness: {len(verdict.witness)} credited pairs[/dim]")
        if isinstance(verdict, RefutedWithinBounds) and verdict.cause:
            table = Table(title="Losing defence", box=box.ROUNDED, show_lines=True)
            table.add_column("Side", style="cyan")
            table.add_column("Challenge")
            table.add_column("Weight", justify="right")
            table.add_column("Best answer", justify="right")
            table.add_column("Needs", justify="right")
            table.add_column("Left")
            table.add_column("Right")
            for move in verdict.cause:
                answer = "none" if move.response_weight is None else str(move.response_weight)
                table.add_row(move.side, escape(move.label), str(move.weight), answer, format_credit(move.required),
                              escape(move.left), escape(move.right))
            self.console.print(table)

    def render_witness_report(self, report: WitnessReport, title: str = "Witness verification"):
        table = Table(title=title, box=box.ROUNDED)
        table.add_column("Entry", style="cyan", no_wrap=True)
        table.add_column("Instances", justify="center")
        table.add_column("Status", justify="center")
        for entry in report.entries:
            status = "[green]ok[/green]" if entry.passed else f"[red]{len(entry.failures)} failures[/red]"
            table.add_row(escape(entry.name), str(entry.instances), status)
        self.console.print(table)
        for failure in report.failures:
            self.console.print(f"[red]✗[/red] {escape(failure)}")
        self.console.print(f"Reached pairs checked beyond the listed instances: {report.reached}")
        if report.truncated:
            self.console.print("[yellow]⚠ Weak closures hit the exploration bounds[/yellow]")
        if report.closure_truncated:
            self.console.print("[yellow]⚠ Stopped checking reached pairs at the closure cap[/yellow]")
        if report.passed:
            self.console.print("[green]✓[/green] Witness family verified")

    def render_scenarios(self, scenarios: Iterable[ScenarioInfo], comparisons: Iterable[Comparison]):
        table = Table(title="Scenarios", box=box.ROUNDED)
        table.add_column("Id", style="cyan", no_wrap=True)
        table.add_column("Description")
        for info in scenarios:
            table.add_row(escape(info.signature), info.summary)
        self.console.print(table)

        table = Table(title="Comparisons", box=box.ROUNDED)
        table.add_column("Name", style="cyan", no_wrap=True)
        table.add_column("Left")
        table.add_column("Right")
        table.add_column("Credit", justify="right")
        table.add_column("View")
        table.add_column("Expected")
        for c in comparisons:
            view = c.view if not c.observers else f"{c.view} ({','.join(c.observers)})"
            table.add_row(c.name, escape(c.left), escape(c.right), str(c.credit), view, c.expected)
        self.console.print(table)
