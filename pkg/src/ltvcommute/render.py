# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Report rendering: rich tables for people, ``key=value`` blocks for scripts.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

import io

from rich.console import Console, Group, RenderableType
from rich.table import Table
from rich.text import Text

from ltvcommute.commute import CommutativityReport, Verdict
from ltvcommute.constants import ICON_FAIL, ICON_PASS, ICON_UNKNOWN, REPORT_DIGITS
from ltvcommute.system import MixedFreeConstants, PairConstants, SecondOrderConstants
from ltvcommute.transitivity import ChainReport

_VERDICT_STYLE = {
    Verdict.COMMUTATIVE: "bold green",
    Verdict.NOT_COMMUTATIVE: "bold red",
    Verdict.INCONCLUSIVE: "bold yellow",
}


def format_value(value: float | None, digits: int = REPORT_DIGITS) -> str:
    """``value`` with ``digits`` significant digits; ``-`` for ``None``."""
    if value is None:
        return "-"
    return f"{value:.{digits}g}"


def constant_names(constants: PairConstants) -> tuple[str, ...]:
    if isinstance(constants, SecondOrderConstants):
        return ("k2", "k1", "k0")
    if isinstance(constants, MixedFreeConstants):
        return ("k1", "k0", "free")
    return ("k1", "k0")


def constants_label(constants: PairConstants | None) -> str:
    """E.g. ``(k1, k0) = (2, 1)``."""
    if constants is None:
        return "-"
    names = ", ".join(constant_names(constants))
    values = ", ".join(format_value(v) for v in constants.as_tuple())
    return f"({names}) = ({values})"


def icon(flag: bool | None) -> str:
    if flag is None:
        return ICON_UNKNOWN
    return ICON_PASS if flag else ICON_FAIL


def verdict_text(verdict: Verdict) -> Text:
    flag = None if verdict is Verdict.INCONCLUSIVE else verdict is Verdict.COMMUTATIVE
    return Text.assemble(f"{icon(flag)} ", (verdict.value, _VERDICT_STYLE[verdict]))


def pair_table(report: CommutativityReport, title: str = "") -> Table:
    """A two-column table with the evidence of a pair report."""
    table = Table(title=title or None, show_header=False, box=None, pad_edge=False)
    table.add_column("key", style="cyan", no_wrap=True)
    table.add_column("value")
    table.add_row("verdict", verdict_text(report.verdict))
    table.add_row("relation", report.relation.value)
    table.add_row("constants", constants_label(report.constants))
    for name, residual in report.constancy_residuals.items():
        table.add_row(f"residual {name}", f"{icon(residual < report.tolerance)} {format_value(residual)}")
    for name, residual in report.bracket_residuals.items():
        table.add_row(f"bracket {name}", f"{icon(residual < report.tolerance)} {format_value(residual)}")
    if report.defect is not None:
        table.add_row("defect", f"{icon(report.defect_pass)} {format_value(report.defect)}")
    if report.unrelaxed_residual is not None:
        table.add_row("unrelaxed", f"{icon(report.unrelaxed)} residual {format_value(report.unrelaxed_residual)}")
    for note in report.notes:
        table.add_row("note", Text(note, style="dim"))
    return table


def chain_renderable(chain: ChainReport, names: tuple[str, str, str] = ("A", "B", "C")) -> RenderableType:
    a, b, c = names
    summary = Table(show_header=False, box=None, pad_edge=False)
    summary.add_column("key", style="cyan", no_wrap=True)
    summary.add_column("value")
    summary.add_row("orders", "-".join(str(n) for n in chain.orders))
    summary.add_row("mode", chain.mode.value)
    summary.add_row("predicted", constants_label(chain.predicted))
    summary.add_row("extracted", constants_label(chain.extracted))
    summary.add_row("constants match", icon(chain.constants_match))
    summary.add_row("transitive", icon(chain.transitive))
    if chain.unrelaxed is not None:
        summary.add_row("unrelaxed", f"{icon(chain.unrelaxed)} closure residual {format_value(chain.closure_residual)}")
    for note in chain.notes:
        summary.add_row("note", Text(note, style="dim"))
    return Group(
        pair_table(chain.ab, f"({a},{b})"),
        pair_table(chain.bc, f"({b},{c})"),
        pair_table(chain.ac, f"({a},{c})"),
        Text(f"chain {a}-{b}-{c}", style="bold"),
        summary,
    )


def pair_key_values(report: CommutativityReport, prefix: str = "") -> list[str]:
    """Machine-readable lines for a pair report."""
    lines = [f"{prefix}verdict={report.verdict.value}", f"{prefix}relation={report.relation.value}"]
    if report.constants is not None:
        for name, value in zip(constant_names(report.constants), report.constants.as_tuple(), strict=True):
            lines.append(f"{prefix}{name}={format_value(value)}")
    for name, residual in report.constancy_residuals.items():
        lines.append(f"{prefix}residual.{name}={format_value(residual)}")
    for name, residual in report.bracket_residuals.items():
        lines.append(f"{prefix}bracket.{name}={format_value(residual)}")
    if report.defect is not None:
        lines.append(f"{prefix}defect={format_value(report.defect)}")
    if report.unrelaxed_residual is not None:
        unrelaxed = "vacuous" if report.unrelaxed is None else str(report.unrelaxed).lower()
        lines.append(f"{prefix}unrelaxed={unrelaxed}")
        lines.append(f"{prefix}unrelaxed.residual={format_value(report.unrelaxed_residual)}")
    return lines


def chain_key_values(chain: ChainReport) -> list[str]:
    lines = [*pair_key_values(chain.ab, "ab."), *pair_key_values(chain.bc, "bc."), *pair_key_values(chain.ac, "ac.")]
    lines.append(f"mode={chain.mode.value}")
    for label, constants in (("predicted", chain.predicted), ("extracted", chain.extracted)):
        if constants is not None:
            for name, value in zip(constant_names(constants), constants.as_tuple(), strict=True):
                lines.append(f"{label}.{name}={format_value(value)}")
    lines.append(f"transitive={str(chain.transitive).lower()}")
    return lines


def to_text(*renderables: RenderableType | str, width: int = 100) -> str:
    """Render to plain text (no colour codes)."""
    console = Console(file=io.StringIO(), width=width, record=True, color_system=None, force_terminal=False)
    for renderable in renderables:
        console.print(renderable)
    return console.export_text()

