"""Deterministic text and CSV rendering of solver results.

All numbers print with 12 significant digits so identical inputs produce
byte-identical output.  CSV files have a fixed header per subcommand, comma
separators, line-feed endings and locale-independent decimal points.
"""

from __future__ import annotations

from typing import Sequence

from .analysis import ComparisonReport, ConvergenceTable, ScanResult, StructuralCheck
from .core import EquilibriumReport, Network
from .equilibrium import WardropResult


def fmt(value: float) -> str:
    """12-significant-digit rendering used everywhere."""
    return f"{value:.12g}"


def emit_report(report: EquilibriumReport) -> str:
    """Render one equilibrium: per-arc flow table, then the cost summary."""
    rows = report.flow.rows
    coalition_count = report.flow.profile.coalition_count
    costs = report.network.costs(report.flow.aggregate)
    headers = ["arc", "x^0"]
    headers += [f"x^{k}" for k in range(1, coalition_count + 1)]
    headers += ["total", "cost"]
    table = [headers]
    for r in range(report.flow.arc_count):
        cells = [str(r + 1)]
        cells += [fmt(rows[k, r]) for k in range(coalition_count + 1)]
        cells += [fmt(report.flow.aggregate[r]), fmt(costs[r])]
        table.append(cells)
    widths = [max(len(row[c]) for row in table) for c in range(len(headers))]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in table
    ]
    if report.individual_cost is None:
        lines.append("Y^0        = (no individuals)")
    else:
        lines.append(f"Y^0        = {fmt(report.individual_cost)}")
    for k, value in enumerate(report.coalition_avg_costs, start=1):
        lines.append(f"Y^{k}        = {fmt(value)}")
    lines.append(f"Y          = {fmt(report.social_cost)}")
    lines.append(f"c^0        = {fmt(report.min_arc_cost)}")
    for k, value in enumerate(report.coalition_marginals, start=1):
        lines.append(f"c_hat^{k}    = {fmt(value)}")
    lines.append(f"gap        = {fmt(report.gap)}")
    lines.append(f"iterations = {report.iterations}")
    return "\n".join(lines) + "\n"


def emit_wardrop(network: Network, result: WardropResult) -> str:
    costs = network.costs(result.flow)
    lines = ["arc  flow              cost"]
    for r in range(network.arc_count):
        lines.append(f"{r + 1:<3}  {fmt(result.flow[r]):<16}  {fmt(costs[r])}")
    lines.append(f"W = {fmt(result.cost)}")
    return "\n".join(lines) + "\n"


def _csv(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    out = [",".join(header)]
    out += [",".join(row) for row in rows]
    return "\n".join(out) + "\n"


def wardrop_csv(network: Network, result: WardropResult) -> str:
    costs = network.costs(result.flow)
    rows = [
        (str(r + 1), fmt(result.flow[r]), fmt(costs[r]))
        for r in range(network.arc_count)
    ]
    return _csv(("arc", "flow", "cost"), rows)


def equilibrium_csv(report: EquilibriumReport) -> str:
    costs = report.network.costs(report.flow.aggregate)
    rows = []
    for k in range(report.flow.profile.coalition_count + 1):
        for r in range(report.flow.arc_count):
            rows.append(
                (
                    str(k),
                    str(r + 1),
                    fmt(report.flow.rows[k, r]),
                    fmt(report.flow.aggregate[r]),
                    fmt(costs[r]),
                )
            )
    return _csv(("group", "arc", "flow", "arc_total", "arc_cost"), rows)


def threshold_csv(threshold: float) -> str:
    return _csv(("T_tilde",), [(fmt(threshold),)])


def comparison_csv(comparison: ComparisonReport) -> str:
    rows = [("induces_we", "1" if comparison.induces else "0")]
    rows.append(("W", fmt(comparison.we_cost)))
    if comparison.individual_delta is not None:
        rows.append(("delta_Y0", fmt(comparison.individual_delta)))
    for k, delta in enumerate(comparison.coalition_deltas, start=1):
        rows.append((f"delta_Y{k}", fmt(delta)))
    rows.append(("delta_Y", fmt(comparison.social_delta)))
    return _csv(("quantity", "value"), rows)


def scan_csv(result: ScanResult) -> str:
    rows = [
        (fmt(t), fmt(y0), fmt(y1), fmt(y), fmt(gap))
        for t, y0, y1, y, gap in zip(
            result.grid, result.y0, result.y1, result.y, result.gaps
        )
    ]
    return _csv(("T", "Y0", "Y1", "Y", "gap"), rows)


def split_csv(before: EquilibriumReport, after: EquilibriumReport) -> str:
    rows = [
        ("c0", fmt(before.min_arc_cost), fmt(after.min_arc_cost)),
        (
            "Y0",
            fmt(before.individual_cost) if before.individual_cost is not None else "",
            fmt(after.individual_cost) if after.individual_cost is not None else "",
        ),
        ("Y", fmt(before.social_cost), fmt(after.social_cost)),
        ("gap", fmt(before.gap), fmt(after.gap)),
    ]
    return _csv(("quantity", "before", "after"), rows)


def convergence_csv(table: ConvergenceTable) -> str:
    rows = []
    for step in table.steps:
        fixed_max = max(step.fixed_cost_gaps) if step.fixed_cost_gaps else 0.0
        rows.append(
            (
                str(step.n),
                str(step.coalition_count),
                fmt(step.max_piece),
                fmt(step.distance),
                fmt(step.remainder_cost_gap),
                fmt(fixed_max),
                fmt(step.gap),
            )
        )
    return _csv(
        (
            "n",
            "coalitions",
            "max_piece",
            "distance",
            "remainder_cost_gap",
            "fixed_cost_gap_max",
            "gap",
        ),
        rows,
    )


def checks_csv(checks: Sequence[StructuralCheck]) -> str:
    rows = [(check.name, "1" if check.passed else "0") for check in checks]
    return _csv(("check", "passed"), rows)


def emit_scan(result: ScanResult) -> str:
    lines = [f"T_tilde = {fmt(result.threshold)}"]
    lines.append("T               Y^0             Y^1             Y")
    for t, y0, y1, y in zip(result.grid, result.y0, result.y1, result.y):
        lines.append(f"{fmt(t):<14}  {fmt(y0):<14}  {fmt(y1):<14}  {fmt(y)}")
    for t, message in result.failures:
        lines.append(f"failed at T={fmt(t)}: {message}")
    return "\n".join(lines) + "\n"


def emit_convergence(table: ConvergenceTable) -> str:
    lines = ["n     coalitions  max_piece       distance        remainder_gap   fixed_gap_max"]
    for step in table.steps:
        fixed_max = max(step.fixed_cost_gaps) if step.fixed_cost_gaps else 0.0
        lines.append(
            f"{step.n:<4}  {step.coalition_count:<10}  {fmt(step.max_piece):<14}"
            f"  {fmt(step.distance):<14}  {fmt(step.remainder_cost_gap):<14}  {fmt(fixed_max)}"
        )
    for n, message in table.failures:
        lines.append(f"failed at n={n}: {message}")
    lines.append("limit game:")
    lines.append(emit_report(table.limit).rstrip("\n"))
    return "\n".join(lines) + "\n"


def emit_comparison(comparison: ComparisonReport) -> str:
    lines = [f"W = {fmt(comparison.we_cost)}"]
    lines.append(f"CE induces WE: {'yes' if comparison.induces else 'no'}")
    if comparison.individual_delta is not None:
        lines.append(f"W - Y^0 = {fmt(comparison.individual_delta)}")
    for k, delta in enumerate(comparison.coalition_deltas, start=1):
        lines.append(f"W - Y^{k} = {fmt(delta)}")
    lines.append(f"W - Y   = {fmt(comparison.social_delta)}")
    lines.append("composite equilibrium:")
    lines.append(emit_report(comparison.ce).rstrip("\n"))
    return "\n".join(lines) + "\n"
