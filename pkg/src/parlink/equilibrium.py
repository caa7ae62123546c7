"""Equilibrium solvers for parallel-link games and their residual certificate.

Every subproblem on parallel arcs reduces to a water-filling step: find a
common level mu and per-arc loads x_r >= 0 summing to the player's weight such
that the arc's level function equals mu wherever x_r > 0 and is >= mu at zero.
Wardrop conditions use the plain cost as the level function; a coalition's
best response uses its marginal cost.  The composite equilibrium is computed
by Gauss-Seidel best-response sweeps and certified by the variational
inequality gap, never by iteration count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import CompositionProfile, EquilibriumReport, FlowProfile, Network

# Per-arc (levels, slopes) of a player's objective at own loads x.
_PairFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs shared by all solvers."""

    level_tolerance: float = 1e-12
    gap_tolerance: float = 1e-9
    max_outer_iterations: int = 10000
    support_epsilon: float = 1e-9

    def __post_init__(self) -> None:
        for name in ("level_tolerance", "gap_tolerance", "support_epsilon"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be at least 1")


DEFAULT_SETTINGS = SolverSettings()


class ConvergenceError(RuntimeError):
    """Raised when the composite solver cannot certify the requested gap."""

    def __init__(self, message: str, gap: float, iterations: int):
        super().__init__(message)
        self.gap = gap
        self.iterations = iterations


@dataclass(frozen=True)
class WardropResult:
    """Aggregate Wardrop flow and the common cost of its used arcs."""

    flow: np.ndarray
    cost: float


@dataclass(frozen=True)
class CostSummary:
    """Cost readout of a flow: group averages, minimal levels, social cost."""

    individual_cost: Optional[float]
    coalition_avg_costs: tuple[float, ...]
    coalition_marginals: tuple[float, ...]
    social_cost: float
    min_arc_cost: float
    coalition_support_min_costs: tuple[float, ...]


def _horner(matrix: np.ndarray, loads: np.ndarray) -> np.ndarray:
    acc = matrix[:, -1]
    for j in range(matrix.shape[1] - 2, -1, -1):
        acc = acc * loads + matrix[:, j]
    return acc


def _stacked(network: Network, with_curvature: bool) -> np.ndarray:
    # One padded matrix so cost, slope (and curvature) share a single Horner pass.
    parts = [network._coefficient_matrix, network._slope_matrix]
    if with_curvature:
        parts.append(network._curvature_matrix)
    width = max(p.shape[1] for p in parts)
    stack = np.zeros((len(parts) * network.arc_count, width))
    for i, p in enumerate(parts):
        stack[i * network.arc_count : (i + 1) * network.arc_count, : p.shape[1]] = p
    return stack


def _wardrop_pair(network: Network, background: np.ndarray) -> _PairFn:
    stack = _stacked(network, with_curvature=False)
    arc_count = network.arc_count

    def pair(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        loads = background + x
        values = _horner(stack, np.tile(loads, 2))
        return values[:arc_count], values[arc_count:]

    return pair


def _best_response_pair(network: Network, background: np.ndarray) -> _PairFn:
    stack = _stacked(network, with_curvature=True)
    arc_count = network.arc_count

    def pair(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        loads = background + x
        values = _horner(stack, np.tile(loads, 3))
        first = values[arc_count : 2 * arc_count]
        level = values[:arc_count] + x * first
        return level, 2.0 * first + x * values[2 * arc_count :]

    return pair


def _fill_at_level(
    pair: _PairFn, base: np.ndarray, mu: float, warm: np.ndarray, cap: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-arc loads solving level(x) = mu, zero where the level starts >= mu.

    Each arc's level function is strictly increasing and convex, so a Newton
    step from anywhere lands at or above the root and then descends
    monotonically; no bracketing is needed.  Returns the loads and the level
    slopes at the final iterate.
    """
    active = base < mu
    if not active.any():
        zeros = np.zeros_like(base)
        return zeros, pair(zeros)[1]
    x = np.where(active, np.clip(warm, 0.0, cap), 0.0)
    tol = 1e-15 * max(1.0, cap)
    slopes = None
    for _ in range(80):
        levels, slopes = pair(x)
        nxt = np.where(active, np.clip(x - (levels - mu) / slopes, 0.0, cap), 0.0)
        moved = float(np.max(np.abs(nxt - x)))
        x = nxt
        if moved <= tol:
            break
    return x, slopes


def _waterfill(
    arc_count: int,
    pair: _PairFn,
    total: float,
    level_tolerance: float,
    level_hint: Optional[float] = None,
) -> tuple[np.ndarray, float]:
    """Allocate `total` across arcs at a common level.

    Outer safeguarded Newton/bisection on the level, inner vector Newton for
    the per-arc roots, then one first-order correction that restores the exact
    total while moving every active arc's level by the same amount.
    """
    zeros = np.zeros(arc_count)
    base = pair(zeros)[0]
    if total <= 0.0:
        return zeros, float(base.min())
    lo = float(base.min())
    hi = float(pair(np.full(arc_count, total))[0].min())
    mu = level_hint if level_hint is not None and lo < level_hint < hi else 0.5 * (lo + hi)
    x = zeros
    demand_tolerance = 1e-15 * max(1.0, total)
    for _ in range(200):
        x, slopes = _fill_at_level(pair, base, mu, x, total)
        residual = total - float(x.sum())
        if abs(residual) <= demand_tolerance:
            break
        if residual <= 0.0:
            hi = mu
        else:
            lo = mu
        if hi - lo <= level_tolerance:
            mu = 0.5 * (lo + hi)
            x, slopes = _fill_at_level(pair, base, mu, x, total)
            residual = total - float(x.sum())
            break
        active = base < mu
        inv_slope = float((1.0 / slopes[active]).sum()) if active.any() else 0.0
        proposal = mu + residual / inv_slope if inv_slope > 0.0 else lo
        mu = proposal if lo < proposal < hi else 0.5 * (lo + hi)
    mask = x > 0.0
    if not mask.any():
        mask[int(np.argmin(base))] = True
        slopes = pair(x)[1]
    weights = np.zeros(arc_count)
    weights[mask] = 1.0 / slopes[mask]
    x = x + residual * weights / weights.sum()
    x = np.maximum(x, 0.0)
    x[int(np.argmax(x))] += total - float(x.sum())
    level = float(pair(x)[0][int(np.argmax(x))])
    return x, level


def _wardrop_fill(
    network: Network,
    demand: float,
    background: np.ndarray,
    settings: SolverSettings,
    level_hint: Optional[float] = None,
) -> tuple[np.ndarray, float]:
    pair = _wardrop_pair(network, background)
    return _waterfill(network.arc_count, pair, demand, settings.level_tolerance, level_hint)


def _best_response_fill(
    network: Network,
    weight: float,
    background: np.ndarray,
    settings: SolverSettings,
    level_hint: Optional[float] = None,
) -> tuple[np.ndarray, float]:
    pair = _best_response_pair(network, background)
    return _waterfill(network.arc_count, pair, weight, settings.level_tolerance, level_hint)


def solve_we(
    network: Network, demand: float, settings: SolverSettings = DEFAULT_SETTINGS
) -> WardropResult:
    """Wardrop equilibrium of the nonatomic game with the given demand in (0, 1]."""
    demand = float(demand)
    if not 0.0 < demand <= 1.0:
        raise ValueError(f"demand must lie in (0, 1], got {demand!r}")
    flow, cost = _wardrop_fill(network, demand, np.zeros(network.arc_count), settings)
    return WardropResult(flow=flow, cost=cost)


def best_response(
    network: Network,
    k_weight: float,
    others_aggregate,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """Cost-minimizing split of one coalition's weight against a fixed background."""
    k_weight = float(k_weight)
    if not 0.0 < k_weight <= 1.0:
        raise ValueError(f"coalition weight must lie in (0, 1], got {k_weight!r}")
    background = np.asarray(others_aggregate, dtype=float)
    if background.shape != (network.arc_count,):
        raise ValueError(
            f"background must give one load per arc, got shape {background.shape}"
        )
    if (background < 0.0).any():
        raise ValueError("background loads must be nonnegative")
    flow, _ = _best_response_fill(network, k_weight, background, settings)
    return flow


def _gap_value(network: Network, t0: float, tk: np.ndarray, rows: np.ndarray) -> float:
    aggregate = rows.sum(axis=0)
    costs = _horner(network._coefficient_matrix, aggregate)
    gap = float(rows[0] @ costs) - t0 * float(costs.min())
    if len(tk):
        slopes = _horner(network._slope_matrix, aggregate)
        marginals = costs + rows[1:] * slopes
        gap += float((rows[1:] * marginals).sum()) - float(tk @ marginals.min(axis=1))
    return gap


def _check_consistent(network: Network, profile: CompositionProfile, flow: FlowProfile) -> None:
    if flow.profile != profile:
        raise ValueError("flow was built against a different composition profile")
    if flow.arc_count != network.arc_count:
        raise ValueError(
            f"flow has {flow.arc_count} arcs but the network has {network.arc_count}"
        )


def ce_gap(network: Network, profile: CompositionProfile, flow: FlowProfile) -> float:
    """Variational-inequality residual: nonnegative, zero exactly at the CE.

    Sum over players of (their level vector dotted with their flow) minus
    (their weight times the minimal level), levels being arc costs for the
    individuals and marginal costs for each coalition.
    """
    _check_consistent(network, profile, flow)
    return _gap_value(
        network,
        profile.individual_weight,
        np.asarray(profile.coalition_weights),
        flow.rows,
    )


def marginal_optimality_violation(
    network: Network,
    profile: CompositionProfile,
    flow: FlowProfile,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """Worst excess of a supported arc's level over the player's minimal level.

    Zero (within solver noise) iff the per-player marginal-cost optimality
    conditions hold: every arc actually used by a player has that player's
    minimal level.  Support is judged with settings.support_epsilon.
    """
    _check_consistent(network, profile, flow)
    aggregate = flow.aggregate
    costs = network.costs(aggregate)
    slopes = network.cost_slopes(aggregate)
    worst = 0.0
    for k, weight in enumerate(profile.row_weights):
        if weight <= 0.0:
            continue
        level = costs if k == 0 else costs + flow.rows[k] * slopes
        supported = flow.rows[k] > settings.support_epsilon
        if supported.any():
            worst = max(worst, float(level[supported].max() - level.min()))
    return worst


def equilibrium_costs(
    network: Network,
    profile: CompositionProfile,
    flow: FlowProfile,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> CostSummary:
    """Cost readout of a feasible flow (not necessarily an equilibrium)."""
    _check_consistent(network, profile, flow)
    aggregate = flow.aggregate
    costs = network.costs(aggregate)
    slopes = network.cost_slopes(aggregate)
    t0 = profile.individual_weight
    individual = float(flow.rows[0] @ costs) / t0 if t0 > 0.0 else None
    averages = []
    marginals = []
    support_minima = []
    for k, weight in enumerate(profile.coalition_weights, start=1):
        row = flow.rows[k]
        averages.append(float(row @ costs) / weight)
        marginals.append(float((costs + row * slopes).min()))
        supported = row > settings.support_epsilon
        if not supported.any():
            supported = row > 0.0
        support_minima.append(float(costs[supported].min()) if supported.any() else float("nan"))
    return CostSummary(
        individual_cost=individual,
        coalition_avg_costs=tuple(averages),
        coalition_marginals=tuple(marginals),
        social_cost=float(aggregate @ costs),
        min_arc_cost=float(costs.min()),
        coalition_support_min_costs=tuple(support_minima),
    )


def _build_report(
    network: Network,
    profile: CompositionProfile,
    rows: np.ndarray,
    gap: float,
    iterations: int,
    settings: SolverSettings,
) -> EquilibriumReport:
    flow = FlowProfile(rows, profile)
    summary = equilibrium_costs(network, profile, flow, settings)
    return EquilibriumReport(
        network=network,
        flow=flow,
        individual_cost=summary.individual_cost,
        coalition_avg_costs=summary.coalition_avg_costs,
        coalition_marginals=summary.coalition_marginals,
        social_cost=summary.social_cost,
        gap=gap,
        iterations=iterations,
    )


def _sweep(
    network: Network,
    t0: float,
    tk: np.ndarray,
    rows: np.ndarray,
    alpha: float,
    settings: SolverSettings,
    hints: np.ndarray,
) -> None:
    if t0 > 0.0:
        background = rows[1:].sum(axis=0)
        hint = hints[0] if np.isfinite(hints[0]) else None
        fresh, hints[0] = _wardrop_fill(network, t0, background, settings, hint)
        rows[0] = fresh if alpha >= 1.0 else alpha * fresh + (1.0 - alpha) * rows[0]
    for k in range(len(tk)):
        background = rows.sum(axis=0) - rows[k + 1]
        hint = hints[k + 1] if np.isfinite(hints[k + 1]) else None
        fresh, hints[k + 1] = _best_response_fill(
            network, float(tk[k]), background, settings, hint
        )
        rows[k + 1] = fresh if alpha >= 1.0 else alpha * fresh + (1.0 - alpha) * rows[k + 1]


def solve_ce(
    network: Network,
    profile: CompositionProfile,
    settings: SolverSettings = DEFAULT_SETTINGS,
    initial: Optional[FlowProfile] = None,
    refine_gap: Optional[float] = None,
) -> EquilibriumReport:
    """Composite equilibrium by Gauss-Seidel best-response sweeps.

    Each sweep replaces the individuals' row with the Wardrop fill of their
    residual demand and each coalition's row with its exact best response.
    The result is accepted only when the VI gap falls below
    settings.gap_tolerance; otherwise ConvergenceError carries the best gap.
    A stagnation-triggered damping factor guards against best-response cycles.

    `refine_gap`, if given and smaller than the accepted tolerance, continues
    sweeping best-effort toward that tighter gap; refinement never raises.
    """
    arc_count = network.arc_count
    t0 = profile.individual_weight
    tk = np.asarray(profile.coalition_weights)
    if initial is not None:
        _check_consistent(network, profile, initial)
        rows = np.array(initial.rows, dtype=float, copy=True)
    else:
        rows = np.outer(np.asarray(profile.row_weights), np.full(arc_count, 1.0 / arc_count))

    hints = np.full(1 + len(tk), np.nan)
    gap = _gap_value(network, t0, tk, rows)
    best_gap = gap
    best_rows = rows.copy()
    iterations = 0
    alpha = 1.0
    stall = 0
    while gap >= settings.gap_tolerance:
        if iterations >= settings.max_outer_iterations:
            raise ConvergenceError(
                f"no composite equilibrium with gap < {settings.gap_tolerance!r} "
                f"after {iterations} sweeps (best gap {best_gap!r})",
                gap=best_gap,
                iterations=iterations,
            )
        iterations += 1
        _sweep(network, t0, tk, rows, alpha, settings, hints)
        gap = _gap_value(network, t0, tk, rows)
        if gap < 0.9 * best_gap:
            stall = 0
        else:
            stall += 1
        if gap < best_gap:
            best_gap = gap
            best_rows[:] = rows
        if stall >= 40:
            alpha = max(0.5 * alpha, 0.125)
            stall = 0
    best_gap = gap
    best_rows[:] = rows

    if refine_gap is not None and refine_gap < settings.gap_tolerance:
        # Near degenerate equilibria (boundary supports) the gap is quadratic
        # in the remaining flow error, so refine until the sweeps themselves
        # stop moving flows, not merely until the gap target is met.
        no_progress = 0
        extra = 0
        settled = False
        while extra < settings.max_outer_iterations:
            extra += 1
            previous = rows.copy()
            _sweep(network, t0, tk, rows, alpha, settings, hints)
            moved = float(np.abs(rows - previous).max())
            gap = _gap_value(network, t0, tk, rows)
            if gap < best_gap:
                no_progress = 0 if gap < 0.7 * best_gap else no_progress + 1
                best_gap = gap
                best_rows[:] = rows
            else:
                no_progress += 1
            if gap < refine_gap and moved <= settings.level_tolerance:
                settled = True
                break
            if no_progress >= 60:
                break
        iterations += extra
        if settled:
            best_gap = gap
            best_rows = rows

    return _build_report(network, profile, best_rows, best_gap, iterations, settings)
