"""Comparative statics on composite equilibria: threshold, scans, splits, limits.

Operations here solve one or more games and compare the outcomes: the largest
single-coalition size that leaves the Wardrop equilibrium intact, cost curves
as a coalition grows, the effect of members leaving a coalition, and sequences
of games whose small coalitions vanish into individuals.  All comparisons are
made on solutions refined well below the acceptance gap so that theoretical
equalities survive numerically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import WEIGHT_SUM_TOLERANCE, CompositionProfile, EquilibriumReport, Network
from .equilibrium import (
    DEFAULT_SETTINGS,
    ConvergenceError,
    SolverSettings,
    solve_ce,
    solve_we,
)

#: Per-arc aggregate tolerance for "the CE induces the WE".
INDUCES_TOLERANCE = 1e-7

#: Analysis operations refine solutions toward this gap (best effort) so that
#: quantities that are equal in theory stay equal well below the 1e-9 slacks.
_REFINE_FLOOR = 1e-12


def _refine_target(settings: SolverSettings) -> float:
    return min(settings.gap_tolerance, _REFINE_FLOOR)


def threshold_t_tilde(network: Network, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """Largest single-coalition size whose equilibrium still induces the WE.

    With w the unit-demand Wardrop flow of cost W, A the sum of 1/c'_r(w_r)
    over used arcs, the threshold is the smaller of min_r w_r c'_r(w_r) A over
    used arcs and min_r (c_r(0) - W) A over unused arcs, clamped to [0, 1].
    """
    we = solve_we(network, 1.0, settings)
    flow, cost = we.flow, we.cost
    active = flow > settings.support_epsilon
    slopes = network.cost_slopes(flow)
    inverse_sum = float((1.0 / slopes[active]).sum())
    threshold = float((flow[active] * slopes[active]).min()) * inverse_sum
    if (~active).any():
        idle_costs = network.costs(np.zeros(network.arc_count))[~active]
        threshold = min(threshold, float((idle_costs - cost).min()) * inverse_sum)
    return min(max(threshold, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """WE next to CE: does the CE induce the WE, and by how much do costs drop."""

    we_flow: np.ndarray
    we_cost: float
    ce: EquilibriumReport
    induces: bool
    individual_delta: Optional[float]
    coalition_deltas: tuple[float, ...]
    social_delta: float


def compare_ce_we(
    network: Network,
    profile: CompositionProfile,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ComparisonReport:
    """Solve both equilibria and report W - Y^0, W - Y^k, W - Y.

    The CE "induces" the WE when the aggregate loads agree per arc within
    INDUCES_TOLERANCE; whenever they do not, all reported deltas are strictly
    positive (coalitions make everyone better off).
    """
    we = solve_we(network, 1.0, settings)
    ce = solve_ce(network, profile, settings, refine_gap=_refine_target(settings))
    induces = bool(np.max(np.abs(ce.flow.aggregate - we.flow)) <= INDUCES_TOLERANCE)
    individual_delta = (
        we.cost - ce.individual_cost if ce.individual_cost is not None else None
    )
    return ComparisonReport(
        we_flow=we.flow,
        we_cost=we.cost,
        ce=ce,
        induces=induces,
        individual_delta=individual_delta,
        coalition_deltas=tuple(we.cost - y for y in ce.coalition_avg_costs),
        social_delta=we.cost - ce.social_cost,
    )


@dataclass(frozen=True)
class ScanResult:
    """Cost curves over a grid of sizes of one varied coalition."""

    grid: tuple[float, ...]
    y0: tuple[float, ...]
    y1: tuple[float, ...]
    y: tuple[float, ...]
    threshold: float
    gaps: tuple[float, ...]
    failures: tuple[tuple[float, str], ...] = ()


def scan_coalition_size(
    network: Network,
    grid: Sequence[float],
    fixed_weights: Sequence[float] = (),
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ScanResult:
    """Vary one coalition's weight T, holding `fixed_weights` coalitions fixed.

    At each grid point the game has coalitions (fixed..., T) and individuals
    carrying the remaining 1 - sum(fixed) - T.  `y1` tracks the varied
    coalition's average cost, `y0` the individuals'.  The endpoints are
    extended by continuity: at T=0 the varied coalition's cost is the
    individuals' cost of the game without it; when the individuals vanish
    their cost is read as the lowest arc cost.
    """
    fixed = tuple(float(t) for t in fixed_weights)
    budget = 1.0 - sum(fixed)
    if budget <= 0.0:
        raise ValueError("fixed coalition weights already exhaust the demand")
    points = [float(t) for t in grid]
    if not points:
        raise ValueError("scan grid must not be empty")
    for a, b in zip(points, points[1:]):
        if b <= a:
            raise ValueError("scan grid must be strictly ascending")
    if points[0] < 0.0 or points[-1] > budget + WEIGHT_SUM_TOLERANCE:
        raise ValueError(f"scan grid must lie within [0, {budget!r}]")
    target = _refine_target(settings)
    y0, y1, y, gaps, failures = [], [], [], [], []
    for t in points:
        at_top = abs(t - budget) <= WEIGHT_SUM_TOLERANCE
        if t == 0.0:
            weights, varied_at = fixed, None
        else:
            tagged = sorted(
                [(w, 0, i) for i, w in enumerate(fixed)] + [(t, 1, 0)],
                key=lambda item: (-item[0], item[1], item[2]),
            )
            weights = tuple(item[0] for item in tagged)
            varied_at = next(i for i, item in enumerate(tagged) if item[1] == 1)
        individual_weight = 0.0 if at_top else budget - t
        profile = CompositionProfile(individual_weight, weights)
        try:
            report = solve_ce(network, profile, settings, refine_gap=target)
        except ConvergenceError as exc:
            failures.append((t, str(exc)))
            y0.append(float("nan"))
            y1.append(float("nan"))
            y.append(float("nan"))
            gaps.append(float("nan"))
            continue
        individuals = (
            report.min_arc_cost if report.individual_cost is None else float(report.individual_cost)
        )
        y0.append(individuals)
        y1.append(individuals if varied_at is None else report.coalition_avg_costs[varied_at])
        y.append(report.social_cost)
        gaps.append(report.gap)
    return ScanResult(
        grid=tuple(points),
        y0=tuple(y0),
        y1=tuple(y1),
        y=tuple(y),
        threshold=threshold_t_tilde(network, settings),
        gaps=tuple(gaps),
        failures=tuple(failures),
    )


def scan_single_coalition(
    network: Network,
    grid: Sequence[float],
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ScanResult:
    """Individuals', coalition and social cost of the game (1-T; T) over a grid.

    The grid must be ascending within [0, 1].  The endpoints are extended by
    continuity: at T=0 the coalition cost is the WE cost, at T=1 the
    individuals' cost is the lowest arc cost of the social optimum.
    """
    return scan_coalition_size(network, grid, (), settings)


@dataclass(frozen=True, eq=False)
class SplitExperiment:
    """Equilibria before and after part of one coalition becomes individuals."""

    before: EquilibriumReport
    after: EquilibriumReport

    @property
    def individual_cost_change(self) -> float:
        """c^0(after) - c^0(before); never negative beyond solver noise."""
        return self.after.min_arc_cost - self.before.min_arc_cost


def split_experiment(
    network: Network,
    profile: CompositionProfile,
    coalition: int,
    delta: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> SplitExperiment:
    """Move weight `delta` out of one coalition into the individuals and re-solve.

    `coalition` is 1-based.  The remaining weights are re-sorted to build a
    valid profile, so the shrunk coalition may occupy a different index in the
    "after" report.  The individuals' cost never drops by more than 1e-9.
    """
    if not 1 <= coalition <= profile.coalition_count:
        raise ValueError(f"coalition index must be in 1..{profile.coalition_count}")
    delta = float(delta)
    weight = profile.coalition_weights[coalition - 1]
    if not 0.0 < delta < weight:
        raise ValueError(f"delta must lie strictly between 0 and {weight!r}")
    target = _refine_target(settings)
    before = solve_ce(network, profile, settings, refine_gap=target)
    remaining = list(profile.coalition_weights)
    remaining[coalition - 1] = weight - delta
    after_profile = CompositionProfile(
        profile.individual_weight + delta, tuple(sorted(remaining, reverse=True))
    )
    after = solve_ce(network, after_profile, settings, refine_gap=target)
    if before.min_arc_cost > after.min_arc_cost + 1e-9:
        raise RuntimeError(
            "individuals' cost dropped after a coalition shrank "
            f"({before.min_arc_cost!r} -> {after.min_arc_cost!r}); "
            "this contradicts the withdrawal monotonicity guarantee"
        )
    return SplitExperiment(before=before, after=after)


@dataclass(frozen=True)
class AdmissibleSequenceSpec:
    """A family of games with fixed coalitions and a vanishing remainder.

    `fixed_weights` stay in every game; the residual mass 1 - sum(fixed) is
    split at step n according to `residual_mode`:

    - "equal": n coalitions of equal size,
    - "geometric": n coalitions with common ratio 2**(-1/n) (largest piece is
      twice the smallest and shrinks like 2 ln2 / n),
    - "individuals": the whole residual stays nonatomic (control: every step
      is the limit game itself).
    """

    fixed_weights: tuple[float, ...]
    residual_mode: str
    steps: tuple[int, ...]

    def __post_init__(self) -> None:
        fixed = tuple(float(t) for t in self.fixed_weights)
        object.__setattr__(self, "fixed_weights", fixed)
        object.__setattr__(self, "steps", tuple(int(n) for n in self.steps))
        for t in fixed:
            if not t > 0.0:
                raise ValueError(f"fixed coalition weights must be positive, got {t!r}")
        if sum(fixed) >= 1.0:
            raise ValueError("fixed coalition weights must sum to strictly less than 1")
        if self.residual_mode not in ("equal", "geometric", "individuals"):
            raise ValueError(f"unknown residual mode {self.residual_mode!r}")
        if not self.steps:
            raise ValueError("at least one step is required")
        for n in self.steps:
            if n < 1:
                raise ValueError("steps must be positive integers")
        for a, b in zip(self.steps, self.steps[1:]):
            if b <= a:
                raise ValueError("steps must be strictly increasing")
        pieces = [self.residual_pieces(n) for n in self.steps]
        maxima = [max(p) if p else 0.0 for p in pieces]
        for a, b in zip(maxima, maxima[1:]):
            if b > a + 1e-15:
                raise ValueError("the largest residual piece must be non-increasing")

    @property
    def residual(self) -> float:
        return 1.0 - sum(self.fixed_weights)

    def residual_pieces(self, n: int) -> list[float]:
        """Sizes of the residual coalitions at step n, largest first."""
        if self.residual_mode == "individuals":
            return []
        if self.residual_mode == "equal":
            return [self.residual / n] * n
        ratio = 0.5 ** (1.0 / n)
        raw = ratio ** np.arange(n)
        return list(self.residual * raw / raw.sum())


@dataclass(frozen=True)
class ConvergenceStep:
    """One game of the sequence and its distance to the limit game."""

    n: int
    coalition_count: int
    max_piece: float
    distance: float
    remainder_cost_gap: float
    fixed_cost_gaps: tuple[float, ...]
    gap: float


@dataclass(frozen=True, eq=False)
class ConvergenceTable:
    steps: tuple[ConvergenceStep, ...]
    limit: EquilibriumReport
    failures: tuple[tuple[int, str], ...] = ()


def asymptotic_experiment(
    network: Network,
    spec: AdmissibleSequenceSpec,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ConvergenceTable:
    """Solve the sequence of games and measure convergence to the limit game.

    For each step the non-fixed rows (individuals plus residual coalitions)
    are aggregated into one remainder flow; the reported distance is the
    sup-norm between (remainder, fixed coalition rows) and the limit game's
    (individuals, coalition rows).  A failing step truncates the table.
    """
    target = _refine_target(settings)
    fixed_sorted = tuple(sorted(spec.fixed_weights, reverse=True))
    limit_profile = CompositionProfile(spec.residual, fixed_sorted)
    limit = solve_ce(network, limit_profile, settings, refine_gap=target)
    limit_remainder = limit.flow.rows[0]
    limit_costs = network.costs(limit.flow.aggregate)
    remainder_weight = spec.residual

    steps: list[ConvergenceStep] = []
    failures: list[tuple[int, str]] = []
    for n in spec.steps:
        pieces = spec.residual_pieces(n)
        tagged = [(w, 0, rank) for rank, w in enumerate(fixed_sorted)]
        tagged += [(w, 1, rank) for rank, w in enumerate(pieces)]
        tagged.sort(key=lambda item: (-item[0], item[1], item[2]))
        weights = tuple(item[0] for item in tagged)
        individual_weight = spec.residual if spec.residual_mode == "individuals" else 0.0
        profile = CompositionProfile(individual_weight, weights)
        try:
            report = solve_ce(network, profile, settings, refine_gap=target)
        except ConvergenceError as exc:
            failures.append((n, str(exc)))
            break
        rows = report.flow.rows
        fixed_rows = np.zeros((len(fixed_sorted), network.arc_count))
        remainder = rows[0].copy()
        for position, (_, kind, rank) in enumerate(tagged):
            if kind == 0:
                fixed_rows[rank] = rows[position + 1]
            else:
                remainder += rows[position + 1]
        distance = float(np.abs(remainder - limit_remainder).max())
        if len(fixed_sorted):
            distance = max(
                distance, float(np.abs(fixed_rows - limit.flow.rows[1:]).max())
            )
        costs = network.costs(report.flow.aggregate)
        remainder_avg = float(remainder @ costs) / remainder_weight
        limit_individual = float(limit_remainder @ limit_costs) / remainder_weight
        fixed_gaps = tuple(
            abs(float(fixed_rows[rank] @ costs) / fixed_sorted[rank] - limit.coalition_avg_costs[rank])
            for rank in range(len(fixed_sorted))
        )
        steps.append(
            ConvergenceStep(
                n=n,
                coalition_count=profile.coalition_count,
                max_piece=max(pieces) if pieces else 0.0,
                distance=distance,
                remainder_cost_gap=abs(remainder_avg - limit_individual),
                fixed_cost_gaps=fixed_gaps,
                gap=report.gap,
            )
        )
    return ConvergenceTable(steps=tuple(steps), limit=limit, failures=tuple(failures))


@dataclass(frozen=True)
class StructuralCheck:
    name: str
    passed: bool
    detail: str


def _check(name: str, passed: bool, detail: str) -> StructuralCheck:
    return StructuralCheck(name=name, passed=bool(passed), detail=detail)


# Support membership for the structural checks; deliberately looser than the
# solver's support_epsilon so that boundary arcs do not flicker.
_SUPPORT = 1e-6
_SLACK = 1e-9
_ROWS_EQUAL = 1e-8
_DOMINANCE = 1e-8


def run_structural_checks(
    network: Network,
    profile: CompositionProfile,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> tuple[StructuralCheck, ...]:
    """Solve the composite game and test every structural guarantee on it.

    Covers: the gap certificate, Wardrop conditions of the reference WE,
    support nesting of individuals inside every coalition, cost and marginal
    orderings across coalition sizes, flow dominance of larger coalitions,
    identical behavior of equal-weight coalitions, the separation between
    used and unused arcs, and the under/overloading structure plus strict
    cost improvements whenever the CE does not induce the WE.
    """
    target = _refine_target(settings)
    we = solve_we(network, 1.0, settings)
    ce = solve_ce(network, profile, settings, refine_gap=target)
    rows = ce.flow.rows
    aggregate = ce.flow.aggregate
    costs = network.costs(aggregate)
    minimum_cost = float(costs.min())
    weights = profile.coalition_weights
    coalition_count = profile.coalition_count
    induces = bool(np.max(np.abs(aggregate - we.flow)) <= INDUCES_TOLERANCE)
    checks: list[StructuralCheck] = []

    checks.append(
        _check(
            "gap-certificate",
            ce.gap < settings.gap_tolerance,
            f"gap {ce.gap:.3e} vs tolerance {settings.gap_tolerance:.1e}",
        )
    )

    we_costs = network.costs(we.flow)
    used = we.flow > settings.support_epsilon
    spread = float(we_costs[used].max() - we_costs[used].min())
    idle_ok = bool((we_costs[~used] >= we.cost - 10 * settings.level_tolerance).all())
    checks.append(
        _check(
            "wardrop-conditions",
            spread <= 10 * settings.level_tolerance and idle_ok,
            f"used-arc cost spread {spread:.3e}, idle arcs at or above {we.cost:.6g}",
        )
    )

    nested = True
    for r in range(network.arc_count):
        if rows[0, r] > _SUPPORT:
            nested = nested and all(
                rows[k, r] > 0.5 * _SUPPORT for k in range(1, coalition_count + 1)
            )
    checks.append(
        _check(
            "support-nesting",
            nested,
            "every arc used by individuals is used by every coalition",
        )
    )

    if profile.individual_weight > 0.0 and not induces and coalition_count:
        ok = all(minimum_cost < m - _SLACK for m in ce.coalition_marginals)
        detail = f"c^0 {minimum_cost:.6g} below every coalition marginal"
    else:
        ok, detail = True, "vacuous (no individuals, no coalition, or CE induces WE)"
    checks.append(_check("individual-cost-below-marginals", ok, detail))

    if profile.individual_weight > 0.0 and coalition_count:
        y0 = float(ce.individual_cost)
        ok = all(y0 <= yk + _SLACK for yk in ce.coalition_avg_costs)
        checks.append(
            _check(
                "individual-vs-coalition-cost",
                ok,
                f"Y^0 {y0:.6g} at most every coalition average",
            )
        )
    else:
        checks.append(_check("individual-vs-coalition-cost", True, "vacuous"))

    dominance = True
    marg_order = True
    cost_order = True
    strictness = True
    for k in range(coalition_count):
        for l in range(k):
            # weights[l] >= weights[k] by profile sortedness
            if weights[l] <= weights[k]:
                continue
            small, large = rows[k + 1], rows[l + 1]
            dominance = dominance and bool((small <= large + _DOMINANCE).all())
            if weights[l] - weights[k] > 1e-6:
                on_support = small > _SUPPORT
                strictness = strictness and bool((large[on_support] > small[on_support]).all())
            marg_order = marg_order and (
                ce.coalition_marginals[k] < ce.coalition_marginals[l] + _SLACK
            )
            cost_order = cost_order and (
                ce.coalition_avg_costs[k] <= ce.coalition_avg_costs[l] + _SLACK
            )
    checks.append(
        _check("flow-dominance", dominance, "larger coalitions carry at least as much per arc")
    )
    checks.append(
        _check("flow-dominance-strict", strictness, "strictly more on the smaller one's support")
    )
    checks.append(
        _check("marginal-ordering", marg_order, "larger coalitions have larger marginals")
    )
    checks.append(
        _check("cost-ordering", cost_order, "larger coalitions pay at least as much on average")
    )

    equal_ok = True
    for k in range(coalition_count):
        for l in range(k):
            if weights[l] == weights[k]:
                equal_ok = equal_ok and bool(
                    np.abs(rows[l + 1] - rows[k + 1]).max() <= _ROWS_EQUAL
                )
    checks.append(
        _check("equal-weight-rows", equal_ok, "equal-weight coalitions route identically")
    )

    separation = True
    for k in range(1, coalition_count + 1):
        on = rows[k] > _SUPPORT
        if on.any() and (~on).any():
            separation = separation and bool(
                costs[on].max() < costs[~on].min() + _SLACK
            )
    checks.append(
        _check(
            "arc-cost-separation",
            separation,
            "arcs used by a coalition cost less than arcs it avoids",
        )
    )

    if not induces:
        under_ok = True
        if profile.individual_weight > 0.0:
            individuals_on = rows[0] > _SUPPORT
            under_ok = bool((aggregate[individuals_on] < we.flow[individuals_on] - _SLACK).all())
        overloaded = aggregate > we.flow + _SUPPORT
        over_ok = bool((rows[1][overloaded] > 1e-8).all()) if coalition_count else not overloaded.any()
        checks.append(
            _check(
                "underloaded-individuals",
                under_ok,
                "individuals sit on arcs loaded below their WE level",
            )
        )
        checks.append(
            _check(
                "overloaded-in-largest",
                over_ok,
                "every arc loaded above its WE level is used by the largest coalition",
            )
        )
        deltas = [we.cost - ce.social_cost]
        deltas += [we.cost - y for y in ce.coalition_avg_costs]
        if ce.individual_cost is not None:
            deltas.append(we.cost - ce.individual_cost)
        checks.append(
            _check(
                "ce-below-we",
                all(d > _SLACK for d in deltas),
                f"smallest improvement over W: {min(deltas):.3e}",
            )
        )
    else:
        checks.append(_check("underloaded-individuals", True, "vacuous (CE induces WE)"))
        checks.append(_check("overloaded-in-largest", True, "vacuous (CE induces WE)"))
        checks.append(_check("ce-below-we", True, "vacuous (CE induces WE)"))

    return tuple(checks)
