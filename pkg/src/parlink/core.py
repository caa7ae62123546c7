"""Domain types for routing games on two-terminal parallel-link networks.

A network is an ordered collection of parallel arcs, each with a polynomial
per-unit cost c(x) = sum_i a_i x^i that is strictly increasing, convex and
nonnegative on [0, 1] (all a_i >= 0 and a_1 > 0).  Unit demand is partitioned
into a mass of independent individuals and finitely many coalitions, each
coalition routing its mass centrally.  All types here are immutable after
construction and all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

import numpy as np

#: |T^0 + sum_k T^k - 1| must stay below this at profile construction.
WEIGHT_SUM_TOLERANCE = 1e-12
#: Per-row |sum_r x_r - weight| allowed in a flow table.
ROW_SUM_TOLERANCE = 1e-10


def arc_coefficient_violations(coefficients: Sequence[float]) -> list[str]:
    """Check one arc's polynomial coefficients (low degree first).

    Returns a list of human-readable violations; empty means the arc cost is
    strictly increasing, convex, smooth and nonnegative on [0, 1].
    """
    coeffs = [float(a) for a in coefficients]
    problems = []
    if len(coeffs) < 2:
        problems.append("degree must be at least 1 (constant cost is not strictly increasing)")
        return problems
    for i, a in enumerate(coeffs):
        if not np.isfinite(a):
            problems.append(f"coefficient a_{i} is not finite")
        elif a < 0.0:
            problems.append(f"negative coefficient a_{i} = {a!r}")
    if np.isfinite(coeffs[1]) and coeffs[1] <= 0.0:
        problems.append("not strictly increasing: a_1 must be positive")
    return problems


def _require_load(x: float) -> float:
    x = float(x)
    if not np.isfinite(x) or x < 0.0:
        raise ValueError(f"load must be a finite nonnegative number, got {x!r}")
    return x


@dataclass(frozen=True)
class CostFunction:
    """Polynomial per-unit arc cost, coefficients low degree first."""

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(float(a) for a in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        problems = arc_coefficient_violations(coeffs)
        if problems:
            raise ValueError("invalid cost function: " + "; ".join(problems))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def value(self, load: float) -> float:
        """Per-unit cost at the given nonnegative load."""
        x = _require_load(load)
        acc = 0.0
        for a in reversed(self.coefficients):
            acc = acc * x + a
        return acc

    def slope(self, load: float) -> float:
        """First derivative of the per-unit cost at the given load."""
        x = _require_load(load)
        acc = 0.0
        for i in range(self.degree, 0, -1):
            acc = acc * x + i * self.coefficients[i]
        return acc

    def marginal(self, own: float, total: float) -> float:
        """c(total) + own * c'(total), own being one player's share of total."""
        own = _require_load(own)
        total = _require_load(total)
        if own > total:
            raise ValueError(f"own load {own!r} exceeds total load {total!r}")
        return self.value(total) + own * self.slope(total)


def eval_cost(f: CostFunction, x: float) -> float:
    """Per-unit cost of one arc at load x >= 0."""
    return f.value(x)


def eval_cost_derivative(f: CostFunction, x: float) -> float:
    """Derivative of one arc's per-unit cost at load x >= 0."""
    return f.slope(x)


def marginal_cost(f: CostFunction, own: float, total: float) -> float:
    """Marginal cost c(total) + own*c'(total) of a player carrying `own`."""
    return f.marginal(own, total)


@dataclass(frozen=True)
class Network:
    """Ordered collection of parallel arcs between one origin and one destination."""

    arcs: tuple[CostFunction, ...]

    def __post_init__(self) -> None:
        arcs = tuple(
            arc if isinstance(arc, CostFunction) else CostFunction(tuple(arc))
            for arc in self.arcs
        )
        if not arcs:
            raise ValueError("a network needs at least one arc")
        object.__setattr__(self, "arcs", arcs)

    @property
    def arc_count(self) -> int:
        return len(self.arcs)

    @cached_property
    def _coefficient_matrix(self) -> np.ndarray:
        degree = max(arc.degree for arc in self.arcs)
        mat = np.zeros((self.arc_count, degree + 1))
        for i, arc in enumerate(self.arcs):
            mat[i, : arc.degree + 1] = arc.coefficients
        mat.flags.writeable = False
        return mat

    @cached_property
    def _slope_matrix(self) -> np.ndarray:
        c = self._coefficient_matrix
        mat = c[:, 1:] * np.arange(1, c.shape[1])
        if mat.shape[1] == 0:
            mat = np.zeros((self.arc_count, 1))
        mat.flags.writeable = False
        return mat

    @cached_property
    def _curvature_matrix(self) -> np.ndarray:
        s = self._slope_matrix
        mat = s[:, 1:] * np.arange(1, s.shape[1])
        if mat.shape[1] == 0:
            mat = np.zeros((self.arc_count, 1))
        mat.flags.writeable = False
        return mat

    @staticmethod
    def _horner(matrix: np.ndarray, loads: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(loads)
        for j in range(matrix.shape[1] - 1, -1, -1):
            acc = acc * loads + matrix[:, j]
        return acc

    def _as_loads(self, loads) -> np.ndarray:
        loads = np.asarray(loads, dtype=float)
        if loads.shape != (self.arc_count,):
            raise ValueError(f"expected {self.arc_count} per-arc loads, got shape {loads.shape}")
        if (loads < 0.0).any():
            raise ValueError("per-arc loads must be nonnegative")
        return loads

    def costs(self, loads) -> np.ndarray:
        """Per-arc cost vector c_r(loads_r)."""
        return self._horner(self._coefficient_matrix, self._as_loads(loads))

    def cost_slopes(self, loads) -> np.ndarray:
        """Per-arc derivative vector c'_r(loads_r)."""
        return self._horner(self._slope_matrix, self._as_loads(loads))

    def cost_curvatures(self, loads) -> np.ndarray:
        """Per-arc second-derivative vector c''_r(loads_r)."""
        return self._horner(self._curvature_matrix, self._as_loads(loads))


@dataclass(frozen=True)
class ArcViolation:
    arc: int
    message: str


@dataclass(frozen=True)
class NetworkValidation:
    """Outcome of vetting every arc of a (proposed) network."""

    violations: tuple[ArcViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_network(network: Union[Network, Iterable[Sequence[float]]]) -> NetworkValidation:
    """Vet a Network or raw per-arc coefficient rows against the cost-function rules."""
    if isinstance(network, Network):
        rows: Iterable[Sequence[float]] = [arc.coefficients for arc in network.arcs]
    else:
        rows = list(network)
    found = []
    count = 0
    for index, row in enumerate(rows):
        count += 1
        for message in arc_coefficient_violations(row):
            found.append(ArcViolation(arc=index, message=message))
    if count == 0:
        found.append(ArcViolation(arc=0, message="a network needs at least one arc"))
    return NetworkValidation(violations=tuple(found))


@dataclass(frozen=True)
class CompositionProfile:
    """Partition of the unit demand into individuals (T^0) and coalitions (T^1..T^K).

    Coalition weights must be positive and sorted non-increasing; together with
    the individual weight they must sum to 1 within WEIGHT_SUM_TOLERANCE.
    """

    individual_weight: float
    coalition_weights: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        t0 = float(self.individual_weight)
        weights = tuple(float(t) for t in self.coalition_weights)
        object.__setattr__(self, "individual_weight", t0)
        object.__setattr__(self, "coalition_weights", weights)
        if not np.isfinite(t0) or t0 < 0.0 or t0 > 1.0:
            raise ValueError(f"individual weight must lie in [0, 1], got {t0!r}")
        for k, t in enumerate(weights, start=1):
            if not np.isfinite(t) or t <= 0.0:
                raise ValueError(f"coalition {k} has non-positive weight {t!r}")
        for k in range(1, len(weights)):
            if weights[k] > weights[k - 1]:
                raise ValueError("coalition weights must be sorted non-increasing")
        total = t0 + sum(weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValueError(f"profile weights must sum to 1 (got {total!r})")

    @property
    def coalition_count(self) -> int:
        return len(self.coalition_weights)

    @property
    def row_weights(self) -> tuple[float, ...]:
        """Weights in flow-row order: individuals first, then each coalition."""
        return (self.individual_weight, *self.coalition_weights)


@dataclass(frozen=True, eq=False)
class FlowProfile:
    """(1+K) x R table of per-group per-arc flows; row 0 is the individuals'."""

    rows: np.ndarray
    profile: CompositionProfile

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=float, copy=True)
        weights = self.profile.row_weights
        if rows.ndim != 2 or rows.shape[0] != len(weights):
            raise ValueError(
                f"flow table must have {len(weights)} rows (individuals + coalitions), "
                f"got shape {rows.shape}"
            )
        if (rows < 0.0).any():
            raise ValueError("flow entries must be nonnegative")
        sums = rows.sum(axis=1)
        for k, (got, want) in enumerate(zip(sums, weights)):
            if abs(got - want) > ROW_SUM_TOLERANCE:
                raise ValueError(f"row {k} sums to {got!r}, expected weight {want!r}")
        if (rows.sum(axis=0) > 1.0 + ROW_SUM_TOLERANCE).any():
            raise ValueError("aggregate arc load exceeds the unit demand")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def arc_count(self) -> int:
        return self.rows.shape[1]

    @cached_property
    def aggregate(self) -> np.ndarray:
        """Per-arc total load x_r summed over individuals and coalitions."""
        agg = self.rows.sum(axis=0)
        agg.flags.writeable = False
        return agg

    @property
    def individual_flow(self) -> np.ndarray:
        return self.rows[0]

    def coalition_flow(self, k: int) -> np.ndarray:
        """Flow row of coalition k, 1-based."""
        if not 1 <= k <= self.profile.coalition_count:
            raise ValueError(f"coalition index {k} out of range")
        return self.rows[k]


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    """Flows plus cost summary and residual diagnostics for one solved game."""

    network: Network
    flow: FlowProfile
    individual_cost: Optional[float]
    coalition_avg_costs: tuple[float, ...]
    coalition_marginals: tuple[float, ...]
    social_cost: float
    gap: float
    iterations: int

    def __post_init__(self) -> None:
        agg = self.flow.aggregate
        recomputed = float(agg @ self.network.costs(agg))
        if abs(recomputed - self.social_cost) > 1e-9:
            raise ValueError(
                f"social cost {self.social_cost!r} disagrees with flows ({recomputed!r})"
            )
        if self.gap < -1e-10:
            raise ValueError(f"equilibrium gap must be (numerically) nonnegative, got {self.gap!r}")

    @property
    def min_arc_cost(self) -> float:
        """Lowest arc cost c^0 at the reported flows."""
        return float(self.network.costs(self.flow.aggregate).min())
