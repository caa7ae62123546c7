"""Plain-text instance files: a network, a composition profile, solver settings.

Format (see docs/instance-format.md for the grammar): three sections introduced
by `arcs:`, `profile:` and optionally `settings:`.  Arc lines list polynomial
coefficients low degree first; the profile names the individuals' weight and
the coalition weights; settings override solver defaults.  `#` starts a
comment, blank lines are ignored, unknown sections or keys are rejected with
the offending line number.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from .core import CompositionProfile, CostFunction, Network, arc_coefficient_violations
from .equilibrium import SolverSettings


class InstanceFormatError(ValueError):
    """Parse or validation failure, carrying the 1-based line number if known."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class Instance:
    network: Network
    profile: CompositionProfile
    settings: SolverSettings


_SECTIONS = ("arcs", "profile", "settings")
_SETTING_PARSERS = {
    "level_tolerance": float,
    "gap_tolerance": float,
    "max_outer_iterations": int,
    "support_epsilon": float,
}


def _parse_number(token: str, line: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise InstanceFormatError(f"{what}: malformed number {token!r}", line) from None


def parse_instance(text: str) -> Instance:
    """Parse instance text strictly; raises InstanceFormatError with a position."""
    section: Optional[str] = None
    seen: set[str] = set()
    arc_rows: list[tuple[int, list[float]]] = []
    individuals: Optional[tuple[int, float]] = None
    coalitions: Optional[tuple[int, list[float]]] = None
    overrides: dict[str, float] = {}
    profile_line = None

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.endswith(":"):
            name = line[:-1].strip()
            if name not in _SECTIONS:
                raise InstanceFormatError(f"unknown section {name!r}", number)
            if name in seen:
                raise InstanceFormatError(f"duplicate section {name!r}", number)
            seen.add(name)
            section = name
            continue
        if section is None:
            raise InstanceFormatError("content before any section header", number)
        tokens = line.split()
        if section == "arcs":
            coeffs = [
                _parse_number(tok, number, f"arc {len(arc_rows) + 1}") for tok in tokens
            ]
            for message in arc_coefficient_violations(coeffs):
                raise InstanceFormatError(f"arc {len(arc_rows) + 1}: {message}", number)
            arc_rows.append((number, coeffs))
        elif section == "profile":
            key = tokens[0]
            profile_line = profile_line or number
            if key == "individuals":
                if individuals is not None:
                    raise InstanceFormatError("duplicate 'individuals' entry", number)
                if len(tokens) != 2:
                    raise InstanceFormatError(
                        "'individuals' takes exactly one weight", number
                    )
                individuals = (number, _parse_number(tokens[1], number, "individual weight"))
            elif key == "coalitions":
                if coalitions is not None:
                    raise InstanceFormatError("duplicate 'coalitions' entry", number)
                values = [
                    _parse_number(tok, number, f"coalition weight {i + 1}")
                    for i, tok in enumerate(tokens[1:])
                ]
                coalitions = (number, values)
            else:
                raise InstanceFormatError(f"unknown profile field {key!r}", number)
        else:
            key = tokens[0]
            if key not in _SETTING_PARSERS:
                raise InstanceFormatError(f"unknown setting {key!r}", number)
            if key in overrides:
                raise InstanceFormatError(f"duplicate setting {key!r}", number)
            if len(tokens) != 2:
                raise InstanceFormatError(f"setting {key!r} takes exactly one value", number)
            value = _parse_number(tokens[1], number, f"setting {key!r}")
            overrides[key] = _SETTING_PARSERS[key](value)

    if not arc_rows:
        raise InstanceFormatError("missing or empty 'arcs:' section")
    if individuals is None:
        raise InstanceFormatError("profile must declare the individuals' weight")

    network = Network(arcs=tuple(CostFunction(tuple(row)) for _, row in arc_rows))
    coalition_line, coalition_weights = coalitions if coalitions else (individuals[0], [])
    try:
        profile = CompositionProfile(individuals[1], tuple(coalition_weights))
    except ValueError as exc:
        raise InstanceFormatError(str(exc), coalition_line) from None
    try:
        settings = SolverSettings(**overrides)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None
    return Instance(network=network, profile=profile, settings=settings)


def load_instance(path) -> Instance:
    """Read and parse an instance file."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_instance(handle.read())


def emit_instance(instance: Instance) -> str:
    """Serialize an instance; parse(emit(parse(text))) equals parse(text)."""
    lines = ["arcs:"]
    for arc in instance.network.arcs:
        lines.append(" ".join(repr(a) for a in arc.coefficients))
    lines.append("profile:")
    lines.append(f"individuals {instance.profile.individual_weight!r}")
    if instance.profile.coalition_weights:
        lines.append(
            "coalitions " + " ".join(repr(t) for t in instance.profile.coalition_weights)
        )
    lines.append("settings:")
    for field in dataclasses.fields(SolverSettings):
        lines.append(f"{field.name} {getattr(instance.settings, field.name)!r}")
    return "\n".join(lines) + "\n"
