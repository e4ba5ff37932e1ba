"""Logical traffic enumeration for uncontrolled intersections.

An intersection with ``n`` entry legs (indexed 0..n-1) and ``c`` cars admits
``(n-1)**c`` raw movement assignments: each car picks an offset 1..n-1 from
its entry to its exit, taken modulo n.  Raw assignments are then grouped,
either by their direction multiset (the default reduction) or by exact
equivalence under rotating the whole intersection.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

from .errors import CapacityError, DomainError

DEFAULT_RAW_CAP = 10**6

CROSSING = "crossing"
MERGING = "merging"
DIVERGING = "diverging"
OPPOSING = "opposing-through"


@dataclass(frozen=True)
class CarEntry:
    """A car waiting at one entry leg."""

    car_id: int
    entry: int


@dataclass(frozen=True)
class FunctionalSpec:
    """Car count and per-car entry assignments for one intersection."""

    num_entries: int
    cars: tuple[CarEntry, ...]

    def __post_init__(self):
        if self.num_entries < 3:
            raise DomainError(f"an intersection needs at least 3 entries, got {self.num_entries}")
        if not self.cars:
            raise DomainError("a functional spec needs at least one car")
        ids = [c.car_id for c in self.cars]
        if len(set(ids)) != len(ids):
            raise DomainError(f"car ids must be unique, got {ids}")
        for car in self.cars:
            if not 0 <= car.entry < self.num_entries:
                raise DomainError(
                    f"car {car.car_id} entry {car.entry} outside [0, {self.num_entries})"
                )

    @classmethod
    def from_entries(cls, num_entries: int, entries: Sequence[int]) -> "FunctionalSpec":
        return cls(num_entries, tuple(CarEntry(i, e) for i, e in enumerate(entries)))

    @property
    def entries(self) -> tuple[int, ...]:
        return tuple(c.entry for c in self.cars)


@dataclass(frozen=True)
class SymbolicMove:
    """One car's movement: offset ``direction`` (1..n-1) from its entry."""

    car_id: int
    entry: int
    direction: int


@dataclass(frozen=True)
class LogicalScenario:
    """One movement assignment for every car of a spec."""

    num_entries: int
    moves: tuple[SymbolicMove, ...]

    @property
    def directions(self) -> tuple[int, ...]:
        return tuple(m.direction for m in self.moves)

    @property
    def exits(self) -> tuple[int, ...]:
        return tuple(exit_point(m.entry, m.direction, self.num_entries) for m in self.moves)

    def to_json(self) -> dict:
        return {
            "n": self.num_entries,
            "cars": [
                {
                    "id": m.car_id,
                    "entry": m.entry,
                    "direction": m.direction,
                    "exit": exit_point(m.entry, m.direction, self.num_entries),
                }
                for m in self.moves
            ],
            "pattern": {str(d): c for d, c in pattern_of(self).counts},
        }


@dataclass(frozen=True)
class MovementPattern:
    """Multiset of directions over a scenario, as sorted (direction, count)."""

    counts: tuple[tuple[int, int], ...]

    @classmethod
    def from_directions(cls, directions: Iterable[int]) -> "MovementPattern":
        tally: dict[int, int] = {}
        for d in directions:
            tally[d] = tally.get(d, 0) + 1
        return cls(tuple(sorted(tally.items())))

    @property
    def size(self) -> int:
        return sum(c for _, c in self.counts)

    @property
    def label(self) -> str:
        parts: list[str] = []
        for d, c in self.counts:
            parts.extend([str(d)] * c)
        return "(" + ",".join(parts) + ")"

    def as_dict(self) -> dict[int, int]:
        return dict(self.counts)


def pattern_of(scenario: LogicalScenario) -> MovementPattern:
    return MovementPattern.from_directions(scenario.directions)


@dataclass(frozen=True)
class PatternClass:
    """A group of raw scenarios with one canonical representative."""

    pattern: MovementPattern
    representative: LogicalScenario
    members: int


@dataclass(frozen=True)
class ConflictPair:
    car_a: int
    car_b: int
    kind: str


@dataclass(frozen=True)
class ConflictReport:
    pairs: tuple[ConflictPair, ...]

    def kinds(self) -> set[str]:
        return {p.kind for p in self.pairs}

    def to_json(self) -> list[dict]:
        return [{"car_a": p.car_a, "car_b": p.car_b, "kind": p.kind} for p in self.pairs]


def exit_point(entry: int, direction: int, n: int) -> int:
    """Exit leg index: (entry + direction) mod n, never the entry itself."""
    if n < 3:
        raise DomainError(f"need at least 3 entries, got {n}")
    if not 0 <= entry < n:
        raise DomainError(f"entry {entry} outside [0, {n})")
    if not 1 <= direction <= n - 1:
        raise DomainError(f"direction {direction} outside [1, {n - 1}]")
    return (entry + direction) % n


def enumerate_raw(spec: FunctionalSpec, cap: int = DEFAULT_RAW_CAP) -> list[LogicalScenario]:
    """All (n-1)**c assignments, lexicographic by (car order, direction)."""
    n = spec.num_entries
    total = (n - 1) ** len(spec.cars)
    if total > cap:
        raise CapacityError(
            f"{len(spec.cars)} cars at {n} entries yield {total} raw scenarios, "
            f"over the cap of {cap}"
        )
    scenarios = []
    for directions in product(range(1, n), repeat=len(spec.cars)):
        moves = tuple(
            SymbolicMove(car.car_id, car.entry, d) for car, d in zip(spec.cars, directions)
        )
        scenarios.append(LogicalScenario(n, moves))
    return scenarios


def _check_same_spec(scenarios: Sequence[LogicalScenario], n: int) -> None:
    if not scenarios:
        raise DomainError("cannot reduce an empty scenario list")
    signature = tuple((m.car_id, m.entry) for m in scenarios[0].moves)
    for s in scenarios:
        if s.num_entries != n:
            raise DomainError(f"scenario has {s.num_entries} entries, expected {n}")
        if tuple((m.car_id, m.entry) for m in s.moves) != signature:
            raise DomainError("scenarios do not share one functional spec")


def _package_classes(groups: dict, n: int) -> list[PatternClass]:
    classes = []
    for members in groups.values():
        rep = min(members, key=lambda s: s.directions)
        classes.append(PatternClass(pattern_of(rep), rep, len(members)))
    return sorted(classes, key=lambda c: c.representative.directions)


def reduce_by_pattern(scenarios: Sequence[LogicalScenario], n: int) -> list[PatternClass]:
    """Group scenarios whose direction multisets agree.

    The default reduction: 3 entries with 3 cars collapse from 8 raw
    scenarios to 4 classes, 4 entries with 3 cars from 27 to 10.  The
    representative is the lexicographically smallest direction tuple of
    the group.
    """
    _check_same_spec(scenarios, n)
    groups: dict[tuple[int, ...], list[LogicalScenario]] = {}
    for s in scenarios:
        groups.setdefault(tuple(sorted(s.directions)), []).append(s)
    return _package_classes(groups, n)


def rotation_orbits(scenarios: Sequence[LogicalScenario], n: int) -> list[PatternClass]:
    """Group scenarios equivalent under rotating the whole intersection.

    Two scenarios are merged iff some rotation k maps the multiset of
    (entry, direction) placements of one exactly onto the other's.  This is
    the honest cyclic group action: directions are preserved, entries shift
    by k, and car identities are erased (cars are interchangeable).  Used as
    the verification oracle for reduce_by_pattern on rotation-symmetric car
    placements; on asymmetric placements it is strictly finer and never
    merges rotation-inequivalent scenarios.
    """
    _check_same_spec(scenarios, n)
    groups: dict[tuple, list[LogicalScenario]] = {}
    for s in scenarios:
        placement = [(m.entry, m.direction) for m in s.moves]
        key = min(
            tuple(sorted(((e + k) % n, d) for e, d in placement)) for k in range(n)
        )
        groups.setdefault(key, []).append(s)
    return _package_classes(groups, n)


def _chords_interleave(a1: int, a2: int, b1: int, b2: int, n: int) -> bool:
    # All four points distinct; walk CCW from a1 to a2 and count b endpoints
    # strictly inside that open arc.  Interleaved iff exactly one is.
    def inside(x: int) -> bool:
        return 0 < (x - a1) % n < (a2 - a1) % n

    return inside(b1) != inside(b2)


def classify_pair(a: SymbolicMove, b: SymbolicMove, n: int) -> str | None:
    """Conflict kind for two movements, or None when their paths stay apart."""
    a_exit = exit_point(a.entry, a.direction, n)
    b_exit = exit_point(b.entry, b.direction, n)
    if a_exit == b_exit:
        return MERGING
    if a.entry == b.entry:
        return DIVERGING
    if a.entry == b_exit and b.entry == a_exit:
        return OPPOSING
    if a.entry == b_exit or b.entry == a_exit:
        return None  # chords touch at a single leg; different lanes there
    return CROSSING if _chords_interleave(a.entry, a_exit, b.entry, b_exit, n) else None


def conflict_matrix(scenario: LogicalScenario, n: int) -> ConflictReport:
    """Pairwise conflict classification over one scenario's movements."""
    if scenario.num_entries != n:
        raise DomainError(f"scenario has {scenario.num_entries} entries, expected {n}")
    pairs = []
    moves = scenario.moves
    for i in range(len(moves)):
        for j in range(i + 1, len(moves)):
            kind = classify_pair(moves[i], moves[j], n)
            if kind is not None:
                pairs.append(ConflictPair(moves[i].car_id, moves[j].car_id, kind))
    return ConflictReport(tuple(pairs))
