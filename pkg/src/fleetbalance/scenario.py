"""Scenario types, validation and JSON ingestion."""

from __future__ import annotations

import csv
import enum
import io
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np


class ScenarioError(ValueError):
    """Raised when a scenario document cannot be turned into a Scenario."""


class VehicleClass(str, enum.Enum):
    CAR = "car"
    E_BIKE = "e-bike"
    KICK_SCOOTER = "kick-scooter"
    MOPED = "moped"
    QUAD = "quad"
    OTHER = "other"

    @property
    def van_portable(self) -> bool:
        return self in (VehicleClass.E_BIKE, VehicleClass.KICK_SCOOTER)


class Relaxation(str, enum.Enum):
    NONE = "none"
    STAFF_VAN = "staff-van"


@dataclass(frozen=True)
class Station:
    id: int
    n_min: int | None = None
    n_max: int | None = None


@dataclass(frozen=True)
class Vehicle:
    id: int
    station: int
    autonomy_km: float
    vehicle_class: VehicleClass = VehicleClass.CAR

    @property
    def van_portable(self) -> bool:
        return self.vehicle_class.van_portable


@dataclass(frozen=True)
class IncentiveLevel:
    index: int
    rate: float
    acceptance_rate: float


@dataclass(frozen=True)
class Scenario:
    """A station-based fleet snapshot plus the incentive scheme.

    ``distances[i][j]`` is indexed by station *position* (the order of
    ``stations``), not by station id.
    """

    stations: tuple[Station, ...]
    vehicles: tuple[Vehicle, ...]
    distances: tuple[tuple[float, ...], ...]
    cost_per_km: float = 1.0
    default_n_min: int = 0
    default_n_max: int = 0
    user_population: int = 0
    levels: tuple[IncentiveLevel, ...] = ()
    relaxation: Relaxation = Relaxation.NONE
    name: str = ""
    reference_results: dict[str, float] | None = field(default=None, compare=True)

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicles)

    def station_index(self, station_id: int) -> int:
        for pos, st in enumerate(self.stations):
            if st.id == station_id:
                return pos
        raise KeyError(f"unknown station {station_id}")

    def vehicle(self, vehicle_id: int) -> Vehicle:
        for v in self.vehicles:
            if v.id == vehicle_id:
                return v
        raise KeyError(f"unknown vehicle {vehicle_id}")

    def bounds(self, pos: int) -> tuple[int, int]:
        st = self.stations[pos]
        lo = self.default_n_min if st.n_min is None else st.n_min
        hi = self.default_n_max if st.n_max is None else st.n_max
        return lo, hi

    def vehicles_at(self, pos: int) -> list[Vehicle]:
        sid = self.stations[pos].id
        return [v for v in self.vehicles if v.station == sid]

    def distance(self, i: int, j: int) -> float:
        return self.distances[i][j]

    def distance_array(self) -> np.ndarray:
        return np.asarray(self.distances, dtype=float).reshape(self.n_stations, self.n_stations)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


# -- parsing -------------------------------------------------------------------


def _require(doc: dict, key: str) -> Any:
    if key not in doc:
        raise ScenarioError(f"missing required key {key!r}")
    return doc[key]


def _read_distance_csv(path: Path) -> list[list[float]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read distance file {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    try:
        return [[float(c) for c in r] for r in rows]
    except ValueError as exc:
        raise ScenarioError(f"non-numeric entry in {path}: {exc}") from exc


def _optional_int(value: Any, what: str) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ScenarioError(f"{what} must be an integer, got {value!r}")
    return int(value)


def parse_scenario(text: str, base_dir: str | Path | None = None) -> Scenario:
    """Parse a scenario JSON document.

    ``base_dir`` resolves a ``{"csv": "file.csv"}`` distance reference; it
    defaults to the current directory.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")

    defaults = doc.get("defaults", {})
    stations = []
    for raw in _require(doc, "stations"):
        stations.append(
            Station(
                id=_optional_int(_require(raw, "id"), "station id"),
                n_min=_optional_int(raw.get("n_min"), "n_min"),
                n_max=_optional_int(raw.get("n_max"), "n_max"),
            )
        )

    vehicles = []
    for raw in _require(doc, "vehicles"):
        cls = raw.get("class", "car")
        try:
            vclass = VehicleClass(cls)
        except ValueError:
            raise ScenarioError(f"unknown vehicle class {cls!r} for vehicle {raw.get('id')}") from None
        vehicles.append(
            Vehicle(
                id=_optional_int(_require(raw, "id"), "vehicle id"),
                station=_optional_int(_require(raw, "station"), "vehicle station"),
                autonomy_km=float(_require(raw, "autonomy_km")),
                vehicle_class=vclass,
            )
        )

    raw_dist = _require(doc, "distances")
    if isinstance(raw_dist, dict):
        ref = Path(_require(raw_dist, "csv"))
        if not ref.is_absolute():
            ref = Path(base_dir or ".") / ref
        matrix = _read_distance_csv(ref)
    else:
        matrix = raw_dist
    n = len(stations)
    if len(matrix) != n or any(len(row) != n for row in matrix):
        shape = f"{len(matrix)}x{max((len(r) for r in matrix), default=0)}"
        raise ScenarioError(f"dimension mismatch: {n} stations but distance matrix is {shape}")
    distances = tuple(tuple(float(x) for x in row) for row in matrix)

    levels = tuple(
        IncentiveLevel(index=u + 1, rate=float(_require(raw, "rate")), acceptance_rate=float(_require(raw, "acceptance_rate")))
        for u, raw in enumerate(doc.get("levels", []))
    )
    try:
        relaxation = Relaxation(doc.get("relaxation", "none"))
    except ValueError:
        raise ScenarioError(f"unknown relaxation policy {doc.get('relaxation')!r}") from None

    reference = doc.get("reference_results")
    if reference is not None:
        reference = {str(k): float(v) for k, v in reference.items()}

    return Scenario(
        stations=tuple(stations),
        vehicles=tuple(vehicles),
        distances=distances,
        cost_per_km=float(_require(doc, "cost_per_km")),
        default_n_min=_optional_int(defaults.get("n_min", 0), "defaults.n_min"),
        default_n_max=_optional_int(defaults.get("n_max", len(vehicles)), "defaults.n_max"),
        user_population=_optional_int(doc.get("user_population", 0), "user_population"),
        levels=levels,
        relaxation=relaxation,
        name=str(doc.get("name", "")),
        reference_results=reference,
    )


def scenario_to_dict(s: Scenario) -> dict:
    stations = []
    for st in s.stations:
        entry: dict[str, Any] = {"id": st.id}
        if st.n_min is not None:
            entry["n_min"] = st.n_min
        if st.n_max is not None:
            entry["n_max"] = st.n_max
        stations.append(entry)
    doc: dict[str, Any] = {
        "name": s.name,
        "stations": stations,
        "defaults": {"n_min": s.default_n_min, "n_max": s.default_n_max},
        "vehicles": [
            {"id": v.id, "station": v.station, "autonomy_km": v.autonomy_km, "class": v.vehicle_class.value}
            for v in s.vehicles
        ],
        "distances": [list(row) for row in s.distances],
        "cost_per_km": s.cost_per_km,
        "user_population": s.user_population,
        "levels": [{"rate": lv.rate, "acceptance_rate": lv.acceptance_rate} for lv in s.levels],
        "relaxation": s.relaxation.value,
    }
    if s.reference_results is not None:
        doc["reference_results"] = dict(s.reference_results)
    return doc


def dump_scenario(s: Scenario) -> str:
    """Serialize to the JSON document format, one vehicle per line."""
    doc = scenario_to_dict(s)
    lines = ["{"]
    items = list(doc.items())
    for n, (key, value) in enumerate(items):
        sep = "," if n < len(items) - 1 else ""
        if isinstance(value, list) and value:
            lines.append(f'  "{key}": [')
            for m, elem in enumerate(value):
                lines.append("    " + json.dumps(elem) + ("," if m < len(value) - 1 else ""))
            lines.append("  ]" + sep)
        else:
            lines.append(f'  "{key}": {json.dumps(value)}{sep}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file; bare names like ``scenario1`` resolve to the bundled data."""
    p = Path(path)
    if not p.exists():
        name = p.name if p.suffix == ".json" else p.name + ".json"
        bundled = resources.files("fleetbalance.data") / name
        if bundled.is_file():
            return parse_scenario(bundled.read_text(encoding="utf-8"))
    text = p.read_text(encoding="utf-8")
    return parse_scenario(text, base_dir=p.parent)


def bundled_scenario(name: str) -> Scenario:
    return parse_scenario((resources.files("fleetbalance.data") / f"{name}.json").read_text(encoding="utf-8"))


# -- validation ----------------------------------------------------------------


def validate_scenario(s: Scenario) -> list[Violation]:
    out: list[Violation] = []

    def flag(code: str, message: str) -> None:
        out.append(Violation(code, message))

    ids = [st.id for st in s.stations]
    for sid, cnt in Counter(ids).items():
        if cnt > 1:
            flag("duplicate-station-id", f"station id {sid} appears {cnt} times")
    vids = [v.id for v in s.vehicles]
    for vid, cnt in Counter(vids).items():
        if cnt > 1:
            flag("duplicate-vehicle-id", f"vehicle id {vid} appears {cnt} times")

    known = set(ids)
    for v in s.vehicles:
        if v.station not in known:
            flag("unknown-station", f"vehicle {v.id} sits at unknown station {v.station}")
        if v.autonomy_km < 0:
            flag("negative-autonomy", f"vehicle {v.id} has autonomy {v.autonomy_km}")

    bounds_ok = True
    if not 0 <= s.default_n_min <= s.default_n_max:
        bounds_ok = False
        flag("invalid-station-bounds", f"default bounds ({s.default_n_min}, {s.default_n_max})")
    for pos, st in enumerate(s.stations):
        if st.n_min is None and st.n_max is None:
            continue
        lo, hi = s.bounds(pos)
        if not 0 <= lo <= hi:
            bounds_ok = False
            flag("invalid-station-bounds", f"station {st.id} bounds ({lo}, {hi})")

    n = s.n_stations
    if len(s.distances) != n or any(len(row) != n for row in s.distances):
        flag("distance-shape", f"distance matrix is not {n}x{n}")
    else:
        for i in range(n):
            if s.distances[i][i] != 0:
                flag("nonzero-diagonal", f"distance from station {s.stations[i].id} to itself is {s.distances[i][i]}")
            for j in range(n):
                if s.distances[i][j] < 0:
                    flag("negative-distance", f"distance {s.stations[i].id}->{s.stations[j].id} is {s.distances[i][j]}")

    if not s.cost_per_km > 0:
        flag("nonpositive-cost", f"cost_per_km is {s.cost_per_km}")
    if s.user_population < 0:
        flag("negative-population", f"user_population is {s.user_population}")
    for lv in s.levels:
        if not 0 < lv.rate <= 1:
            flag("invalid-incentive-rate", f"level {lv.index} rate {lv.rate} outside (0, 1]")
        if not 0 <= lv.acceptance_rate <= 1:
            flag("invalid-acceptance-rate", f"level {lv.index} acceptance rate {lv.acceptance_rate} outside [0, 1]")

    if bounds_ok and n:
        lo_sum = sum(s.bounds(p)[0] for p in range(n))
        hi_sum = sum(s.bounds(p)[1] for p in range(n))
        if not lo_sum <= s.n_vehicles <= hi_sum:
            flag(
                "infeasible-stock-bounds",
                f"{s.n_vehicles} vehicles cannot satisfy sum n_min={lo_sum}, sum n_max={hi_sum}",
            )
    return out


def stock_counts(s: Scenario) -> tuple[int, ...]:
    """Vehicles per station before relocation, in station order."""
    pos = {st.id: p for p, st in enumerate(s.stations)}
    counts = [0] * s.n_stations
    for v in s.vehicles:
        counts[pos[v.station]] += 1
    return tuple(counts)


def with_bounds(s: Scenario, bounds: Sequence[tuple[int, int]]) -> Scenario:
    """Copy of ``s`` with explicit per-station bounds."""
    stations = tuple(replace(st, n_min=lo, n_max=hi) for st, (lo, hi) in zip(s.stations, bounds))
    return replace(s, stations=stations)


def random_scenario(
    rng: np.random.Generator,
    n_stations: int,
    n_vehicles: int,
    *,
    max_distance: int = 10,
    max_autonomy: int = 10,
    vehicle_class: VehicleClass | None = None,
    relaxation: Relaxation = Relaxation.NONE,
    user_population: int | None = None,
    n_levels: int = 3,
    symmetric: bool = False,
) -> Scenario:
    """Small random instance with integer distances and autonomies.

    Bounds are drawn so that the stock-bound invariant holds.
    """
    stations = []
    for sid in range(1, n_stations + 1):
        lo = int(rng.integers(0, max(1, n_vehicles // n_stations + 2)))
        hi = lo + int(rng.integers(0, n_vehicles + 1))
        stations.append(Station(sid, lo, hi))
    lo_sum = sum(st.n_min for st in stations)
    while lo_sum > n_vehicles:
        k = int(rng.integers(0, n_stations))
        if stations[k].n_min > 0:
            stations[k] = replace(stations[k], n_min=stations[k].n_min - 1)
            lo_sum -= 1
    hi_sum = sum(st.n_max for st in stations)
    while hi_sum < n_vehicles:
        k = int(rng.integers(0, n_stations))
        stations[k] = replace(stations[k], n_max=stations[k].n_max + 1)
        hi_sum += 1

    d = rng.integers(1, max_distance + 1, size=(n_stations, n_stations)).astype(float)
    if symmetric:
        d = np.triu(d, 1) + np.triu(d, 1).T
    np.fill_diagonal(d, 0.0)

    classes = list(VehicleClass)
    vehicles = []
    for vid in range(1, n_vehicles + 1):
        cls = vehicle_class or classes[int(rng.integers(0, len(classes)))]
        vehicles.append(
            Vehicle(vid, int(rng.integers(1, n_stations + 1)), float(rng.integers(0, max_autonomy + 1)), cls)
        )
    rates = (0.5, 0.7, 0.9, 0.95)[:n_levels]
    population = int(rng.integers(0, 4)) * 100 if user_population is None else user_population
    levels = tuple(
        IncentiveLevel(u + 1, rates[u], float(rng.choice([0.0, 0.005, 0.01, 0.02]))) for u in range(n_levels)
    )
    return Scenario(
        stations=tuple(stations),
        vehicles=tuple(vehicles),
        distances=tuple(tuple(float(x) for x in row) for row in d),
        cost_per_km=1.0,
        default_n_min=0,
        default_n_max=n_vehicles,
        user_population=population,
        levels=levels,
        relaxation=relaxation,
        name="random",
    )
