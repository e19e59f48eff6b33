"""Wire-sensor resistance logs to corrosion events and calibration points.

A sacrificial wire that corrodes through turns into an open circuit, so its
resistance jumps by orders of magnitude. The first such jump dates the
failure; corrosion is assumed to have started a fixed lead time earlier.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, FormatError
from .model import SECONDS_PER_DAY
from .temperature import CosineTemperatureModel

DEFAULT_LEAD_TIME = 24 * SECONDS_PER_DAY


@dataclass(frozen=True)
class ResistanceSample:
    t: float
    resistance: float
    wire_id: str
    wire_depth: float

    def __post_init__(self):
        if self.resistance < 0:
            raise DomainError("resistance must be non-negative")
        if not self.wire_depth > 0:
            raise DomainError("wire depth must be positive")


@dataclass(frozen=True)
class CorrosionEvent:
    """One wire failure.

    ``onset_time`` is ``failure_time - lead_time``; ``onset_temp`` is filled in
    from the temperature model by :func:`assemble_calibration_points`.
    ``table_temp`` keeps any externally reported temperature as metadata only.
    """

    wire_id: str
    wire_depth: float
    failure_time: float
    onset_time: float
    onset_temp: float | None = None
    excluded: bool = False
    reason: str = ""
    table_temp: float | None = None

    def __post_init__(self):
        if not self.onset_time > 0:
            raise DomainError(f"wire {self.wire_id}: onset time must be positive")


def make_event(wire_id, wire_depth, failure_time, lead_time=DEFAULT_LEAD_TIME, **kw) -> CorrosionEvent:
    return CorrosionEvent(str(wire_id), float(wire_depth), float(failure_time), float(failure_time) - lead_time, **kw)


@dataclass(frozen=True)
class JumpConfig:
    factor: float = 10.0
    window: int = 20


@dataclass(frozen=True)
class CalibrationPoint:
    """A calibration triple: depth [m], age [s], temperature [K]."""

    x: float
    t: float
    temp: float


@dataclass
class CalibrationSet:
    points: list[CalibrationPoint]
    dropped: dict[str, str] = field(default_factory=dict)

    @property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.array([p.x for p in self.points])
        t = np.array([p.t for p in self.points])
        temp = np.array([p.temp for p in self.points])
        return x, t, temp


def parse_time(value: str, origin: datetime | None = None) -> float:
    """Seconds since the concreting date.

    ``value`` is either epoch/age seconds or an ISO-8601 timestamp. ISO values
    and, when ``origin`` is given, numeric epoch values are measured from
    ``origin``; numeric values without an origin are taken as concrete age.
    """
    value = value.strip()
    try:
        seconds = float(value)
    except ValueError:
        if origin is None:
            raise FormatError(f"ISO timestamp {value!r} requires a concreting date") from None
        try:
            stamp = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError as exc:
            raise FormatError(f"unparseable timestamp {value!r}") from exc
        return (_aware(stamp) - _aware(origin)).total_seconds()
    if origin is not None:
        return seconds - _aware(origin).timestamp()
    return seconds


def _aware(d: datetime) -> datetime:
    return d if d.tzinfo else d.replace(tzinfo=timezone.utc)


def read_sensor_csv(path, origin: datetime | None = None) -> list[ResistanceSample]:
    """Read ``wire_id,wire_depth_m,t_seconds,resistance_ohm`` rows.

    A ``timestamp`` column (ISO-8601 or epoch seconds) may replace
    ``t_seconds``; it is converted with ``origin`` as clock zero.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        fields = set(reader.fieldnames or [])
        time_col = "t_seconds" if "t_seconds" in fields else "timestamp"
        required = {"wire_id", "wire_depth_m", "resistance_ohm", time_col}
        if not required <= fields:
            raise FormatError(f"{path}: expected columns {sorted(required)}, got {sorted(fields)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                if time_col == "t_seconds":
                    t = float(row["t_seconds"])
                else:
                    t = parse_time(row["timestamp"], origin)
                out.append(
                    ResistanceSample(t, float(row["resistance_ohm"]), row["wire_id"], float(row["wire_depth_m"]))
                )
            except (TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_sensor_csv(path, samples: Iterable[ResistanceSample]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["wire_id", "wire_depth_m", "t_seconds", "resistance_ohm"])
        for s in samples:
            writer.writerow([s.wire_id, repr(s.wire_depth), repr(s.t), repr(s.resistance)])


def _group(samples: Sequence[ResistanceSample]) -> dict[str, list[ResistanceSample]]:
    groups: dict[str, list[ResistanceSample]] = defaultdict(list)
    for s in samples:
        groups[s.wire_id].append(s)
    return dict(groups)


def detect_jumps(samples: Sequence[ResistanceSample], config: JumpConfig = JumpConfig()) -> dict[str, float | None]:
    """First resistance jump per wire.

    A jump is the first sample whose resistance exceeds ``config.factor``
    times the median of up to ``config.window`` preceding samples.

    Returns
    -------
    dict
        ``wire_id -> failure time`` (None when the wire never jumps).

    Raises
    ------
    FormatError
        If timestamps of a wire are unsorted or duplicated.
    """
    result: dict[str, float | None] = {}
    for wire_id, series in _group(samples).items():
        t = np.array([s.t for s in series])
        r = np.array([s.resistance for s in series])
        if np.any(np.diff(t) <= 0):
            raise FormatError(f"wire {wire_id}: timestamps must be strictly increasing")
        result[wire_id] = None
        for i in range(1, len(r)):
            baseline = np.median(r[max(0, i - config.window) : i])
            if r[i] > config.factor * baseline:
                result[wire_id] = float(t[i])
                break
    return result


def events_from_samples(
    samples: Sequence[ResistanceSample],
    config: JumpConfig = JumpConfig(),
    lead_time: float = DEFAULT_LEAD_TIME,
) -> list[CorrosionEvent]:
    """Run :func:`detect_jumps` and wrap each failure as a :class:`CorrosionEvent`."""
    depths = {s.wire_id: s.wire_depth for s in samples}
    events = []
    for wire_id, failure in detect_jumps(samples, config).items():
        if failure is not None:
            events.append(make_event(wire_id, depths[wire_id], failure, lead_time))
    return sorted(events, key=lambda e: e.wire_depth)


def assemble_calibration_points(
    events: Sequence[CorrosionEvent],
    temp_model: CosineTemperatureModel,
    exclusions: Mapping[str, str] | Iterable[str] = (),
) -> tuple[CalibrationSet, list[CorrosionEvent]]:
    """Drop excluded wires and attach model temperatures at onset.

    ``exclusions`` is a set of wire ids or a mapping ``wire_id -> reason``.

    Returns
    -------
    CalibrationSet
        Retained points sorted by depth.
    list of CorrosionEvent
        All events with ``onset_temp`` and exclusion flags filled in.
    """
    if not isinstance(exclusions, Mapping):
        exclusions = {w: "excluded by configuration" for w in exclusions}
    depths = [e.wire_depth for e in events]
    if len(set(depths)) != len(depths):
        raise FormatError("calibration events must have distinct depths")

    annotated = []
    points = []
    dropped = {}
    for e in sorted(events, key=lambda e: e.wire_depth):
        temp = float(temp_model.evaluate(e.onset_time))
        excluded = e.wire_id in exclusions
        reason = exclusions[e.wire_id] if excluded else ""
        annotated.append(
            CorrosionEvent(e.wire_id, e.wire_depth, e.failure_time, e.onset_time, temp, excluded, reason, e.table_temp)
        )
        if excluded:
            dropped[e.wire_id] = reason
        else:
            points.append(CalibrationPoint(e.wire_depth, e.onset_time, temp))
    return CalibrationSet(points, dropped), annotated


def events_to_json(events: Sequence[CorrosionEvent], **meta) -> str:
    payload = dict(meta)
    payload["events"] = [asdict(e) for e in events]
    return json.dumps(payload, indent=2, sort_keys=True)


def events_from_json(text: str) -> list[CorrosionEvent]:
    payload = json.loads(text)
    rows = payload["events"] if isinstance(payload, dict) else payload
    return [CorrosionEvent(**row) for row in rows]
