"""Data ingestion, serialization, and the flat key-value configuration.

Trajectory CSV schema (one row per sample, SI units, 9 significant digits):

    vehicle_id,t,s,lane,lat,v,a_lon,a_lat,d_left,d_right

The marking-distance columns may be empty (aerial-style inputs).  Vehicle
shapes are not part of the trajectory schema; they travel in a companion
vehicles CSV (``vehicle_id,class,length,width``) or fall back to a
configured default.  Configuration files are ``key = value`` lines with
``#`` comments.  JSON reports carry a top-level ``"schema": 1``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .criticality import CriticalityRecord, Thresholds
from .detection import Direction, EventKind, LaneChangeEvent, PeakParams
from .robustness import RobustnessReport
from .trajectory import LaneLayout, Trajectory, VehicleClass, VehicleShape

__all__ = [
    "TRAJECTORY_HEADER",
    "EVENT_HEADER",
    "IngestReport",
    "RunConfig",
    "fmt",
    "ingest",
    "write_trajectories",
    "write_vehicles",
    "read_vehicles",
    "write_events",
    "read_events",
    "write_robustness",
    "write_records",
    "write_json",
    "parse_keyvalues",
]

TRAJECTORY_HEADER = ["vehicle_id", "t", "s", "lane", "lat", "v",
                     "a_lon", "a_lat", "d_left", "d_right"]
EVENT_HEADER = ["vehicle_id", "criterion", "t_start", "t_mid", "t_end",
                "duration", "direction", "v_mid", "lateral_extent", "kind"]
VEHICLE_HEADER = ["vehicle_id", "class", "length", "width"]
RECORD_HEADER = ["vehicle_id", "t_start", "t_end", "direction",
                 "min_d", "max_v", "max_a_lon", "max_a_lat",
                 "min_thw", "min_dce", "min_ttce",
                 "flag_d", "flag_v", "flag_a_lon", "flag_a_lat",
                 "flag_thw", "flag_dce", "flag_ttce"]


def fmt(x: float) -> str:
    """Decimal serialization at 9 significant digits; empty for nan."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.9g}"


# --------------------------------------------------------------------------
# trajectories

@dataclass
class IngestReport:
    trajectories: list[Trajectory] = field(default_factory=list)
    rejected_rows: list[tuple[int, str]] = field(default_factory=list)
    rejected_vehicles: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _parse_float(text: str) -> float:
    return float(text) if text != "" else math.nan


def ingest(path: str | Path,
           shapes: Mapping[str, VehicleShape] | None = None,
           default_shape: VehicleShape | None = None) -> IngestReport:
    """Read and validate a trajectory CSV.

    Rows with non-finite values are rejected and counted; vehicles with
    non-monotone time or fewer than two valid samples are rejected with a
    diagnostic.  A malformed header is a hard error.
    """
    path = Path(path)
    default_shape = default_shape or VehicleShape(4.8, 2.0)
    report = IngestReport()
    per_vehicle: dict[str, list[list[float]]] = {}
    order: list[str] = []

    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"malformed header in {path}: {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRAJECTORY_HEADER):
                report.rejected_rows.append((lineno, "wrong column count"))
                continue
            vid = row[0]
            try:
                values = [_parse_float(c) for c in row[1:]]
            except ValueError:
                report.rejected_rows.append((lineno, "unparseable number"))
                continue
            # t,s,lane,lat,v,a_lon,a_lat must be finite; markings may be empty
            if not all(math.isfinite(v) for v in values[:7]):
                report.rejected_rows.append((lineno, "non-finite value"))
                continue
            if vid not in per_vehicle:
                per_vehicle[vid] = []
                order.append(vid)
            per_vehicle[vid].append(values)

    if not per_vehicle:
        report.warnings.append(f"{path}: no data rows, empty corpus")
        return report

    for vid in order:
        rows = np.array(per_vehicle[vid], dtype=float)
        t = rows[:, 0]
        if np.any(np.diff(t) <= 0.0):
            report.rejected_vehicles.append((vid, "non-monotone time"))
            continue
        if len(t) < 2:
            report.rejected_vehicles.append((vid, "fewer than 2 samples"))
            continue
        shape = (shapes or {}).get(vid, default_shape)
        has_marks = bool(np.all(np.isfinite(rows[:, 7])) and np.all(np.isfinite(rows[:, 8])))
        dt = np.median(np.diff(t))
        report.trajectories.append(Trajectory(
            vehicle_id=vid,
            shape=shape,
            t=t,
            s=rows[:, 1],
            lane=rows[:, 2].astype(int),
            lat=rows[:, 3],
            v=rows[:, 4],
            a_lon=rows[:, 5],
            a_lat=rows[:, 6],
            rate=1.0 / float(dt),
            d_left=rows[:, 7] if has_marks else None,
            d_right=rows[:, 8] if has_marks else None,
        ))
    return report


def write_trajectories(path: str | Path, trajectories: Iterable[Trajectory]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for traj in trajectories:
            dl = traj.d_left if traj.d_left is not None else [math.nan] * len(traj.t)
            dr = traj.d_right if traj.d_right is not None else [math.nan] * len(traj.t)
            for i in range(len(traj.t)):
                writer.writerow([
                    traj.vehicle_id,
                    fmt(traj.t[i]), fmt(traj.s[i]), int(traj.lane[i]),
                    fmt(traj.lat[i]), fmt(traj.v[i]),
                    fmt(traj.a_lon[i]), fmt(traj.a_lat[i]),
                    fmt(dl[i]), fmt(dr[i]),
                ])


def write_vehicles(path: str | Path, trajectories: Iterable[Trajectory]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(VEHICLE_HEADER)
        for traj in trajectories:
            writer.writerow([traj.vehicle_id, traj.shape.vclass.value,
                             fmt(traj.shape.length), fmt(traj.shape.width)])


def read_vehicles(path: str | Path) -> dict[str, VehicleShape]:
    shapes: dict[str, VehicleShape] = {}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != VEHICLE_HEADER:
            raise ValueError(f"malformed header in {path}: {header}")
        for row in reader:
            shapes[row[0]] = VehicleShape(length=float(row[2]), width=float(row[3]),
                                          vclass=VehicleClass(row[1]))
    return shapes


# --------------------------------------------------------------------------
# events

def write_events(path: str | Path, events: Iterable[LaneChangeEvent]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENT_HEADER)
        for e in events:
            writer.writerow([
                e.vehicle_id, e.criterion,
                fmt(e.t_start), fmt(e.t_mid), fmt(e.t_end), fmt(e.duration),
                e.direction.value, fmt(e.v_mid), fmt(e.lateral_extent),
                e.kind.value,
            ])


def read_events(path: str | Path) -> list[LaneChangeEvent]:
    events: list[LaneChangeEvent] = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EVENT_HEADER:
            raise ValueError(f"malformed header in {path}: {header}")
        for row in reader:
            events.append(LaneChangeEvent(
                vehicle_id=row[0],
                criterion=row[1],
                t_start=float(row[2]),
                t_mid=float(row[3]),
                t_end=float(row[4]),
                duration=float(row[5]),
                direction=Direction(row[6]),
                v_mid=_parse_float(row[7]),
                lateral_extent=float(row[8]),
                kind=EventKind(row[9]),
            ))
    return events


# --------------------------------------------------------------------------
# reports

def write_robustness(csv_path: str | Path, json_path: str | Path,
                     report: RobustnessReport) -> None:
    with Path(csv_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["criterion", "kind", "magnitude", "detected", "truth", "ratio"])
        for p in report.points:
            writer.writerow([p.criterion, p.kind, fmt(p.magnitude),
                             p.detected, p.truth, fmt(p.ratio)])
    series = []
    seen = sorted({(p.criterion, p.kind) for p in report.points})
    for criterion, kind in seen:
        x, y = report.series(criterion, kind)
        series.append({"criterion": criterion, "kind": kind,
                       "x": x.tolist(), "y": y.tolist()})
    write_json(json_path, {"series": series})


def write_records(path: str | Path, records: Iterable[CriticalityRecord]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_HEADER)
        for r in records:
            writer.writerow([
                r.vehicle_id, fmt(r.t_start), fmt(r.t_end), r.direction,
                fmt(r.min_d), fmt(r.max_v), fmt(r.max_a_lon), fmt(r.max_a_lat),
                fmt(r.min_thw), fmt(r.min_dce), fmt(r.min_ttce),
                int(r.flags["d"]), int(r.flags["v"]), int(r.flags["a_lon"]),
                int(r.flags["a_lat"]), int(r.flags["thw"]), int(r.flags["dce"]),
                int(r.flags["ttce"]),
            ])


def _json_safe(obj):
    """Replace non-finite floats with null; JSON has no nan/inf tokens."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def write_json(path: str | Path, payload: dict) -> None:
    """Schema-versioned, key-sorted JSON for byte-reproducible reports."""
    body = {"schema": 1}
    body.update(payload)
    with Path(path).open("w") as fh:
        json.dump(_json_safe(body), fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")


# --------------------------------------------------------------------------
# configuration

def parse_keyvalues(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file with ``#`` comments."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass(frozen=True)
class RunConfig:
    """All tunables of the pipeline, SI units throughout."""

    # lane layout
    lane_count: int = 3
    lane_width: float = 3.5  # [m]
    speed_limit: float = 120.0 / 3.6  # [m/s]
    # preprocessing
    resample_rate: float = 5.0  # [Hz]
    lowpass_cutoff: float = 1.3  # [Hz]
    lowpass_aerial: bool = True  # also filter marking-free (aerial) inputs
    # detection
    distance_threshold: float = 0.8  # [m]
    prominence_min: float = 0.15  # [m/s]
    min_peak_separation: float = 4.0  # [s]
    min_lateral_extent: float = 2.5  # [m]
    # criticality thresholds
    d_crit: float = 1.0  # [m]
    v_factor: float = 1.3
    a_lon_crit: float = 8.0  # [m/s^2]
    a_lat_crit: float = 8.0  # [m/s^2]
    thw_crit: float = 0.9  # [s]
    dce_crit: float = 1.0  # [m]
    ttce_gate: float = 2.6  # [s]
    # robustness sweep
    bias_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5)  # [m]
    brownian_grid: tuple[float, ...] = (0.0, 0.005, 0.01, 0.02, 0.05)  # [m/sqrt(step)]
    sweep_refilter: bool = True
    # car following
    cc0: float = 1.5
    cc1: float = 0.9
    cc2: float = 4.0
    cc3: float = -8.0
    cc4: float = -0.35
    cc5: float = 0.35
    cc6: float = 11.44
    cc7: float = 0.25
    cc8: float = 3.5
    cc9: float = 1.5
    v_desired: float = 33.33  # [m/s]
    sim_dt: float = 0.05  # [s]
    # margin increase system
    mis_rear_detect_range: float = 100.0  # [m]
    mis_delta_v_min: float = 10.0 / 3.6  # [m/s]
    mis_thw_increase: float = 2.0  # [s]
    mis_comfort_decel_cap: float = 1.5  # [m/s^2]
    # synthetic corpus / misc
    synth_n: int = 200
    truck_fraction: float = 0.2
    vehicle_length: float = 4.8  # [m] ingest default shape
    vehicle_width: float = 2.0  # [m]
    marking_tolerance: float = 0.05  # [m] d_left + d_right consistency check
    seed: int = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(parse_keyvalues(path))

    @classmethod
    def from_dict(cls, raw: Mapping[str, str]) -> "RunConfig":
        kwargs = {}
        known = {f.name: f for f in fields(cls)}
        for key, value in raw.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(value, known[key].type, cls, key)
        return cls(**kwargs)

    def layout(self) -> LaneLayout:
        return LaneLayout(self.lane_count, self.lane_width, self.speed_limit)

    def peak_params(self) -> PeakParams:
        return PeakParams(self.prominence_min, self.min_peak_separation)

    def thresholds(self) -> Thresholds:
        return Thresholds(self.d_crit, self.v_factor, self.a_lon_crit,
                          self.a_lat_crit, self.thw_crit, self.dce_crit,
                          self.ttce_gate)

    def default_shape(self) -> VehicleShape:
        return VehicleShape(self.vehicle_length, self.vehicle_width)


def _coerce(text: str, annotation, cls, key: str):
    default = getattr(cls, key)
    if isinstance(default, bool):
        lowered = text.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"config key {key!r}: expected boolean, got {text!r}")
    if isinstance(default, int) and not isinstance(default, bool):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(float(part) for part in text.split(",") if part.strip() != "")
    return text
