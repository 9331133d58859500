"""Deterministic criticality metrics for pairwise vehicle encounters.

Seven metrics with fixed thresholds classify a lane change as critical:
Euclidean distance d, longitudinal velocity v, longitudinal and lateral
acceleration, time headway THW, and the closest-encounter pair TTCE / DCE
under constant-velocity extrapolation.  DCE is only meaningful together
with a small TTCE and is therefore evaluated only where TTCE < 2.6 s.
Per event, the most critical value over the window and over all opponents
is selected (minimum for d, THW, DCE, TTCE; maximum for v and the
accelerations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .stats import BoxSummary, box_summary
from .trajectory import LaneLayout, Trajectory, VehicleShape, continuous_lateral

__all__ = [
    "Thresholds",
    "KinState",
    "MetricSample",
    "CriticalityRecord",
    "euclidean_distance",
    "thw",
    "ttce_dce",
    "most_critical",
    "pairwise_samples",
    "direction_stats",
    "METRIC_NAMES",
]

V_EGO_MIN = 0.1  # [m/s] below this, headway is undefined

METRIC_NAMES = ("d", "v", "a_lon", "a_lat", "thw", "dce", "ttce")


@dataclass(frozen=True)
class Thresholds:
    """Critical below: d, thw, dce, ttce; critical above: v, a_lon, a_lat."""

    d_crit: float = 1.0  # [m]
    v_factor: float = 1.3  # critical above v_factor * speed limit
    a_lon_crit: float = 8.0  # [m/s^2]
    a_lat_crit: float = 8.0  # [m/s^2]
    thw_crit: float = 0.9  # [s]
    dce_crit: float = 1.0  # [m]
    ttce_gate: float = 2.6  # [s] DCE evaluated (and TTCE critical) below this

    def __post_init__(self) -> None:
        for name in ("d_crit", "v_factor", "a_lon_crit", "a_lat_crit",
                     "thw_crit", "dce_crit", "ttce_gate"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class KinState:
    """Planar kinematic state at one instant: longitudinal s, global
    lateral y, and the corresponding velocity components."""

    t: float
    s: float
    y: float
    vs: float
    vy: float = 0.0


@dataclass(frozen=True)
class MetricSample:
    """Pairwise metrics at one timestep; nan marks an undefined value."""

    t: float
    opponent_id: str
    d: float
    thw: float
    ttce: float
    dce: float


def _rect_gap(ds: float | np.ndarray, dy: float | np.ndarray,
              half_len: float, half_wid: float):
    """Gap between two axis-oriented rectangular footprints, 0 on overlap."""
    gs = np.maximum(np.abs(ds) - half_len, 0.0)
    gy = np.maximum(np.abs(dy) - half_wid, 0.0)
    return np.hypot(gs, gy)


def euclidean_distance(ego: KinState, opp: KinState,
                       ego_shape: VehicleShape, opp_shape: VehicleShape) -> float:
    """Minimum gap between the two road-aligned rectangular footprints."""
    half_len = 0.5 * (ego_shape.length + opp_shape.length)
    half_wid = 0.5 * (ego_shape.width + opp_shape.width)
    return float(_rect_gap(opp.s - ego.s, opp.y - ego.y, half_len, half_wid))


def thw(ego: KinState, opp: KinState, ego_shape: VehicleShape,
        opp_shape: VehicleShape) -> float:
    """Time headway: bumper-to-bumper gap to a leading vehicle over ego speed.

    Defined only when the opponent is ahead, its lateral corridor overlaps
    the ego's, and the ego is moving; nan otherwise.
    """
    if opp.s <= ego.s or ego.vs < V_EGO_MIN:
        return math.nan
    if abs(opp.y - ego.y) >= 0.5 * (ego_shape.width + opp_shape.width):
        return math.nan
    gap = opp.s - ego.s - 0.5 * (ego_shape.length + opp_shape.length)
    return max(gap, 0.0) / ego.vs


def ttce_dce(ego: KinState, opp: KinState, ego_shape: VehicleShape,
             opp_shape: VehicleShape) -> tuple[float, float]:
    """Time to and distance of the closest encounter.

    Both centers are extrapolated at constant velocity; the encounter time
    minimizes the center distance, clamped to now (diverging vehicles give
    ttce = 0).  The distance is the footprint gap at that instant, never
    exceeding the current gap.
    """
    ps = opp.s - ego.s
    py = opp.y - ego.y
    vs = opp.vs - ego.vs
    vy = opp.vy - ego.vy
    v2 = vs * vs + vy * vy
    t_star = 0.0 if v2 == 0.0 else max(0.0, -(ps * vs + py * vy) / v2)
    half_len = 0.5 * (ego_shape.length + opp_shape.length)
    half_wid = 0.5 * (ego_shape.width + opp_shape.width)
    gap_now = float(_rect_gap(ps, py, half_len, half_wid))
    gap_star = float(_rect_gap(ps + t_star * vs, py + t_star * vy,
                               half_len, half_wid))
    return t_star, min(gap_star, gap_now)


@dataclass(frozen=True)
class CriticalityRecord:
    """Worst-case metric values of one event over window and opponents."""

    vehicle_id: str
    t_start: float
    t_end: float
    direction: str
    min_d: float
    max_v: float
    max_a_lon: float
    max_a_lat: float
    min_thw: float
    min_dce: float  # gated: only samples with ttce below the gate count
    min_ttce: float
    flags: Mapping[str, bool]

    def value(self, metric: str) -> float:
        return {"d": self.min_d, "v": self.max_v, "a_lon": self.max_a_lon,
                "a_lat": self.max_a_lat, "thw": self.min_thw,
                "dce": self.min_dce, "ttce": self.min_ttce}[metric]


def classify(values: Mapping[str, float], thresholds: Thresholds,
             speed_limit: float) -> dict[str, bool]:
    """Per-metric critical flags; nan (undefined) is never critical."""

    def below(x: float, lim: float) -> bool:
        return not math.isnan(x) and x < lim

    def above(x: float, lim: float) -> bool:
        return not math.isnan(x) and x > lim

    return {
        "d": below(values["d"], thresholds.d_crit),
        "v": above(values["v"], thresholds.v_factor * speed_limit),
        "a_lon": above(values["a_lon"], thresholds.a_lon_crit),
        "a_lat": above(values["a_lat"], thresholds.a_lat_crit),
        "thw": below(values["thw"], thresholds.thw_crit),
        "dce": below(values["dce"], thresholds.dce_crit),
        "ttce": below(values["ttce"], thresholds.ttce_gate),
    }


def _window_mask(t: np.ndarray, window: tuple[float, float]) -> np.ndarray:
    return (t >= window[0]) & (t <= window[1])


def pairwise_samples(ego: Trajectory, opp: Trajectory, layout: LaneLayout,
                     window: tuple[float, float]) -> list[MetricSample]:
    """Per-timestep pairwise metrics on the ego grid inside the window."""
    mask = _window_mask(ego.t, window)
    t = ego.t[mask]
    if len(t) == 0:
        return []
    e_y = continuous_lateral(ego, layout).y[mask]
    e_s = ego.s[mask]
    e_vs = ego.v[mask]
    e_vy = np.gradient(continuous_lateral(ego, layout).y, ego.dt)[mask]

    # opponent states interpolated onto the ego grid, overlap only
    lo, hi = float(opp.t[0]), float(opp.t[-1])
    overlap = (t >= lo) & (t <= hi)
    if not np.any(overlap):
        return []
    tt = t[overlap]
    o_y_full = continuous_lateral(opp, layout).y
    o_s = np.interp(tt, opp.t, opp.s)
    o_y = np.interp(tt, opp.t, o_y_full)
    o_vs = np.interp(tt, opp.t, opp.v)
    o_vy = np.interp(tt, opp.t, np.gradient(o_y_full, opp.dt))

    out: list[MetricSample] = []
    for i, when in enumerate(tt):
        j = np.nonzero(t == when)[0][0]
        e = KinState(float(when), float(e_s[j]), float(e_y[j]),
                     float(e_vs[j]), float(e_vy[j]))
        o = KinState(float(when), float(o_s[i]), float(o_y[i]),
                     float(o_vs[i]), float(o_vy[i]))
        d = euclidean_distance(e, o, ego.shape, opp.shape)
        hw = thw(e, o, ego.shape, opp.shape)
        tc, dc = ttce_dce(e, o, ego.shape, opp.shape)
        out.append(MetricSample(float(when), opp.vehicle_id, d, hw, tc, dc))
    return out


def most_critical(ego: Trajectory, opponents: Sequence[Trajectory],
                  window: tuple[float, float], layout: LaneLayout,
                  thresholds: Thresholds | None = None,
                  direction: str = "", speed_limit: float | None = None) -> CriticalityRecord:
    """Worst-case metrics of one event window over all opponents.

    Pairwise minima are taken over every opponent sample in the window;
    DCE only over samples whose TTCE is below the gate.  Ego-only fields
    (max speed, max acceleration magnitudes) are produced even without
    opponents; pairwise fields are then undefined (nan).
    """
    thresholds = thresholds or Thresholds()
    if speed_limit is None:
        speed_limit = layout.speed_limit
    mask = _window_mask(ego.t, window)
    max_v = float(np.max(ego.v[mask])) if np.any(mask) else math.nan
    max_a_lon = float(np.max(np.abs(ego.a_lon[mask]))) if np.any(mask) else math.nan
    max_a_lat = float(np.max(np.abs(ego.a_lat[mask]))) if np.any(mask) else math.nan

    min_d = math.nan
    min_thw = math.nan
    min_dce = math.nan
    min_ttce = math.nan

    def nmin(cur: float, new: float) -> float:
        if math.isnan(new):
            return cur
        return new if math.isnan(cur) else min(cur, new)

    for opp in opponents:
        if opp.vehicle_id == ego.vehicle_id:
            continue
        for sample in pairwise_samples(ego, opp, layout, window):
            min_d = nmin(min_d, sample.d)
            min_thw = nmin(min_thw, sample.thw)
            min_ttce = nmin(min_ttce, sample.ttce)
            if sample.ttce < thresholds.ttce_gate:
                min_dce = nmin(min_dce, sample.dce)

    values = {"d": min_d, "v": max_v, "a_lon": max_a_lon, "a_lat": max_a_lat,
              "thw": min_thw, "dce": min_dce, "ttce": min_ttce}
    return CriticalityRecord(
        vehicle_id=ego.vehicle_id,
        t_start=window[0],
        t_end=window[1],
        direction=direction,
        min_d=min_d,
        max_v=max_v,
        max_a_lon=max_a_lon,
        max_a_lat=max_a_lat,
        min_thw=min_thw,
        min_dce=min_dce,
        min_ttce=min_ttce,
        flags=classify(values, thresholds, speed_limit),
    )


@dataclass(frozen=True)
class DirectionStats:
    """Share of critical events per metric and direction across recordings."""

    metric: str
    direction: str
    per_recording: Mapping[str, float]  # recording id -> percent critical
    summary: BoxSummary | None


def direction_stats(records: Mapping[tuple[str, str], Sequence[CriticalityRecord]],
                    warn: Callable[[str], None] | None = None) -> list[DirectionStats]:
    """Percentage of critical lane changes per metric, recording, direction.

    ``records`` maps (recording id, direction) to the event records of that
    group; double lane changes must already be excluded.  Empty groups are
    omitted (reported through ``warn`` when given).
    """
    by_direction: dict[str, dict[str, Sequence[CriticalityRecord]]] = {}
    for (rec_id, direction), recs in records.items():
        if len(recs) == 0:
            if warn is not None:
                warn(f"empty group ({rec_id}, {direction}) omitted")
            continue
        by_direction.setdefault(direction, {})[rec_id] = recs

    out: list[DirectionStats] = []
    for metric in METRIC_NAMES:
        for direction, groups in sorted(by_direction.items()):
            shares = {
                rec_id: 100.0 * sum(r.flags[metric] for r in recs) / len(recs)
                for rec_id, recs in sorted(groups.items())
            }
            summary = box_summary(np.array(list(shares.values()))) if shares else None
            out.append(DirectionStats(metric, direction, shares, summary))
    return out
