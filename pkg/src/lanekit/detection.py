"""Lane-change detection criteria and event attributes.

Three interchangeable detectors:

* gradient criterion: re-referencing jumps in the lane-marking distance
  channels; exact on marking-equipped data and used as ground truth,
* distance criterion: lateral displacement from the lane center beyond a
  threshold followed by settling in a different lane,
* peak criterion: peaks in the derivative of the continuous lateral
  position, duration from the peak width at a relative height.

The peak criterion derives every event attribute from the derivative
signal alone, which makes it invariant under a constant lateral offset of
the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import signal as _signal

from .trajectory import (
    ContinuousLateral,
    LaneLayout,
    Trajectory,
    VehicleShape,
    continuous_lateral,
    derivative,
)

__all__ = [
    "Direction",
    "EventKind",
    "LaneChangeEvent",
    "PeakParams",
    "PeakHit",
    "rel_height_from_widths",
    "find_peaks",
    "peak_width",
    "detect_peak",
    "detect_distance",
    "detect_gradient",
    "classify_double",
    "exceedance_predicate",
]

DEFAULT_MIN_EXTENT = 2.5  # [m] minimum lateral extent of a reportable event


class Direction(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class EventKind(str, Enum):
    SINGLE = "single"
    DOUBLE = "double"


@dataclass(frozen=True)
class LaneChangeEvent:
    """A detected lane-change maneuver.

    ``t_mid`` is the marking-crossing instant, ``duration = t_end - t_start``
    and ``lateral_extent`` the total lateral displacement over the event.
    """

    vehicle_id: str
    t_start: float
    t_mid: float
    t_end: float
    duration: float
    direction: Direction
    v_mid: float
    lateral_extent: float
    kind: EventKind = EventKind.SINGLE
    truncated: bool = False
    criterion: str = ""


@dataclass(frozen=True)
class PeakParams:
    prominence_min: float = 0.15  # [m/s]
    min_peak_separation: float = 4.0  # [s]
    rel_height: float | None = None  # computed from widths when None

    def __post_init__(self) -> None:
        if self.prominence_min <= 0.0:
            raise ValueError("prominence_min must be positive")
        if self.rel_height is not None and not (0.0 < self.rel_height < 1.0):
            raise ValueError("rel_height must be in (0, 1)")


def rel_height_from_widths(width_obj: float, width_lane: float) -> float:
    """Relative evaluation height for the peak width measurement."""
    return 1.0 - (width_obj / width_lane) / 2.0


@dataclass(frozen=True)
class PeakHit:
    index: int
    height: float
    prominence: float


def find_peaks(series: np.ndarray, rate: float, params: PeakParams) -> list[PeakHit]:
    """Strict local maxima with topographic prominence >= prominence_min.

    Peaks closer than ``min_peak_separation`` keep only the higher one.
    """
    series = np.asarray(series, dtype=float)
    distance = max(1, int(round(params.min_peak_separation * rate)))
    idx, props = _signal.find_peaks(series, prominence=params.prominence_min,
                                    distance=distance)
    return [PeakHit(int(i), float(series[i]), float(p))
            for i, p in zip(idx, props["prominences"])]


@dataclass(frozen=True)
class PeakWidth:
    t_start: float
    t_end: float
    duration: float
    truncated: bool


def _cross_time(t: np.ndarray, x: np.ndarray, i: int, j: int, level: float) -> float:
    """Linear-interpolated time where x crosses ``level`` between i and j."""
    x0, x1 = x[i], x[j]
    if x1 == x0:
        return float(t[i])
    frac = (level - x0) / (x1 - x0)
    return float(t[i] + frac * (t[j] - t[i]))


def peak_width(series: np.ndarray, t: np.ndarray, peak: PeakHit,
               rel_height: float) -> PeakWidth:
    """Width of a peak at ``height - rel_height * prominence``.

    The crossings left and right of the peak are linearly interpolated; if
    the evaluation height is never crossed inside the series the window is
    clamped to the series bounds and flagged truncated.
    """
    series = np.asarray(series, dtype=float)
    level = peak.height - rel_height * peak.prominence
    p = peak.index

    left = None
    for i in range(p - 1, -1, -1):
        if series[i] <= level:
            left = _cross_time(t, series, i, i + 1, level)
            break
    right = None
    for i in range(p + 1, len(series)):
        if series[i] <= level:
            right = _cross_time(t, series, i - 1, i, level)
            break

    truncated = left is None or right is None
    t_start = float(t[0]) if left is None else left
    t_end = float(t[-1]) if right is None else right
    return PeakWidth(t_start, t_end, t_end - t_start, truncated)


def _interp_at(t: np.ndarray, values: np.ndarray, when: float) -> float:
    return float(np.interp(when, t, values))


@dataclass(frozen=True)
class _Candidate:
    event: LaneChangeEvent
    peak_height: float


def detect_peak(y: ContinuousLateral, shape: VehicleShape, layout: LaneLayout,
                params: PeakParams | None = None,
                min_extent: float | None = DEFAULT_MIN_EXTENT) -> list[LaneChangeEvent]:
    """Peak criterion: events from peaks of the lateral-position derivative.

    Left changes are peaks of +dy/dt, right changes of -dy/dt.  The event
    window is the peak width at the relative height derived from vehicle
    and lane width, the lateral extent is the integral of the derivative
    over the window, and the midpoint is the half-displacement instant
    (the marking crossing for a clean maneuver).  Events with extent
    <= ``min_extent`` are discarded; overlapping opposite-direction windows
    are resolved by keeping the dominant peak.
    """
    params = params or PeakParams()
    rel_h = params.rel_height
    if rel_h is None:
        rel_h = rel_height_from_widths(shape.width, layout.lane_width)

    dy = derivative(y.y, y.dt)
    # cumulative displacement, linearly interpolable between samples
    disp = np.concatenate([[0.0], np.cumsum(0.5 * (dy[1:] + dy[:-1]) * y.dt)])

    candidates: list[_Candidate] = []
    for sign, direction in ((1.0, Direction.LEFT), (-1.0, Direction.RIGHT)):
        # positive part only: excursions of the opposite sign belong to the
        # other direction and must not inflate prominences here
        series = np.maximum(sign * dy, 0.0)
        for hit in find_peaks(series, y.rate, params):
            w = peak_width(series, y.t, hit, rel_h)
            d0 = _interp_at(y.t, disp, w.t_start)
            d1 = _interp_at(y.t, disp, w.t_end)
            extent = abs(d1 - d0)
            if min_extent is not None and extent <= min_extent:
                continue
            t_mid = _half_displacement_time(y.t, disp, w.t_start, w.t_end,
                                            d0, d1, fallback=float(y.t[hit.index]))
            v_mid = (_interp_at(y.t, y.v, float(y.t[hit.index]))
                     if y.v is not None else math.nan)
            candidates.append(_Candidate(
                LaneChangeEvent(
                    vehicle_id=y.vehicle_id,
                    t_start=w.t_start,
                    t_mid=t_mid,
                    t_end=w.t_end,
                    duration=w.duration,
                    direction=direction,
                    v_mid=v_mid,
                    lateral_extent=extent,
                    truncated=w.truncated,
                    criterion="peak",
                ),
                hit.height,
            ))

    candidates.sort(key=lambda c: (c.event.t_start, c.event.t_mid))
    return [c.event for c in _resolve_opposite_overlaps(candidates)]


def _half_displacement_time(t: np.ndarray, disp: np.ndarray, t0: float,
                            t1: float, d0: float, d1: float,
                            fallback: float) -> float:
    """Instant inside [t0, t1] where half the window displacement is done."""
    target = d0 + 0.5 * (d1 - d0)
    mask = (t >= t0) & (t <= t1)
    if not np.any(mask):
        return fallback
    tt = t[mask]
    dd = disp[mask]
    sign = 1.0 if d1 >= d0 else -1.0
    gd = sign * dd
    gt = sign * target
    hit = np.nonzero((gd[:-1] <= gt) & (gd[1:] >= gt))[0]
    if len(hit) == 0:
        return fallback
    i = int(hit[0])
    if gd[i + 1] == gd[i]:
        return float(tt[i])
    frac = (gt - gd[i]) / (gd[i + 1] - gd[i])
    return float(tt[i] + frac * (tt[i + 1] - tt[i]))


def _resolve_opposite_overlaps(candidates: list[_Candidate]) -> list[_Candidate]:
    """Keep the dominant peak of overlapping opposite-direction windows."""
    kept: list[_Candidate] = []
    for cand in candidates:
        if kept:
            last = kept[-1]
            overlap = (cand.event.t_start < last.event.t_end
                       and cand.event.direction != last.event.direction)
            if overlap:
                if cand.peak_height > last.peak_height:
                    kept[-1] = cand
                continue
        kept.append(cand)
    return kept


def exceedance_predicate(y: np.ndarray, center: float, threshold: float) -> np.ndarray:
    """Per-sample distance-criterion predicate |y - center| > threshold."""
    dev = np.asarray(y, dtype=float) - center
    return (dev > threshold) | (dev < -threshold)


def detect_distance(y: ContinuousLateral, layout: LaneLayout,
                    threshold: float = 0.8, settle_rate: float = 0.15,
                    settle_dwell: float = 2.0) -> list[LaneChangeEvent]:
    """Distance criterion: displacement from lane center beyond ``threshold``.

    An event opens at the first exceedance against the currently settled
    lane and is emitted once the vehicle settles in a different lane:
    within ``threshold`` of the new center, laterally at rest (rate below
    ``settle_rate``), sustained for ``settle_dwell``.  Consecutive
    exceedances toward the same crossing merge into one event; a vehicle
    that returns to its original lane produces no event.

    Unlike the peak criterion this detector compares against absolute lane
    geometry, so a constant lateral bias displaces both the exceedance
    predicate and the settle band.
    """
    if not (0.0 < threshold < layout.lane_width / 2.0):
        raise ValueError("threshold must be in (0, lane_width/2)")
    t = y.t
    yy = y.y
    rate = np.abs(derivative(yy, y.dt))
    w = layout.lane_width
    nearest = layout.nearest_lane(yy)

    events: list[LaneChangeEvent] = []
    settled = int(nearest[0])
    t_exceed: float | None = None
    cand_lane: int | None = None
    cand_t0 = 0.0
    for i in range(len(t)):
        dev = yy[i] - layout.center(settled)
        if t_exceed is None:
            if abs(dev) > threshold:
                t_exceed = float(t[i])
            continue
        lane_i = int(nearest[i])
        if lane_i == settled and abs(dev) <= threshold:
            t_exceed = None  # returned home, abandoned maneuver
            cand_lane = None
            continue
        at_rest = (lane_i != settled
                   and abs(yy[i] - layout.center(lane_i)) <= threshold
                   and rate[i] <= settle_rate)
        if not at_rest:
            cand_lane = None
            continue
        if cand_lane != lane_i:
            cand_lane = lane_i
            cand_t0 = float(t[i])
        if float(t[i]) - cand_t0 < settle_dwell:
            continue
        # settle confirmed; the event ends where the rest began
        direction = Direction.LEFT if lane_i > settled else Direction.RIGHT
        step = 1 if lane_i > settled else -1
        boundary = layout.center(settled) + step * w / 2.0
        t_mid = _boundary_cross_time(t, yy, t_exceed, cand_t0, boundary)
        v_mid = (_interp_at(t, y.v, t_mid) if y.v is not None else math.nan)
        events.append(LaneChangeEvent(
            vehicle_id=y.vehicle_id,
            t_start=t_exceed,
            t_mid=t_mid,
            t_end=cand_t0,
            duration=cand_t0 - t_exceed,
            direction=direction,
            v_mid=v_mid,
            # center-to-center displacement: the settle window clips the
            # transition tails, so the raw |dy| would under-measure
            lateral_extent=abs(lane_i - settled) * w,
            criterion="distance",
        ))
        settled = lane_i
        t_exceed = None
        cand_lane = None
    return events


def _boundary_cross_time(t: np.ndarray, yy: np.ndarray, t0: float, t1: float,
                         boundary: float) -> float:
    """First crossing of a lane boundary inside [t0, t1]; midpoint fallback."""
    mask = (t >= t0) & (t <= t1)
    tt = t[mask]
    vv = yy[mask] - boundary
    crossings = np.nonzero(vv[:-1] * vv[1:] <= 0.0)[0]
    for i in crossings:
        if vv[i] == vv[i + 1]:
            continue
        frac = -vv[i] / (vv[i + 1] - vv[i])
        return float(tt[i] + frac * (tt[i + 1] - tt[i]))
    return 0.5 * (t0 + t1)


def detect_gradient(traj: Trajectory, layout: LaneLayout,
                    params: PeakParams | None = None,
                    match_window: float = 3.0) -> list[LaneChangeEvent]:
    """Gradient criterion: re-referencing jumps in the marking distances.

    A crossing flips the referenced marking, so ``d_left`` jumps by one
    lane width (positive for a left change).  Start and end times are
    refined with the peak criterion around each jump; a symmetric fixed
    window is used when no peak matches.
    """
    if not traj.has_markings:
        raise ValueError("gradient criterion unavailable")
    w = layout.lane_width
    jumps = np.diff(traj.d_left)
    idx = np.nonzero(np.abs(jumps) > 0.5 * w)[0]

    y = continuous_lateral(traj, layout)
    peak_events = detect_peak(y, traj.shape, layout, params, min_extent=None)

    events: list[LaneChangeEvent] = []
    for i in idx:
        t_mid = 0.5 * float(traj.t[i] + traj.t[i + 1])
        direction = Direction.LEFT if jumps[i] > 0 else Direction.RIGHT
        match = None
        best = match_window
        for ev in peak_events:
            gap = abs(ev.t_mid - t_mid)
            if ev.direction == direction and gap < best:
                match = ev
                best = gap
        if match is not None:
            events.append(replace(match, t_mid=t_mid, criterion="gradient"))
        else:
            half = 2.5  # [s] fallback window around the jump
            t0 = max(float(traj.t[0]), t_mid - half)
            t1 = min(float(traj.t[-1]), t_mid + half)
            events.append(LaneChangeEvent(
                vehicle_id=traj.vehicle_id,
                t_start=t0,
                t_mid=t_mid,
                t_end=t1,
                duration=t1 - t0,
                direction=direction,
                v_mid=_interp_at(traj.t, traj.v, t_mid),
                lateral_extent=abs(_interp_at(y.t, y.y, t1) - _interp_at(y.t, y.y, t0)),
                truncated=True,
                criterion="gradient",
            ))
    events.sort(key=lambda e: e.t_mid)
    return events


def classify_double(events: Sequence[LaneChangeEvent],
                    layout: LaneLayout) -> list[LaneChangeEvent]:
    """Mark or merge double lane changes.

    An event spanning at least 1.5 lane widths is a double; two
    same-direction events with overlapping windows merge into one double.
    Statistics pipelines exclude kind=double events.
    """
    limit = 1.5 * layout.lane_width
    ordered = sorted(events, key=lambda e: (e.t_start, e.t_mid))
    out: list[LaneChangeEvent] = []
    i = 0
    while i < len(ordered):
        ev = ordered[i]
        if (i + 1 < len(ordered)
                and ordered[i + 1].direction == ev.direction
                and ordered[i + 1].t_start < ev.t_end):
            nxt = ordered[i + 1]
            t_end = max(ev.t_end, nxt.t_end)
            out.append(replace(
                ev,
                t_end=t_end,
                duration=t_end - ev.t_start,
                lateral_extent=ev.lateral_extent + nxt.lateral_extent,
                kind=EventKind.DOUBLE,
            ))
            i += 2
            continue
        if ev.lateral_extent >= limit:
            ev = replace(ev, kind=EventKind.DOUBLE)
        out.append(ev)
        i += 1
    return out
