"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np

from lanekit.trajectory import ContinuousLateral, LaneLayout, Trajectory, VehicleShape

LAYOUT = LaneLayout()
CAR = VehicleShape(4.8, 2.0)
TRUCK = VehicleShape(14.0, 2.5)


def make_trajectory(t, y_cont, v=30.0, layout=LAYOUT, shape=CAR,
                    vehicle_id="veh", markings=True) -> Trajectory:
    """Trajectory from a continuous lateral profile; lane split derived."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y_cont, dtype=float)
    w = layout.lane_width
    lane = np.clip(np.rint(y / w), 0, layout.lane_count - 1).astype(int)
    lat = y - w * lane
    v_arr = np.full(len(t), float(v)) if np.isscalar(v) else np.asarray(v, float)
    rate = 1.0 / float(t[1] - t[0])
    kwargs = {}
    if markings:
        kwargs["d_left"] = w / 2.0 - lat - shape.width / 2.0
        kwargs["d_right"] = w / 2.0 + lat - shape.width / 2.0
    return Trajectory(
        vehicle_id=vehicle_id, shape=shape, t=t,
        s=np.cumsum(np.full(len(t), v_arr.mean() / rate)),
        lane=lane, lat=lat, v=v_arr,
        a_lon=np.gradient(v_arr, 1.0 / rate),
        a_lat=np.gradient(np.gradient(y, 1.0 / rate), 1.0 / rate),
        rate=rate, **kwargs,
    )


def sigmoid_profile(t, t_mid=30.0, duration=6.0, amplitude=3.5, base=0.0):
    k = 4.7 / duration
    return base + amplitude / (1.0 + np.exp(-k * (np.asarray(t) - t_mid)))


def sigmoid_lane_change(duration=6.0, record_len=60.0, rate=5.0, v=30.0,
                        amplitude=3.5, **kwargs) -> Trajectory:
    t = np.arange(0.0, record_len, 1.0 / rate)
    y = sigmoid_profile(t, record_len / 2.0, duration, amplitude)
    return make_trajectory(t, y, v=v, **kwargs)


def lane_keeping(record_len=60.0, rate=5.0, wiggle=0.3, lane=0, **kwargs) -> Trajectory:
    t = np.arange(0.0, record_len, 1.0 / rate)
    y = LAYOUT.lane_width * lane + wiggle * np.sin(0.2 * t)
    return make_trajectory(t, y, **kwargs)


def continuous(traj: Trajectory, layout=LAYOUT) -> ContinuousLateral:
    from lanekit.trajectory import continuous_lateral
    return continuous_lateral(traj, layout)
