"""Criticality metrics for lane-change events.

Seven deterministic metrics with fixed thresholds: Euclidean footprint
distance (< 1 m), speed (> 1.3x the limit), longitudinal and lateral
acceleration (> 8 m/s^2), time headway (< 0.9 s) and the closest-encounter
pair TTCE (< 2.6 s) / DCE (< 1 m, only evaluated when TTCE is short).
Per event the most critical value over the window and all opponents is
kept.  Left lane changes (cut-outs) typically show far more THW-critical
cases than right ones: the cutting-out vehicle closes up on faster traffic.
"""

import numpy as np

from lanekit import LaneLayout, Thresholds, VehicleShape, most_critical
from lanekit.criticality import direction_stats
from lanekit.trajectory import Trajectory

layout = LaneLayout()
shape = VehicleShape(4.8, 2.0)
t = np.arange(0.0, 20.0, 0.2)
rng = np.random.default_rng(1)


def vehicle(vid, s0, v, lane=0):
    n = len(t)
    return Trajectory(vid, shape, t, s0 + v * t, np.full(n, lane, int),
                      np.zeros(n), np.full(n, float(v)), np.zeros(n),
                      np.zeros(n), 5.0)


# a cut-out: ego pulls to the left lane and closes up on a slower leader
ego = vehicle("ego", 0.0, 33.0, lane=1)
leader = vehicle("lead", 45.0, 31.0, lane=1)     # headway shrinking ahead
follower = vehicle("rear", -60.0, 36.0, lane=1)  # closing from behind

record = most_critical(ego, [leader, follower], (2.0, 10.0), layout)
print("worst case over the event window:")
for metric in ("d", "thw", "ttce", "dce", "v", "a_lon", "a_lat"):
    value = record.value(metric)
    mark = " <- critical" if record.flags[metric] else ""
    print(f"  {metric:>5}: {value:8.3f}{mark}")

# direction split: synthesize per-recording shares of THW-critical events
print("\nshare of THW-critical lane changes per direction "
      "(synthetic recordings):")
groups = {}
for rec in range(6):
    for direction, p_crit in (("left", 0.7), ("right", 0.2)):
        records = []
        for k in range(12):
            critical = rng.random() < p_crit
            gap = 18.0 if critical else 45.0
            ego_k = vehicle("e", 0.0, 30.0)
            opp_k = vehicle("o", gap + shape.length, 30.0)
            records.append(most_critical(ego_k, [opp_k], (0.0, 19.8), layout,
                                         Thresholds(), direction))
        groups[(f"r{rec}", direction)] = records

for st in direction_stats(groups):
    if st.metric != "thw" or st.summary is None:
        continue
    print(f"  {st.direction:>5}: median {st.summary.median:5.1f} %  "
          f"IQR [{st.summary.q25:.1f}, {st.summary.q75:.1f}] %")
