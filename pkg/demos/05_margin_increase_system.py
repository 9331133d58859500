"""Closed-loop evaluation of the margin increase system.

An automated ego follows its front vehicle at a short margin while a much
faster vehicle closes in from behind for a tight overtake.  If the front
vehicle brakes during the overtake, the ego's reaction cascades into the
rear vehicle, which has next to no margin.  The system anticipates the
overtake (rear vehicle within 100 m, closing at 10 km/h or more, left lane
free) and pre-emptively decelerates gently so the front headway grows by
2 s before the overtaker draws level; the ego then rides out the maneuver
without touching the brakes.
"""

from lanekit import FrontBrakeInjection, MISConfig, MISScenario, run_closed_loop

scenario = MISScenario()
cfg = MISConfig()

print("scenario: ego at 30 m/s, 0.97 s behind its front vehicle;")
print("rear vehicle approaches at 42 m/s from 110 m\n")

on = run_closed_loop(scenario, cfg, front_brake=None, mis_on=True)
print("system on:")
print(f"  engaged at t = {on.engagement_time:.2f} s "
      f"(rear distance {on.rear_gap[int(on.engagement_time / scenario.dt)]:.0f} m)")
print(f"  planned deceleration: {on.planned_decel:.2f} m/s^2 "
      f"(comfort cap {cfg.comfort_decel_cap:g})")
print(f"  +{cfg.thw_increase:g} s front headway reached after "
      f"{on.time_to_target_thw:.1f} s, rear vehicle still "
      f"{on.target_reached_rear_gap:.0f} m away")
print(f"  braking during the overtake window: {on.braked_during_window}")
print(f"  minimum rear gap: {on.min_rear_gap:.1f} m, collision: {on.collision}")

off = run_closed_loop(scenario, cfg, front_brake=FrontBrakeInjection(decel=4.0),
                      mis_on=False)
print("\nsystem off, front vehicle brakes 4 m/s^2 at the overtake start:")
print(f"  minimum rear gap: {off.min_rear_gap:.2f} m")
print(f"  rear gap violation: {off.rear_gap_violation}, "
      f"collision: {off.collision}")

on_inj = run_closed_loop(scenario, cfg, front_brake=FrontBrakeInjection(decel=4.0),
                         mis_on=True)
print("\nsystem on with the same front braking:")
print(f"  braking while the overtaker is alongside: {on_inj.braked_during_overlap}")
print(f"  minimum rear gap: {on_inj.min_rear_gap:.1f} m, "
      f"collision: {on_inj.collision}")
