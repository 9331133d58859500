"""Command-line surface tying the pipeline together.

Subcommands: ``synth``, ``detect``, ``robustness``, ``criticality``,
``stats``, ``sample``, ``mis-eval``.  Every subcommand takes ``--config``
(flat ``key = value`` file), ``--out`` (output directory) and ``--seed``;
all outputs are deterministic given inputs, configuration and seed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from . import io as lkio
from .criticality import METRIC_NAMES, direction_stats, most_critical
from .detection import (
    EventKind,
    classify_double,
    detect_distance,
    detect_gradient,
    detect_peak,
)
from .mis import FrontBrakeInjection, MISConfig, MISScenario, run_closed_loop
from .robustness import Perturbation, sweep
from .stats import event_stats
from .synth import SyntheticCorpus, generate_corpus
from .trajectory import (
    LaneLayout,
    Trajectory,
    continuous_lateral,
    lowpass,
    marking_residual,
    resample,
)
from .wiedemann import ScenarioSpec, W99Params, sample_cc1


def _load_config(args) -> lkio.RunConfig:
    cfg = lkio.RunConfig.from_file(args.config) if args.config else lkio.RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _ingest_corpus(args, cfg) -> list[Trajectory]:
    shapes = lkio.read_vehicles(args.vehicles) if getattr(args, "vehicles", None) else None
    report = lkio.ingest(args.traj, shapes=shapes, default_shape=cfg.default_shape())
    for msg in report.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    for vid, reason in report.rejected_vehicles:
        print(f"warning: vehicle {vid} rejected: {reason}", file=sys.stderr)
    if report.rejected_rows:
        print(f"warning: {len(report.rejected_rows)} rows rejected", file=sys.stderr)
    for traj in report.trajectories:
        if traj.has_markings:
            residual = marking_residual(traj, cfg.layout())
            if residual > cfg.marking_tolerance:
                print(f"warning: vehicle {traj.vehicle_id}: marking distances "
                      f"inconsistent by {residual:.3f} m", file=sys.stderr)
    return report.trajectories


def _preprocess(traj: Trajectory, cfg: lkio.RunConfig, layout: LaneLayout) -> Trajectory:
    if abs(traj.rate - cfg.resample_rate) > 1e-9:
        traj = resample(traj, cfg.resample_rate)
    if cfg.lowpass_aerial or traj.has_markings:
        traj = lowpass(traj, cfg.lowpass_cutoff, layout)
    return traj


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    n = args.n if args.n is not None else cfg.synth_n
    corpus = generate_corpus(n=n, seed=cfg.seed, layout=cfg.layout(),
                             truck_fraction=cfg.truck_fraction)
    lkio.write_trajectories(out / "trajectories.csv", corpus.trajectories)
    lkio.write_vehicles(out / "vehicles.csv", corpus.trajectories)
    lkio.write_events(out / "truth_events.csv", corpus.truth_events)
    print(f"wrote {len(corpus.trajectories)} trajectories, "
          f"{len(corpus.truth_events)} true events to {out}")
    return 0


def cmd_detect(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    layout = cfg.layout()
    params = cfg.peak_params()
    trajectories = _ingest_corpus(args, cfg)
    criteria = args.criteria.split(",") if args.criteria else ["gradient", "peak", "distance"]

    all_events = []
    for traj in trajectories:
        pre = _preprocess(traj, cfg, layout)
        y = continuous_lateral(pre, layout)
        if "gradient" in criteria and traj.has_markings:
            ev = detect_gradient(traj, layout, params)
            all_events.extend(classify_double(ev, layout))
        if "peak" in criteria:
            ev = detect_peak(y, traj.shape, layout, params,
                             min_extent=cfg.min_lateral_extent)
            all_events.extend(classify_double(ev, layout))
        if "distance" in criteria:
            ev = detect_distance(y, layout, cfg.distance_threshold)
            all_events.extend(classify_double(ev, layout))
    lkio.write_events(out / "events.csv", all_events)
    print(f"wrote {len(all_events)} events to {out / 'events.csv'}")
    return 0


def cmd_robustness(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    layout = cfg.layout()
    trajectories = _ingest_corpus(args, cfg)
    truth = lkio.read_events(args.truth)
    corpus = SyntheticCorpus(tuple(trajectories), tuple(truth), layout, cfg.seed)

    grid = ([Perturbation("bias", b) for b in cfg.bias_grid]
            + [Perturbation("brownian", s) for s in cfg.brownian_grid])
    points = []
    for criterion in ("peak", "distance"):
        rep = sweep(corpus, criterion, grid, layout, cfg.peak_params(),
                    distance_threshold=cfg.distance_threshold, seed=cfg.seed,
                    refilter=cfg.sweep_refilter, cutoff=cfg.lowpass_cutoff)
        points.extend(rep.points)
    from .robustness import RobustnessReport
    report = RobustnessReport(tuple(points))
    lkio.write_robustness(out / "robustness.csv", out / "robustness_plot.json", report)
    print(f"wrote {len(points)} grid points to {out / 'robustness.csv'}")
    return 0


def cmd_criticality(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    layout = cfg.layout()
    thresholds = cfg.thresholds()
    trajectories = _ingest_corpus(args, cfg)
    by_id = {t.vehicle_id: t for t in trajectories}
    events = [e for e in lkio.read_events(args.events) if e.kind is EventKind.SINGLE]

    records = []
    for ev in events:
        ego = by_id.get(ev.vehicle_id)
        if ego is None:
            continue
        opponents = [t for t in trajectories if t.vehicle_id != ev.vehicle_id]
        records.append(most_critical(ego, opponents, (ev.t_start, ev.t_end),
                                     layout, thresholds, ev.direction.value))
    lkio.write_records(out / "criticality_records.csv", records)

    # histogram data per metric, threshold marker included
    histograms = {}
    for metric in METRIC_NAMES:
        values = [r.value(metric) for r in records
                  if not math.isnan(r.value(metric))]
        if not values:
            continue
        counts, edges = np.histogram(values, bins=30)
        limit = {"d": thresholds.d_crit, "v": thresholds.v_factor * layout.speed_limit,
                 "a_lon": thresholds.a_lon_crit, "a_lat": thresholds.a_lat_crit,
                 "thw": thresholds.thw_crit, "dce": thresholds.dce_crit,
                 "ttce": thresholds.ttce_gate}[metric]
        histograms[metric] = {"edges": edges.tolist(), "counts": counts.tolist(),
                              "threshold": limit}
    lkio.write_json(out / "histograms.json", {"histograms": histograms})

    grouped: dict[tuple[str, str], list] = {}
    for r in records:
        rec_id = r.vehicle_id.split("v")[0]
        grouped.setdefault((rec_id, r.direction), []).append(r)
    boxes = [
        {"metric": st.metric, "direction": st.direction,
         "per_recording": dict(st.per_recording),
         "summary": st.summary.as_dict() if st.summary else None}
        for st in direction_stats(grouped,
                                  warn=lambda m: print(f"warning: {m}", file=sys.stderr))
    ]
    lkio.write_json(out / "direction_boxes.json", {"boxes": boxes})
    print(f"wrote {len(records)} criticality records to {out}")
    return 0


def cmd_stats(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    events = lkio.read_events(args.events)
    classes = None
    if args.vehicles:
        shapes = lkio.read_vehicles(args.vehicles)
        classes = {vid: sh.vclass for vid, sh in shapes.items()}
    summaries = event_stats(events, classes)
    payload = {group: {name: box.as_dict() for name, box in entry.items()}
               for group, entry in summaries.items()}
    lkio.write_json(out / "stats.json", {"groups": payload})
    print(f"wrote summaries for {len(payload)} groups to {out / 'stats.json'}")
    return 0


def _scenario_from_file(path: str, cfg: lkio.RunConfig) -> tuple[ScenarioSpec, list[float]]:
    raw = lkio.parse_keyvalues(path)
    base = Path(path).parent
    shapes = None
    if "vehicles" in raw:
        shapes = lkio.read_vehicles(base / raw["vehicles"])
    report = lkio.ingest(base / raw["trajectories"], shapes=shapes,
                         default_shape=cfg.default_shape())
    model_kwargs = {}
    for name in ("cc0", "cc1", "cc2", "cc3", "cc4", "cc5", "cc6", "cc7",
                 "cc8", "cc9", "v_desired"):
        if name in raw:
            model_kwargs[name] = float(raw[name])
        else:
            model_kwargs[name] = getattr(cfg, name)
    spec = ScenarioSpec(
        trajectories=tuple(report.trajectories),
        substituted_id=raw["substituted_id"],
        model=W99Params(**model_kwargs),
        layout=cfg.layout(),
        dt=float(raw.get("dt", cfg.sim_dt)),
        duration=float(raw["duration"]) if "duration" in raw else None,
    )
    cc1_values = [float(x) for x in raw.get("cc1_values", "").split(",") if x.strip()]
    if not cc1_values:
        cc1_values = [spec.model.cc1]
    return spec, cc1_values


def cmd_sample(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    spec, cc1_values = _scenario_from_file(args.scenario, cfg)
    result = sample_cc1(spec, cc1_values)

    with (out / "thw_traces.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "opponent_id", "thw", "cc1"])
        for sc in result.scenarios:
            for opp_id, trace in sorted(sc.thw_traces.items()):
                for tk, val in zip(result.t, trace):
                    writer.writerow([lkio.fmt(tk), opp_id, lkio.fmt(val),
                                     lkio.fmt(sc.cc1)])
    for sc in result.scenarios:
        lkio.write_trajectories(out / f"simulated_cc1_{sc.cc1:g}.csv",
                                [sc.trajectory])
    print(f"wrote {len(result.scenarios)} sampled scenarios to {out}")
    return 0


def _mis_scenario_from_file(path: str, cfg: lkio.RunConfig):
    raw = lkio.parse_keyvalues(path)
    base = Path(path).parent
    kwargs: dict = {"layout": cfg.layout()}
    if "trajectories" in raw:
        shapes = None
        if "vehicles" in raw:
            shapes = lkio.read_vehicles(base / raw["vehicles"])
        report = lkio.ingest(base / raw["trajectories"], shapes=shapes,
                             default_shape=cfg.default_shape())
        roles = {raw[k]: vid for k in raw if k.startswith("role.")
                 for vid in [k.split(".", 1)[1]] if raw[k] in ("ego", "front", "rear")}
        by_id = {t.vehicle_id: t for t in report.trajectories}
        ego, front, rear = by_id[roles["ego"]], by_id[roles["front"]], by_id[roles["rear"]]
        kwargs.update(
            ego_shape=ego.shape, front_shape=front.shape, rear_shape=rear.shape,
            ego_v0=float(ego.v[0]), front_v0=float(front.v[0]), rear_v0=float(rear.v[0]),
            front_gap0=float(front.s[0] - ego.s[0]
                             - 0.5 * (front.shape.length + ego.shape.length)),
            rear_gap0=float(ego.s[0] - rear.s[0]
                            - 0.5 * (ego.shape.length + rear.shape.length)),
            lane=int(ego.lane[0]),
        )
    for name in ("dt", "duration", "ego_v0", "front_v0", "rear_v0",
                 "front_gap0", "rear_gap0", "rear_reaction_delay",
                 "overtake_trigger_thw", "lc_duration", "cut_in_lead"):
        if name in raw:
            kwargs[name] = float(raw[name])
    if "lane" in raw:
        kwargs["lane"] = int(raw["lane"])
    if "left_lane_blocked" in raw:
        kwargs["left_lane_blocked"] = raw["left_lane_blocked"].lower() == "true"
    if "rear_cc1" in raw or "rear_v_desired" in raw:
        kwargs["rear_model"] = W99Params(
            cc1=float(raw.get("rear_cc1", 0.2)),
            v_desired=float(raw.get("rear_v_desired", kwargs.get("rear_v0", 42.0))))
    scenario = MISScenario(**kwargs)

    mis_cfg = MISConfig(
        rear_detect_range=cfg.mis_rear_detect_range,
        delta_v_min=cfg.mis_delta_v_min,
        thw_increase=cfg.mis_thw_increase,
        comfort_decel_cap=cfg.mis_comfort_decel_cap,
    )
    injection = None
    if "inject_front_brake" in raw:
        injection = FrontBrakeInjection(
            decel=float(raw["inject_front_brake"]),
            t=float(raw["inject_t"]) if "inject_t" in raw else None)
    mis_on = raw.get("mis_on", "true").lower() != "false"
    return scenario, mis_cfg, injection, mis_on


def cmd_mis_eval(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    scenario, mis_cfg, injection, mis_on = _mis_scenario_from_file(args.scenario, cfg)
    report = run_closed_loop(scenario, mis_cfg, injection, mis_on)
    lkio.write_json(out / "mis_report.json", report.as_dict())
    print(f"engaged={report.engaged} planned_decel={report.planned_decel:.3f} "
          f"min_rear_gap={report.min_rear_gap:.2f} collision={report.collision}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lanekit",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")

    p = sub.add_parser("synth", help="generate the synthetic corpus")
    common(p)
    p.add_argument("--n", type=int, help="number of trajectories")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="detect lane changes")
    common(p)
    p.add_argument("--traj", required=True)
    p.add_argument("--vehicles")
    p.add_argument("--criteria", help="comma list: gradient,peak,distance")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("robustness", help="perturbation sweep vs ground truth")
    common(p)
    p.add_argument("--traj", required=True)
    p.add_argument("--vehicles")
    p.add_argument("--truth", required=True, help="ground-truth events CSV")
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("criticality", help="criticality metrics per event")
    common(p)
    p.add_argument("--traj", required=True)
    p.add_argument("--vehicles")
    p.add_argument("--events", required=True)
    p.set_defaults(func=cmd_criticality)

    p = sub.add_parser("stats", help="duration and speed summaries")
    common(p)
    p.add_argument("--events", required=True)
    p.add_argument("--vehicles")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sample", help="cc1 sweep on a substitution scenario")
    common(p)
    p.add_argument("--scenario", required=True, help="scenario key-value file")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("mis-eval", help="closed-loop margin increase evaluation")
    common(p)
    p.add_argument("--scenario", required=True, help="scenario key-value file")
    p.set_defaults(func=cmd_mis_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
