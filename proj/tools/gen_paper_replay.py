#!/usr/bin/env python3
"""Generate scenarios/paper_replay.yaml.

Each region hosts one GPU model and follows one arrival pattern:
  ramp    requests at t=0, throttled by the region's launch rate
  stall   requests at t=0, most frozen by a regional limit until the
          operator recovery at RECOVERY_S
  topup   requests issued in steps between two times
Counts are per-region shares of the peak composition, over-requested to
cover instances lost to preemption before the peak.
"""

import argparse
import pathlib

import yaml

HORIZON_S = 14400
SHUTDOWN_S = 6900
RECOVERY_S = 3000
SWEEP_S = 10200
OVER_REQUEST = 1.03

PEAK = {
    "V100": 9200, "P100": 7100, "P40": 2100, "T4": 4600,
    "P4": 500, "M60": 10100, "K80": 12500, "K520": 5400,
}

PFLOP32_HOURS = {
    "V100": 260.7, "P100": 152.8, "P40": 51.5, "T4": 61.4,
    "P4": 3.6, "M60": 121.3, "K80": 76.2, "K520": 16.1,
}

SMALL_INPUT_MODELS = {"K80", "K520"}

# (region id, provider, geo, model, share of the model's peak, pattern, params)
REGIONS = [
    ("a-na-01", "A", "NA", "V100", 0.25, "ramp", {"minutes": 20}),
    ("a-eu-01", "A", "EU", "V100", 0.20, "ramp", {"minutes": 20}),
    ("a-ap-01", "A", "APAC", "V100", 0.15, "stall", {"fraction": 0.5, "minutes": 18}),
    ("a-na-02", "A", "NA", "M60", 0.25, "ramp", {"minutes": 30}),
    ("a-eu-02", "A", "EU", "M60", 0.20, "ramp", {"minutes": 30}),
    ("a-na-03", "A", "NA", "K80", 0.17, "ramp", {"minutes": 30}),
    ("a-eu-03", "A", "EU", "K80", 0.17, "ramp", {"minutes": 30}),
    ("a-na-04", "A", "NA", "T4", 0.35, "stall", {"fraction": 0.9, "minutes": 4}),
    ("a-ap-02", "A", "APAC", "K520", 0.50, "stall", {"fraction": 1.0, "minutes": 4}),
    ("b-eu-04", "B", "EU", "K520", 0.50, "topup", {"ramp_fraction": 0.35, "minutes": 30,
                                                    "start": 60, "end": 108}),
    ("b-na-01", "B", "NA", "V100", 0.20, "ramp", {"minutes": 20}),
    ("b-na-02", "B", "NA", "P100", 0.25, "ramp", {"minutes": 20}),
    ("b-eu-01", "B", "EU", "P40", 0.55, "ramp", {"minutes": 20}),
    ("b-ap-01", "B", "APAC", "P40", 0.45, "ramp", {"minutes": 20}),
    ("b-na-03", "B", "NA", "T4", 0.35, "ramp", {"minutes": 40}),
    ("b-eu-02", "B", "EU", "M60", 0.20, "ramp", {"minutes": 30}),
    ("b-ap-02", "B", "APAC", "M60", 0.20, "ramp", {"minutes": 30}),
    ("b-na-04", "B", "NA", "M60", 0.15, "ramp", {"minutes": 30}),
    ("b-eu-03", "B", "EU", "K80", 0.17, "stall", {"fraction": 0.85, "minutes": 4}),
    ("b-ap-03", "B", "APAC", "K80", 0.17, "stall", {"fraction": 0.85, "minutes": 4}),
    ("c-na-01", "C", "NA", "V100", 0.20, "ramp", {"minutes": 20}),
    ("c-na-02", "C", "NA", "P100", 0.25, "ramp", {"minutes": 20}),
    ("c-eu-01", "C", "EU", "P100", 0.25, "ramp", {"minutes": 20}),
    ("c-ap-01", "C", "APAC", "P100", 0.25, "ramp", {"minutes": 20}),
    ("c-na-03", "C", "NA", "K80", 0.16, "topup", {"ramp_fraction": 0.25, "minutes": 30,
                                                   "start": 60, "end": 100}),
    ("c-eu-02", "C", "EU", "K80", 0.16, "topup", {"ramp_fraction": 0.25, "minutes": 30,
                                                   "start": 60, "end": 100}),
    ("c-ap-02", "C", "APAC", "T4", 0.30, "topup", {"ramp_fraction": 0.0, "minutes": 1,
                                                    "start": 60, "end": 100}),
    ("c-na-04", "C", "NA", "P4", 1.00, "topup", {"ramp_fraction": 0.0, "minutes": 1,
                                                  "start": 60, "end": 72}),
]

# Regions whose de-provisioning path spawns rogue instances during shutdown.
RESPAWN_REGIONS = ["b-ap-02", "c-eu-01"]
TOPUP_STEP_MIN = 4


def build():
    regions, groups, steps, stall_regions = [], [], [], []
    stall_fraction = {}
    for rid, provider, geo, model, share, pattern, p in REGIONS:
        # Instance groups replace preempted members; the other flavors do not.
        over = 1.0 if provider == "C" else OVER_REQUEST
        total = round(PEAK[model] * share * over)
        region = {
            "id": rid,
            "provider": provider,
            "geo": geo,
            "quota": {model: total},
            "wan_latency_s": {"NA": 0.02, "EU": 0.08, "APAC": 0.15}[geo],
        }
        group = {"name": f"{rid}-{model.lower()}", "region": rid, "gpu": model}
        if provider == "B":
            group["max_size"] = total

        def request(t_s, size, suffix=""):
            if provider == "A":
                name = group["name"] + suffix
                groups.append({"name": name, "region": rid, "gpu": model})
                steps.append({"t_s": t_s, "group": name, "size": size})
            else:
                steps.append({"t_s": t_s, "group": group["name"], "size": size})

        if provider != "A":
            groups.append(group)

        if pattern == "ramp":
            region["launch_rate_per_min"] = round(total / p["minutes"], 1)
            request(0, total)
        elif pattern == "stall":
            region["launch_rate_per_min"] = round(total / p["minutes"], 1)
            stall_regions.append(rid)
            stall_fraction[rid] = p["fraction"]
            request(0, total)
        elif pattern == "topup":
            initial = round(total * p["ramp_fraction"])
            times = list(range(p["start"], p["end"] + 1, TOPUP_STEP_MIN))
            batch_rate = 2 * (total - initial) / len(times) / TOPUP_STEP_MIN
            ramp_rate = initial / p["minutes"] if initial else 0
            region["launch_rate_per_min"] = round(max(batch_rate, ramp_rate), 1)
            if initial:
                request(0, initial, "-0")
            remaining = total - initial
            done = initial
            for k, t in enumerate(times, start=1):
                target = initial + round(remaining * k / len(times))
                if provider == "A":
                    request(t * 60, target - done, f"-{k}")
                else:
                    request(t * 60, target)
                done = target
        regions.append(region)

    faults = [{"kind": "Preemption", "rate_per_hour": 0.02}]
    by_fraction = {}
    for rid in stall_regions:
        by_fraction.setdefault(stall_fraction[rid], []).append(rid)
    for frac, rids in sorted(by_fraction.items()):
        faults.append({"kind": "RegionalLimitStall", "regions": rids, "start_s": 0,
                       "end_s": RECOVERY_S + 600, "stall_fraction": frac})
    faults.append({"kind": "DeprovisionRespawnBug", "regions": RESPAWN_REGIONS,
                   "start_s": SHUTDOWN_S, "end_s": SWEEP_S, "rogue_per_call": 1})

    operator = [{"t_s": RECOVERY_S, "action": "ManualRecovery", "region": r} for r in stall_regions]
    operator += [{"t_s": SWEEP_S, "action": "ManualSweep", "region": r} for r in RESPAWN_REGIONS]

    standard = [r[0] for r in REGIONS if r[3] not in SMALL_INPUT_MODELS]
    small = [r[0] for r in REGIONS if r[3] in SMALL_INPUT_MODELS]

    steps.sort(key=lambda s: (s["t_s"], s["group"]))
    return {
        "name": "paper_replay",
        "seed": 20191116,
        "horizon_s": HORIZON_S,
        "sample_s": 60,
        "pool": {"gpu_schedds": 10, "cpu_schedds": 20, "schedd_cap": 12000,
                 "cpu_slots_per_instance": 2, "leaves_per_region": 20, "cycle_s": 60},
        "providers": {"tick_s": 10},
        "workload": {
            "small_size_factor": 0.125,
            "runtime_jitter": 0.05,
            "jobs": [
                {"class": "GPU", "input": "Standard", "count": 150000},
                {"class": "GPU", "input": "Small", "count": 110000},
                {"class": "CPU", "count": 120000},
            ],
            "replicas": {"Standard": standard, "Small": small},
        },
        "regions": regions,
        "groups": groups,
        "provisioning": steps,
        "shutdown": {"t_s": SHUTDOWN_S},
        "faults": faults,
        "operator": operator,
        "expect": {
            "peak_total": {"value": 51500, "rel_tol": 0.02},
            "peak_counts": {"rel_tol": 0.02, "values": dict(PEAK)},
            "peak_pflops32": {"value": 379.4, "rel_tol": 0.05},
            "milestone_65_s": [1500, 2100],
            "milestone_90_s": [3900, 4500],
            "walltime_hours": {"value": 97300, "rel_tol": 0.05},
            "pflop32_hours": {"value": 734.7, "rel_tol": 0.05},
            "model_pflop32_hours": {"rel_tol": 0.10, "values": dict(PFLOP32_HOURS)},
            "cost_per_hour": {"value": 19600, "rel_tol": 0.05},
            "cost_within_price_range": True,
            "science_fraction": {"V100+T4": [0.45, 0.55], "K80+K520": [0.05, 0.11]},
        },
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent
                                         / "scenarios" / "paper_replay.yaml"))
    args = ap.parse_args()
    text = yaml.safe_dump(build(), sort_keys=False, default_flow_style=None, width=120)
    header = "# Generated by tools/gen_paper_replay.py; edit the generator, not this file.\n"
    pathlib.Path(args.out).write_text(header + text)


if __name__ == "__main__":
    main()
