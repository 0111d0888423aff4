"""Random but valid scenario texts for the consistency suites."""

from __future__ import annotations

import random


def block(name, **kv):
    return "\n".join([f"[{name}]"] + [f"{k} = {v}" for k, v in kv.items()])


def random_scenario_text(seed: int) -> str:
    rng = random.Random(seed)
    n_maps = rng.randint(2, 3)
    parts = [
        f"sim_time_s = {rng.choice([8, 10, 12])}",
        f"ready_timer_s = {rng.choice([0.5, 1.0, 5.0])}",
        f"jitter_s = {rng.choice([0, 0.3])}",
        f"seed = {seed}",
    ]
    parts.append(block("node", id="INET", kind="router"))
    parts.append(block("node", id="HA", kind="ha"))
    cns = [f"CN{i + 1}" for i in range(rng.randint(1, 3))]
    for cn in cns:
        parts.append(block("node", id=cn, kind="cn"))
        parts.append(block("link", a=cn, b="INET", bandwidth_bps="10e6", latency_s=rng.choice([0.002, 0.005])))
    parts.append(block("link", a="HA", b="INET", latency_s=0.02))
    ars = []
    for m in range(n_maps):
        n_thr = rng.randint(0, 3)
        map_id = f"MAP{m + 1}"
        parts.append(block("map", id=map_id, n_thr=n_thr, h_thr=n_thr + rng.randint(0, 3)))
        parts.append(block("link", a="INET", b=map_id, bandwidth_bps=rng.choice(["1e6", "2e6"])))
        for k in range(2):
            ar = f"AR{2 * m + k + 1}"
            extra = {}
            if m > 0 and rng.random() < 0.3:
                extra["also_maps"] = "MAP1"
                parts.append(block("link", a="MAP1", b=ar))
            parts.append(block("ar", id=ar, map=map_id, x=100 + 150 * len(ars), y=500, **extra))
            parts.append(block("link", a=map_id, b=ar))
            ars.append(ar)
    sim_time = float(parts[0].split("=")[1])
    for i in range(rng.randint(2, 6)):
        mn = f"MN{i + 1}"
        ar = rng.choice(ars)
        parts.append(block("mn", id=mn, ar=ar, home_agent="HA", power_on_s=round(rng.uniform(0, 3), 2),
                           speed_mps=rng.choice([0, 5, 10, 20])))
        for j in range(rng.randint(0, 2)):
            stop = round(rng.uniform(3, sim_time + 2), 2)
            parts.append(block("flow", id=f"f{i + 1}_{j}", cn=rng.choice(cns), mn=mn,
                               rate_bps=rng.choice(["50e3", "100e3", "200e3"]),
                               start_s=round(rng.uniform(0, 2), 2), stop_s=stop))
        t, here = 0.0, ar
        for _ in range(rng.randint(0, 4)):
            t += round(rng.uniform(0.3, 3), 2)
            if t >= sim_time:
                break
            there = rng.choice(ars)
            parts.append(block("leg", mn=mn, **{"from": here, "to": there}, at_s=round(t, 2)))
            here = there
    return "\n\n".join(parts) + "\n"
