"""Fuzzed mission corpus with server-side verdicts.

Emits JSON on stdout: a list of {mission, verdicts} entries where verdicts
are the violation codes the server-side validator produces. The console's
test suite replays the same corpus through its client-side validator and
diffs the two, so the client can never accept a plan the server rejects.

Usage: python3 -m uavaq.corpus --count 500 --seed 7
"""
from __future__ import annotations

import argparse
import json
import random
import sys

from . import mission as ms


def random_mission(rng: random.Random) -> dict:
    home_lat = rng.uniform(-60.0, 60.0)
    home_lon = rng.uniform(-170.0, 170.0)
    home = ms.Waypoint(home_lat, home_lon, 0.0)
    n = rng.randint(1, 6)
    wps = []
    for i in range(n):
        # mix clear passes, clear violations and near-boundary distances
        roll = rng.random()
        if roll < 0.3:
            dist = rng.uniform(5.0, 99.0)
        elif roll < 0.45:
            dist = rng.uniform(99.0, 101.0) if i == 0 else rng.uniform(199.0, 201.0)
        else:
            dist = rng.uniform(101.0, 2000.0)
        wp = ms.offset_point(home, rng.uniform(0, 360), dist,
                             alt=rng.uniform(30.0, 300.0))
        wps.append({"lat": round(wp.lat, 7), "lon": round(wp.lon, 7),
                    "alt": round(wp.alt, 1)})
    speed = rng.choice([rng.uniform(5.0, 40.0), rng.uniform(5.0, 40.0), 0.0, -3.0])
    alt = rng.choice([rng.uniform(50.0, 300.0), rng.uniform(50.0, 300.0), 0.0])
    doc = {"home": {"lat": home_lat, "lon": home_lon, "alt": 0.0},
           "waypoints": wps,
           "cruise_speed": round(speed, 2), "cruise_alt": round(alt, 1)}
    # sprinkle in structurally broken plans as well
    mal = rng.random()
    if mal < 0.03:
        doc["waypoints"] = []
    elif mal < 0.06:
        doc["waypoints"][0] = {"lat": 95.0, "lon": 10.0, "alt": 100.0}
    elif mal < 0.08:
        doc.pop("cruise_speed")
    return doc


def verdicts_for(doc: dict) -> list[str]:
    try:
        plan = ms.MissionPlan.from_dict(doc)
        return sorted(v.code for v in ms.validate_mission(plan))
    except ms.MissionError:
        return ["malformed"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--count", type=int, default=500)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    rng = random.Random(args.seed)
    corpus = []
    for _ in range(args.count):
        doc = random_mission(rng)
        corpus.append({"mission": doc, "verdicts": verdicts_for(doc)})
    json.dump(corpus, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
