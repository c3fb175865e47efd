#!/usr/bin/env python3
"""Smoke test for the fracsim_py extension module.

Builds the cdylib with cargo, copies it next to this script under the
importable name, then exercises the main entry points.

Usage: python python/smoke_test.py
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_and_import():
    subprocess.run(
        ["cargo", "build", "-p", "fracsim-py"], cwd=ROOT, check=True
    )
    built = ROOT / "target" / "debug" / "libfracsim_py.so"
    dest = Path(__file__).parent / "fracsim_py.so"
    shutil.copy2(built, dest)
    sys.path.insert(0, str(dest.parent))
    import fracsim_py

    return fracsim_py


def main():
    fs = build_and_import()
    print(f"fracsim_py {fs.__version__}")

    # Covariance model: C(0) = nugget + sill, zero beyond the range.
    m = fs.SphericalModel(1.0, 2.0, 50.0)
    assert m.covariance(0.0) == 3.0
    assert abs(m.covariance(25.0) - 0.625) < 1e-12
    assert m.covariance(50.0) == 0.0
    assert m.gamma(75.0) == m.total_sill()

    # Folding and circular statistics.
    assert fs.fold_azimuth(185.0) == 5.0
    mean, std = fs.circular_stats([68.0, 70.0, 72.0], period=180.0)
    assert abs(mean - 70.0) < 1e-9
    assert 0.0 < std < 5.0

    # Kriging reproduces a conditioning value exactly at its own location.
    pts = [(0.0, 0.0, 1.0), (10.0, 0.0, 3.0), (0.0, 10.0, 5.0)]
    est, var, w = fs.krige(pts, (0.0, 0.0), m, method="simple", mean=2.0)
    assert abs(est - 1.0) < 1e-9 and abs(var) < 1e-9
    assert len(w) == 3 and abs(w[0] - 1.0) < 1e-9
    est_ok, var_ok, w_ok = fs.krige(pts, (5.0, 5.0), m, method="ordinary")
    assert abs(sum(w_ok) - 1.0) < 1e-9
    assert 0.0 <= var_ok <= m.total_sill()

    # Normal scores round-trip.
    data = [10.0 + 160.0 * i / 99 for i in range(100)]
    t = fs.NormalScoreTable(data)
    for v in (20.0, 90.0, 150.0):
        assert abs(t.from_normal(t.to_normal(v)) - v) < 1e-9

    # Load the bundled traces and check the advertised statistic.
    net = fs.Network.load(str(ROOT / "data" / "example2_traces.txt"))
    assert len(net) == 120
    stats = json.loads(net.stats_json())
    assert math.isclose(stats["segment_length_mean"], 2289.27, abs_tol=0.01)
    assert net.peaks(), "expected at least one azimuth peak"

    # Self-comparison has zero peak deviation.
    cmp = json.loads(fs.compare(net, net))
    assert all(p["deviation"] == 0.0 for p in cmp["matching"]["pairs"])

    # A tiny simulation runs deterministically end to end.
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "sim.toml"
        cfg.write_text(
            "\n".join(
                [
                    "domain = [0.0, 0.0, 200.0, 200.0]",
                    'seeds = { mode = "fixed_count", count = 5 }',
                    "segment_length = 8.0",
                    "angle_mean = 70.0",
                    "angle_std = 10.0",
                    "sector_radius = 40.0",
                    "max_iterations = 4",
                    "rng_seed = 11",
                    "variogram = { nugget = 1.0, sill = 2.0, range = 50.0 }",
                    "",
                ]
            )
        )
        sim_a, report = fs.simulate(str(cfg))
        sim_b, _ = fs.simulate(str(cfg))
        assert sim_a.polylines() == sim_b.polylines()
        assert set(sim_a.kinds()) == {"simulated"}
        assert json.loads(report)["seed_count"] == 5

        out = Path(tmp) / "network.json"
        fs.simulate_to_file(str(cfg), str(out), seed=12)
        loaded = fs.Network.load(str(out))
        assert len(loaded) == 5

    print("smoke test passed")


if __name__ == "__main__":
    main()
