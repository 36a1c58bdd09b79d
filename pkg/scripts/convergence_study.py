#!/usr/bin/env python3
"""Recompute the headline scalars at the default grid and at doubled
resolution (401x401, dt/2) and print the shifts.

Usage: python scripts/convergence_study.py
Takes ~10 minutes on one core.
"""
import time
from dataclasses import asdict, replace

import rasesim as rs
from rasesim import experiments as xp
from rasesim.experiments import SimSettings


def scalars(settings: SimSettings) -> dict:
    density = xp._density_for(settings)
    sd = asdict(settings)
    out = {}
    curve = rs.survival_curve_for_depth(0.2, density, t_end=settings.t_s, dt=settings.dt)
    out["survival(4t) @ depth 0.2"] = float(curve.probabilities[-1])
    out["flat efficiency @ depth 1"] = xp._flat_point(sd, 1.0)
    out["mode-matched efficiency @ depth 10"] = xp._mode_matched_point(sd, 10.0)[1]
    out["tailored efficiency @ depth 10"] = xp._tailored_point(sd, 10.0)
    return out


def main() -> int:
    base = SimSettings()
    fine = replace(base, n_z=401, n_delta=401, dt=base.dt / 2)
    results = {}
    for label, settings in (("base", base), ("refined", fine)):
        start = time.time()
        results[label] = scalars(settings)
        print(f"[{label}: {settings.n_z}x{settings.n_delta}, dt={settings.dt}] "
              f"{time.time() - start:.0f} s")
    print(f"{'quantity':40s} {'base':>12s} {'refined':>12s} {'shift':>10s}")
    for key in results["base"]:
        a, b = results["base"][key], results["refined"][key]
        print(f"{key:40s} {a:12.6f} {b:12.6f} {abs(a - b):10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
