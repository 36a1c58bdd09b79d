"""Command-line entry point: configure, dispatch experiments, write CSVs.

Configuration is a flat `key = value` text file (# comments allowed) plus
flag overrides; unknown keys are rejected.  Exit status: 0 on success, 1 for
configuration errors, 2 when a solver fault or missing scan cell occurred.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields

from ._version import __version__
from . import ase, rase, experiments
from .ensemble import coupling_for_depth
from .errors import SolverError
from .experiments import SimSettings, EXPERIMENT_NAMES

_KNOWN_EXPERIMENTS = EXPERIMENT_NAMES + ("custom",)


@dataclass
class RunConfig:
    experiment: str = "fig7"
    n_z: int = 201
    n_delta: int = 201
    delta_halfspan: float = 5.0
    n_atoms: float = 1e6
    dt: float = 1e-3
    t_s: float = 4.0
    t_end: float | None = None       # fig4 time window / custom rephasing span
    sample_every: float = 1e-2
    alpha_l: list | None = None      # scan depths; None = experiment default
    alpha_l_ase: float = 0.1         # custom run, emission stage
    alpha_l_rase: float = 1.0        # custom run, rephasing stage
    tailored_match: str = "formula"
    out: str = "results"
    jobs: int = 0                    # 0 = available parallelism

    def settings(self) -> SimSettings:
        return SimSettings(
            n_z=self.n_z,
            n_delta=self.n_delta,
            delta_halfspan=self.delta_halfspan,
            n_atoms=self.n_atoms,
            dt=self.dt,
            t_s=self.t_s,
            sample_every=self.sample_every,
            tailored_match=self.tailored_match,
        )


_INT_KEYS = {"n_z", "n_delta", "jobs"}
_FLOAT_KEYS = {
    "delta_halfspan", "n_atoms", "dt", "t_s", "t_end", "sample_every",
    "alpha_l_ase", "alpha_l_rase",
}
_STR_KEYS = {"experiment", "tailored_match", "out"}
_POSITIVE_KEYS = {
    "n_z", "n_delta", "delta_halfspan", "n_atoms", "dt", "t_s", "t_end",
    "sample_every", "alpha_l_ase", "alpha_l_rase",
}


def _parse_alpha_list(text: str, key: str) -> list:
    try:
        values = [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ValueError(f"{key}: could not parse depth list {text!r}") from exc
    if not values:
        raise ValueError(f"{key}: empty depth list")
    if any(v <= 0 for v in values):
        raise ValueError(f"{key}: depths must be positive, got {values}")
    return values


def parse_config(text: str) -> RunConfig:
    """Parse the key = value configuration document, filling defaults."""
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        if key == "alpha_l":
            setattr(cfg, key, _parse_alpha_list(value, key))
        elif key in _INT_KEYS:
            try:
                setattr(cfg, key, int(value))
            except ValueError as exc:
                raise ValueError(f"{key}: expected an integer, got {value!r}") from exc
        elif key in _FLOAT_KEYS:
            try:
                setattr(cfg, key, float(value))
            except ValueError as exc:
                raise ValueError(f"{key}: expected a number, got {value!r}") from exc
        elif key in _STR_KEYS:
            setattr(cfg, key, value)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.experiment not in _KNOWN_EXPERIMENTS:
        raise ValueError(
            f"experiment: {cfg.experiment!r} is not one of {', '.join(_KNOWN_EXPERIMENTS)}"
        )
    for key in _POSITIVE_KEYS:
        value = getattr(cfg, key)
        if value is not None and not value > 0:
            raise ValueError(f"{key}: must be positive, got {value}")
    for key in ("n_z", "n_delta"):
        if getattr(cfg, key) < (2 if key == "n_z" else 3):
            raise ValueError(f"{key}: grid too small, got {getattr(cfg, key)}")
    if cfg.n_delta % 2 == 0:
        raise ValueError(f"n_delta: must be odd, got {cfg.n_delta}")
    if cfg.jobs < 0:
        raise ValueError(f"jobs: must be nonnegative, got {cfg.jobs}")
    if cfg.tailored_match not in ("formula", "spectral_peak"):
        raise ValueError(f"tailored_match: got {cfg.tailored_match!r}")


def _progress(stream):
    def cb(k, total):
        print(f"scan-point {k}/{total} done", file=stream, flush=True)
    return cb


def _run_custom(cfg: RunConfig) -> int:
    """Split-coupling single simulation: emission stage at alpha_l_ase,
    rephasing stage at alpha_l_rase, with survival and light CSVs."""
    s = cfg.settings()
    density = experiments._density_for(s)
    traj = ase.evolve_no_jump(
        ase.post_jump_state(density, detection_time=-s.t_s),
        density, coupling_for_depth(cfg.alpha_l_ase, density),
        dt=s.dt, t_end=s.t_s, sample_every=s.sample_every,
    )
    t_rase = cfg.t_end if cfg.t_end is not None else s.t_rase
    result = rase.evolve_rase(
        rase.invert_state(traj.final), density,
        coupling_for_depth(cfg.alpha_l_rase, density),
        dt=s.dt, t_end=t_rase, sample_every=s.sample_every,
    )
    os.makedirs(cfg.out, exist_ok=True)
    traj.survival_curve().to_csv(os.path.join(cfg.out, "custom_survival.csv"))
    result.light.to_csv(os.path.join(cfg.out, "custom_light.csv"))
    meta = experiments._metadata(
        "custom", s,
        alpha_l_ase=cfg.alpha_l_ase, alpha_l_rase=cfg.alpha_l_rase,
        t_end=t_rase,
        emission_probability=result.emission_probability,
        residual_norm=result.residual_norm,
    )
    with open(os.path.join(cfg.out, "custom.meta.json"), "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"custom run: emission_probability = {result.emission_probability:.6f}, "
        f"residual_norm = {result.residual_norm:.6f}",
        file=sys.stderr,
    )
    return 0


def run(cfg: RunConfig) -> int:
    """Execute the configured experiment; returns the process exit status."""
    jobs = cfg.jobs if cfg.jobs > 0 else (os.cpu_count() or 1)
    if cfg.experiment == "custom":
        return _run_custom(cfg)
    settings = cfg.settings()
    runner = experiments._RUNNERS[cfg.experiment]
    kwargs = {"settings": settings, "jobs": jobs, "progress": _progress(sys.stderr)}
    if cfg.experiment == "fig8":
        if cfg.alpha_l is not None:
            if len(cfg.alpha_l) != 1:
                raise ValueError("alpha_l: fig8 takes exactly one depth")
            kwargs["alpha_l"] = cfg.alpha_l[0]
    else:
        if cfg.alpha_l is not None:
            kwargs["od_values"] = cfg.alpha_l
        if cfg.experiment == "fig4" and cfg.t_end is not None:
            kwargs["t_max"] = cfg.t_end
    result = runner(**kwargs)
    csv_path, meta_path = result.write(cfg.out)
    print(f"wrote {csv_path} and {meta_path}", file=sys.stderr)
    failures = result.metadata.get("failures") or {}
    if failures:
        for alpha, msg in failures.items():
            print(f"scan cell alpha_l={alpha} failed: {msg}", file=sys.stderr)
        return 2
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rasesim",
        description="Deterministic simulator of heralded single-photon "
                    "production by rephased collective emission.",
    )
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--experiment", help=f"one of {', '.join(_KNOWN_EXPERIMENTS)}")
    p.add_argument("--out", help="output directory (default: results)")
    p.add_argument("--dt", type=float, help="integrator step in tau")
    p.add_argument("--alpha-l", dest="alpha_l",
                   help="comma-separated optical depths for the scan axis")
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    p.add_argument("--tailored-match", dest="tailored_match",
                   choices=("formula", "spectral_peak"),
                   help="depth convention for the shaped-density run")
    p.add_argument("--list", action="store_true", help="list experiment names and exit")
    p.add_argument("--replay", metavar="META_JSON",
                   help="re-derive an experiment from its metadata sidecar")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.list:
        for name in _KNOWN_EXPERIMENTS:
            print(name)
        return 0
    try:
        if args.replay:
            with open(args.replay) as fh:
                meta = json.load(fh)
            out = args.out or "results"
            jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
            result = experiments.rerun_from_metadata(meta, jobs=jobs,
                                                     progress=_progress(sys.stderr))
            csv_path, _ = result.write(out)
            print(f"replayed {meta['experiment']} -> {csv_path}", file=sys.stderr)
            return 0
        if args.config:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
        else:
            cfg = RunConfig()
        for key in ("experiment", "out", "dt", "jobs", "tailored_match"):
            value = getattr(args, key)
            if value is not None:
                setattr(cfg, key, value)
        if args.alpha_l is not None:
            cfg.alpha_l = _parse_alpha_list(args.alpha_l, "alpha_l")
        validate_config(cfg)
    except (ValueError, OSError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(cfg)
    except SolverError as exc:
        print(f"solver fault: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
