"""Command-line entry point: ``autosync <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical blow-up,
4 file I/O error.
"""
import argparse
import logging
import os
import sys

import numpy as np

from . import io
from .config import PRESETS, ConfigError, derive_seed, load_config, parse_config, preset
from .ecology import BlowUpError, DriveState, initial_conditions, simulate_drive
from .metrics import QUANTITIES, SWEEP_AXES, build_clouds, build_grid, build_params, run_scenario, sweep
from .netanalysis import drive_trajectory, expected_laplacian, switching_exponent, verify_network_equivalence
from .occlusion import advect_mask

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("autosync")


def _load(source):
    """A config file path, or the name of a built-in preset."""
    if os.path.exists(source):
        return load_config(source)
    if source in PRESETS:
        return parse_config(preset(source))
    raise FileNotFoundError(f"no config file or preset named {source!r}")


def _outdir(cfg, override):
    out = override or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def _save_field(f, out, name, preview=True, mask=None, sentinel=None):
    io.write_snapshot(f, os.path.join(out, f"{name}.ordf"))
    if preview:
        io.write_preview(f, os.path.join(out, f"{name}.pgm"), mask=mask, sentinel=sentinel)


def _floats(text):
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse value list {text!r}") from None


def cmd_run(args):
    cfg = _load(args.config)
    out = _outdir(cfg, args.out)
    cfg = cfg.replace(output_dir=out)

    def progress(i, series):
        if not args.quiet:
            last = {q: series[q][-1] for q in QUANTITIES}
            print(f"t={series.times[-1]:9.1f}  " + "  ".join(f"{q}={v:.3e}" for q, v in last.items()))

    res = run_scenario(cfg, write_diagnostics=True, progress=progress)
    res.series.to_csv(os.path.join(out, "errors.csv"))
    obs, drive = res.observer, res.drive
    mask = res.clouds.mask
    _save_field(drive.P, out, "P", mask=mask)
    _save_field(drive.Z, out, "Z")
    _save_field(obs.Phat, out, "Phat")
    _save_field(obs.Zhat, out, "Zhat")
    _save_field(obs.khat, out, "khat")
    _save_field(obs.mhat, out, "mhat")
    final = res.series.final()
    print("final " + " ".join(f"{q}={final[q]:.6e}" for q in QUANTITIES))
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load(args.config)
    out = _outdir(cfg, args.out)
    values = _floats(args.values)
    if not values:
        raise ConfigError("--values is empty")

    def progress(row):
        if not args.quiet:
            print(f"{args.axis}={row[args.axis]}  {row['status']}  "
                  + "  ".join(f"{q}={row[q]:.3e}" for q in QUANTITIES))

    rows = sweep(cfg, args.axis, values, progress=progress)
    path = os.path.join(out, f"sweep_{args.axis}.csv")
    io.write_csv(path, rows, [args.axis, "status", *QUANTITIES, "k_drive", "m_drive", "t", "message"])
    print(path)
    failed = [r for r in rows if r["status"] != "ok"]
    return EXIT_BLOWUP if failed and len(failed) == len(rows) else EXIT_OK


def _masks(cfg, grid, steps):
    clouds = build_clouds(cfg, grid)
    masks = []
    for _ in range(steps + 1):
        masks.append(clouds.mask)
        clouds = advect_mask(clouds, grid.dt, grid.dx)
    return masks


def cmd_analyze(args):
    cfg = _load(args.config)
    out = _outdir(cfg, args.out)
    grid = build_grid(cfg)
    params, _ = build_params(cfg, grid)
    horizon, discard = args.horizon, args.discard
    steps = horizon + discard

    state = initial_conditions(grid, "seeded-random", cfg.ic_eps, seed=derive_seed(cfg.seed, "ic"), h=cfg.h)
    spin = int(round(args.spinup / grid.dt))
    if spin:
        state = simulate_drive(state, params, grid, spin)
    traj = drive_trajectory(DriveState(state.P, state.Z), params, grid, steps)

    kappa = cfg.kappa
    masks = _masks(cfg, grid, steps)
    el = expected_laplacian(masks)
    rows = []

    def record(label, value, **extra):
        rows.append({"quantity": label, "value": value, **extra})
        if not args.quiet:
            print(f"{label:28s} {value: .6e}")

    common = dict(horizon=horizon, discard=discard, seed=cfg.seed)
    record("exponent_uncoupled", switching_exponent(grid, params, traj, 0.0, **common))
    record("exponent_full_coupling", switching_exponent(grid, params, traj, kappa, **common))
    record("exponent_switching", switching_exponent(grid, params, traj, kappa, masks=masks, **common))
    record("exponent_averaged", switching_exponent(grid, params, traj, kappa, masks=masks, averaged=True, **common))
    w = el.coupling_weight
    record("expected_coupling_mean", float(np.mean(w)))
    record("expected_coupling_min", float(np.min(w)))
    record("expected_coupling_max", float(np.max(w)))
    record("equivalence_8x8", verify_network_equivalence(
        type(grid)(8, 8, grid.dx, grid.dt), steps=100, kappa=kappa, seed=cfg.seed))
    io.write_csv(os.path.join(out, "analyze.csv"), rows, ["quantity", "value"])

    speeds = _floats(args.speeds) if args.speeds else []
    if speeds:
        srows = []
        for nu in speeds:
            ms = _masks(cfg.replace(cloud_speed=nu), grid, steps)
            lam = switching_exponent(grid, params, traj, kappa, masks=ms, **common)
            srows.append({"cloud_speed": nu, "exponent": lam})
            if not args.quiet:
                print(f"cloud_speed={nu:<8g} exponent={lam: .6e}")
        io.write_csv(os.path.join(out, "exponents_cloud_speed.csv"), srows, ["cloud_speed", "exponent"])
    return EXIT_OK


def cmd_genparams(args):
    cfg = _load(args.config)
    out = _outdir(cfg, args.out)
    grid = build_grid(cfg)
    params, clean = build_params(cfg, grid)
    k, m = params.fields(grid)
    kc, mc = clean.fields(grid)
    for name, f in (("k", k), ("m", m), ("k_clean", kc), ("m_clean", mc)):
        _save_field(f, out, name, preview=not args.no_preview)
        if not args.quiet:
            print(f"{name:8s} min={f.min():.6g} max={f.max():.6g} -> {os.path.join(out, name + '.ordf')}")
    return EXIT_OK


def cmd_preview(args):
    f = io.read_snapshot(args.snapshot)
    out = args.output or os.path.splitext(args.snapshot)[0] + ".pgm"
    io.write_preview(f, out, sentinel=args.sentinel)
    print(out)
    return EXIT_OK


def cmd_presets(args):
    if args.name:
        sys.stdout.write(preset(args.name))
        return EXIT_OK
    for name, p in PRESETS.items():
        print(f"{name:10s} {p['replicates']}  [{p['scale']}]")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="autosync", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        return p

    def with_config(p):
        p.add_argument("config", help="config file, or a preset name")
        p.add_argument("-o", "--out", help="output directory (default: output_dir from the config)")
        p.add_argument("-q", "--quiet", action="store_true")
        return p

    with_config(add("run", cmd_run, "run one scenario and write errors.csv plus final fields"))
    p = with_config(add("sweep", cmd_sweep, "terminal errors along one config axis"))
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma-separated values")
    p = with_config(add("analyze", cmd_analyze, "transverse exponents, expected coupling, network equivalence"))
    p.add_argument("--horizon", type=int, default=500, help="exponent horizon in steps (>= 100)")
    p.add_argument("--discard", type=int, default=100, help="alignment steps before averaging")
    p.add_argument("--spinup", type=float, default=200.0, help="drive spin-up time before analysis")
    p.add_argument("--speeds", help="comma-separated cloud speeds for an exponent sweep")
    p = with_config(add("genparams", cmd_genparams, "write parameter-field snapshots"))
    p.add_argument("--no-preview", action="store_true")
    p = add("preview", cmd_preview, "render a snapshot as a 16-bit PGM")
    p.add_argument("snapshot")
    p.add_argument("-o", "--output")
    p.add_argument("--sentinel", type=float, default=None, help="render cells equal to this value as 0")
    p = add("presets", cmd_presets, "list presets or print one")
    p.add_argument("name", nargs="?")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as err:
        print(f"config error: {err.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as err:
        print(f"blow-up: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    except (OSError, io.SnapshotError) as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
