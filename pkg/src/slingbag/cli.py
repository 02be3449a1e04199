"""Command line front end.

Every subcommand reads a run configuration (``--config``, default: the
bundled demo) and takes its input/output paths from the ``paths.*`` keys
unless ``--input`` / ``--output`` override them.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path


from . import baseline, io, optimizer, radiator, shader
from ._kernels import configure_threads
from .config import RunConfig
from .metrics import cnr, snr, ssim
from .phantom import make_phantom

logger = logging.getLogger(__name__)

AXES = ("x", "y", "z")


class CLIError(Exception):
    """One-line diagnostic, exit status 1."""


def _load_config(args):
    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig.demo()
    except FileNotFoundError:
        raise CLIError(f"config file not found: {args.config}")
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _in(path, reader):
    path = Path(path)
    if not path.is_file():
        raise CLIError(f"input file not found: {path}")
    return reader(path)


def _out(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# -- steps ------------------------------------------------------------------

def run_phantom(cfg, out):
    kind, params = cfg.phantom()
    cloud = make_phantom(kind, params, seed=cfg.seed)
    io.write_cloud(_out(out), cloud)
    return cloud


def run_simulate(cfg, src, out):
    cloud = _in(src, io.read_cloud)
    sig = radiator.forward(cloud, cfg.sensor_array(), cfg.medium(), cfg.radiator())
    io.write_signals(_out(out), sig)
    return sig


def run_reconstruct(cfg, src, out, log_path):
    obs = _in(src, io.read_signals)
    coarse, fine = cfg.stages()
    with open(_out(log_path), "w") as log:
        log.write("iter,loss,n_points\n")
        cloud = optimizer.reconstruct(obs, cfg.sensor_array(), cfg.medium(), cfg.init(),
                                      coarse, fine, cfg.recon_radiator(), sink=log)
    io.write_cloud(_out(out), cloud)
    return cloud


def run_ubp(cfg, src, out):
    obs = _in(src, io.read_signals)
    grid, _ = baseline.ubp_reconstruct(obs, cfg.sensor_array(), cfg.grid(), cfg.medium(),
                                       solid_angle=cfg.get("ubp.solid_angle", False))
    io.write_grid(_out(out), grid)
    return grid


def run_voxelize(cfg, src, out):
    cloud = _in(src, io.read_cloud)
    grid = shader.voxelize(cloud, cfg.grid(), cfg.radiator())
    io.write_grid(_out(out), grid)
    return grid


def render(grid, prefix, axis="z", slice_index=None):
    """Write ``<prefix>_<axis>.pgm/.csv`` (MAP) or ``<prefix>_<axis><index>`` (slice)."""
    if slice_index is None:
        img, tag = shader.map_projection(grid, axis), f"{axis}"
    else:
        img, tag = shader.slice(grid, axis, slice_index), f"{axis}{slice_index}"
    prefix = _out(prefix)
    base = prefix.with_name(f"{prefix.name}_{tag}")
    pgm, csv_path = base.with_suffix(".pgm"), base.with_suffix(".csv")
    io.write_pgm(pgm, img)
    io.write_image_csv(csv_path, img)
    return pgm, csv_path


def image_metrics(image, reference, signal_threshold=0.5, background_threshold=0.05):
    """SSIM against ``reference`` plus SNR/CNR over masks cut from the reference."""
    peak = reference.max()
    sig = reference >= signal_threshold * peak
    bg = reference < background_threshold * peak
    return {"ssim": ssim(reference, image), "snr_db": snr(image, sig, bg),
            "cnr": cnr(image, sig, bg)}


def run_metrics(cfg, reference_path, grid_paths, labels, out):
    axis = cfg.get("metrics.axis", "z")
    ref = shader.map_projection(_in(reference_path, io.read_grid), axis)
    thr = dict(signal_threshold=cfg.get("metrics.signal_threshold", 0.5),
               background_threshold=cfg.get("metrics.background_threshold", 0.05))
    rows = []
    for label, path in zip(labels, grid_paths):
        img = shader.map_projection(_in(path, io.read_grid), axis)
        rows.append({"method": label, "axis": axis, **image_metrics(img, ref, **thr)})
    with open(_out(out), "w", newline="") as fh:
        w = csv.DictWriter(fh, ["method", "axis", "ssim", "snr_db", "cnr"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})
    return rows


def run_pipeline(cfg):
    p = cfg.paths()
    truth = run_phantom(cfg, p["phantom"])
    run_simulate(cfg, p["phantom"], p["signals"])
    run_reconstruct(cfg, p["signals"], p["recon"], p["log"])
    grid = run_voxelize(cfg, p["recon"], p["grid"])
    io.write_grid(_out(p["truth_grid"]), shader.voxelize(truth, cfg.grid(), cfg.radiator()))
    run_ubp(cfg, p["signals"], p["ubp_grid"])
    for axis in AXES:
        render(grid, p["images"], axis)
    return run_metrics(cfg, p["truth_grid"], [p["grid"], p["ubp_grid"]], ["slingbag", "ubp"],
                       p["metrics"])


# -- argument parsing -------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (default: bundled demo)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="slingbag", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_, inp=True, out=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if inp:
            sp.add_argument("--input", help="input file (default from config)")
        if out:
            sp.add_argument("--output", help="output file (default from config)")
        return sp

    add("phantom", "generate a synthetic source cloud", inp=False)
    add("simulate", "simulate sensor traces from a cloud")
    sp = add("reconstruct", "fit a point cloud to recorded traces")
    sp.add_argument("--log", help="loss log CSV (default from config)")
    add("ubp", "back-projection baseline")
    add("voxelize", "render a cloud onto the configured grid")
    sp = add("render", "write a MAP or slice image of a voxel grid")
    sp.add_argument("--axis", choices=AXES, default="z")
    sp.add_argument("--slice", type=int, dest="slice_index",
                    help="slice index instead of a projection")
    sp = add("metrics", "SSIM / SNR / CNR of grids against a reference")
    sp.add_argument("--reference", help="reference grid (default: truth grid)")
    add("pipeline", "phantom -> simulate -> reconstruct/ubp -> voxelize -> render -> metrics",
        inp=False, out=False)
    return ap


def _dispatch(args):
    cfg = _load_config(args)
    p = cfg.paths()
    inp = getattr(args, "input", None)
    out = getattr(args, "output", None)
    cmd = args.command
    if cmd == "phantom":
        run_phantom(cfg, out or p["phantom"])
    elif cmd == "simulate":
        run_simulate(cfg, inp or p["phantom"], out or p["signals"])
    elif cmd == "reconstruct":
        run_reconstruct(cfg, inp or p["signals"], out or p["recon"], args.log or p["log"])
    elif cmd == "ubp":
        run_ubp(cfg, inp or p["signals"], out or p["ubp_grid"])
    elif cmd == "voxelize":
        run_voxelize(cfg, inp or p["recon"], out or p["grid"])
    elif cmd == "render":
        grid = _in(inp or p["grid"], io.read_grid)
        for path in render(grid, out or p["images"], args.axis, args.slice_index):
            print(path)
    elif cmd == "metrics":
        grids = [inp] if inp else [p["grid"], p["ubp_grid"]]
        labels = [Path(inp).stem] if inp else ["slingbag", "ubp"]
        run_metrics(cfg, args.reference or p["truth_grid"], grids, labels,
                    out or p["metrics"])
    elif cmd == "pipeline":
        for r in run_pipeline(cfg):
            print(f"{r['method']}: ssim={r['ssim']:.4f} snr={r['snr_db']:.2f} dB "
                  f"cnr={r['cnr']:.2f}")


def cli_main(argv=None):
    """Run the CLI; returns the exit status instead of raising ``SystemExit``."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    configure_threads()
    try:
        _dispatch(args)
    except (CLIError, ValueError, OSError) as exc:
        print(f"slingbag {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
