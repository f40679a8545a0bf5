"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import _seed, config as cfgmod, experiments as ex, io
from .analysis import (binning_report, compute_psf, frc, frc_resolution, gradient_norm, image_error,
                       perturbation_report, power_spectrum, stride_scan, svd_metrics)
from .errors import ConfigError, GhostMaskError, ParameterError
from .forward import AcquisitionModel, MisalignmentModel, measure, perturb_alignment
from .patterns import GridSpec, MaskKind, MasterMask, bin as bin_data, complement, extract_pattern_set, \
    gen_master, gen_mura, preset, unique_pattern_set
from .phantoms import PHANTOM_KINDS, PhantomSpec, make_phantom
from .recon import METHODS, SolverConfig, reconstruct

log = logging.getLogger("ghostmask")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3
MANIFEST = "manifest.csv"
RESOLVED = "resolved_config.txt"


class StageError(Exception):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage, exc):
        super().__init__(f"stage {stage}: {exc}")
        self.stage = stage
        self.cause = exc


# ---------------------------------------------------------------- manifest

def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, status="ok", note=""):
    """List every file under ``out_dir`` with its size and sha256."""
    out_dir = Path(out_dir)
    files = sorted(p for p in out_dir.rglob("*") if p.is_file() and p.name != MANIFEST)
    with open(out_dir / MANIFEST, "w") as fh:
        fh.write(f"# manifest status={status}{' ' + note if note else ''}\n")
        fh.write("file,bytes,sha256\n")
        for p in files:
            fh.write(f"{p.relative_to(out_dir).as_posix()},{p.stat().st_size},{sha256(p)}\n")
    return out_dir / MANIFEST


def read_manifest(path):
    with open(path) as fh:
        status = fh.readline().strip()
        fh.readline()
        rows = [ln.strip().split(",") for ln in fh if ln.strip()]
    return status, {r[0]: r[2] for r in rows}


# ---------------------------------------------------------------- builders

def _stage(name, fn, *args, **kw):
    log.info("stage %s", name)
    try:
        return fn(*args, **kw)
    except GhostMaskError as exc:
        raise StageError(name, exc) from exc


def _grid(cfg):
    fov = cfg["grid.fov"]
    return GridSpec(fov, fov, cfg.get("grid.count", fov * fov), cfg["grid.stride"], cfg["grid.stride"],
                    cfg.get("grid.columns", fov))


def _master(cfg, seed, grid):
    if cfg["mask.path"]:
        vals, _ = io.read_pgm(cfg["mask.path"])
        return MasterMask(vals, MaskKind("binary"), 0)
    kind = cfgmod.mask_kind(cfg)
    if kind.name == "mura":
        return gen_mura(kind.p)
    w, h = grid.required_master()
    return gen_master(kind, cfg.get("mask.width", w), cfg.get("mask.height", h), seed)


def _patterns(cfg, seed):
    grid = _grid(cfg)
    if cfg["mask.unique"]:
        return None, unique_pattern_set(cfgmod.mask_kind(cfg), grid.fov_w, grid.fov_h, grid.count, seed)
    master = _master(cfg, seed, grid)
    return master, extract_pattern_set(master, grid)


def _object(cfg, seed):
    return make_phantom(cfgmod.phantom_spec(cfg, seed))


def _write_image(out, name, img, meta=None):
    io.write_grid(out / f"{name}.grid", img, meta)
    io.write_pgm(out / f"{name}.pgm", img, normalize=True)


def _write_tables(out, result):
    for name, rows in result.tables.items():
        io.write_rows(out / f"{name}.csv", rows, f"{result.name} {name} {_fmt(result.summary)}", gnuplot=True)
    for name, img in result.images.items():
        _write_image(out, name, img)


def _fmt(d):
    return " ".join(f"{k}={v}" for k, v in d.items()).replace("\n", " ")


# ---------------------------------------------------------------- pipelines

def run_standard(cfg, out, seed):
    """generate -> extract -> phantom -> measure -> reconstruct -> analyze."""
    master, ps = _stage("patterns", _patterns, cfg, _seed.derive_seed(seed, "mask"))
    if master is not None:
        io.write_pgm(out / "mask.pgm", master.values, {"source": master.descriptor()})
    io.write_pgm(out / "mean_pattern.pgm", ps.mean_pattern)
    obj = _stage("object", _object, cfg, _seed.derive_seed(seed, "phantom"))
    io.write_pgm(out / "object.pgm", obj)
    acq = cfgmod.acquisition(cfg)
    solver = cfgmod.solver_config(cfg)
    rec = _stage("measure", measure, ps, obj, acq, _seed.derive_seed(seed, "measure"))
    io.write_measurements(out / "measurements.csv", rec)
    if acq.pairing == "pos_neg_pairs":
        from .recon import recon_differential

        pos, neg, bp, bn = rec.split_pairs()
        img = _stage("recon", recon_differential, pos, neg, bp / rec.flux, bn / rec.flux, solver)
    else:
        img = _stage("recon", reconstruct, rec.recorded_patterns, rec.normalized_buckets, solver)
    _write_image(out, "recon", img.values, img.method)
    metrics = {"nmse": image_error(img.values, obj, "nmse"), "rmse": image_error(img.values, obj, "rmse")}
    for m in cfg["analysis.metrics"]:
        if m == "psf":
            r = _stage("psf", compute_psf, ps, acq, solver, cfg["analysis.psf_points"],
                       _seed.derive_seed(seed, "psf"))
            r.to_csv(out / "psf.csv")
            metrics["psf_fwhm"] = r.fwhm
        elif m == "frc":
            c = _stage("frc", frc, img.values, obj)
            c.to_csv(out / "frc.csv")
            metrics["frc_two_sigma_px"] = frc_resolution(c, "two_sigma")
            metrics["frc_one_bit_px"] = frc_resolution(c, "one_bit")
        elif m == "svd":
            r = _stage("svd", svd_metrics, ps)
            r.to_csv(out / "svd.csv")
            metrics["stable_rank"] = r.stable_rank
            metrics["condition_number"] = r.condition_number
        elif m == "gradient":
            metrics["gradient_norm"] = gradient_norm(ps)
        elif m == "spectrum":
            _stage("spectrum", power_spectrum, ps.patterns).to_csv(out / "spectrum.csv")
        elif m == "stride":
            side = cfg["analysis.stride_master"]
            sm = master if master is not None and master.width >= side else \
                gen_master(cfgmod.mask_kind(cfg), side, side, _seed.derive_seed(seed, "stride"))
            c = _stage("stride", stride_scan, sm, cfg["grid.fov"], cfg["analysis.strides"],
                       cfg["analysis.stride_method"], obj=obj, seed=_seed.derive_seed(seed, "stride"))
            c.to_csv(out / "stride.csv")
            metrics["recommended_stride"] = c.recommended
        else:
            raise StageError("analysis", ParameterError(f"unknown metric {m!r}"))
    io.write_table(out / "metrics.csv", {"metric": list(metrics), "value": list(metrics.values())},
                   f"standard pipeline solver={solver.describe()}")
    return metrics


def _families(cfg, default):
    return tuple(cfg.get("experiment.families", default))


def run_experiment(name, cfg, out, seed):
    solver = cfgmod.solver_config(cfg) if "solver.method" in cfg.explicit else None
    acq = cfgmod.acquisition(cfg)
    obj = _object(cfg, _seed.derive_seed(seed, "phantom"))
    if name == "misalign":
        res = ex.misalignment_experiment(_families(cfg, ex.MISALIGN_FAMILIES), cfg["experiment.sigmas"],
                                         cfg.get("experiment.trials", 100), seed, obj, solver,
                                         cfg.get("experiment.count", obj.size))
    elif name == "flux":
        res = ex.flux_experiment(cfg.get("experiment.count", 6903), acq.flux if math.isfinite(acq.flux) else 1000.0,
                                 cfg["experiment.drifts"], cfg.get("experiment.trials", 10), seed, obj, solver,
                                 drift_window=acq.drift_window)
    elif name == "fabrication":
        res = ex.fabrication_experiment(cfgmod.fabrication(cfg), acq.flux, cfg.get("experiment.trials", 3), seed,
                                        obj, solver, cfg.get("experiment.count", 4418))
    elif name == "noise":
        res = ex.noise_experiment(_families(cfg, ex.NOISE_FAMILIES), cfg.get("experiment.fluxes"),
                                  cfg["experiment.n_phantoms"], cfg["experiment.seeds"], solver, cfg["grid.fov"])
    elif name == "dose":
        res = ex.dose_experiment(cfg["experiment.total_dose"],
                                 cfg.get("experiment.J_values", (256, 512, 1024, 2048, 4096, 8192, 16384)),
                                 cfg["experiment.sigma_m"], cfg.get("experiment.trials", 10), seed, obj, solver,
                                 cfg["mask.kind"])
    else:
        js, fs = cfg["experiment.J_values"], cfg["experiment.factors"]
        ex.multiscale_stages(js, fs)
        cfgd = dict(cfg.values, **{"grid.count": max(js)})
        _, ps = _patterns(cfgmod.ExperimentConfig(cfgd, cfg.explicit), _seed.derive_seed(seed, "mask"))
        res = ex.multiscale_experiment(ps, obj, js, fs, acq, _seed.derive_seed(seed, "measure"),
                                       solver or cfgmod.solver_config(cfg))
    _write_tables(out, res)
    return res


def execute(cfg, out_dir, seed=None):
    """Run the configured pipeline into ``out_dir`` and write the manifest.

    On a stage error the partial outputs stay and the manifest is marked
    failed before the error propagates.
    """
    seed = cfg["master_seed"] if seed is None else seed
    cfg.values["master_seed"] = seed
    out = io.ensure_dir(out_dir)
    (out / RESOLVED).write_text(cfg.resolved_text())
    try:
        if cfg["pipeline"] == "standard":
            result = run_standard(cfg, out, seed)
        else:
            result = _stage(cfg["pipeline"], run_experiment, cfg["pipeline"], cfg, out, seed)
    except StageError as exc:
        write_manifest(out, "failed", f"stage={exc.stage}")
        raise
    except Exception as exc:
        write_manifest(out, "failed", f"error={type(exc).__name__}")
        raise
    write_manifest(out)
    return result


# ---------------------------------------------------------------- subcommands

def _solver_from_args(a):
    return SolverConfig(a.method, a.sweeps, a.relaxation, a.order_seed, a.iters, None, a.tolerance,
                        a.restore_mean, a.normalize)


def _acq_from_args(a):
    return AcquisitionModel(a.flux, a.per_measurement_sigma, a.drift, a.background_sigma, a.background,
                            pairing=a.pairing, pair_layout=a.pair_layout)


def _out(a, default):
    return Path(a.out or default)


def cmd_gen_mask(a):
    if a.kind == "mura":
        m = gen_mura(a.p)
    else:
        m = gen_master(preset(a.kind), a.width, a.height, a.seed)
    out = _out(a, "mask.pgm")
    io.write_pgm(out, m.values, {"source": m.descriptor(), "periodic": m.periodic})
    return out


def cmd_extract(a):
    vals, meta = io.read_pgm(a.mask)
    src = meta.get("source") if isinstance(meta.get("source"), dict) else {}
    periodic = meta.get("periodic") is True
    if periodic:
        kind = MaskKind.mura(int(src["params"]["p"]))
    else:
        kind = MaskKind("binary") if np.isin(vals, (0, 1)).all() else MaskKind("uniform")
    master = MasterMask(vals, kind, src.get("seed", 0), periodic)
    ps = extract_pattern_set(master, GridSpec.square(a.fov, a.count, a.stride, a.columns))
    if a.complement:
        ps = complement(ps)
    if a.bin > 1:
        ps = bin_data(ps, a.bin)
    return io.write_pgm_stack(_out(a, "patterns"), ps)


def cmd_phantom(a):
    spec = PhantomSpec(a.kind, a.size, a.size, a.lo, a.hi, a.seed, a.spokes, a.r_min, a.r_max, a.count,
                       None, a.radius, path=a.path)
    out = _out(a, "object.pgm")
    io.write_pgm(out, make_phantom(spec), {"kind": a.kind, "seed": a.seed})
    return out


def cmd_measure(a):
    ps = io.read_pgm_stack(a.patterns)
    obj, _ = io.read_pgm(a.object)
    rec = measure(ps, obj, _acq_from_args(a), a.seed)
    return io.write_measurements(_out(a, "measurements.csv"), rec)


def _normalized(a, buckets):
    return buckets / a.flux if math.isfinite(a.flux) else buckets


def cmd_recon(a):
    ps = io.read_pgm_stack(a.patterns)
    b, _ = io.read_measurements(a.buckets)
    img = reconstruct(ps, _normalized(a, b), _solver_from_args(a))
    out = _out(a, "recon")
    _write_image(out.parent, out.name, img.values, img.method)
    return out


def cmd_analyze(a):
    out = _out(a, f"{a.what}.csv")
    if a.what in ("psf", "svd", "gradient", "bound"):
        ps = io.read_pgm_stack(a.patterns)
    if a.what == "psf":
        compute_psf(ps, _acq_from_args(a), _solver_from_args(a), a.sample_points, a.seed).to_csv(out)
    elif a.what == "svd":
        svd_metrics(ps).to_csv(out)
    elif a.what == "gradient":
        io.write_table(out, {"gradient_norm": [gradient_norm(ps)]}, f"gradient patterns={a.patterns}")
    elif a.what == "frc":
        x, _ = io.read_pgm(a.image)
        y, _ = io.read_pgm(a.reference)
        frc(x, y).to_csv(out)
    elif a.what == "spectrum":
        x, _ = io.read_pgm(a.image)
        power_spectrum(x).to_csv(out)
    elif a.what == "binning":
        x, _ = io.read_pgm(a.image)
        binning_report(x, a.factor).to_csv(out)
    elif a.what == "stride":
        vals, _ = io.read_pgm(a.mask)
        obj = io.read_pgm(a.object)[0] if a.object else None
        stride_scan(MasterMask(vals, MaskKind("uniform")), a.fov, a.strides, a.stride_method, obj=obj,
                    seed=a.seed).to_csv(out)
    elif a.what == "bound":
        obj, _ = io.read_pgm(a.object)
        b = measure(ps, obj).buckets
        rows = []
        for t in range(a.trials):
            shifted = perturb_alignment(ps, MisalignmentModel(a.sigma), _seed.derive_seed(a.seed, "bound", t))
            rows.append(perturbation_report(ps, shifted, b, b, obj, mean_corrected=True).as_dict())
        io.write_rows(out, rows, f"bound sigma={a.sigma} trials={a.trials}")
    return out


def cmd_experiment(a):
    text = Path(a.config).read_text() if a.config else ""
    text = "\n".join(ln for ln in text.splitlines() if not ln.strip().startswith("pipeline"))
    cfg = cfgmod.parse_config(f"pipeline={a.name}\n{text}", a.config)
    return _run_cfg(cfg, a)


def cmd_run(a):
    if not a.config:
        raise ConfigError("run needs --config")
    return _run_cfg(cfgmod.load_config(a.config), a)


def _run_cfg(cfg, a):
    out = Path(a.out or cfg["output_dir"])
    execute(cfg, out, a.seed)
    return out / MANIFEST


# ---------------------------------------------------------------- parser

def _common(p, out_help="output path"):
    g = p.add_argument_group("common")
    g.add_argument("--config", help="experiment config file")
    g.add_argument("--seed", type=int, default=None, help="overrides master_seed")
    g.add_argument("--out", help=out_help)
    g.add_argument("--threads", type=int, default=None, help="BLAS threads (default GHOSTMASK_THREADS)")
    g.add_argument("--quiet", action="store_true")


def _solver_args(p):
    p.add_argument("--method", choices=METHODS, default="kaczmarz")
    p.add_argument("--sweeps", type=int, default=4)
    p.add_argument("--relaxation", type=float, default=0.5)
    p.add_argument("--order-seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--restore-mean", action="store_true")
    p.add_argument("--normalize", action="store_true")


def _acq_args(p):
    p.add_argument("--flux", type=float, default=math.inf)
    p.add_argument("--per-measurement-sigma", type=float, default=0.0)
    p.add_argument("--drift", type=float, default=0.0, help="relative flux drift std")
    p.add_argument("--background", type=float, default=0.0)
    p.add_argument("--background-sigma", type=float, default=0.0)
    p.add_argument("--pairing", choices=("single", "pos_neg_pairs"), default="single")
    p.add_argument("--pair-layout", choices=("adjacent", "separated"), default="adjacent")


def build_parser():
    ap = argparse.ArgumentParser(prog="ghostmask", description="Ghost-imaging mask toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-mask", help="generate a master mask")
    p.add_argument("--kind", default="binary", help="preset name or 'mura'")
    p.add_argument("--width", type=int, default=93)
    p.add_argument("--height", type=int, default=93)
    p.add_argument("--p", type=int, default=47, help="MURA prime")
    _common(p)
    p.set_defaults(func=cmd_gen_mask)

    p = sub.add_parser("extract", help="cut a pattern set from a mask")
    p.add_argument("--mask", required=True)
    p.add_argument("--fov", type=int, default=47)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--columns", type=int, default=None)
    p.add_argument("--complement", action="store_true")
    p.add_argument("--bin", type=int, default=1)
    _common(p, "output directory")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("phantom", help="render a test object")
    p.add_argument("--kind", choices=PHANTOM_KINDS, default="siemens_star")
    p.add_argument("--size", type=int, default=47)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("--spokes", type=int, default=16)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--r-min", type=float, default=2.0)
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--path", default=None)
    _common(p)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("measure", help="simulate bucket values")
    p.add_argument("--patterns", required=True, help="index.csv of a pattern stack")
    p.add_argument("--object", required=True)
    _acq_args(p)
    _common(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("recon", help="reconstruct an image")
    p.add_argument("--patterns", required=True)
    p.add_argument("--buckets", required=True)
    p.add_argument("--flux", type=float, default=math.inf, help="divide buckets by this flux")
    _solver_args(p)
    _common(p, "output stem (writes .pgm and .grid)")
    p.set_defaults(func=cmd_recon)

    p = sub.add_parser("analyze", help="compute one metric")
    p.add_argument("what", choices=("psf", "frc", "spectrum", "svd", "stride", "gradient", "bound", "binning"))
    p.add_argument("--patterns")
    p.add_argument("--image")
    p.add_argument("--reference")
    p.add_argument("--mask")
    p.add_argument("--object")
    p.add_argument("--fov", type=int, default=47)
    p.add_argument("--strides", type=lambda s: [int(x) for x in s.split(",")], default=list(range(1, 13)))
    p.add_argument("--stride-method", default="power_spectrum")
    p.add_argument("--sample-points", type=int, default=None)
    p.add_argument("--sigma", type=float, default=0.5, help="misalignment std for 'bound'")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--factor", type=int, default=2)
    _solver_args(p)
    _acq_args(p)
    _common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("experiment", help="run a named experiment pipeline")
    p.add_argument("name", choices=[n for n in cfgmod.PIPELINES if n != "standard"])
    _common(p, "output directory")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("run", help="run the pipeline declared in --config")
    _common(p, "output directory")
    p.set_defaults(func=cmd_run)
    return ap


def _required(a):
    need = {"psf": "patterns", "svd": "patterns", "gradient": "patterns", "bound": "patterns",
            "frc": "image", "spectrum": "image", "binning": "image", "stride": "mask"}
    if a.command == "analyze":
        if getattr(a, need[a.what]) is None:
            raise ParameterError(f"analyze {a.what} needs --{need[a.what]}")
        if a.what == "frc" and a.reference is None:
            raise ParameterError("analyze frc needs --reference")
        if a.what == "bound" and a.object is None:
            raise ParameterError("analyze bound needs --object")


def main(argv=None):
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.WARNING if a.quiet else logging.INFO, format="%(message)s")
    if a.seed is None and a.command not in ("run", "experiment"):
        a.seed = 0
    threads = a.threads or int(os.environ.get("GHOSTMASK_THREADS", "0") or 0) or None
    try:
        _required(a)
        with threadpool_limits(threads):
            out = a.func(a)
    except (ConfigError, ParameterError, FileNotFoundError) as exc:
        print(f"ghostmask: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as exc:
        code = EXIT_VALIDATION if isinstance(exc.cause, (ConfigError, ParameterError)) else EXIT_RUNTIME
        print(f"ghostmask: error: {exc}", file=sys.stderr)
        return code
    except Exception as exc:
        print(f"ghostmask: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not a.quiet:
        print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
