"""Flat ``section.key = value`` experiment configuration.

Blank lines and lines starting with ``#`` are ignored. Every key must appear
in :data:`SCHEMA`; values are parsed by the schema type. Lists are
comma-separated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, GhostMaskError

PIPELINES = ("standard", "noise", "misalign", "flux", "fabrication", "dose", "multiscale")


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float(text):
    t = text.strip().lower()
    if t in ("inf", "infinity", "none"):
        return math.inf
    return float(t)


def _opt_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


def _opt_int(text):
    return None if text.strip().lower() in ("", "none") else int(text)


def _opt_str(text):
    t = text.strip()
    return None if t.lower() in ("", "none") else t


def _list(item):
    def parse(text):
        return [item(p) for p in text.split(",") if p.strip()]
    return parse


# key -> (parser, default)
SCHEMA = {
    "pipeline": (str, None),
    "master_seed": (int, 0),
    "output_dir": (str, "out"),
    "mask.kind": (str, "binary"),
    "mask.width": (_opt_int, None),
    "mask.height": (_opt_int, None),
    "mask.unique": (_bool, False),
    "mask.path": (_opt_str, None),
    "grid.fov": (int, 47),
    "grid.count": (_opt_int, None),
    "grid.stride": (int, 1),
    "grid.columns": (_opt_int, None),
    "object.kind": (str, "siemens_star"),
    "object.spokes": (int, 16),
    "object.radius": (_opt_float, 21.0),
    "object.lo": (float, 0.0),
    "object.hi": (float, 1.0),
    "object.count": (int, 1),
    "object.r_min": (float, 2.0),
    "object.r_max": (_opt_float, None),
    "object.value": (float, 1.0),
    "object.path": (_opt_str, None),
    "acquisition.flux": (_float, math.inf),
    "acquisition.per_measurement_sigma": (float, 0.0),
    "acquisition.flux_drift_rel_sigma": (float, 0.0),
    "acquisition.background_rel_sigma": (float, 0.0),
    "acquisition.background_level": (float, 0.0),
    "acquisition.beam_sigma": (_opt_float, None),
    "acquisition.beam_jitter": (float, 0.0),
    "acquisition.recording": (str, "prerecorded"),
    "acquisition.pairing": (str, "single"),
    "acquisition.pair_layout": (str, "adjacent"),
    "acquisition.characterization_noise": (_bool, False),
    "acquisition.drift_window": (_opt_int, None),
    "solver.method": (str, "kaczmarz"),
    "solver.sweeps": (int, 4),
    "solver.relaxation": (float, 0.5),
    "solver.order_seed": (int, 0),
    "solver.iters": (int, 10),
    "solver.step": (_opt_float, None),
    "solver.tolerance": (float, 1e-10),
    "solver.restore_mean": (_bool, False),
    "solver.normalize": (_bool, False),
    "analysis.metrics": (_list(str), ["psf", "frc", "svd", "gradient"]),
    "analysis.psf_points": (_opt_int, None),
    "analysis.strides": (_list(int), list(range(1, 13))),
    "analysis.stride_method": (str, "power_spectrum"),
    "analysis.stride_master": (int, 600),
    "experiment.families": (_list(str), None),
    "experiment.trials": (_opt_int, None),
    "experiment.sigmas": (_list(float), [0.25, 0.5, 1.0]),
    "experiment.fluxes": (_list(_float), None),
    "experiment.n_phantoms": (int, 50),
    "experiment.seeds": (_list(int), [0, 1, 2]),
    "experiment.count": (_opt_int, None),
    "experiment.drifts": (_list(float), [0.01, 0.0]),
    "experiment.total_dose": (float, 1e5),
    "experiment.J_values": (_list(int), None),
    "experiment.sigma_m": (_list(float), [0.0, 300.0]),
    "experiment.factors": (_list(int), None),
    "fabrication.t_max": (float, 0.85),
    "fabrication.t_min": (float, 0.05),
    "fabrication.center_boost": (float, 0.08),
    "fabrication.slow_variation_rel_sigma": (float, 0.02),
}


@dataclass
class ExperimentConfig:
    """Parsed configuration. ``explicit`` holds the keys set in the file."""

    values: dict = field(default_factory=dict)
    explicit: set = field(default_factory=set)
    source: str | None = None

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def section(self, name):
        p = name + "."
        return {k[len(p):]: v for k, v in self.values.items() if k.startswith(p)}

    def resolved_text(self):
        """Every key with its effective value, in schema order."""
        lines = []
        for k in SCHEMA:
            v = self.values[k]
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            lines.append(f"{k}={'none' if v is None else v}")
        return "\n".join(lines) + "\n"


def parse_config(text, source=None):
    """Parse config text; raises :class:`ConfigError` with a line number."""
    values = {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in SCHEMA.items()}
    explicit = set()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", n)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", n)
        if key in explicit:
            raise ConfigError(f"duplicate key {key!r}", n)
        try:
            values[key] = SCHEMA[key][0](val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}", n) from None
        explicit.add(key)
    cfg = ExperimentConfig(values, explicit, source)
    validate(cfg)
    return cfg


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read(), str(path))


def validate(cfg):
    """Cross-key checks that do not depend on a file position."""
    if cfg["pipeline"] is None:
        raise ConfigError("no pipeline declared; set pipeline=<name>")
    if cfg["pipeline"] not in PIPELINES:
        raise ConfigError(f"unknown pipeline {cfg['pipeline']!r}; choose from {PIPELINES}")
    if cfg["grid.fov"] < 1 or cfg["grid.stride"] < 1:
        raise ConfigError("grid.fov and grid.stride must be >= 1")
    if cfg["pipeline"] == "multiscale":
        js, fs = cfg.get("experiment.J_values"), cfg.get("experiment.factors")
        if not js or not fs or len(js) != len(fs):
            raise ConfigError("multiscale needs experiment.J_values and experiment.factors of equal length")
    # Build the library objects once so bad combinations fail at load time.
    try:
        mask_kind(cfg)
        solver_config(cfg)
        acquisition(cfg)
        fabrication(cfg)
        if cfg["object.kind"] != "from_file":
            phantom_spec(cfg)
    except GhostMaskError as exc:
        raise ConfigError(str(exc)) from None


def mask_kind(cfg):
    from .patterns import MaskKind, preset

    name = cfg["mask.kind"]
    if name == "mura":
        return MaskKind.mura(cfg["grid.fov"])
    return preset(name)


def solver_config(cfg):
    from .recon import SolverConfig

    s = cfg.section("solver")
    return SolverConfig(s["method"], s["sweeps"], s["relaxation"], s["order_seed"], s["iters"], s["step"],
                        s["tolerance"], s["restore_mean"], s["normalize"])


def acquisition(cfg):
    from .forward import AcquisitionModel, BeamModel

    a = cfg.section("acquisition")
    beam = BeamModel(a["beam_sigma"], a["beam_jitter"]) if a["beam_sigma"] else None
    return AcquisitionModel(a["flux"], a["per_measurement_sigma"], a["flux_drift_rel_sigma"],
                            a["background_rel_sigma"], a["background_level"], beam, a["recording"],
                            a["pairing"], a["pair_layout"], a["characterization_noise"], a["drift_window"])


def fabrication(cfg):
    from .forward import FabricationModel

    f = cfg.section("fabrication")
    return FabricationModel(f["t_max"], f["t_min"], f["center_boost"], f["slow_variation_rel_sigma"])


def phantom_spec(cfg, seed=0):
    from .phantoms import PhantomSpec

    o = cfg.section("object")
    fov = cfg["grid.fov"]
    return PhantomSpec(o["kind"], fov, fov, o["lo"], o["hi"], seed, o["spokes"], o["r_min"], o["r_max"],
                       o["count"], None, o["radius"], None, None, o["value"], o["path"])
