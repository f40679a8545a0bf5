"""File formats: 16-bit PGM with sidecar metadata, float grids and CSV."""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError

MAXVAL = 65535


def write_pgm(path, image, meta=None, normalize=False):
    """Write a 16-bit binary PGM storing ``round(t * 65535)``.

    With ``normalize`` the image is first stretched to [0, 1] (for viewing
    unbounded reconstructions). ``meta`` goes to ``<path>.txt`` as key=value
    lines.
    """
    a = np.asarray(image, dtype=float)
    if a.ndim != 2:
        raise DimensionError("PGM images must be 2D")
    if normalize:
        lo, hi = a.min(), a.max()
        a = (a - lo) / (hi - lo) if hi > lo else np.zeros_like(a)
    data = np.round(np.clip(a, 0, 1) * MAXVAL).astype(">u2")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{a.shape[1]} {a.shape[0]}\n{MAXVAL}\n".encode("ascii"))
        fh.write(data.tobytes())
    if meta is not None:
        write_sidecar(sidecar_path(path), meta)
    return path


def sidecar_path(path):
    return Path(str(path) + ".txt")


def _tokens(fh):
    """Header tokens of a PNM file, skipping comments."""
    out = []
    while len(out) < 4:
        line = fh.readline()
        if not line:
            raise DimensionError("truncated PGM header")
        line = line.split(b"#", 1)[0]
        out.extend(line.split())
    return out


def read_pgm(path):
    """Return ``(image in [0, 1], sidecar dict or {})``."""
    with open(path, "rb") as fh:
        magic, w, h, maxval = _tokens(fh)
        if magic != b"P5":
            raise DimensionError(f"{path} is not a binary PGM")
        w, h, maxval = int(w), int(h), int(maxval)
        dtype = ">u2" if maxval > 255 else "u1"
        data = np.frombuffer(fh.read(), dtype=dtype, count=w * h)
    img = data.reshape(h, w).astype(float) / maxval
    side = sidecar_path(path)
    meta = read_sidecar(side) if side.exists() else {}
    return img, meta


def _fmt(v):
    if isinstance(v, (dict, list, tuple, bool)) or v is None:
        return json.dumps(v, default=_jsonable, sort_keys=True)
    return str(v)


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def write_sidecar(path, meta):
    with open(path, "w") as fh:
        for k in sorted(meta):
            fh.write(f"{k}={_fmt(meta[k])}\n")


def read_sidecar(path):
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"expected key=value, got {line!r}", n)
            k, v = line.split("=", 1)
            try:
                out[k.strip()] = json.loads(v)
            except json.JSONDecodeError:
                out[k.strip()] = v.strip()
    return out


def write_pgm_stack(directory, pset, prefix="pattern"):
    """One PGM per pattern plus ``index.csv`` listing file names and offsets."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = len(str(max(len(pset) - 1, 0)))
    rows = []
    for j, pat in enumerate(pset.patterns):
        name = f"{prefix}_{j:0{width}d}.pgm"
        write_pgm(directory / name, pat)
        rows.append((j, name, int(pset.offsets[j][0]), int(pset.offsets[j][1])))
    with open(directory / "index.csv", "w") as fh:
        fh.write(f"# source={_fmt(pset.source)}\n")
        fh.write("j,file,x,y\n")
        for r in rows:
            fh.write(",".join(map(str, r)) + "\n")
    return directory / "index.csv"


def read_pgm_stack(index_path):
    from .patterns import PatternSet

    index_path = Path(index_path)
    names, offsets = [], []
    with open(index_path) as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("j,"):
                continue
            j, name, x, y = line.strip().split(",")
            names.append(name)
            offsets.append((int(x), int(y)))
    pats = np.stack([read_pgm(index_path.parent / n)[0] for n in names])
    return PatternSet(pats, np.array(offsets))


def write_measurements(path, record):
    cols = np.column_stack([np.arange(len(record)), record.buckets, record.true_drift])
    header = (f"# measurements seed={record.seed} flux={record.flux} pairing={record.pairing} "
              f"layout={record.pair_layout}\nj,bucket,flux_factor,background,beam_dx,beam_dy")
    np.savetxt(path, cols, delimiter=",", header=header, comments="", fmt="%.17g")
    return Path(path)


def read_measurements(path):
    """Return ``(buckets, drift)`` arrays from a measurement CSV."""
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    return data[:, 1], data[:, 2:]


def write_grid(path, image, meta=None):
    """Float32 little-endian grid after a text header ending in ``end_header``."""
    a = np.asarray(image, dtype="<f4")
    meta = dict(meta or {})
    lines = ["ghostmask-grid", f"width={a.shape[1]}", f"height={a.shape[0]}"]
    lines += [f"{k}={_fmt(v)}" for k, v in sorted(meta.items())]
    lines.append("end_header")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        fh.write(a.tobytes())
    return Path(path)


def read_grid(path):
    with open(path, "rb") as fh:
        meta = {}
        while True:
            line = fh.readline()
            if not line:
                raise DimensionError("missing end_header")
            line = line.decode("ascii").strip()
            if line == "end_header":
                break
            if "=" in line:
                k, v = line.split("=", 1)
                meta[k] = v
        w, h = int(meta.pop("width")), int(meta.pop("height"))
        data = np.frombuffer(fh.read(), dtype="<f4", count=w * h)
    return data.reshape(h, w).astype(float), meta


def write_table(path, columns, header_comment, gnuplot=False):
    """CSV with a '#'-prefixed comment line and a column-name row.

    ``columns`` maps names to equal-length sequences. With ``gnuplot`` a
    whitespace-separated ``.dat`` of the first two columns is also written.
    """
    names = list(columns)
    rows = zip(*(columns[n] for n in names))
    with open(path, "w") as fh:
        fh.write(f"# {header_comment}\n")
        fh.write(",".join(names) + "\n")
        for r in rows:
            fh.write(",".join(_cell(v) for v in r) + "\n")
    if gnuplot and len(names) >= 2:
        dat = Path(path).with_suffix(".dat")
        with open(dat, "w") as fh:
            fh.write(f"# {header_comment}\n# {names[0]} {names[1]}\n")
            for a, b in zip(columns[names[0]], columns[names[1]]):
                fh.write(f"{_cell(a)} {_cell(b)}\n")
    return Path(path)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def read_table(path):
    """Inverse of :func:`write_table`; numeric cells become floats."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    names = lines[0].split(",")
    cols = {n: [] for n in names}
    for ln in lines[1:]:
        for n, v in zip(names, ln.split(",")):
            try:
                cols[n].append(float(v))
            except ValueError:
                cols[n].append(v)
    return cols


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return Path(path)


def write_rows(path, rows, header_comment, gnuplot=False):
    """:func:`write_table` for a list of same-keyed dicts."""
    names = list(rows[0]) if rows else []
    return write_table(path, {n: [r[n] for r in rows] for n in names}, header_comment, gnuplot)
