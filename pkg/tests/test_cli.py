import numpy as np
import pytest

from ghostmask import ConfigError
from ghostmask.cli import MANIFEST, RESOLVED, main, read_manifest
from ghostmask.config import SCHEMA, parse_config
from ghostmask.io import read_grid, read_pgm, read_table, write_pgm

SMALL = """pipeline=standard
mask.kind=binary
grid.fov=12
grid.count=100
grid.columns=10
object.radius=4
solver.sweeps=2
analysis.metrics=psf,frc,svd,gradient,spectrum
"""


def write(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# ---- config ------------------------------------------------------------

def test_parse_defaults_and_resolved_text():
    cfg = parse_config("pipeline=standard\n# comment\n\ngrid.fov = 11\n")
    assert cfg["grid.fov"] == 11 and cfg["solver.relaxation"] == 0.5
    assert cfg.explicit == {"pipeline", "grid.fov"}
    text = cfg.resolved_text()
    assert len(text.splitlines()) == len(SCHEMA)
    assert "grid.fov=11" in text and "acquisition.flux=inf" in text


@pytest.mark.parametrize("text,line", [
    ("pipeline=standard\nmask.colour=red\n", 2),
    ("pipeline=standard\ngrid.fov=5\ngrid.fov=6\n", 3),
    ("pipeline=standard\n\ngrid.fov=five\n", 3),
    ("pipeline=standard\nnot a pair\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


@pytest.mark.parametrize("text", [
    "",
    "pipeline=bake\n",
    "pipeline=standard\nmask.kind=velvet\n",
    "pipeline=standard\nsolver.relaxation=2\n",
    "pipeline=multiscale\nexperiment.J_values=10,20\nexperiment.factors=2\n",
])
def test_validation_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_list_and_inf_parsing():
    cfg = parse_config("pipeline=noise\nexperiment.fluxes=inf,10,1.5\nanalysis.strides=1,2,4\n")
    assert cfg["experiment.fluxes"] == [float("inf"), 10.0, 1.5]
    assert cfg["analysis.strides"] == [1, 2, 4]


# ---- run ---------------------------------------------------------------

def test_empty_config_exits_2_without_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", write(tmp_path, ""), "--out", str(out), "--quiet"]) == 2
    assert not out.exists()


def test_unknown_key_exits_2(tmp_path, capsys):
    rc = main(["run", "--config", write(tmp_path, "pipeline=standard\nfoo=1\n"), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "line 2" in capsys.readouterr().err


def test_run_missing_config_exits_2():
    assert main(["run", "--quiet"]) == 2


def test_standard_run_outputs_and_manifest(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", write(tmp_path, SMALL), "--out", str(out), "--quiet"]) == 0
    for name in ("mask.pgm", "object.pgm", "mean_pattern.pgm", "measurements.csv", "recon.grid", "recon.pgm",
                 "psf.csv", "frc.csv", "svd.csv", "spectrum.csv", "metrics.csv", RESOLVED):
        assert (out / name).exists(), name
    status, files = read_manifest(out / MANIFEST)
    assert "status=ok" in status
    on_disk = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file() and p.name != MANIFEST}
    assert set(files) == on_disk
    metrics = dict(zip(*read_table(out / "metrics.csv").values()))
    assert metrics["psf_fwhm"] > 0 and metrics["stable_rank"] >= 1


def test_rerun_identical_across_thread_counts(tmp_path):
    cfg = write(tmp_path, SMALL + "acquisition.flux=200\nacquisition.flux_drift_rel_sigma=0.01\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "a"), "--threads", "1", "--quiet"]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "2", "--quiet"]) == 0
    assert read_manifest(tmp_path / "a" / MANIFEST) == read_manifest(tmp_path / "b" / MANIFEST)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "5", "--quiet"]) == 0
    assert read_manifest(tmp_path / "a" / MANIFEST)[1] != read_manifest(tmp_path / "c" / MANIFEST)[1]


def test_threads_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GHOSTMASK_THREADS", "1")
    assert main(["run", "--config", write(tmp_path, SMALL), "--out", str(tmp_path / "e"), "--quiet"]) == 0


def test_mura_config_psf_one_pixel(tmp_path):
    text = ("pipeline=standard\nmask.kind=mura\ngrid.fov=47\nsolver.method=adjoint_mean_corrected\n"
            "analysis.metrics=psf\n")
    out = tmp_path / "m"
    assert main(["run", "--config", write(tmp_path, text), "--out", str(out), "--quiet"]) == 0
    header = (out / "psf.csv").read_text().splitlines()[0]
    fwhm = float(header.split("fwhm=")[1].split()[0])
    assert fwhm == pytest.approx(1.0, abs=0.01)


def test_stage_error_exits_3_and_marks_manifest(tmp_path):
    write_pgm(tmp_path / "small.pgm", np.zeros((5, 5)))
    text = SMALL + f"object.kind=from_file\nobject.path={tmp_path / 'small.pgm'}\n"
    out = tmp_path / "f"
    assert main(["run", "--config", write(tmp_path, text), "--out", str(out), "--quiet"]) == 3
    status, files = read_manifest(out / MANIFEST)
    assert "status=failed" in status and "stage=object" in status
    assert "mask.pgm" in files and RESOLVED in files


# ---- multiscale --------------------------------------------------------

MULTI = """pipeline=multiscale
mask.kind=fractal
mask.unique=true
grid.fov=12
object.radius=4
solver.sweeps=2
"""


def test_multiscale_degenerate_equals_plain_run(tmp_path):
    plain = SMALL.replace("analysis.metrics=psf,frc,svd,gradient,spectrum", "analysis.metrics=gradient")
    plain = plain.replace("mask.kind=binary", "mask.kind=fractal\nmask.unique=true")
    assert main(["run", "--config", write(tmp_path, plain, "p.cfg"), "--out", str(tmp_path / "p"),
                 "--quiet"]) == 0
    multi = MULTI + "experiment.J_values=100\nexperiment.factors=1\n"
    assert main(["run", "--config", write(tmp_path, multi, "m.cfg"), "--out", str(tmp_path / "m"),
                 "--quiet"]) == 0
    a, _ = read_grid(tmp_path / "p" / "recon.grid")
    b, _ = read_grid(tmp_path / "m" / "stage_J100_bin1.grid")
    np.testing.assert_array_equal(a, b)


def test_multiscale_stage_nmse_falls(tmp_path):
    multi = MULTI.replace("grid.fov=12", "grid.fov=24").replace("object.radius=4", "object.radius=9.5")
    multi = multi.replace("solver.sweeps=2", "solver.sweeps=4")
    multi += ("acquisition.flux=8\nsolver.relaxation=0.25\n"
              "experiment.J_values=150,400,1200\nexperiment.factors=4,2,1\n")
    out = tmp_path / "ms"
    assert main(["run", "--config", write(tmp_path, multi), "--out", str(out), "--quiet"]) == 0
    table = read_table(out / "multiscale.csv")
    nm = table["nmse_full"]
    assert nm[0] > nm[1] > nm[2]
    assert len(table["nmse"]) == 3


def test_multiscale_misaligned_stages_exit_2(tmp_path):
    bad = MULTI + "experiment.J_values=100,400\nexperiment.factors=4\n"
    assert main(["run", "--config", write(tmp_path, bad), "--out", str(tmp_path / "x"), "--quiet"]) == 2
    inc = MULTI + "experiment.J_values=400,100\nexperiment.factors=2,1\n"
    assert main(["run", "--config", write(tmp_path, inc), "--out", str(tmp_path / "y"), "--quiet"]) == 2


# ---- subcommands -------------------------------------------------------

def test_subcommand_chain(tmp_path):
    d = str(tmp_path)
    assert main(["gen-mask", "--kind", "mura", "--p", "11", "--out", f"{d}/mask.pgm", "--quiet"]) == 0
    assert main(["extract", "--mask", f"{d}/mask.pgm", "--fov", "11", "--out", f"{d}/pats", "--quiet"]) == 0
    assert main(["phantom", "--size", "11", "--radius", "4", "--out", f"{d}/obj.pgm", "--quiet"]) == 0
    assert main(["measure", "--patterns", f"{d}/pats/index.csv", "--object", f"{d}/obj.pgm",
                 "--out", f"{d}/m.csv", "--quiet"]) == 0
    assert main(["recon", "--patterns", f"{d}/pats/index.csv", "--buckets", f"{d}/m.csv",
                 "--method", "pinv", "--out", f"{d}/rec", "--quiet"]) == 0
    img, _ = read_grid(f"{d}/rec.grid")
    obj, _ = read_pgm(f"{d}/obj.pgm")
    assert np.corrcoef(img.ravel(), obj.ravel())[0, 1] > 0.99
    for what, extra in [("psf", ["--patterns", f"{d}/pats/index.csv", "--method", "adjoint_mean_corrected"]),
                        ("svd", ["--patterns", f"{d}/pats/index.csv"]),
                        ("gradient", ["--patterns", f"{d}/pats/index.csv"]),
                        ("frc", ["--image", f"{d}/rec.pgm", "--reference", f"{d}/obj.pgm"]),
                        ("spectrum", ["--image", f"{d}/obj.pgm"])]:
        assert main(["analyze", what, *extra, "--out", f"{d}/{what}.csv", "--quiet"]) == 0, what
        assert (tmp_path / f"{what}.csv").exists()


def test_extract_complement_and_bin(tmp_path):
    d = str(tmp_path)
    assert main(["gen-mask", "--kind", "binary", "--width", "20", "--height", "20", "--out", f"{d}/b.pgm",
                 "--quiet"]) == 0
    assert main(["extract", "--mask", f"{d}/b.pgm", "--fov", "8", "--count", "4", "--complement", "--bin", "2",
                 "--out", f"{d}/p", "--quiet"]) == 0
    first, _ = read_pgm(f"{d}/p/pattern_0.pgm")
    mask, _ = read_pgm(f"{d}/b.pgm")
    expect = (1 - mask[:8, :8]).reshape(4, 2, 4, 2).mean(axis=(1, 3))
    np.testing.assert_allclose(first, expect, atol=1e-4)


def test_analyze_missing_input_exits_2(tmp_path):
    assert main(["analyze", "psf", "--quiet"]) == 2
    assert main(["analyze", "frc", "--image", "x.pgm", "--quiet"]) == 2
    assert main(["recon", "--patterns", str(tmp_path / "none.csv"), "--buckets", "b", "--quiet"]) == 2


def test_bad_subcommand_exits_2():
    assert main(["bake"]) == 2
