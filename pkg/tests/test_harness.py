import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from loggas import archive, cli, config, svg
from loggas.errors import ConfigError, DomainError
from loggas.harness import run_experiment
from loggas.samplers import tridiag_archive

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def cfg_for(tmp_path, kind, name="out", **sections):
    over = {"experiment": kind, "seed": 7, "threads": 1, "out": str(tmp_path / name)}
    over.update(sections)
    return config.load_config(None, over, environ={})


# ----------------------------------------------------------------- config


def test_defaults_round_trip_through_toml():
    text = config.dumps(config.DEFAULTS)
    data = tomllib.loads(text)
    assert "seed" not in data and "# seed = <required>" in text
    data["seed"] = 1
    merged = config._merge(__import__("copy").deepcopy(config.DEFAULTS), data)
    assert config.validate(merged)["sample"] == config.DEFAULTS["sample"]


def test_seed_is_mandatory():
    with pytest.raises(ConfigError, match="seed"):
        config.load_config(None, {"experiment": "sample"}, environ={})
    cfg = config.load_config(None, {"experiment": "acceptance-suite"}, environ={})
    assert cfg["seed"] is None


def test_precedence_file_env_flags(tmp_path):
    f = tmp_path / "c.toml"
    f.write_text('seed = 1\n[sample]\nN = 10\nbeta = 1.0\n')
    env = {"LOGGAS_SAMPLE__N": "20", "LOGGAS_SEED": "2", "LOGGAS_DISABLE_NUMBA": "1"}
    cfg = config.load_config(str(f), {"seed": 3}, environ=env)
    assert cfg["sample"]["N"] == 20 and cfg["sample"]["beta"] == 1.0 and cfg["seed"] == 3
    cfg = config.load_config(str(f), None, environ={"LOGGAS_SOBOLEV__K": "[16, 32]"})
    assert cfg["sobolev"]["K"] == [16, 32] and cfg["seed"] == 1


@pytest.mark.parametrize("over, field", [
    ({"sample": {"N": 0}}, "sample.N"),
    ({"sample": {"sampler": "gibbs"}}, "sample.sampler"),
    ({"bogus": 1}, "bogus"),
    ({"sample": {"beta": "two"}}, "sample.beta"),
    ({"sobolev": {"K": [1]}}, r"sobolev.K\[0\]"),
    ({"stats": {"z": [1.0, 0.0]}}, "stats.z"),
    ({"experiment": "fit"}, "experiment"),
])
def test_field_level_errors(over, field):
    with pytest.raises(ConfigError, match=field):
        config.load_config(None, dict({"seed": 1}, **over), environ={})


def test_env_unknown_section():
    with pytest.raises(ConfigError):
        config.env_overrides({"LOGGAS_NOPE__X": "1"})


def test_missing_or_broken_config_file(tmp_path):
    with pytest.raises(ConfigError):
        config.load_config(str(tmp_path / "none.toml"))
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = = 1\n")
    with pytest.raises(ConfigError):
        config.load_config(str(bad), environ={})


# ----------------------------------------------------------------- persistence


def test_archive_round_trip(tmp_path):
    a = tridiag_archive(12, 2.0, 9, seed=5)
    archive.write_archive(tmp_path / "a.bin", a)
    b = archive.read_archive(tmp_path / "a.bin")
    np.testing.assert_array_equal(a.samples, b.samples)
    assert (b.N, b.beta, b.sampler_id, b.seed, b.indices) == (12, 2.0, "tridiag", 5, None)
    s = tridiag_archive(12, 1.0, 4, seed=6, select=[1, 12])
    archive.write_archive(tmp_path / "s.bin", s)
    r = archive.read_archive(tmp_path / "s.bin")
    np.testing.assert_array_equal(r.indices, [1, 12])
    np.testing.assert_array_equal(r.column(12), s.column(12))


def test_archive_rejects_damage(tmp_path):
    a = tridiag_archive(4, 2.0, 3, seed=5)
    p = tmp_path / "a.bin"
    archive.write_archive(p, a)
    raw = p.read_bytes()
    (tmp_path / "t.bin").write_bytes(raw[:-8])
    (tmp_path / "m.bin").write_bytes(b"XXXX" + raw[4:])
    for name in ("t.bin", "m.bin"):
        with pytest.raises(DomainError):
            archive.read_archive(tmp_path / name)


def test_csv_round_trip_is_exact(tmp_path):
    rows = [(0.1, 1e-300, -2.5), (1 / 3, 7.0, 123456789.123)]
    archive.write_csv(tmp_path / "x.csv", ["a", "b", "c"], rows)
    header, data = archive.read_csv(tmp_path / "x.csv")
    assert header == ["a", "b", "c"]
    assert [[float(v) for v in r] for r in data] == [list(r) for r in rows]


def test_svg_is_well_formed():
    x = np.linspace(1, 10, 20)
    docs = [svg.line_plot([("a", x, x**2)], title="t", xlabel="x", ylabel="y", logx=True, logy=True),
            svg.scatter_plot([("b", x, 1 / x)], title="s"),
            svg.histogram(np.random.default_rng(0).standard_normal(500), 30, "h", "x", density=True)]
    for d in docs:
        root = ET.fromstring(d)
        assert root.tag.endswith("svg")


# ----------------------------------------------------------------- pipelines


def test_equilibrium_run(tmp_path):
    man = run_experiment(cfg_for(tmp_path, "equilibrium"))
    out = tmp_path / "out"
    for f in ("density.csv", "summary.json", "density.svg", "manifest.json"):
        assert (out / f).exists()
    s = json.loads((out / "summary.json").read_text())
    assert abs(s["A"] + 2) < 1e-10
    assert man.passed and set(man.outputs) == {"density.csv", "summary.json", "density.svg"}
    for f, h in man.outputs.items():
        assert archive.sha256_file(out / f) == h
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".")]


@pytest.mark.parametrize("sections", [
    {"sample": {"sampler": "tridiag", "N": 20, "n_samples": 50}},
    {"sample": {"sampler": "mala", "N": 6, "n_samples": 40, "burn_in": 200, "thin": 2}},
    {"sample": {"sampler": "wigner", "N": 10, "n_samples": 20, "profile": "two_band"}},
    {"sample": {"sampler": "local", "N": 40, "K": 3, "n_samples": 30, "burn_in": 200, "thin": 2}},
    {"dbm": {"N": 10, "T": 0.1, "dt": 1e-3, "store_every": 10}},
    {"rwcheck": {"N": 32, "K": 2, "T": 0.1, "n_paths": 200, "burn_in": 200, "thin": 2}},
    {"airy": {"n": 400, "n_draws": 50, "m": 2, "compare_N": 50}},
    {"stats": {"kind": "rigidity", "N": 50, "n_samples": 20}},
    {"stats": {"kind": "gaussian", "N": 100, "n_samples": 50, "i": 4}},
    {"stats": {"kind": "repulsion", "N": 50, "n_samples": 50}},
    {"stats": {"kind": "loop", "N": 30, "n_samples": 100}},
    {"stats": {"kind": "decay", "N": 100, "n_samples": 60, "i": 2, "j": [4, 8, 16]}},
    {"stats": {"kind": "universality", "N": 40, "n_samples": 30, "j": [1, 2]}},
    {"sobolev": {"form": "first", "K": [8, 16], "restarts": 2}},
    {"sobolev": {"form": "second", "M": [8, 16], "restarts": 2}},
])
def test_every_pipeline_is_deterministic(tmp_path, sections):
    kind = next(iter(sections))
    kind = {"sample": "sample", "stats": "stats"}.get(kind, kind)
    a = run_experiment(cfg_for(tmp_path, kind, "a", **sections))
    b = run_experiment(cfg_for(tmp_path, kind, "b", **sections))
    assert a.outputs and a.outputs.keys() == b.outputs.keys()
    for f, h in a.outputs.items():
        if f.endswith((".csv", ".bin")):
            assert h == b.outputs[f], f


def test_csv_flag_switches_archive_format(tmp_path):
    s = {"sample": {"N": 5, "n_samples": 4}}
    man = run_experiment(cfg_for(tmp_path, "sample", "bin", **s))
    assert "samples.bin" in man.outputs
    over = {"experiment": "sample", "seed": 7, "out": str(tmp_path / "csv"), "csv": True, **s}
    man = run_experiment(config.load_config(None, over, environ={}))
    assert "samples.csv" in man.outputs and "samples.bin" not in man.outputs


def test_rerun_replaces_output_atomically(tmp_path):
    run_experiment(cfg_for(tmp_path, "equilibrium"))
    (tmp_path / "out" / "stale.txt").write_text("x")
    run_experiment(cfg_for(tmp_path, "equilibrium"))
    assert not (tmp_path / "out" / "stale.txt").exists()


def test_failed_run_leaves_previous_output(tmp_path):
    run_experiment(cfg_for(tmp_path, "equilibrium"))
    before = (tmp_path / "out" / "manifest.json").read_text()
    bad = cfg_for(tmp_path, "sample", sample={"sampler": "mala", "N": 3, "beta": 0.5})
    with pytest.raises(DomainError, match="sample"):
        run_experiment(bad)
    assert (tmp_path / "out" / "manifest.json").read_text() == before
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".")]


# ----------------------------------------------------------------- CLI


def test_cli_exit_codes(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("LOGGAS_SEED", raising=False)
    assert cli.main(["equilibrium", "--seed", "1", "--out", str(tmp_path / "e")]) == 0
    assert cli.main(["sample", "--out", str(tmp_path / "s")]) == 2
    assert cli.main([]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["fit", "--seed", "1"])
    assert exc.value.code == 2
    bad = tmp_path / "bad.toml"
    bad.write_text('seed = 1\n[sample]\nsampler = "mala"\nN = 3\nbeta = 0.5\n')
    assert cli.main(["sample", "--config", str(bad), "--out", str(tmp_path / "m")]) == 3
    err = capsys.readouterr().err
    assert "config error" in err and "DomainError" in err


def test_cli_check_failure_exit_code(tmp_path):
    # a rigidity run at tiny xi fails its own check
    cfg = tmp_path / "r.toml"
    cfg.write_text('seed = 1\n[stats]\nkind = "rigidity"\nN = 50\nn_samples = 20\nxi = 0.01\n')
    assert cli.main(["stats", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 1


def test_print_defaults_and_help(capsys):
    assert cli.main(["--print-defaults"]) == 0
    text = capsys.readouterr().out
    assert tomllib.loads(text)["sample"]["N"] == config.DEFAULTS["sample"]["N"]
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    out = capsys.readouterr().out
    assert "LOGGAS_" in out and "exit codes" in out


def test_cli_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("LOGGAS_SEED", "4")
    monkeypatch.setenv("LOGGAS_SAMPLE__N", "7")
    assert cli.main(["sample", "--out", str(tmp_path / "o")]) == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["config"]["seed"] == 4 and man["config"]["sample"]["N"] == 7


def test_numpy_backend_subprocess(tmp_path):
    code = ("import loggas._accel as a, loggas.kernels as k, numpy as np;"
            "from loggas.samplers import tridiag_archive;"
            "print(a.backend_name(), k.backend().__name__);"
            "np.save(r'%s', tridiag_archive(30, 2.0, 5, seed=3).samples)") % (tmp_path / "np.npy")
    env = dict(os.environ, LOGGAS_DISABLE_NUMBA="1")
    r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert r.stdout.split() == ["numpy", "loggas._kernels_np"]
    np.testing.assert_allclose(np.load(tmp_path / "np.npy"),
                               tridiag_archive(30, 2.0, 5, seed=3).samples, atol=1e-12)
