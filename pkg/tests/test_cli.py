import json
import subprocess
import sys

import pytest

from gfflab.cli import bridge_main, gff_main, main
from gfflab.errors import ConfigInvalid
from gfflab.experiments import EXPERIMENTS, config_hash, resolve_config

SMALL = {
    "k2-green": {"samples": 2000, "mesh": 1 / 32},
    "markov": {"samples": 1000, "mesh": 1 / 32, "n_uniqueness": 5, "n_probes": 5},
}


def write_toml(path, text):
    path.write_text(text)
    return str(path)


def test_k2_green_run(tmp_path, capsys):
    out = tmp_path / "k2"
    code = gff_main(["k2-green", "--samples", "10000", "--mesh", str(1 / 64), "--seed", "7", "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    assert code == 0 and report["pass"]
    assert report["results"]["a_hat"] > 0
    assert report["checks"]["fit_r2"]["value"] >= 0.99
    assert report["seed"] == 7 and report["config_hash"] == config_hash(resolve_config("k2-green", {}, {
        "samples": 10000, "mesh": 1 / 64, "seed": 7}))
    assert report["property"] == EXPERIMENTS["k2-green"].probes
    header = (out / "data.csv").read_text().splitlines()[0]
    assert "estimate" in header and "se" in header
    assert "PASS" in capsys.readouterr().out


def test_unknown_key_in_config_exits_2(tmp_path, capsys):
    cfg = write_toml(tmp_path / "c.toml", 'samples = 100\nbogus_key = 3\n')
    code = gff_main(["k2-green", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "bogus_key" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize("text,key", [
    ("samples = -5\n", "samples"),
    ("eps = \"wide\"\n", "eps"),
    ("points = [[0.0, 0.0]]\npoints_extra = 1\n", "points_extra"),
    ("experiment = \"wick\"\n", "experiment"),
    ("samples = [1, 2\n", "config"),
])
def test_malformed_configs_name_the_key(tmp_path, capsys, text, key):
    cfg = write_toml(tmp_path / "c.toml", text)
    assert gff_main(["k2-green", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert f"'{key}'" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert gff_main(["boundary", "--config", str(tmp_path / "nope.toml")]) == 2
    assert "'config'" in capsys.readouterr().err


def test_flags_override_file(tmp_path):
    cfg = resolve_config("boundary", {"samples": 50, "seed": 1}, {"samples": 70, "seed": None})
    assert cfg["samples"] == 70 and cfg["seed"] == 1
    with pytest.raises(ConfigInvalid) as exc:
        resolve_config("boundary", {"radii": [0.1]})
    assert exc.value.key == "radii"
    with pytest.raises(ConfigInvalid):
        resolve_config("no-such-experiment")


def test_config_hash_ignores_output_location():
    a = resolve_config("boundary", {}, {"out": "x"})
    b = resolve_config("boundary", {}, {"out": "y", "threads": 1})
    c = resolve_config("boundary", {}, {"seed": 8})
    assert config_hash(a) == config_hash(b) != config_hash(c)


def test_failing_check_exits_1_and_writes_report(tmp_path):
    # annuli listed outside-in make the variance sequence increase
    cfg = write_toml(tmp_path / "c.toml", "annuli = [[0.85, 0.93], [0.7, 0.85], [0.5, 0.7]]\nsamples = 1000\n"
                     "mesh = 0.03125\n")
    out = tmp_path / "b"
    assert gff_main(["boundary", "--config", cfg, "--out", str(out)]) == 1
    assert json.loads((out / "report.json").read_text())["pass"] is False


def test_same_config_twice_is_byte_identical(tmp_path):
    for name, extra in SMALL.items():
        cfg = write_toml(tmp_path / f"{name}.toml", "".join(f"{k} = {v}\n" for k, v in extra.items()))
        outs = [tmp_path / f"{name}{k}" for k in range(2)]
        for out in outs:
            gff_main([name, "--config", cfg, "--seed", "3", "--out", str(out)])
        for fname in ("report.json", "data.csv"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


def test_threads_flag(tmp_path):
    out = tmp_path / "t"
    assert gff_main(["boundary", "--samples", "1000", "--mesh", "0.03125", "--threads", "1", "--out", str(out)]) == 0
    assert "threads" not in json.loads((out / "report.json").read_text())["config"]


def test_bridge_entry_point(tmp_path):
    out = tmp_path / "br"
    assert bridge_main(["suite", "--samples", "20000", "--mesh", str(1 / 64), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["checks"]["control_rejected"]["pass"]
    assert len((out / "data.csv").read_text().splitlines()) > 1


def test_module_entry_point(tmp_path):
    out = tmp_path / "m"
    proc = subprocess.run([sys.executable, "-m", "gfflab", "gff", "boundary", "--samples", "1000",
                           "--mesh", "0.03125", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert main(["nonsense"]) == 2


def test_argparse_rejects_unknown_flag():
    with pytest.raises(SystemExit) as exc:
        gff_main(["wick", "--frobnicate"])
    assert exc.value.code == 2
