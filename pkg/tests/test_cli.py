import io
import json
import subprocess
import sys

import pytest

from rank1lab import __version__
from rank1lab.cli import run_command
from rank1lab.construction import preset
from rank1lab.geometry import IntervalMap, build_tower_map
from rank1lab.words import expand_word, load_word


def run(argv, tmp_path):
    buf = io.StringIO()
    code = run_command(argv + ["--out", str(tmp_path / "out")], stdout=buf)
    return code, buf.getvalue()


def test_heights(tmp_path):
    code, out = run(["heights", "--preset", "classical", "--stages", "4"], tmp_path)
    assert code == 0
    assert out.splitlines() == ["j,s_j,a_j", "1,1,2", "2,1,7", "3,1,22", "4,1,67"]
    rep = json.loads((tmp_path / "out" / "heights.json").read_text())
    assert rep["version"] == __version__
    assert rep["config"]["preset"] == "classical" and rep["config"]["stages"] == 4
    assert rep["stages"][1]["w_j"] == "1/3"


def test_word_csv(tmp_path):
    code, out = run(["word", "--preset", "classical", "--base", "1", "--target", "2", "--csv"], tmp_path)
    assert code == 0 and out == "0,1,0,1,S,0,1\n"


def test_word_file_round_trip(tmp_path):
    code, _ = run(["word", "--preset", "prime", "--base", "2", "--target", "5"], tmp_path)
    assert code == 0
    assert load_word(tmp_path / "out" / "word.r1w") == expand_word(preset("prime"), 2, 5)


def test_measure_infinite(tmp_path):
    code, out = run(["measure", "--preset", "2adic-expo"], tmp_path)
    assert code == 0 and out.strip() == "infinite"
    code, out = run(["measure", "--preset", "classical", "--json"], tmp_path)
    rep = json.loads(out)
    assert rep["measure"]["upper"] == "5/2" and rep["measure"]["exact"]


def test_geom_round_trip(tmp_path):
    code, out = run(["geom", "--preset", "linear", "--stages", "3", "--json"], tmp_path)
    assert code == 0
    back = IntervalMap.from_dict(json.loads(out))
    assert back.levels == build_tower_map(preset("linear"), 3).levels


@pytest.mark.parametrize(
    "argv",
    [
        ["correlate", "--preset", "classical", "--base", "2", "--target", "6", "--shift", "7"],
        ["weaklimit", "--preset", "classical", "--base", "2", "--target", "8", "--K", "2"],
        ["rigidity", "--preset", "root", "--base", "2", "--target", "8", "--n-max", "500"],
        ["kappa", "--preset", "linear", "--base", "1", "--target", "8"],
        ["polysearch", "--preset", "root", "--base", "2", "--target", "9", "--p", "2"],
        ["spectrum", "--preset", "classical", "--base", "1", "--target", "8", "--N", "200", "--mode", "exact"],
    ],
)
def test_reports_are_reproducible(tmp_path, argv):
    code, out1 = run(argv + ["--json"], tmp_path)
    assert code == 0
    files1 = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
    code, out2 = run(argv + ["--json", "--threads", "1"], tmp_path)
    files2 = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
    assert out1 == out2 and files1 == files2
    rep = json.loads(out1)
    assert rep["version"] == __version__
    assert rep["config"]["command"] == argv[0]


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "linear", "stages": 3}))
    code, out = run(["heights", "--config", str(cfg)], tmp_path)
    assert code == 0 and out.splitlines()[-1] == "3,3,23"
    code, out = run(["heights", "--config", str(cfg), "--stages", "2"], tmp_path)
    assert out.splitlines()[-1] == "2,2,7"
    cfg.write_text(json.dumps({"preset": "linear", "bogus": 1}))
    code, _ = run(["heights", "--config", str(cfg)], tmp_path)
    assert code == 2


def test_exit_codes(tmp_path):
    assert run(["measure", "--preset", "nope"], tmp_path)[0] == 2
    assert run(["measure"], tmp_path)[0] == 2
    assert run(["frobnicate", "--preset", "classical"], tmp_path)[0] == 2
    assert run(["word", "--preset", "classical", "--target", "30", "--storage", "explicit", "--max-length", "100"], tmp_path)[0] == 3
    assert run(["geom", "--preset", "classical", "--stages", "20"], tmp_path)[0] == 3
    assert run(["kappa", "--preset", "selfsim:4", "--base", "1", "--target", "5", "--shifts", "3"], tmp_path)[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("1\nfoo\n")
    assert run(["heights", "--preset", f"custom:{bad}"], tmp_path)[0] == 2


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("RANK1LAB_THREADS", "2")
    code, out = run(["correlate", "--preset", "classical", "--base", "1", "--target", "6", "--shift", "3", "--threads", "5", "--json"], tmp_path)
    assert json.loads(out)["config"]["threads"] == 2


def test_console_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "rank1lab.cli", "heights", "--preset", "selfsim:4", "--stages", "3", "--out", str(tmp_path)],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.splitlines()[-1] == "3,16,25"
