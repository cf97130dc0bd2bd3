import json
import subprocess
import sys

import pytest

from psc_operads import little_disks as ld
from psc_operads import metric_descriptors as md
from psc_operads import tree_operad as tr
from psc_operads.cli import run

CHAIN = """\
config s dim 2
disk 0.0 0.0 0.3
config one dim 2
disk 0.0 0.0 1.0
(vertex @s -[0.5]-> (vertex @one -[0.5]-> (vertex @s -[1]-> leaf 1)))
"""

PAIR = """\
config pair dim 2
disk -0.5 0.0 0.2
disk 0.5 0.0 0.4
config bad dim 2
disk 0.0 0.0 0.6
disk 0.5 0.0 0.4
"""


@pytest.fixture
def files(tmp_path):
    (tmp_path / "chain.w").write_text(CHAIN)
    (tmp_path / "disks.txt").write_text(PAIR)
    (tmp_path / "good.txt").write_text(PAIR.split("config bad")[0])
    return tmp_path


def test_tree_normalize_joins_lengths(files, capsys):
    assert run(["tree", "normalize", "--in", str(files / "chain.w")]) == 0
    out = capsys.readouterr().out
    t, _ = tr.parse_document(out)
    assert tr.vertex_count(t) == 2
    assert "-[0.75]->" in out


def test_tree_compose(files, capsys):
    assert run(["tree", "compose", "--in", str(files / "chain.w"), "--inner", str(files / "chain.w")]) == 0
    t, _ = tr.parse_document(capsys.readouterr().out)
    assert tr.vertex_count(t) == 6


def test_tree_omega_report(files, capsys):
    report = files / "omega.json"
    assert run(["tree", "omega", "--in", str(files / "chain.w"), "--report", str(report)]) == 0
    doc = json.loads(report.read_text())
    assert doc["schema"] == "psc-report/1" and doc["kind"] == "omega"
    assert doc["results"][0]["weight"] == 0.75
    assert "regular" in capsys.readouterr().out


def test_disks_validate(files, capsys):
    assert run(["disks", "validate", "--in", str(files / "good.txt")]) == 0
    assert run(["disks", "validate", "--in", str(files / "disks.txt")]) == 1
    assert "overlap" in capsys.readouterr().out


def test_disks_compose(files, capsys):
    args = ["disks", "compose", "--in", str(files / "good.txt"), "--outer", "pair", "--inner", "pair", "pair"]
    assert run(args) == 0
    c = ld.parse_configs(capsys.readouterr().out)["composed"]
    assert c.arity == 4 and ld.validate(c).ok


def test_disks_render(files):
    out = files / "pair.svg"
    assert run(["disks", "render", "--in", str(files / "good.txt"), "--out", str(out)]) == 0
    assert out.read_text().count("<circle") == 3
    assert run(["disks", "render", "--in", str(files / "disks.txt"), "--name", "bad"]) == 1


def test_metric_build_and_profile(files, capsys):
    path = files / "dt.json"
    assert run(["metric", "build", "--kind", "double-torpedo", "--out", str(path)]) == 0
    d = md.loads(path.read_text())
    assert len(md.free_caps(d)) == 2
    assert run(["metric", "profile", "--descriptor", str(path), "--step", "0.5"]) == 0
    assert capsys.readouterr().out.startswith("t,eta,eta_p,eta_pp,R")


def test_metric_build_from_tree(files):
    path = files / "proxy.json"
    assert run(["metric", "build", "--tree", str(files / "chain.w"), "--out", str(path)]) == 0
    assert len(md.loads(path.read_text()).nodes) == 2


@pytest.mark.parametrize("profile", ["torpedo", "double-torpedo", "round", "lens", "bulb"])
def test_metric_curvature(profile, capsys):
    assert run(["metric", "curvature", "--profile", profile, "--step", "0.01"]) == 0
    assert "ok" in capsys.readouterr().out


def test_action_apply(files):
    g = files / "g.json"
    g.write_text(md.dumps(md.round_with_base_head()))
    out = files / "out.json"
    assert run(["action", "apply", "--tree", str(files / "chain.w"), "--inputs", str(g), "--out", str(out)]) == 0
    md.validate_descriptor(md.loads(out.read_text()))


def test_action_verify(files):
    report = files / "verify.json"
    assert run(["action", "verify", "--seed", "2", "--cases", "5", "--report", str(report)]) == 0
    assert json.loads(report.read_text())["ok"] is True


def test_check_all(files, capsys):
    assert run(["check", "all", "--seed", "0", "--cases", "5", "--report", str(files / "all.json")]) == 0
    assert "action axioms" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    [],
    ["tree"],
    ["tree", "normalize"],
    ["action", "verify", "--seed", "-1"],
    ["metric", "curvature", "--profile", "torpedo", "--delta", "0"],
    ["metric", "curvature"],
    ["tree", "normalize", "--in", "/nonexistent/tree.w"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2
    assert "psc-operads:" in capsys.readouterr().err


def test_library_errors_exit_two(files):
    (files / "broken.w").write_text("(vertex @missing -[1]-> leaf 1)\n")
    assert run(["tree", "normalize", "--in", str(files / "broken.w")]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "psc_operads", "metric", "curvature", "--profile", "round"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "min_R" in proc.stdout
