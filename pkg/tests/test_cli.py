import json
import math

import numpy as np
import pytest

from qdkit import cli
from qdkit.errors import SpecParseError, UnknownScenario
from qdkit.geometry import CircleDomain, Disc, Image
from qdkit.maps import cardioid_map
from qdkit.scenarios import CATALOG, catalog, get_scenario, load_spec
from qdkit.svg import boundary_loops, render


def run(argv, capsys):
    code = cli.main(argv + ["--no-timestamp"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_catalog_ids():
    ids = [s.id for s in catalog()]
    assert len(ids) == len(set(ids))
    for name in ["disc-mean-value", "bidisc-product", "cardioid", "bergman-coordinate-not-qd", "exp-qd-not-qdp",
                 "nonalgebraic-kernel", "one-point-qdp", "dilation-homotopy", "straight-line-epsilon",
                 "convex-deform"]:
        assert name in ids


def test_catalog_command(capsys):
    code, rep = run(["catalog"], capsys)
    assert code == 0
    assert rep["schema"] == "qd-report/1"
    assert {s["id"] for s in rep["scenarios"]} == set(CATALOG)
    assert "timestamp" not in rep


def test_timestamp_present_by_default(capsys):
    cli.main(["catalog"])
    assert "timestamp" in json.loads(capsys.readouterr().out)


def test_identity_disc_mean_value(capsys):
    code, rep = run(["identity", "--scenario", "disc-mean-value"], capsys)
    assert code == 0 and rep["status"] == "pass"
    assert rep["result"]["verification"]["max_residual"] < 1e-8
    assert len(rep["result"]["verification"]["rows"]) == 11


def test_qdp_expected_negative(capsys):
    code, rep = run(["qdp-check", "--scenario", "exp-qd-not-qdp", "--max-degree", "3"], capsys)
    assert code == 0
    assert rep["status"] == "mixed"
    assert rep["raw_exit_code"] == 2
    assert rep["annotations"] == ["expected-negative"]
    verdicts = {tuple(r["alpha"]): r["verdict"] for r in rep["result"]["table"]["rows"]}
    assert verdicts[(1, 0)] == "not_in_span" and verdicts[(0, 3)] == "in_span"


def test_mismatched_expectation_fails(capsys):
    spec = CATALOG["exp-qd-not-qdp"].to_json()
    spec["expected"] = {"all": "in_span"}
    spec["params"]["max_degree"] = 1
    code, rep = run(["qdp-check", "--spec", json.dumps(spec)], capsys)
    assert code == 2 and rep["status"] == "fail"


def test_homotopy_frames(tmp_path, capsys):
    out = tmp_path / "frames"
    code, rep = run(["homotopy", "--scenario", "dilation-homotopy", "--frames", "20", "--svg", str(out) + "/"],
                    capsys)
    assert code == 0
    files = sorted(out.glob("*.svg"))
    assert len(files) == 20
    assert len(rep["result"]["trace"]["entries"]) == 20
    assert files[0].read_text().startswith("<svg")


def test_report_to_file(tmp_path, capsys):
    path = tmp_path / "r.json"
    code = cli.main(["chord-arc", "--scenario", "chord-arc-two-holes", "--out", str(path), "--no-timestamp"])
    assert code == 0
    assert capsys.readouterr().out == ""
    rep = json.loads(path.read_text())
    assert rep["result"]["contained"] == 1000


def test_unknown_scenario_is_an_error(capsys):
    code, rep = run(["identity", "--scenario", "nope"], capsys)
    assert code == 1
    assert rep["status"] == "error" and rep["error"]["type"] == "UnknownScenario"


def test_bad_spec_is_an_error(capsys):
    code, rep = run(["identity", "--spec", "{not json"], capsys)
    assert code == 1 and rep["error"]["type"] == "SpecParseError"


def test_inline_spec(capsys):
    spec = {"domain": {"kind": "disc", "radius": 2.0}, "params": {"degree": 4}}
    code, rep = run(["identity", "--spec", json.dumps(spec)], capsys)
    assert code == 0
    term = rep["result"]["identity"]["terms"][0]
    assert term["coeff"][0] == pytest.approx(4 * math.pi)


def test_scenario_helpers(tmp_path):
    with pytest.raises(UnknownScenario):
        get_scenario("missing")
    p = tmp_path / "s.json"
    p.write_text(json.dumps(CATALOG["cardioid"].to_json()))
    assert load_spec(str(p)).id == "cardioid"
    with pytest.raises(SpecParseError):
        load_spec('{"id": "x"}')


def test_json_encoding():
    rep = {"c": 1 + 2j, "a": np.float64(1.5), "n": np.arange(2), "inf": math.inf, (1, 0): "key"}
    text = cli.dumps(rep)
    back = json.loads(text)
    assert back["c"] == [1.0, 2.0] and back["a"] == 1.5 and back["n"] == [0, 1]
    assert back["inf"] == "inf" and back["1,0"] == "key"
    assert list(back) == sorted(back)


def test_svg_holes_use_even_odd():
    dom = CircleDomain(Disc(), (Disc(0.2, 0.3),))
    loops = boundary_loops(dom)
    assert len(loops) == 2 and all(len(c) == 720 for c in loops)
    text = render(loops)
    assert 'fill-rule="evenodd"' in text
    assert text.count(" Z") == 2


def test_svg_image_boundary():
    loops = boundary_loops(Image(Disc(), cardioid_map(0.3)))
    assert np.allclose(loops[0][0], 1.3)
