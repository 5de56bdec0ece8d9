import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from caprobust.case import generate_synthetic_case
from caprobust.caseio import case_digest, load_case, save_case
from caprobust.cli import run
from caprobust.errors import DataValidationError
from caprobust.svg import bar_svg, scatter_svg

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def case_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("case")
    assert run(["synth-case", "--seed", "2", "--regions", "2", "--years", "3", "--ts", "168", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def wu_dir(case_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("wu")
    assert run(["wu", "--case", str(case_dir), "--scenarios", "all", "--out", str(out)]) == 0
    return out


class TestCaseFiles:
    def test_round_trip_is_exact(self, tmp_path):
        case = generate_synthetic_case(4, 2, 2, ts=12)
        back = load_case(save_case(case, tmp_path))
        assert back.scalars == case.scalars
        assert back.region_ids == case.region_ids
        assert back.links == case.links
        assert back.technologies == case.technologies
        np.testing.assert_array_equal(back.max_capacity(), case.max_capacity())
        np.testing.assert_array_equal(back.outage_data.samples, case.outage_data.samples)
        for a, b in zip(back.years, case.years):
            assert a.id == b.id and a.probability == b.probability
            for q in ("load", "cf_wind", "cf_solar", "inflow"):
                np.testing.assert_array_equal(getattr(a, q), getattr(b, q))

    def test_digest_tracks_content(self, tmp_path):
        case = generate_synthetic_case(4, 2, 1)
        save_case(case, tmp_path)
        first = case_digest(tmp_path)
        assert case_digest(tmp_path / "case.toml") == first
        (tmp_path / "outages.csv").write_text((tmp_path / "outages.csv").read_text() + "0,0,0,0,0,0,0,0,0,0,0,1\n")
        assert case_digest(tmp_path) != first

    def test_missing_case(self, tmp_path):
        with pytest.raises(DataValidationError, match="does not exist"):
            load_case(tmp_path / "nowhere")


class TestCommands:
    def test_wu_outputs(self, wu_dir):
        plan = json.loads((wu_dir / "plan.json").read_text())
        assert plan["sc"] > 0
        man = json.loads((wu_dir / "manifest.json").read_text())
        assert man["command"] == "wu" and man["config"]["scenarios"] == "all"
        assert set(man["versions"]) >= {"caprobust", "numpy", "scipy", "python"}
        assert (wu_dir / "dispatch.csv").read_text().startswith("scenario,step,region,quantity,value")

    def test_manifest_replay(self, wu_dir, tmp_path):
        assert run(["--manifest", str(wu_dir / "manifest.json"), "--into", str(tmp_path)]) == 0
        assert (tmp_path / "plan.json").read_bytes() == (wu_dir / "plan.json").read_bytes()

    @pytest.mark.parametrize("kind", ["normal", "unfavorable-weather"])
    def test_simulate(self, case_dir, wu_dir, tmp_path, kind):
        argv = ["simulate", "--case", str(case_dir), "--plan", str(wu_dir / "plan.json"), "--kind", kind, "--out", str(tmp_path)]
        assert run(argv) == 0
        data = json.loads((tmp_path / "simulation.json").read_text())
        assert data["kind"] == kind and len(data["years"]) == 3

    def test_select(self, case_dir, tmp_path):
        assert run(["select-scenarios", "--case", str(case_dir), "--out", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "scenarios.json").read_text())
        assert len({data["favorable"], data["average"], data["unfavorable"]}) == 3

    def test_wnu_smoke(self, case_dir, tmp_path):
        argv = ["wnu", "--case", str(case_dir), "--alphas", "0.9", "--n-range", "1..2", "--n-r", "40", "--n-p", "200", "--out", str(tmp_path)]
        assert run(argv) == 0
        front = json.loads((tmp_path / "pareto.json").read_text())
        assert 1 <= len(front) <= 2
        ET.fromstring((tmp_path / "pareto.svg").read_text())
        assert (tmp_path / "pareto.csv").read_text().startswith("n,alpha,")


class TestInputErrors:
    def test_simulate_needs_plan(self, capsys):
        assert run(["simulate", "--out", "unused"]) == 1
        assert "--plan" in capsys.readouterr().err

    @pytest.mark.parametrize("alphas", ["0", "1.5", "x", ""])
    def test_bad_alphas(self, alphas, capsys):
        with pytest.raises(SystemExit) as info:
            run(["wnu", "--alphas", alphas])
        assert info.value.code == 1

    def test_bad_n_range(self):
        with pytest.raises(SystemExit) as info:
            run(["wnu", "--n-range", "3..x"])
        assert info.value.code == 1

    def test_unknown_year(self, case_dir, tmp_path, capsys):
        assert run(["wu", "--case", str(case_dir), "--scenarios", "Y99", "--out", str(tmp_path)]) == 1
        assert "Y99" in capsys.readouterr().err

    def test_no_command(self, capsys):
        assert run([]) == 1

    def test_bad_manifest(self, tmp_path):
        (tmp_path / "m.json").write_text("{}")
        assert run(["--manifest", str(tmp_path / "m.json")]) == 1

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "caprobust", "--help"], capture_output=True, text=True)
        assert proc.returncode == 0 and "simulate" in proc.stdout


class TestSvg:
    def test_scatter_parses(self):
        root = ET.fromstring(scatter_svg([(1, 2), (3, 4), (5, 1)], "t", "x", "y", highlight={0}))
        circles = root.findall(f".//{SVG}circle")
        assert len(circles) == 3
        assert sum(c.get("fill") == "#d62728" for c in circles) == 1

    def test_scatter_single_point(self):
        ET.fromstring(scatter_svg([(1, 1)]))

    def test_escapes_labels(self):
        root = ET.fromstring(bar_svg(["a<b", "c&d"], [1.0, -2.0], title="x<y"))
        assert len(root.findall(f".//{SVG}rect")) >= 2

    def test_empty(self):
        ET.fromstring(scatter_svg([]))
        ET.fromstring(bar_svg([], []))
