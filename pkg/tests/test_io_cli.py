import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from weednav import io
from weednav.cli import main, plan, simulate
from weednav.errors import PackingInfeasible, SolverConfigError, ValidationError
from weednav.routing import Field, tour_cost
from weednav.svg import render_svg


def star_count(svg_text):
    root = ET.fromstring(svg_text.encode())
    return sum(1 for e in root.iter() if e.get("class") == "target")


class TestFieldFile:
    def test_comments_blank_lines_and_crlf(self):
        text = "# header\r\n1.0, 2.0\r\n\r\n3,4  # trailing\r\n5e-1,-1\r\n"
        fld = io.parse_field(text)
        assert np.allclose(fld.targets, [[1, 2], [3, 4], [0.5, -1]])

    def test_bad_row_reports_line_number(self):
        with pytest.raises(ValidationError, match=r"f\.csv:3:"):
            io.parse_field("0,0\n1,1\n2;2\n", "f.csv")

    def test_non_numeric(self):
        with pytest.raises(ValidationError, match=r":2:"):
            io.parse_field("0,0\nx,1\n")

    def test_single_target_rejected(self):
        with pytest.raises(ValidationError):
            io.parse_field("# only one\n1,1\n")

    def test_round_trip(self, tmp_path):
        fld = io.generate_field(4, 15, 10, 8, 0.5)
        io.write_field(tmp_path / "f.csv", fld, header="test")
        assert np.array_equal(io.read_field(tmp_path / "f.csv").targets, fld.targets)

    def test_bom_is_ignored(self, tmp_path):
        (tmp_path / "b.csv").write_bytes("﻿1,2\n3,4\n".encode("utf-8"))
        assert io.read_field(tmp_path / "b.csv").targets.shape == (2, 2)


class TestGenerate:
    def test_deterministic_and_separated(self):
        a = io.generate_field(1, 150, 20, 60, 0.5)
        b = io.generate_field(1, 150, 20, 60, 0.5)
        assert np.array_equal(a.targets, b.targets)
        d = np.hypot(*(a.targets[:, None, :] - a.targets[None, :, :]).transpose(2, 0, 1))
        assert d[np.triu_indices(150, 1)].min() >= 0.5
        assert a.targets[:, 0].max() <= 20 and a.targets[:, 1].max() <= 60 and a.targets.min() >= 0

    def test_two_rows(self):
        assert len(io.generate_field(9, 2, 5, 5, 0.0)) == 2

    def test_packing_infeasible(self):
        with pytest.raises(PackingInfeasible):
            io.generate_field(0, 10_000, 1, 1, 0.5)


class TestConfig:
    def test_defaults(self):
        cfg = io.ExperimentConfig()
        p = cfg.ocp_params()
        assert p.H == 20 and p.dt == 0.1 and p.q_s == 1e4
        assert np.allclose(np.diag(p.Q), [0.1, 0.1, 0.01]) and np.allclose(np.diag(p.R), [0.1, 1.0])
        assert cfg.rho > p.limits.r_min

    def test_unknown_key(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"K": 4, "horizon": 10}))
        with pytest.raises(ValidationError, match="horizon"):
            io.load_config(tmp_path / "c.json")

    def test_bad_planner(self):
        with pytest.raises(ValidationError):
            io.ExperimentConfig(planner="greedy")

    def test_bad_physics(self):
        with pytest.raises(SolverConfigError):
            io.ExperimentConfig(omega_max=0.0)

    def test_invalid_json(self, tmp_path):
        (tmp_path / "c.json").write_text("{\n  'K': 3\n}")
        with pytest.raises(ValidationError, match=":2:"):
            io.load_config(tmp_path / "c.json")


@pytest.fixture(scope="module")
def small_field():
    return io.generate_field(5, 6, 8, 8, 1.0)


class TestPlan:
    def test_tour_json_round_trip(self, small_field, tmp_path):
        cfg = io.ExperimentConfig(out=str(tmp_path))
        res = plan(small_field, cfg)
        io.write_json(tmp_path / "tour.json", io.tour_to_dict(res.tour, small_field, cfg.rho, res.leg_lengths))
        tour, fld, data = io.load_tour(tmp_path / "tour.json")
        assert tour.total_cost == pytest.approx(data["total_cost"], abs=1e-6)
        assert tour_cost(tour, cfg.rho) == pytest.approx(sum(data["leg_lengths"]), abs=1e-6)

    def test_svg_has_one_star_per_target(self, small_field):
        res = plan(small_field, io.ExperimentConfig())
        assert star_count(render_svg(small_field, res.reference_arrays(small_field))) == len(small_field)

    def test_etsp_only_reports_euclidean_length(self, small_field):
        res = plan(small_field, io.ExperimentConfig(planner="etsp_only"))
        assert res.tour is None
        assert res.total_cost == pytest.approx(res.euclidean_length)
        with pytest.raises(ValidationError):
            simulate(small_field, io.ExperimentConfig(planner="etsp_only"), res)

    def test_two_target_field(self):
        res = plan(Field(np.array([[0.0, 0.0], [3.0, 2.0]])), io.ExperimentConfig())
        assert len(res.segments) == 2


class TestCli:
    @pytest.fixture()
    def field_file(self, tmp_path, small_field):
        path = tmp_path / "field.csv"
        io.write_field(path, small_field)
        return path

    def test_generate(self, tmp_path):
        assert main(["generate", "--seed", "2", "--count", "12", "--out", str(tmp_path / "g.csv")]) == 0
        assert len(io.read_field(tmp_path / "g.csv")) == 12

    def test_generate_packing_error(self, tmp_path):
        args = ["generate", "--count", "10000", "--width", "1", "--height", "1", "--min-sep", "0.5"]
        assert main(args + ["--out", str(tmp_path / "x.csv")]) == 2

    def test_plan_writes_artifacts(self, field_file, tmp_path):
        out = tmp_path / "plan"
        assert main(["plan", "--field", str(field_file), "--out", str(out), "--k", "4"]) == 0
        data = json.loads((out / "tour.json").read_text())
        assert sorted(data["order"]) == list(range(6))
        assert star_count((out / "plan.svg").read_text()) == 6
        assert (out / "reference.csv").read_text().startswith("leg,s,x,y,theta\n")

    def test_open_tour(self, field_file, tmp_path):
        assert main(["plan", "--field", str(field_file), "--open-tour", "--out", str(tmp_path / "o")]) == 0
        data = json.loads((tmp_path / "o" / "tour.json").read_text())
        assert data["closed"] is False and len(data["leg_lengths"]) == 5

    def test_exit_codes(self, field_file, tmp_path):
        (tmp_path / "bad.json").write_text(json.dumps({"bogus": 1}))
        (tmp_path / "phys.json").write_text(json.dumps({"v_max": -1}))
        (tmp_path / "one.csv").write_text("1,1\n")
        assert main(["plan", "--field", str(field_file), "--config", str(tmp_path / "bad.json")]) == 2
        assert main(["plan", "--field", str(field_file), "--config", str(tmp_path / "phys.json")]) == 4
        assert main(["simulate", "--field", str(tmp_path / "one.csv"), "--out", str(tmp_path / "s")]) == 2
        assert main(["plan", "--field", str(tmp_path / "missing.csv")]) == 2

    def test_compare_identical_configs(self, field_file, tmp_path, capsys):
        out = tmp_path / "cmp"
        assert main(["compare", "--field", str(field_file), "--planner-b", "coupled", "--out", str(out)]) == 0
        assert "+0.00%" in capsys.readouterr().out
        assert (out / "compare.csv").exists()

    def test_compare_different_fields(self, field_file, tmp_path):
        other = tmp_path / "other.csv"
        io.write_field(other, io.generate_field(6, 6, 8, 8, 1.0))
        assert main(["compare", "--field", str(field_file), "--field-b", str(other), "--out", str(tmp_path)]) == 2

    def test_simulate_is_reproducible(self, tmp_path):
        fld = tmp_path / "f.csv"
        io.write_field(fld, Field(np.array([[0.0, 0.0], [2.5, 1.0], [1.0, 3.0]])))
        args = ["simulate", "--field", str(fld), "--k", "4", "--open-tour"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "summary.json").read_bytes()
        assert a == (tmp_path / "b" / "summary.json").read_bytes()
        summary = json.loads(a)
        assert summary["success"] and summary["max_position_error"] <= 0.05
        header = (tmp_path / "a" / "mission.csv").read_text().splitlines()[0]
        assert header == "t,x,y,theta,v,omega,s_bar,status,iters,solve_ms"
        svg = (tmp_path / "a" / "mission.svg").read_text()
        assert star_count(svg) == 3 and 'class="trajectory"' in svg
