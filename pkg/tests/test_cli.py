import json

import numpy as np
import pytest

from dedonder import cli
from dedonder.suites import CHECKS, ConfigError, RunConfig, load_config, run_suite

CUSTOM = """
[run]
seed = 3
points = 1

[family.bump]
g11 = -(1 + 0.05*x2^2)
g23 = 0.02*x1*x4
box = -0.5,-0.5,-0.5,-0.5 ; 0.5,0.5,0.5,0.5

[diffeo.shear]
forward1 = x1
forward2 = x2 + 0.1*x1
forward3 = x3
forward4 = x4
inverse1 = x1
inverse2 = x2 - 0.1*x1
inverse3 = x3
inverse4 = x4

[families]
use = bump

[diffeos]
use = shear

[matter]
field = "x1 + x3^2"
potential = "0.5*t^2"

[tolerances]
el.vacuum = 1e-6
"""


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestVerify:
    def test_geometry_suite(self, capsys):
        code, out, err = run(capsys, "verify", "geometry", "--points", "1", "--seed", "7")
        lines = [json.loads(line) for line in out.splitlines()]
        assert code == 0
        assert lines and all(r["pass"] for r in lines)
        assert "wall_time" not in lines[0]
        assert "checks passed" in err

    def test_reports_are_deterministic(self, capsys):
        argv = ("verify", "momenta", "--points", "1", "--seed", "7")
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]

    def test_restricted_family(self, capsys):
        code, out, _ = run(capsys, "verify", "el", "--family", "schwarzschild", "--points", "1")
        assert code == 0
        records = [json.loads(line) for line in out.splitlines()]
        labels = {r["label"] for r in records}
        assert any("schwarzschild" in lbl for lbl in labels)
        assert not any("kasner" in lbl for lbl in labels)

    def test_json_file_and_timing(self, capsys, tmp_path):
        out_file = tmp_path / "reports.jsonl"
        code, out, _ = run(capsys, "verify", "geometry", "--points", "1", "--json",
                           str(out_file), "--timing")
        assert code == 0 and out == ""
        first = json.loads(out_file.read_text().splitlines()[0])
        assert first["wall_time"] >= 0.0

    def test_tight_tolerance_fails(self, capsys):
        code, _, err = run(capsys, "verify", "geometry", "--points", "1",
                           "--tol-override", "geometry.simpl1=1e-30")
        assert code == 1
        assert "FAIL geometry.simpl1" in err

    def test_unknown_tolerance_key(self, capsys):
        code, _, err = run(capsys, "verify", "geometry", "--tol-override", "nope=1")
        assert code == 2 and "unknown check" in err

    def test_unknown_suite(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["verify", "everything"])
        assert info.value.code == 2


class TestTables:
    def test_minkowski_momenta(self, capsys):
        code, out, _ = run(capsys, "momenta", "--family", "minkowski", "--x", "0,0,0,0")
        assert code == 0
        p3_rows = out.split("P4")[0].splitlines()[2:]
        assert len(p3_rows) == 10
        assert all(float(v) == 0.0 for row in p3_rows for v in row.split(":")[1].split())

    def test_schwarzschild_el_table(self, capsys):
        code, out, _ = run(capsys, "el", "--family", "schwarzschild", "--x", "0,4,1.2,0.3")
        assert code == 0
        assert "nan" not in out.lower()
        assert out.count("\n") == 13

    def test_theta_section(self, capsys):
        code, out, _ = run(capsys, "theta", "--family", "kasner", "--section", "--seed", "1")
        assert code == 0 and "section tangents" in out

    def test_scalar_coupled_lagrangian(self, capsys):
        x = "0,4,1.2,0.3"
        code, out, _ = run(capsys, "el", "--lagrangian", "hilbert+scalar", "--x", x)
        assert code == 0 and out.startswith("hilbert+scalar on schwarzschild")
        vacuum = run(capsys, "el", "--x", x)[1]
        assert out.splitlines()[2] != vacuum.splitlines()[2]

    def test_bad_point(self, capsys):
        code, _, err = run(capsys, "momenta", "--x", "1,2,3")
        assert code == 2 and "4 comma-separated" in err

    def test_horizon_rejected(self, capsys):
        code, _, _ = run(capsys, "el", "--family", "schwarzschild", "--x", "0,2,1,0")
        assert code == 2


class TestConfig:
    def test_custom_sections(self):
        cfg = load_config(CUSTOM)
        assert cfg.seed == 3 and cfg.points == 1
        assert cfg.families == ["bump"] and cfg.diffeos == ["shear"]
        fam = cfg.family("bump")
        g = fam.at([0.1, 0.2, 0.3, 0.4])
        assert g[0, 0] == pytest.approx(-(1 + 0.05 * 0.04))
        assert g[1, 2] == pytest.approx(0.02 * 0.1 * 0.4)
        assert cfg.diffeo("shear", fam).to_unprimed([1.0, 2.0, 0.0, 0.0])[1] == pytest.approx(2.1)
        assert cfg.field_expr == "x1 + x3^2" and cfg.potential == "0.5*t^2"
        assert cfg.tolerances["el.vacuum"] == 1e-6
        pts = cfg.sample_points(fam, "x", 4)
        assert all(np.all(np.abs(p) <= 0.5) for p in pts)

    def test_custom_config_runs(self, tmp_path, capsys):
        path = tmp_path / "run.ini"
        path.write_text(CUSTOM)
        code, out, _ = run(capsys, "verify", "covariance", "--config", str(path))
        assert code == 0
        assert all(json.loads(line)["pass"] for line in out.splitlines())

    def test_invalid_expression_reports_offset(self, tmp_path, capsys):
        path = tmp_path / "bad.ini"
        path.write_text("[family.bad]\ng11 = -(1 + x2\n")
        code, _, err = run(capsys, "verify", "geometry", "--config", str(path))
        assert code == 2
        assert "[family.bad] g11" in err and "offset 8" in err

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "verify", "geometry", "--config", "/nonexistent.ini")
        assert code == 2 and "cannot read config" in err

    def test_unknown_family(self):
        with pytest.raises(ConfigError):
            load_config("[families]\nuse = nowhere\n")

    def test_missing_inverse(self):
        with pytest.raises(ConfigError):
            load_config("[diffeo.half]\nforward1 = x1\n")

    def test_potential_variable(self):
        with pytest.raises(ConfigError):
            load_config("[matter]\npotential = x1*t\n")

    def test_seeded_generators_are_stable(self):
        a = RunConfig(seed=4).rng("points", "el").normal(size=3)
        b = RunConfig(seed=4).rng("points", "el").normal(size=3)
        c = RunConfig(seed=5).rng("points", "el").normal(size=3)
        assert np.array_equal(a, b) and not np.array_equal(a, c)


class TestSuites:
    def test_reports_cover_known_checks(self):
        reports = run_suite("geometry", RunConfig(points=1))
        assert {r.check for r in reports} <= set(CHECKS)
        keys = [(r.check, r.trial) for r in reports]
        assert keys == sorted(keys)

    def test_negative_control_uses_minimum_mode(self):
        assert CHECKS["covariance.negative_control"][1] == "min"
