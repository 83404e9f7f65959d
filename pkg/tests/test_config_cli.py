import json

import pytest

from conelab.cli import main as cli_main
from conelab.config import EXPERIMENTS, parse_config

MINIMAL_KG = """
[grid]
n = 256
spacing = 0.5

[region]
center = 32.0
radius = 16.0

[solver]
experiment = kg_locality
mass = 0.0
cfl = 1.0
seeds = 0,1
"""


class TestParsing:
    def test_minimal_config_gets_defaults(self):
        cfg, issues = parse_config(MINIMAL_KG)
        assert not issues
        assert cfg.experiment == "kg_locality"
        assert cfg.solver["guard_band"] == 2          # documented default
        assert cfg.checks["inside_sup_tol"] == 1e-13
        assert cfg.output["out_dir"] == "."

    def test_scientific_notation_and_booleans(self):
        text = MINIMAL_KG + "\n[checks]\ninside_sup_tol = 2.5e-12\n" \
                            "[output]\nwrite_csv = false\n"
        cfg, issues = parse_config(text)
        assert not issues
        assert cfg.checks["inside_sup_tol"] == 2.5e-12
        assert cfg.output["write_csv"] is False

    def test_cfl_range_message(self):
        cfg, issues = parse_config(MINIMAL_KG.replace("cfl = 1.0",
                                                      "cfl = 1.5"))
        assert cfg is None
        assert any("cfl must be in (0,1]" in issue.message for issue in issues)

    def test_unknown_experiment_lists_valid_names(self):
        cfg, issues = parse_config(MINIMAL_KG.replace(
            "experiment = kg_locality", "experiment = warp_drive"))
        assert cfg is None
        message = " ".join(issue.message for issue in issues)
        for name in EXPERIMENTS:
            assert name in message

    def test_all_errors_reported_with_line_numbers(self):
        bad = """
[grid]
n = -4
spacing = 0.0

[solver]
experiment = kg_locality
cfl = 2.0
bogus_key = 1
"""
        cfg, issues = parse_config(bad)
        assert cfg is None
        assert len(issues) >= 4  # n, spacing, cfl, bogus_key all reported
        lines = [issue.line for issue in issues]
        assert all(line > 0 for line in lines)
        assert len(set(lines)) >= 4

    def test_duplicate_key_flagged(self):
        cfg, issues = parse_config(MINIMAL_KG + "\n[grid]\nn = 128\n")
        assert cfg is None
        assert any("duplicate" in issue.message for issue in issues)

    def test_unknown_section_flagged(self):
        cfg, issues = parse_config(MINIMAL_KG + "\n[plasma]\nfoo = 1\n")
        assert cfg is None
        assert any("unknown section" in issue.message for issue in issues)

    def test_missing_experiment(self):
        cfg, issues = parse_config("[grid]\nn = 64\nspacing = 1.0\n")
        assert cfg is None
        assert any("experiment" in issue.where for issue in issues)

    def test_comments_ignored(self):
        cfg, issues = parse_config("# header\n; alt comment\n" + MINIMAL_KG)
        assert not issues

    def test_empty_seed_list_rejected(self):
        cfg, issues = parse_config(MINIMAL_KG.replace("seeds = 0,1",
                                                      "seeds = "))
        assert cfg is None
        assert any("seed" in issue.message for issue in issues)

    def test_shipped_scenarios_validate(self):
        from pathlib import Path
        scenario_dir = Path(__file__).resolve().parent.parent / "scenarios"
        paths = sorted(scenario_dir.glob("*.ini"))
        assert len(paths) >= 10
        for path in paths:
            cfg, issues = parse_config(path.read_text(encoding="utf-8"))
            assert cfg is not None, (path.name, [str(i) for i in issues])


MALFORMED_CORPUS = [
    "",                                                     # no experiment
    "[solver]\nexperiment = unknown_thing\n",               # bad name
    "[solver]\nexperiment = kg_locality\ncfl = 0.0\n",      # cfl low edge
    "[solver]\nexperiment = kg_locality\ncfl = 1.5\n",      # cfl high
    "[solver]\nexperiment = kg_locality\nmass = -1\n",      # negative mass
    "[grid]\nn = 3\n[solver]\nexperiment = kg_locality\n",  # tiny grid
    "[grid]\nspacing = -0.5\n[solver]\nexperiment = kg_locality\n",
    "[solver]\nexperiment = kg_locality\nnot_a_key = 7\n",  # unknown key
    "[solver]\nexperiment = kg_locality\nseeds = a,b\n",    # bad list
    "[weird]\nx = 1\n[solver]\nexperiment = kg_locality\n",  # bad section
    "[solver]\nexperiment = kg_locality\ncfl\n",            # missing '='
    "[solver]\nexperiment = kg_locality\nguard_band = -1\n",
]


class TestMalformedCorpus:
    @pytest.mark.parametrize("text", MALFORMED_CORPUS)
    def test_rejected_with_issues(self, text):
        cfg, issues = parse_config(text)
        assert cfg is None
        assert issues


class TestCli:
    def _write(self, tmp_path, text):
        path = tmp_path / "scenario.ini"
        path.write_text(text, encoding="utf-8")
        return path

    def test_list_experiments(self, capsys):
        assert cli_main(["list-experiments"]) == 0
        out = capsys.readouterr().out.split()
        assert set(out) == set(EXPERIMENTS)

    def test_validate_ok(self, tmp_path, capsys):
        path = self._write(tmp_path, MINIMAL_KG)
        assert cli_main(["validate", str(path)]) == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_reports_all_errors(self, tmp_path, capsys):
        path = self._write(tmp_path, MINIMAL_KG.replace("cfl = 1.0",
                                                        "cfl = 9\nbad_key = 1"))
        assert cli_main(["validate", str(path)]) == 2
        err = capsys.readouterr().err
        assert "cfl" in err and "bad_key" in err

    def test_missing_file_exit_2(self, capsys):
        assert cli_main(["run", "/nonexistent/scenario.ini"]) == 2

    def test_run_pass_exit_0_and_report(self, tmp_path, capsys):
        path = self._write(tmp_path, "[solver]\nexperiment = nonseparability\n"
                                     f"[output]\nout_dir = {tmp_path}\n")
        assert cli_main(["run", str(path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["pass"] is True
        assert len(report["checks"]) == 3
        out = capsys.readouterr().out
        assert out.count("[PASS]") == 3

    def test_run_failing_check_exit_1(self, tmp_path):
        # an impossible tolerance forces a clean failure, not a crash
        path = self._write(
            tmp_path,
            "[solver]\nexperiment = fock_regional\nseeds = 0\n"
            "[checks]\noracle_tol = 1e-30\n"
            f"[output]\nout_dir = {tmp_path}\n")
        assert cli_main(["run", str(path)]) == 1
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["pass"] is False

    def test_run_wraparound_is_config_error_exit_2(self, tmp_path):
        # leakage horizon too long for the box: wrap-around violation
        path = self._write(
            tmp_path,
            "[grid]\nn = 256\nspacing = 0.0625\n"
            "[solver]\nexperiment = sqrt_kg_leakage\nt_span = 100.0\n"
            f"[output]\nout_dir = {tmp_path}\n")
        assert cli_main(["run", str(path)]) == 2

    def test_run_domain_error_exit_3(self, tmp_path):
        # margin so large the contracting cone vanishes mid-run
        path = self._write(
            tmp_path,
            "[solver]\nexperiment = gaussian_locality\nmargin_sites = 100\n"
            f"[output]\nout_dir = {tmp_path}\n")
        assert cli_main(["run", str(path)]) == 3

    def test_seed_override(self, tmp_path):
        path = self._write(
            tmp_path,
            "[grid]\nn = 256\nspacing = 0.5\n"
            "[region]\ncenter = 32.0\nradius = 16.0\n"
            "[solver]\nexperiment = kg_locality\nseeds = 0\n"
            f"[output]\nout_dir = {tmp_path}\n")
        assert cli_main(["run", str(path), "--seed-override", "5,6"]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["scenario"]["solver"]["seeds"] == [5, 6]

    def test_determinism_bit_identical_reports(self, tmp_path):
        config = ("[grid]\nn = 256\nspacing = 0.5\n"
                  "[region]\ncenter = 32.0\nradius = 16.0\n"
                  "[solver]\nexperiment = kg_locality\nseeds = 0,1,2\n")
        reports = []
        for run in ("a", "b"):
            out = tmp_path / run
            out.mkdir()
            path = self._write(tmp_path, config + f"[output]\nout_dir = {out}\n")
            assert cli_main(["run", str(path)]) == 0
            data = json.loads((out / "report.json").read_text())
            del data["wall_clock_s"]
            data["scenario"]["output"]["out_dir"] = "X"
            reports.append(json.dumps(data, sort_keys=True))
        assert reports[0] == reports[1]
