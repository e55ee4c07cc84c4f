"""Config parsing, emission formats, determinism, and CLI exit codes."""

import json
import math
import re
from pathlib import Path

import pytest

from wavebarrier import cli, pipelines
from wavebarrier.config import ConfigError, apply_overrides, parse_config


SMALL_FIG1 = json.dumps({
    "mode": "figure1",
    "grid": {"min": -4.0, "max": 10.0, "n": 241},
    "out_prefix": "run",
})

FREE_CONTROL = json.dumps({
    "mode": "compare",
    "packet": {"x0": -5.5, "p0": 5.0, "L": 3.0},
    "barrier": {"V": 0.0, "d": 0.5},
    "window": {"K": 1.0},
    "oracle": {"dx": 5.0e-3, "dt": 1.0e-3, "t_end": 3.2,
               "x_min": -9.5, "x_max": 25.0, "measure_times": [3.0, 3.2]},
    "out_prefix": "free",
})


class TestParse:
    def test_defaults(self):
        cfg = parse_config("{}")
        assert cfg.p0 == 10.0 and cfg.L == 20.0 and cfg.k0 == pytest.approx(0.5)
        assert cfg.V == pytest.approx(100.0) and cfg.D == pytest.approx(1.0)

    def test_normalized_echo_round_trips(self):
        cfg = parse_config(SMALL_FIG1)
        echo = cfg.normalized_text()
        again = parse_config(echo).normalized_text()
        assert again == echo

    def test_regime_violation(self):
        with pytest.raises(ConfigError, match="under-barrier"):
            parse_config(json.dumps({"barrier": {"k0": 1.2, "D": 1.0}}))

    def test_support_violation(self):
        with pytest.raises(ConfigError, match="support"):
            parse_config(json.dumps({"packet": {"x0": -5.0, "p0": 10.0, "L": 20.0}}))

    def test_duplicate_keys(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config('{"mode": "figure1", "mode": "analytic"}')

    def test_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config('{"barier": {}}')
        with pytest.raises(ConfigError, match="packet.q0"):
            parse_config('{"packet": {"q0": 1.0}}')

    def test_pair_consistency(self):
        ok = parse_config(json.dumps({"barrier": {"V": 100.0, "k0": 0.5, "D": 1.0}}))
        assert ok.k0 == pytest.approx(0.5)
        with pytest.raises(ConfigError, match="disagree"):
            parse_config(json.dumps({"barrier": {"V": 90.0, "k0": 0.5, "D": 1.0}}))
        with pytest.raises(ConfigError, match="disagree"):
            parse_config(json.dumps({"barrier": {"k0": 0.5, "d": 2.0, "D": 1.0}}))

    def test_window_below_top(self):
        with pytest.raises(ConfigError, match="barrier top"):
            parse_config(json.dumps({"window": {"K": 1.5}}))

    def test_overrides(self):
        text = apply_overrides("{}", ["barrier.D=0.4", "mode=compare", "force=true"])
        cfg = parse_config(text)
        assert cfg.D == pytest.approx(0.4) and cfg.mode == "compare" and cfg.force

    def test_mode_validation(self):
        with pytest.raises(ConfigError, match="mode"):
            parse_config('{"mode": "plot"}')


@pytest.fixture(scope="module")
def fig1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig1")
    cfg = parse_config(SMALL_FIG1)
    summary = pipelines.figure1_pipeline(cfg, out)
    return out, cfg, summary


class TestEmission:
    def test_csv_format(self, fig1_run):
        out, cfg, _ = fig1_run
        text = (out / "run_term0.csv").read_text()
        lines = text.split("\n")
        assert lines[0] == "# version: 0.1.0"
        assert lines[1].startswith("# config: {")
        assert lines[2] == "x,t,re_psi,im_psi,abs2,region,source"
        row = lines[3].split(",")
        assert len(row) == 7
        # 17 significant digits, scientific notation
        assert re.fullmatch(r"-?\d\.\d{16}e[+-]\d{2,3}", row[0])
        assert row[5] in ("left", "barrier", "right")
        assert row[6] == "analytic_term_0"
        assert "\r" not in text and text.endswith("\n")

    def test_abs2_consistency(self, fig1_run):
        out, _, _ = fig1_run
        lines = (out / "run_term1.csv").read_text().strip().split("\n")[3:]
        for line in lines[:50]:
            x, t, re_psi, im_psi, abs2 = (float(v) for v in line.split(",")[:5])
            assert abs2 == pytest.approx(re_psi**2 + im_psi**2, abs=1e-15)

    def test_summary_embeds_config_and_version(self, fig1_run):
        out, cfg, _ = fig1_run
        doc = json.loads((out / "run_summary.json").read_text())
        assert doc["version"] == "0.1.0"
        assert doc["config"] == cfg.normalized()

    def test_summary_consistency_margin(self, fig1_run):
        _, _, summary = fig1_run
        lhs = [t["consistency"]["lhs"] for t in summary["terms"]]
        assert lhs == pytest.approx([10.0, 30.0, 50.0])
        assert round(summary["terms"][0]["consistency"]["rhs"]) == 18
        assert summary["terms"][0]["consistency"]["satisfied"]
        assert not summary["terms"][1]["consistency"]["satisfied"]

    def test_attenuation_ratios(self, fig1_run):
        _, _, summary = fig1_run
        for ratio in summary["attenuation_ratios"]:
            assert ratio == pytest.approx(math.exp(-20.0), rel=1e-12)

    def test_determinism(self, tmp_path):
        cfg = parse_config(SMALL_FIG1)
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir(); b.mkdir()
        pipelines.figure1_pipeline(cfg, a)
        pipelines.figure1_pipeline(cfg, b)
        for name in ("run_term0.csv", "run_term1.csv", "run_term2.csv", "run_summary.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestValidateSuite:
    def test_all_checks_pass(self):
        rows = pipelines.validate_suite()
        failures = [r.name for r in rows if not r.passed]
        assert failures == []
        names = {r.name for r in rows}
        assert "conservation_identity_max_dev" in names
        assert "variance_position_L20" in names
        assert "window_denominator_factor" in names


class TestCli:
    def test_default_config(self, capsys):
        assert cli.main(["default-config"]) == 0
        out = capsys.readouterr().out
        assert json.loads(out)["packet"]["p0"] == 10.0

    def test_figure1_exit_ok(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(SMALL_FIG1)
        rc = cli.main(["figure1", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "run_term0.csv").exists()
        assert "l=0" in capsys.readouterr().out

    def test_packet_info(self, capsys):
        assert cli.main(["packet-info"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["P0"] == 10.0
        assert doc["consistency"][0]["satisfied"]

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"barrier": {"k0": 1.2, "D": 1.0}}')
        assert cli.main(["figure1", "--config", str(bad), "--out", str(tmp_path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_unsafe_compare_refused(self, tmp_path, capsys):
        rc = cli.main(["compare", "--override", "barrier.D=2.0", "--out", str(tmp_path)])
        assert rc == 2
        assert "safe window" in capsys.readouterr().err

    def test_validate_failure_exit_code(self, monkeypatch, capsys):
        fake = [pipelines.CheckRow(name="x", value=1.0, target=0.0, tolerance=0.1, passed=False)]
        monkeypatch.setattr(pipelines, "validate_suite", lambda: fake)
        assert cli.main(["validate"]) == 3
        assert "FAIL" in capsys.readouterr().out

    def test_free_control_compare(self, tmp_path, capsys):
        cfg_path = tmp_path / "free.json"
        cfg_path.write_text(FREE_CONTROL)
        rc = cli.main(["compare", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert rc == 0
        doc = json.loads((tmp_path / "free_compare.json").read_text())
        assert doc["free_control"]
        assert doc["P_right"] == pytest.approx(1.0, abs=0.01)
        assert abs(doc["centroid_lag"]) <= doc["dx"]
