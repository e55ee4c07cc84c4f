"""Pipeline modes not covered by the acceptance suite, and worker determinism."""

import json

import numpy as np
import pytest

from wavebarrier import analytic, cli, pipelines, tdse
from wavebarrier.config import parse_config
from wavebarrier.model import BarrierSpec
from wavebarrier.packet import PacketSpec


ANALYTIC_CFG = json.dumps({
    "mode": "analytic",
    "times": [2.2],
    "grid": {"min": -6.0, "max": 8.0, "n": 181},
    "out_prefix": "ana",
})

ORACLE_CFG = json.dumps({
    "mode": "oracle",
    "packet": {"x0": -5.5, "p0": 5.0, "L": 3.0},
    "barrier": {"V": 20.0, "d": 0.5},
    "window": {"K": 1.2},
    "oracle": {"dx": 8.0e-3, "dt": 1.0e-3, "t_end": 1.5,
               "x_min": -10.0, "x_max": 12.0, "measure_times": [1.0, 1.5]},
    "out_prefix": "orc",
})


class TestAnalyticPipeline:
    def test_emits_all_regions(self, tmp_path):
        cfg = parse_config(ANALYTIC_CFG)
        summary = pipelines.analytic_pipeline(cfg, tmp_path)
        assert summary["warnings"] == []
        text = (tmp_path / "ana_frames.csv").read_text()
        regions = {line.split(",")[5] for line in text.strip().split("\n")[3:]}
        assert regions == {"left", "barrier", "right"}

    def test_workers_do_not_change_bytes(self, tmp_path):
        a, b = tmp_path / "w1", tmp_path / "w4"
        a.mkdir(); b.mkdir()
        pipelines.analytic_pipeline(parse_config(ANALYTIC_CFG), a)
        cfg4 = parse_config(json.dumps({**json.loads(ANALYTIC_CFG), "workers": 4}))
        pipelines.analytic_pipeline(cfg4, b)
        csv_a = (a / "ana_frames.csv").read_text().split("\n")
        csv_b = (b / "ana_frames.csv").read_text().split("\n")
        assert csv_a[2:] == csv_b[2:]  # identical data rows (configs differ in echo)

    def test_early_time_warning(self, tmp_path):
        cfg = parse_config(json.dumps({**json.loads(ANALYTIC_CFG), "times": [0.05]}))
        summary = pipelines.analytic_pipeline(cfg, tmp_path)
        assert any("validity" in w for w in summary["warnings"])


class TestOraclePipeline:
    def test_observable_summary(self, tmp_path):
        cfg = parse_config(ORACLE_CFG)
        summary = pipelines.oracle_pipeline(cfg, tmp_path)
        obs = summary["observables"]
        assert [o["t"] for o in obs] == [1.0, 1.5]
        for o in obs:
            assert o["norm"] == pytest.approx(1.0, abs=1e-9)
            total = o["P_left"] + o["P_barrier"] + o["P_right"]
            assert total == pytest.approx(o["norm"], abs=1e-12)
        doc = json.loads((tmp_path / "orc_summary.json").read_text())
        assert doc["config"]["barrier"]["V"] == 20.0


class TestNoiseFloor:
    def test_forced_opaque_run_skips_oracle(self, tmp_path, capsys):
        cfg = parse_config(json.dumps({
            "mode": "compare", "barrier": {"k0": 0.5, "D": 2.0}, "force": True,
            "out_prefix": "deep",
        }))
        report = pipelines.compare_pipeline(cfg, tmp_path)
        assert report["oracle"] is None
        assert any("below double-precision noise" in w for w in report["warnings"])
        assert report["opacity"] == pytest.approx(20.0)


class TestInBarrierComparison:
    def test_midpoint_magnitude_vs_oracle(self, fig1_packet):
        # |psi(d/2, t_R)| from the evanescent closed form vs the time-domain run
        barrier = BarrierSpec(V=100.0, d=0.4)
        t_r = 2.0
        n = int((8.0 + 44.0) / 0.005) + 1
        ocfg = tdse.OracleConfig(x_min=-44.0, x_max=8.0, n_points=n, dt=5e-4, t_end=t_r,
                                 barrier=barrier, packet=fig1_packet, store_times=(t_r,))
        frame = tdse.evolve(ocfg)[-1]
        x_mid = barrier.d / 2
        idx = int(np.argmin(np.abs(frame.grid - x_mid)))
        oracle_mag = abs(frame.values[idx])
        ana = analytic.barrier_wavefunction(np.array([frame.grid[idx]]), t_r,
                                            fig1_packet, barrier)[0]
        assert abs(ana) == pytest.approx(oracle_mag, rel=0.25)


def test_packet_derived_handle(fig1_packet):
    derived = fig1_packet.derived()
    assert derived.N == pytest.approx(4.515e10, rel=1e-3)
    assert derived.dx2 == pytest.approx(0.495031, rel=1e-5)
    assert derived.eps < 1e-85
    val = derived.f0(np.array([10.0]))[0]
    from wavebarrier.packet import momentum_reference
    assert val == momentum_reference(10.0, fig1_packet)


def test_cli_numeric_error_exit_code(monkeypatch, capsys):
    def boom(config, out_dir):
        raise RuntimeError("quadrature failed to converge")

    monkeypatch.setattr(pipelines, "figure1_pipeline", boom)
    monkeypatch.setattr(cli.pipelines, "figure1_pipeline", boom)
    assert cli.main(["figure1"]) == 4
    assert "numeric error" in capsys.readouterr().err
