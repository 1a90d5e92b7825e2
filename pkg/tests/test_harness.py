"""Config parsing, experiment orchestration, output emission, and the CLI."""

import dataclasses
import pathlib

import numpy as np
import pytest

from dagopt.errors import DagoptError
from dagopt.harness import cli
from dagopt.harness.config import (
    apply_preset,
    build_network,
    build_problem,
    build_schedules,
    config_to_text,
    default_config,
    manifest_hash,
    parse_config,
)
from dagopt.harness.experiments import (
    AdjacentScenario,
    emit_outputs,
    fit_loglog_slope,
    perturb_spec,
    run_convergence_experiment,
    run_truthfulness_experiment,
)
from dagopt.harness.svgplot import Series, line_plot
from dagopt.problems.ev import desk_ev_spec


class TestConfig:
    def test_dump_parse_round_trip(self):
        cfg = dataclasses.replace(default_config(), T=123, seeds=(3, 4), edge_weight=0.11)
        assert parse_config(config_to_text(cfg)) == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(DagoptError):
            parse_config("[experiment]\nbogus_key = 1\n")

    def test_unknown_section_rejected(self):
        with pytest.raises(DagoptError):
            parse_config("[nonsense]\nT = 5\n")

    @pytest.mark.parametrize(
        "preset", ["corollary1-sc", "corollary1-cvx", "corollary1-ncvx", "sec5-convergence", "sec5-truthful"]
    )
    def test_all_presets_resolve(self, preset):
        cfg = apply_preset(default_config(), preset)
        assert cfg.preset == preset

    def test_unknown_preset_rejected(self):
        with pytest.raises(DagoptError):
            apply_preset(default_config(), "corollary9")

    def test_explicit_override_wins_over_preset(self):
        text = "[schedules]\npreset = sec5-truthful\nu = 2.9\n"
        cfg = parse_config(text)
        assert cfg.u == 2.9 and cfg.w1 == 1.2

    def test_manifest_hash_sensitivity(self):
        base = default_config()
        assert manifest_hash(base) == manifest_hash(default_config())
        for changed in (
            dataclasses.replace(base, T=base.T + 1),
            dataclasses.replace(base, edge_weight=0.13),
            dataclasses.replace(base, seeds=(0,)),
        ):
            assert manifest_hash(changed) != manifest_hash(base)

    def test_builders_consistent_dimensions(self):
        cfg = default_config()
        prob = build_problem(cfg)
        W = build_network(cfg)
        sch = build_schedules(cfg, dim=prob.d)
        assert W.m == prob.m == cfg.m
        assert sch.noise.dim == prob.d


class TestSlopeFit:
    def test_recovers_power_law_exponent(self):
        class R:
            def __init__(self, t, v):
                self.t = t
                self.err_x = v
                self.diverged = False

        recs = [R(t, 5.0 * t**-1.4) for t in range(1, 2001)]
        slope = fit_loglog_slope(recs, "err_x", 100, 2000)
        assert slope == pytest.approx(-1.4, abs=1e-6)


class TestSvg:
    def test_line_plot_structure(self):
        s = Series("curve-a", [1, 10, 100], [1.0, 0.1, 0.01])
        svg = line_plot([s], title="t", xlabel="x", ylabel="y", xlog=True, ylog=True)
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
        assert "polyline" in svg and "curve-a" in svg

    def test_log_plot_drops_nonpositive_points(self):
        s = Series("a", [1, 2, 3], [1.0, -5.0, 4.0])
        svg = line_plot([s], title="", xlabel="", ylabel="", xlog=False, ylog=True)
        assert "polyline" in svg  # remaining points still plotted


class TestPerturbation:
    def test_only_listed_agents_change(self):
        spec = desk_ev_spec(20)
        new = perturb_spec(spec, AdjacentScenario(agents=(2, 3), shift_fraction=0.4, pivot_slot=3))
        changed = [i for i in range(20) if not np.array_equal(spec.d[i], new.d[i])]
        assert changed == [2, 3]

    def test_total_demand_preserved(self):
        spec = desk_ev_spec(20)
        new = perturb_spec(spec, AdjacentScenario(agents=(5,), shift_fraction=0.4, pivot_slot=3))
        assert new.d[5].sum() == pytest.approx(spec.d[5].sum(), rel=1e-12)
        # mass moved from pre-pivot slots to post-pivot slots
        assert new.d[5, :3].sum() < spec.d[5, :3].sum()
        assert new.d[5, 3:].sum() > spec.d[5, 3:].sum()

    def test_zero_shift_is_identity(self):
        spec = desk_ev_spec(20)
        new = perturb_spec(spec, AdjacentScenario(agents=(2,), shift_fraction=0.0, pivot_slot=3))
        assert np.array_equal(spec.d, new.d)


class TestTruthfulnessPlumbing:
    def test_identical_problems_give_zero_gain(self):
        cfg = apply_preset(default_config(), "sec5-truthful")
        cfg = dataclasses.replace(cfg, kind="truthfulness", truthful_T=150, seeds=(0, 1))
        scen = AdjacentScenario(agents=(2, 3), shift_fraction=0.0, pivot_slot=3)
        summary = run_truthfulness_experiment(cfg, scen)
        for _, gain_alg1, gain_naive, _, inflation in summary.rows:
            assert gain_alg1 == 0.0
            assert gain_naive == 0.0
            assert inflation == 0.0


class TestEmission:
    def test_convergence_outputs(self, tmp_path):
        cfg = dataclasses.replace(default_config(), T=60, stride=10, seeds=(0, 1))
        summary = run_convergence_experiment(cfg)
        emit_outputs(summary, tmp_path)
        csv_path = tmp_path / "metrics.csv"
        assert csv_path.exists() and (tmp_path / "curve.svg").exists()
        lines = [l for l in csv_path.read_text().splitlines() if l and not l.startswith("#")]
        assert len(lines) == 1 + 60 // 10 + 1  # header + T/stride + 1 records
        manifest = (tmp_path / "manifest.txt").read_text()
        assert manifest_hash(cfg) in manifest

    def test_repeat_emission_identical_bytes(self, tmp_path):
        cfg = dataclasses.replace(default_config(), T=40, stride=10, seeds=(0,))
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            emit_outputs(run_convergence_experiment(cfg), out)
        for name in ("metrics.csv", "curve.svg", "manifest.txt"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestCli:
    def test_print_config(self, capsys):
        assert cli.main(["--print-config"]) == 0
        assert "[experiment]" in capsys.readouterr().out

    def test_run_convergence_from_file(self, tmp_path, capsys):
        cfg_path = tmp_path / "exp.ini"
        cfg_path.write_text(
            "[experiment]\nkind = convergence\nT = 40\nstride = 10\nseeds = 0\n"
            f"output_dir = {tmp_path / 'out'}\n"
        )
        assert cli.main(["run", str(cfg_path)]) == 0
        assert (tmp_path / "out" / "metrics.csv").exists()

    def test_gradcheck_subcommand(self, tmp_path):
        cfg_path = tmp_path / "exp.ini"
        cfg_path.write_text("[experiment]\nkind = gradcheck\n[problem]\nproblem = strongly-convex\nm = 4\nn = 2\nd = 2\n")
        assert cli.main(["gradcheck", str(cfg_path), "--points", "3"]) == 0

    def test_lemma2_subcommand(self):
        assert cli.main(["lemma2", "5", "200", "--seed", "0"]) == 0

    def test_validate_graph_subcommand(self, tmp_path):
        from dagopt.network import generate_k_regular, save_edgelist

        path = tmp_path / "g.edges"
        save_edgelist(generate_k_regular(12, 4, seed=0), path)
        assert cli.main(["validate-graph", str(path), "--edge-weight", "0.12"]) == 0

    def test_privacy_report_subcommand(self, tmp_path):
        cfg_path = tmp_path / "exp.ini"
        cfg_path.write_text(
            "[experiment]\nkind = privacy-report\nT = 100\n"
            f"output_dir = {tmp_path / 'out'}\n"
            "[schedules]\npreset = sec5-truthful\n"
        )
        assert cli.main(["privacy-report", str(cfg_path)]) == 0

    def test_assertion_failure_exit_code(self, tmp_path):
        cfg_path = tmp_path / "exp.ini"
        cfg_path.write_text("[experiment]\nkind = gradcheck\n")
        # impossible threshold forces the failure path
        assert cli.main(["gradcheck", str(cfg_path), "--points", "1", "--threshold", "0"]) == 2

    def test_output_dir_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DAGOPT_OUTPUT_DIR", str(tmp_path / "envout"))
        cfg_path = tmp_path / "exp.ini"
        cfg_path.write_text("[experiment]\nkind = convergence\nT = 20\nstride = 10\nseeds = 0\n")
        assert cli.main(["run", str(cfg_path)]) == 0
        assert (tmp_path / "envout" / "metrics.csv").exists()
