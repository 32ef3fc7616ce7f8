import json
import math

import numpy as np
import pytest

from hisparse.blocks import BlockStructure, BlockVector, HiSparsity, is_hi_sparse
from hisparse.harness.cli import main as cli_main
from hisparse.harness.config import (
    ExperimentConfig,
    desk_block_detection,
    desk_recovery_grid,
    desk_theorem_verify,
    preset,
)
from hisparse.harness.experiments import (
    CSV_COLUMNS,
    read_trials_csv,
    run_block_detection,
    run_recovery_grid,
    run_theorem_verify,
    summarize,
    write_trials_csv,
)
from hisparse.harness.signals import (
    add_noise,
    detection_rate,
    generate_signal,
    mse,
    noise_floor,
)
from hisparse.errors import DimensionError


def tiny_grid_config(**overrides):
    base = dict(
        scenario="recovery-grid",
        M=(6,),
        N=6,
        m=8,
        block_lengths=10,
        s_values=(1, 2),
        sigma_values=(1, 2),
        snr_db=(10.0,),
        trials=3,
        master_seed=99,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def tiny_detection_config(**overrides):
    base = dict(
        scenario="block-detection",
        M=(4,),
        N=6,
        m=10,
        block_lengths=16,
        s_values=(2,),
        sigma_values=(2,),
        snr_db=(10.0,),
        trials=3,
        master_seed=99,
        front_width=4,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestGenerateSignal:
    def test_single_nonzero(self):
        st = BlockStructure.uniform(5, 7)
        x = generate_signal(st, HiSparsity.uniform(1, 1, 5), 1)
        assert np.count_nonzero(x.coeffs) == 1

    def test_always_hi_sparse(self):
        st = BlockStructure.uniform(6, 9)
        k = HiSparsity.uniform(3, 2, 6)
        for seed in range(100):
            assert is_hi_sparse(generate_signal(st, k, seed), k)

    def test_front_loaded_window(self):
        st = BlockStructure.uniform(4, 50)
        k = HiSparsity.uniform(2, 3, 4)
        for seed in range(300):
            x = generate_signal(
                st, k, seed, placement="front-loaded", front_width=10
            )
            for i in range(4):
                nz = np.flatnonzero(x.block(i))
                assert nz.size == 0 or nz.max() < 10

    def test_front_loaded_only_designated(self):
        st = BlockStructure.uniform(2, 30)
        k = HiSparsity.uniform(2, 4, 2)
        saw_outside = False
        for seed in range(50):
            x = generate_signal(
                st, k, seed, placement="front-loaded", front_width=5, front_blocks=(0,)
            )
            nz0 = np.flatnonzero(x.block(0))
            assert nz0.max() < 5
            if np.flatnonzero(x.block(1)).max() >= 5:
                saw_outside = True
        assert saw_outside

    def test_window_too_small(self):
        st = BlockStructure.uniform(2, 30)
        with pytest.raises(ValueError):
            generate_signal(
                st, HiSparsity.uniform(2, 4, 2), 0,
                placement="front-loaded", front_width=3,
            )

    def test_deterministic(self):
        st = BlockStructure.uniform(4, 8)
        k = HiSparsity.uniform(2, 2, 4)
        a = generate_signal(st, k, 5)
        b = generate_signal(st, k, 5)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)

    def test_unknown_placement(self):
        st = BlockStructure.uniform(2, 4)
        with pytest.raises(ValueError):
            generate_signal(st, HiSparsity.uniform(1, 1, 2), 0, placement="middle")


class TestNoise:
    def test_infinite_snr_is_identity(self):
        y = np.array([1.0, 2j, -3.0])
        out = add_noise(y, math.inf, 0)
        np.testing.assert_array_equal(out, y)
        assert out is not y

    def test_deterministic(self):
        y = np.ones(64, dtype=complex)
        np.testing.assert_array_equal(add_noise(y, 5.0, 3), add_noise(y, 5.0, 3))

    def test_empirical_snr_within_half_db(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal(256) + 1j * rng.standard_normal(256)
        for target in (0.0, 10.0, -5.0):
            ratios = []
            for seed in range(1000):
                eta = add_noise(y, target, seed) - y
                ratios.append(np.linalg.norm(y) ** 2 / np.linalg.norm(eta) ** 2)
            measured_db = 10 * np.log10(np.mean(ratios))
            assert abs(measured_db - target) <= 0.5

    def test_zero_signal_rejected(self):
        with pytest.raises(ValueError):
            add_noise(np.zeros(4), 10.0, 0)

    def test_noise_floor_matches_variance(self):
        y = np.ones(100, dtype=complex)
        st = BlockStructure.uniform(2, 2)
        x = BlockVector(st, np.ones(4))
        floor = noise_floor(y, 10.0, x)
        assert abs(floor - 100.0 / (100 * 10.0)) <= 1e-15
        assert noise_floor(y, math.inf, x) == pytest.approx(1e-12)


class TestMse:
    def test_zero_for_equal(self):
        st = BlockStructure.uniform(2, 3)
        x = BlockVector(st, np.arange(6, dtype=complex))
        assert mse(x, x) == 0.0

    def test_direct_value(self):
        st = BlockStructure((2,))
        x = BlockVector(st, np.array([1.0, 0.0]))
        zero = BlockVector.zeros(st)
        assert mse(x, zero) == pytest.approx(0.5)

    def test_translation_invariance(self):
        rng = np.random.default_rng(1)
        st = BlockStructure.uniform(3, 4)
        x = BlockVector(st, rng.standard_normal(12) + 1j * rng.standard_normal(12))
        xh = BlockVector(st, rng.standard_normal(12) + 1j * rng.standard_normal(12))
        c = 0.7 - 0.2j
        shifted = mse(
            BlockVector(st, x.coeffs + c), BlockVector(st, xh.coeffs + c)
        )
        assert shifted == pytest.approx(mse(x, xh), rel=1e-12)

    def test_structure_mismatch(self):
        with pytest.raises(DimensionError):
            mse(
                BlockVector(BlockStructure((2, 2)), np.zeros(4)),
                BlockVector(BlockStructure((4,)), np.zeros(4)),
            )

    def test_oracle_detection_rate(self):
        assert detection_rate({1, 2, 3}, (1, 2, 3), 3) == 1.0
        assert detection_rate({1, 2, 3}, (1, 5, 6), 3) == pytest.approx(1 / 3)


class TestRecoveryGrid:
    def test_records_and_aggregates(self):
        cfg = tiny_grid_config()
        records, summary, skipped = run_recovery_grid(cfg)
        assert len(records) == 4 * cfg.trials
        assert skipped == []
        assert summarize(records) == summary
        for row in summary:
            assert 0.0 <= row["success_rate"] <= 1.0

    def test_noiseless_easiest_cell_always_succeeds(self):
        cfg = tiny_grid_config(
            s_values=(1,), sigma_values=(1,), snr_db=(math.inf,), trials=10
        )
        records, summary, _ = run_recovery_grid(cfg)
        assert summary[0]["success_rate"] == 1.0

    def test_infeasible_cells_skipped(self):
        cfg = tiny_grid_config(s_values=(1, 7), sigma_values=(1, 11))
        records, summary, skipped = run_recovery_grid(cfg)
        reasons = {(c["s"], c["sigma"]): c["reason"] for c in skipped}
        assert (7, 1) in reasons and (7, 11) in reasons and (1, 11) in reasons
        assert len(records) == 1 * cfg.trials

    def test_csv_round_trip_and_schema(self, tmp_path):
        cfg = tiny_grid_config()
        records, _, _ = run_recovery_grid(cfg)
        path = tmp_path / "trials.csv"
        write_trials_csv(records, path)
        header = path.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)
        back = read_trials_csv(path)
        assert [r.seed for r in back] == [r.seed for r in records]
        assert [r.mse for r in back] == [r.mse for r in records]
        assert summarize(back) == summarize(records)

    def test_byte_identical_reruns(self, tmp_path):
        cfg = tiny_grid_config()
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trials_csv(run_recovery_grid(cfg)[0], p1)
        write_trials_csv(run_recovery_grid(cfg)[0], p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_thread_pool_preserves_records(self, tmp_path):
        cfg = tiny_grid_config(trials=2)
        serial, _, _ = run_recovery_grid(cfg, threads=1)
        parallel, _, _ = run_recovery_grid(cfg, threads=2)
        p1, p2 = tmp_path / "s.csv", tmp_path / "p.csv"
        write_trials_csv(serial, p1)
        write_trials_csv(parallel, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestBlockDetection:
    def test_two_records_per_trial_sharing_seed(self):
        cfg = tiny_detection_config()
        records, summary, skipped = run_block_detection(cfg)
        assert len(records) == 2 * cfg.trials * len(cfg.M) * len(cfg.snr_db)
        assert skipped == []
        by_trial = {}
        for r in records:
            by_trial.setdefault((r.M, r.snr_db, r.trial), []).append(r)
        for pair in by_trial.values():
            assert {r.mode for r in pair} == {"uniform", "mixed"}
            assert len({r.seed for r in pair}) == 1
        assert summarize(records) == summary

    def test_detection_rates_in_range(self):
        cfg = tiny_detection_config()
        records, _, _ = run_block_detection(cfg)
        for r in records:
            assert 0.0 <= r.detection_rate <= 1.0

    def test_desk_preset_mixed_not_worse(self):
        cfg = desk_block_detection()
        cfg.trials = 6
        records, summary, _ = run_block_detection(cfg)
        rates = {}
        for row in summary:
            rates[(row["M"], row["snr_db"], row["mode"])] = row["mean_detection_rate"]
        for M in cfg.M:
            for snr in cfg.snr_db:
                assert rates[(M, snr, "uniform")] <= rates[(M, snr, "mixed")] + 0.25

    def test_sigma_must_fit_front_window(self):
        cfg = tiny_detection_config(front_width=1)
        with pytest.raises(ValueError):
            run_block_detection(cfg)

    def test_byte_identical_reruns(self, tmp_path):
        cfg = tiny_detection_config()
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trials_csv(run_block_detection(cfg)[0], p1)
        write_trials_csv(run_block_detection(cfg)[0], p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestTheoremVerify:
    def test_small_run_passes_and_round_trips(self, tmp_path):
        cfg = desk_theorem_verify(instances=20)
        report = run_theorem_verify(cfg)
        assert report["passed"]
        assert report["product_bound"]["violations"] == 0
        assert report["product_bound"]["worst_slack"] >= -1e-10
        case = report["mixing_necessity"]["orthogonal_subspace_case"]
        assert case["status"] == "premise violated, bound vacuous"
        assert case["delta_hirip"] <= 1e-10
        path = tmp_path / "report.json"
        with open(path, "w") as fh:
            json.dump(report, fh)
        with open(path) as fh:
            assert json.load(fh) == json.loads(json.dumps(report))

    def test_wrong_scenario_rejected(self):
        with pytest.raises(ValueError):
            run_theorem_verify(tiny_grid_config())


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        cfg = tiny_grid_config(snr_db=(10.0, math.inf))
        path = tmp_path / "cfg.json"
        cfg.to_json(path)
        back = ExperimentConfig.from_json(path)
        assert back == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"scenario": "recovery-grid", "bogus": 1})

    def test_presets_valid(self):
        for scenario in ("recovery-grid", "block-detection", "theorem-verify"):
            for paper in (False, True):
                cfg = preset(scenario, paper_scale=paper)
                assert cfg.scenario == scenario

    def test_short_blocks_default_first_half(self):
        cfg = tiny_detection_config()
        assert cfg.designated_short_blocks() == (0, 1, 2)

    def test_explicit_block_lengths(self):
        cfg = tiny_grid_config(block_lengths=(10, 10, 10, 10, 10, 12))
        assert cfg.block_sizes() == (10, 10, 10, 10, 10, 12)
        with pytest.raises(ValueError):
            tiny_grid_config(block_lengths=(10, 10)).block_sizes()


class TestCli:
    def test_recovery_grid_writes_outputs(self, tmp_path):
        cfg = tiny_grid_config()
        cfg_path = tmp_path / "cfg.json"
        cfg.to_json(cfg_path)
        out = tmp_path / "out"
        code = cli_main(
            ["recovery-grid", "--config", str(cfg_path), "--out", str(out)]
        )
        assert code == 0
        assert (out / "trials.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["scenario"] == "recovery-grid"
        assert len(summary["cells"]) == 4

    def test_cli_runs_are_byte_identical(self, tmp_path):
        cfg = tiny_detection_config()
        cfg_path = tmp_path / "cfg.json"
        cfg.to_json(cfg_path)
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert cli_main(
                ["block-detection", "--config", str(cfg_path), "--out", str(out)]
            ) == 0
            outs.append((out / "trials.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_theorem_verify_cli(self, tmp_path):
        cfg = desk_theorem_verify(instances=10)
        cfg_path = tmp_path / "cfg.json"
        cfg.to_json(cfg_path)
        out = tmp_path / "tv"
        code = cli_main(
            ["theorem-verify", "--config", str(cfg_path), "--out", str(out)]
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["passed"]

    def test_seed_override_changes_trials(self, tmp_path):
        cfg = tiny_grid_config()
        cfg_path = tmp_path / "cfg.json"
        cfg.to_json(cfg_path)
        seen = []
        for seed in ("1", "2"):
            out = tmp_path / f"seed{seed}"
            cli_main(
                ["recovery-grid", "--config", str(cfg_path), "--out", str(out),
                 "--seed", seed]
            )
            seen.append((out / "trials.csv").read_bytes())
        assert seen[0] != seen[1]

    def test_scenario_mismatch_rejected(self, tmp_path):
        cfg = tiny_grid_config()
        cfg_path = tmp_path / "cfg.json"
        cfg.to_json(cfg_path)
        with pytest.raises(SystemExit):
            cli_main(["block-detection", "--config", str(cfg_path), "--out", str(tmp_path)])

    def test_bad_config_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(SystemExit):
            cli_main(["recovery-grid", "--config", str(bad), "--out", str(tmp_path)])
