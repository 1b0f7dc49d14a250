"""CLI surface: subcommands, strict config parsing, golden outputs, exit codes."""

import json
from pathlib import Path

import pytest

from dscjscc.cli import (ConfigError, derive_bandwidth, main, parse_config,
                         parse_input_size, parse_rho)

GOLDEN = Path(__file__).parent / "golden"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestVariantsCommand:
    def test_lists_eleven_rows(self, capsys):
        code, out, _ = run_cli(capsys, "variants")
        assert code == 0
        lines = out.strip().split("\n")
        assert len(lines) == 11

    def test_contains_e2d2_row(self, capsys):
        _, out, _ = run_cli(capsys, "variants")
        assert "dsc-jscc-60-e2d2: enc Conv,DSConv,DSConv,DSConv,Conv" in out

    def test_stable_ordering(self, capsys):
        _, out1, _ = run_cli(capsys, "variants")
        _, out2, _ = run_cli(capsys, "variants")
        assert out1 == out2

    def test_matches_golden(self, capsys):
        _, out, _ = run_cli(capsys, "variants")
        assert out == (GOLDEN / "variants.txt").read_text()


class TestAnalyzeCommand:
    def test_single_variant_summary(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--variant", "baseline",
                               "--input", "256x256x3", "--c", "8")
        assert code == 0
        assert "143.7 K / 832.4 M" in out

    def test_all_matches_golden(self, capsys):
        _, out, _ = run_cli(capsys, "analyze", "--all")
        assert out == (GOLDEN / "analyze_all.txt").read_text()

    def test_all_is_byte_stable(self, capsys):
        _, out1, _ = run_cli(capsys, "analyze", "--all")
        _, out2, _ = run_cli(capsys, "analyze", "--all")
        assert out1 == out2

    def test_compare_reductions(self, capsys):
        _, out, _ = run_cli(capsys, "analyze", "--variant", "baseline",
                            "--compare", "dsc-jscc-60-e1d1")
        assert "params -62.7%, flops -46.0%" in out

    def test_csv_output(self, capsys, tmp_path):
        dest = tmp_path / "table.csv"
        code, _, _ = run_cli(capsys, "analyze", "--all", "--out", str(dest))
        assert code == 0
        lines = dest.read_text().strip().split("\n")
        assert lines[0] == "variant,params,flops,params_display,flops_display"
        assert len(lines) == 12

    def test_unknown_variant_fails(self, capsys):
        code, _, err = run_cli(capsys, "analyze", "--variant", "dsc-jscc-999")
        assert code == 1
        assert "unknown variant" in err

    def test_unknown_flag_fails_loudly(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["analyze", "--bogus"])
        assert exc.value.code == 2


class TestConfigParsing:
    def test_input_size(self):
        assert parse_input_size("256x256x3") == (256, 256, 3)
        with pytest.raises(ConfigError):
            parse_input_size("256x256")

    def test_rho_fraction_and_decimal(self):
        from fractions import Fraction
        assert parse_rho("1/12") == Fraction(1, 12)
        assert parse_rho(0.25) == Fraction(1, 4)

    def test_bandwidth_from_rho(self):
        k, c, rho = derive_bandwidth((256, 256, 3), rho="1/12")
        assert (k, c) == (16384, 8)

    def test_bandwidth_from_c(self):
        from fractions import Fraction
        k, c, rho = derive_bandwidth((32, 32, 3), c=8)
        assert (k, c, rho) == (256, 8, Fraction(1, 12))

    def test_inconsistent_pair_rejected(self):
        with pytest.raises(ConfigError, match="implies c="):
            derive_bandwidth((256, 256, 3), rho="1/12", c=4)

    def test_consistent_pair_accepted(self):
        k, c, _ = derive_bandwidth((256, 256, 3), rho="1/12", c=8)
        assert (k, c) == (16384, 8)

    def test_neither_given_rejected(self):
        with pytest.raises(ConfigError, match="exactly one"):
            derive_bandwidth((32, 32, 3))

    def test_unknown_keys_rejected(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"c": 8, "learning_rte": 0.1}))
        with pytest.raises(ConfigError, match="learning_rte"):
            parse_config(cfg)

    def test_defaults_match_published_setup(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"c": 8}))
        parsed = parse_config(cfg)
        assert parsed.learning_rate == 0.001
        assert parsed.batch_size == 32
        assert parsed.epochs == 20

    def test_flag_overrides_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"c": 8, "seed": 5}))
        parsed = parse_config(cfg, {"seed": 9})
        assert parsed.seed == 9

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            parse_config(tmp_path / "nope.json")


@pytest.fixture()
def desk_config(tmp_path):
    cfg = {
        "variant": "dsc-jscc-100",
        "input_size": "16x16x3",
        "c": 4,
        "train_snr_db": 10.0,
        "snr_list": [0, 10, 19],
        "batch_size": 8,
        "epochs": 50,
        "max_steps": 6,
        "dataset": {"synthetic": {"count": 8, "seed": 3}},
        "seed": 1,
        "out_dir": str(tmp_path / "run"),
    }
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return path, tmp_path / "run"


class TestTrainEvalCommands:
    def test_train_writes_outputs_and_echoes_bandwidth(self, capsys, desk_config):
        cfg, out_dir = desk_config
        code, out, _ = run_cli(capsys, "train", "--config", str(cfg))
        assert code == 0
        assert "k=32 c=4 rho=1/24" in out
        assert (out_dir / "checkpoint.dscj").exists()
        csv = (out_dir / "loss_history.csv").read_text()
        assert csv.startswith("step,epoch,loss,loss_sample_sum\n")
        assert len(csv.strip().split("\n")) == 7

    def test_train_then_eval_sweep(self, capsys, desk_config):
        cfg, out_dir = desk_config
        assert run_cli(capsys, "train", "--config", str(cfg))[0] == 0
        code, out, _ = run_cli(capsys, "eval", "--config", str(cfg),
                               "--snr-list", "0,5,10,15,19")
        assert code == 0
        sweep = (out_dir / "sweep.csv").read_text()
        assert sweep.startswith("snr_db,mean_psnr_db,std_psnr_db,n_images,n_draws\n")
        assert len(sweep.strip().split("\n")) == 6

    def test_rerun_same_seed_identical_csvs(self, capsys, desk_config, tmp_path):
        cfg, out_dir = desk_config
        run_cli(capsys, "train", "--config", str(cfg))
        run_cli(capsys, "eval", "--config", str(cfg))
        loss1 = (out_dir / "loss_history.csv").read_bytes()
        sweep1 = (out_dir / "sweep.csv").read_bytes()
        other = tmp_path / "run2"
        run_cli(capsys, "train", "--config", str(cfg), "--out", str(other))
        run_cli(capsys, "eval", "--config", str(cfg), "--out", str(other))
        assert (other / "loss_history.csv").read_bytes() == loss1
        assert (other / "sweep.csv").read_bytes() == sweep1

    def test_missing_dataset_path_nonzero_exit(self, capsys, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"c": 4, "input_size": "16x16x3",
                                   "dataset": {"path": str(tmp_path / "absent")},
                                   "out_dir": str(tmp_path)}))
        code, _, err = run_cli(capsys, "train", "--config", str(cfg))
        assert code == 1
        assert "not a directory" in err

    def test_corrupted_checkpoint_nonzero_exit(self, capsys, desk_config):
        cfg, out_dir = desk_config
        run_cli(capsys, "train", "--config", str(cfg))
        ckpt = out_dir / "checkpoint.dscj"
        raw = bytearray(ckpt.read_bytes())
        raw[:4] = b"XXXX"
        ckpt.write_bytes(bytes(raw))
        code, _, err = run_cli(capsys, "eval", "--config", str(cfg))
        assert code == 1
        assert "magic" in err

    def test_help_lists_every_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for cmd in ("variants", "analyze", "train", "eval"):
            assert cmd in out
