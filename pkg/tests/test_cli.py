import json
import struct

import numpy as np
import pytest

from itq3.cli import main
from itq3.selfcheck import CheckResult


def run(args):
    return main([str(a) for a in args])


class TestPipeline:
    def test_gen_quantize_dequantize(self, tmp_path, capsys):
        raw = tmp_path / "w.bin"
        cont = tmp_path / "w.itq3"
        out = tmp_path / "w2.bin"
        assert run(["gen", "--rows", 4, "--cols", 512, "--dist", "laplace", "--seed", 9, "--out", raw]) == 0
        assert raw.stat().st_size == 4 * 512 * 4
        assert run(["quantize", "--in", raw, "--rows", 4, "--cols", 512, "--out", cont]) == 0
        assert cont.stat().st_size == 32 + 8 * 100
        assert run(["dequantize", "--in", cont, "--out", out]) == 0
        w = np.frombuffer(raw.read_bytes(), dtype="<f4").astype(np.float64)
        w2 = np.frombuffer(out.read_bytes(), dtype="<f4").astype(np.float64)
        assert w2.size == w.size
        rel = np.linalg.norm(w2 - w) / np.linalg.norm(w)
        assert 0.0 < rel < 0.8
        assert "4x512" in capsys.readouterr().out

    def test_gen_deterministic(self, tmp_path):
        a = tmp_path / "a.bin"
        b = tmp_path / "b.bin"
        run(["gen", "--rows", 2, "--cols", 256, "--seed", 5, "--out", a])
        run(["gen", "--rows", 2, "--cols", 256, "--seed", 5, "--out", b])
        assert a.read_bytes() == b.read_bytes()

    def test_eval_on_the_fly(self, tmp_path, capsys):
        raw = tmp_path / "w.bin"
        run(["gen", "--rows", 4, "--cols", 512, "--dist", "outlier", "--seed", 2, "--out", raw])
        capsys.readouterr()
        assert run(["eval", "--ref", raw, "--rows", 4, "--cols", 512]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["n_blocks"] == 8
        assert report["mse"] > 0.0
        assert 0.0 <= report["zero_fraction"] <= 1.0

    def test_eval_container_matches_on_the_fly(self, tmp_path, capsys):
        raw = tmp_path / "w.bin"
        cont = tmp_path / "w.itq3"
        run(["gen", "--rows", 4, "--cols", 512, "--seed", 11, "--out", raw])
        run(["quantize", "--in", raw, "--rows", 4, "--cols", 512, "--out", cont])
        capsys.readouterr()
        run(["eval", "--ref", raw, "--rows", 4, "--cols", 512])
        direct = json.loads(capsys.readouterr().out)
        run(["eval", "--ref", raw, "--rows", 4, "--cols", 512, "--quant", cont])
        via_container = json.loads(capsys.readouterr().out)
        assert via_container == direct

    def test_report_file_and_csv(self, tmp_path, capsys):
        raw = tmp_path / "w.bin"
        report = tmp_path / "report.csv"
        run(["gen", "--rows", 2, "--cols", 512, "--out", raw])
        assert run(["eval", "--ref", raw, "--rows", 2, "--cols", 512,
                    "--report", report, "--format", "csv"]) == 0
        lines = report.read_text().strip().split("\n")
        assert lines[0].startswith("mse,")
        assert len(lines) == 2
        assert str(report) in capsys.readouterr().out

    def test_ablate_json(self, capsys):
        assert run(["ablate", "--blocks", "32,64", "--rows", 2, "--cols", 512, "--replicates", 1]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert [r["block_n"] for r in rows] == [32, 64]
        assert rows[0]["relative_overhead"] == 6.0

    def test_quantize_flags(self, tmp_path):
        raw = tmp_path / "w.bin"
        cont = tmp_path / "w.itq3"
        run(["gen", "--rows", 1, "--cols", 512, "--out", raw])
        assert run(["quantize", "--in", raw, "--rows", 1, "--cols", 512, "--out", cont,
                    "--block", 64, "--variant", "ss", "--policy", "argmin", "--symmetric", "false"]) == 0
        magic, version, flags, rows, cols, block_n, pad = struct.unpack_from(
            "<4sHHQQII", cont.read_bytes(), 0
        )
        assert (magic, flags, block_n) == (b"ITQ3", 3, 64)


class TestExitCodes:
    def test_usage_error_is_exit_1(self, capsys):
        with pytest.raises(SystemExit) as e:
            run(["quantize", "--in", "x", "--rows", 0, "--cols", 4, "--out", "y"])
        assert e.value.code == 1
        assert "error[usage]" in capsys.readouterr().err

    def test_unknown_flag_is_exit_1(self, capsys):
        with pytest.raises(SystemExit) as e:
            run(["gen", "--rows", 1, "--cols", 32, "--out", "x", "--sigma", "2"])
        assert e.value.code == 1

    def test_unknown_command_is_exit_1(self):
        with pytest.raises(SystemExit) as e:
            run(["transmogrify"])
        assert e.value.code == 1

    def test_missing_input_is_exit_2(self, tmp_path, capsys):
        assert run(["dequantize", "--in", tmp_path / "nope.itq3", "--out", tmp_path / "o.bin"]) == 2
        assert "error[io-error]" in capsys.readouterr().err

    def test_bad_magic_is_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.itq3"
        bad.write_bytes(b"XXXX" + b"\x00" * 40)
        assert run(["dequantize", "--in", bad, "--out", tmp_path / "o.bin"]) == 2
        assert "error[bad-magic]" in capsys.readouterr().err

    def test_truncated_container_is_exit_2(self, tmp_path, capsys):
        raw = tmp_path / "w.bin"
        cont = tmp_path / "w.itq3"
        run(["gen", "--rows", 1, "--cols", 256, "--out", raw])
        run(["quantize", "--in", raw, "--rows", 1, "--cols", 256, "--out", cont])
        cont.write_bytes(cont.read_bytes()[:-4])
        assert run(["dequantize", "--in", cont, "--out", tmp_path / "o.bin"]) == 2
        assert "error[truncated]" in capsys.readouterr().err

    def test_wrong_raw_size_is_exit_2(self, tmp_path, capsys):
        raw = tmp_path / "w.bin"
        raw.write_bytes(b"\x00" * 10)
        assert run(["quantize", "--in", raw, "--rows", 1, "--cols", 256, "--out", tmp_path / "o"]) == 2
        assert "error[size-mismatch]" in capsys.readouterr().err

    def test_ref_dims_mismatch_is_exit_1(self, tmp_path, capsys):
        raw = tmp_path / "w.bin"
        cont = tmp_path / "w.itq3"
        run(["gen", "--rows", 2, "--cols", 256, "--out", raw])
        run(["quantize", "--in", raw, "--rows", 2, "--cols", 256, "--out", cont])
        raw2 = tmp_path / "w2.bin"
        run(["gen", "--rows", 1, "--cols", 256, "--out", raw2])
        assert run(["eval", "--ref", raw2, "--rows", 1, "--cols", 256, "--quant", cont]) == 1
        assert "error[bad-shape]" in capsys.readouterr().err


class TestSelfcheckCommand:
    def test_all_pass_exits_zero(self, capsys, monkeypatch):
        fake = [CheckResult("alpha", True, "ok"), CheckResult("beta", True, "ok")]
        monkeypatch.setattr("itq3.cli.run_selfcheck", lambda: fake)
        assert run(["selfcheck"]) == 0
        out = capsys.readouterr().out
        assert "[✓] alpha" in out
        assert "2/2 properties passed" in out

    def test_failure_exits_one(self, capsys, monkeypatch):
        fake = [CheckResult("alpha", True, "ok"), CheckResult("beta", False, "broke")]
        monkeypatch.setattr("itq3.cli.run_selfcheck", lambda: fake)
        assert run(["selfcheck"]) == 1
        captured = capsys.readouterr()
        assert "[✗] beta" in captured.out
        assert "error[selfcheck-failed]: beta" in captured.err
