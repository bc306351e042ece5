import numpy as np
import pytest

from abs_polar.cli import main
from abs_polar.construction import CodeSpec
from abs_polar.encoder import encode, hex_to_bits
from oracles import EXAMPLE_INFO, EXAMPLE_SWAPS


@pytest.fixture
def example_spec(tmp_path, capsys):
    path = tmp_path / "code.txt"
    assert main(["construct", "--n", "16", "--k", "8", "--channel", "bec:0.5",
                 "--out", str(path)]) == 0
    capsys.readouterr()
    return path


def test_construct_writes_a_round_tripping_spec(example_spec):
    spec = CodeSpec.from_text(example_spec.read_text())
    assert spec.perms.swap_sets == EXAMPLE_SWAPS and spec.info_set == EXAMPLE_INFO
    assert CodeSpec.from_text(spec.to_text()) == spec


def test_construct_over_other_channels(capsys):
    assert main(["construct", "--n", "8", "--k", "4", "--channel", "bsc:0.11",
                 "--mu", "100000"]) == 0
    spec = CodeSpec.from_text(capsys.readouterr().out)
    assert spec.n == 8 and spec.k == 4
    assert main(["construct", "--n", "8", "--k", "4", "--channel", "awgn:2",
                 "--levels", "8", "--family", "standard"]) == 0
    assert CodeSpec.from_text(capsys.readouterr().out).perms.is_standard


def test_encode_and_decode(example_spec, tmp_path, capsys):
    assert main(["encode", "--spec", str(example_spec), "--msg", "a5"]) == 0
    codeword_hex = capsys.readouterr().out.strip()
    spec = CodeSpec.from_text(example_spec.read_text())
    codeword = encode(spec, hex_to_bits("a5", 8))
    assert np.array_equal(hex_to_bits(codeword_hex, 16), codeword)
    rx = tmp_path / "rx.txt"
    llrs = np.where(codeword == 1, -20.0, 20.0)
    rx.write_text("# header\n" + " ".join(map(str, llrs)) + "\n\n" + ",".join(map(str, llrs)) + "\n")
    assert main(["decode", "--spec", str(example_spec), "--list", "4", "--rx", str(rx)]) == 0
    assert capsys.readouterr().out.split("\n")[:2] == ["a5 PASS", "a5 PASS"]


def test_simulate_is_reproducible(example_spec, tmp_path, capsys):
    out = tmp_path / "fer.csv"
    args = ["simulate", "--spec", str(example_spec), "--channel", "awgn:2", "--list", "2",
            "--crc", "4", "--trials", "40", "--seed", "5", "--out", str(out)]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    second = capsys.readouterr().out
    strip = lambda text: [line.rsplit(",", 1)[0] for line in text.splitlines()]
    assert strip(first) == strip(second)
    assert out.read_text() == second


def test_bec_analyze_output(capsys):
    assert main(["bec-analyze", "--eps", "0.5", "--min-log-n", "6", "--max-log-n", "9"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "family,n,fraction,gamma"
    assert "abs,64,0.5000000000," in lines[5] + lines[6]
    assert sum(line.startswith("# regression") for line in lines) == 2
    assert main(["bec-analyze", "--min-log-n", "5", "--max-log-n", "4"]) == 2


def test_spec_show(example_spec, capsys):
    assert main(["spec-show", "--spec", str(example_spec)]) == 0
    out = capsys.readouterr().out
    assert "n=16 k=8" in out and "swaps at layer 16: 6 10" in out


def test_errors_give_nonzero_exit(tmp_path, capsys):
    assert main(["encode", "--spec", str(tmp_path / "missing.txt"), "--msg", "0"]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("not a spec\n")
    assert main(["spec-show", "--spec", str(bad)]) == 2
    assert "error" in capsys.readouterr().err
