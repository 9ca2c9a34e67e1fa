import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankone import harness as H

floats = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(re=floats, im=floats, Y=st.floats(1, 50), ball=st.integers(1, 3), seed=st.integers(0, 2**31),
       out=st.text("abcdefgh/_-.", min_size=1, max_size=12))
def test_config_roundtrip_bytes(re, im, Y, ball, seed, out):
    cfg = H.ExperimentConfig(nu=complex(re, im), Y=Y, ball=ball, seed=seed, out=out)
    text = cfg.dump()
    again = H.parse_config(text)
    assert again == cfg
    assert again.dump() == text


def test_config_errors():
    with pytest.raises(H.ConfigError):
        H.parse_config("nu=1,2,3\n")
    with pytest.raises(H.ConfigError):
        H.parse_config("colour=red\n")
    with pytest.raises(H.ConfigError):
        H.parse_config("just words\n")


SYNTH = "# group=synthetic R=9.53 normalization=sqrt-y-K expansion=cos\n"


def test_maass_zero_file(tmp_path):
    p = tmp_path / "z.txt"
    p.write_text(SYNTH + "1 0\n2 0.0,0.0\n")
    h = H.load_maass(p)
    assert h.kind == "zero"
    assert np.all(h(np.array([[0.1]]), np.array([1.0])) == 0)


def test_maass_parse_error_has_line(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text(SYNTH + "1 1.0\n2 0.5\n3 oops\n")
    with pytest.raises(H.IngestError) as e:
        H.load_maass(p)
    assert e.value.line == 4


@pytest.mark.parametrize("body", ["1 1.0\n1 2.0\n", "0 1.0\n", "1 inf\n", "1 2 3\n"])
def test_maass_invalid_rows(body):
    with pytest.raises(H.IngestError):
        H.parse_maass(SYNTH + body)


def test_maass_free_comments_skipped():
    m = H.parse_maass(SYNTH + "## made-up values, not a real form\n1 1.0\n")
    assert m.coefficients == {1: 1.0}


def test_maass_header_required():
    with pytest.raises(H.IngestError):
        H.parse_maass("# group=x R=1\n1 1\n")


def test_maass_truncation(tmp_path):
    rng = np.random.default_rng(0)
    p = tmp_path / "m.txt"
    p.write_text(SYNTH + "".join(f"{n} {rng.normal()!r}\n" for n in range(1, 9)))
    full = H.load_maass(p)
    half = H.load_maass(p, n_max=4)
    x = np.linspace(-0.5, 0.5, 7)[:, None]
    for y in (1.0, 1.5, 3.0):
        yy = np.full(7, y)
        assert np.max(np.abs(full(x, yy) - half(x, yy))) <= 1e-8


def test_emit_csv(tmp_path):
    rows = [{"a": 1, "b": 0.1}, {"a": 2, "b": 1 + 2j}]
    p = H.emit_csv(rows, ["a", "b"], tmp_path / "new" / "t.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "a,b"
    again = H.emit_csv(rows, ["a", "b"], tmp_path / "new" / "u.csv")
    assert again.read_bytes() == p.read_bytes()
    with pytest.raises(ValueError):
        H.emit_csv([{"a": 1}], ["a", "b"], tmp_path / "x.csv")
    with pytest.raises(FileNotFoundError):
        H.emit_csv(rows, ["a", "b"], tmp_path / "missing" / "t.csv", create=False)


def test_plotscript_refers_to_csv(tmp_path):
    p = H.emit_csv([{"h": 0.1, "r": 1e-5}], ["h", "r"], tmp_path / "conv.csv")
    gp = H.emit_plotscript(p)
    text = gp.read_text()
    assert "'conv.csv'" in text
    assert "logscale" in text
    with pytest.raises(FileNotFoundError):
        H.emit_plotscript(tmp_path / "nope.csv")


def test_exit_codes(tmp_path):
    assert H.cli_dispatch([]) == H.EXIT_USAGE
    assert H.cli_dispatch(["suite", "--bogus"]) == H.EXIT_FLAG
    assert H.cli_dispatch(["tess", "--config", str(tmp_path / "none.cfg")]) == H.EXIT_CONFIG_IO
    bad = tmp_path / "bad.cfg"
    bad.write_text("nu=abc\n")
    assert H.cli_dispatch(["tess", "--config", str(bad)]) == H.EXIT_CONFIG
    m = tmp_path / "bad.maass"
    m.write_text(SYNTH + "1 x\n")
    assert H.cli_dispatch(["roundtrip", "--maass", str(m), "--out", str(tmp_path / "o")]) == H.EXIT_INGEST
    assert H.cli_dispatch(["kernel-check", "--nu", "-1.5", "--out", str(tmp_path / "o")]) == H.EXIT_NUMERIC
    assert H.cli_dispatch(["tess", "--out", str(tmp_path / "missing"), "--no-mkdir"]) == H.EXIT_CONFIG_IO


def test_tess_subcommand(tmp_path, capsys):
    exp = tmp_path / "tess.txt"
    assert H.cli_dispatch(["tess", "--out", str(tmp_path), "--export", str(exp)]) == H.EXIT_OK
    assert exp.read_text().startswith("tessellation gamma2")
    assert (tmp_path / "tess.csv").exists()
    assert "PASS [6]" in capsys.readouterr().out


def test_decompose_subprocess(tmp_path):
    r = subprocess.run([sys.executable, "-m", "rankone.harness", "decompose", "--random", "1000",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0
    errs = [float(l.split()[-1]) for l in r.stdout.splitlines() if "max recomposition error" in l]
    assert len(errs) == 2 and max(errs) <= 1e-12
