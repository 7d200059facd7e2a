import io
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ttmkit import csvio, jcmodel as jc
from ttmkit.analysis import Table
from ttmkit.cli import main

UNDER = jc.ModelParams(1.0, 0.8)


def run(*argv):
    out = io.StringIO()
    return main([str(a) for a in argv], out=out), out.getvalue()


# -- csv layer --

@settings(max_examples=50, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips_doubles(x):
    assert float(csvio.fmt(x)) == x


def test_series_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    mats = rng.normal(size=(5, 3, 3)) + 1j * rng.normal(size=(5, 3, 3))
    path = tmp_path / "s.csv"
    csvio.write_series(path, 0.25, mats)
    dt, back = csvio.read_series(path)
    assert dt == 0.25
    np.testing.assert_array_equal(back, mats)
    text = path.read_text()
    assert text.startswith("# dt = 0.25\n# dim = 3\n")
    assert "k,i,j,re,im\n" in text and "\r" not in text


def test_table_round_trip(tmp_path):
    t = Table(("a", "b"), [[1.0, 1 / 3], [np.pi, -2e-300]], {"note": "x"})
    path = tmp_path / "t.csv"
    csvio.write_table(path, t)
    back = csvio.read_table(path)
    assert back.columns == ("a", "b") and back.meta == {"note": "x"}
    np.testing.assert_array_equal(back.rows, t.rows)


GOOD = "# dt = 0.5\n# dim = 1\nk,i,j,re,im\n1,0,0,0.5,0\n2,0,0,0.25,0\n"


@pytest.mark.parametrize("text, line", [
    (GOOD.replace("k,i,j,re,im", "k,i,j,re"), 3),
    (GOOD.replace("2,0,0,0.25,0", "2,0,0,abc,0"), 5),
    (GOOD.replace("2,0,0,0.25,0", "1,0,0,0.25,0"), 5),
    (GOOD.replace("2,0,0,0.25,0", "2,1,0,0.25,0"), 5),
    (GOOD.replace("2,0,0,0.25,0", "2,0,0,0.25"), 5),
    (GOOD.replace("2,0,0,0.25,0", "3,0,0,0.25,0"), 1),
    (GOOD.replace("# dt = 0.5", "# dt = -1"), 1),
    (GOOD.replace("2,0,0,0.25,0", "2,0,0,nan,0"), 5),
])
def test_series_format_errors(tmp_path, text, line):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(csvio.CsvFormatError) as err:
        csvio.read_series(path)
    assert err.value.line == line


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError):
        csvio.atomic_write(target, "data")
    assert not target.exists()


# -- commands --

def test_info():
    code, text = run("info", "--g", 1, "--kappa", 0.8)
    assert code == 0
    assert "Underdamped" in text and "0.2" in text
    assert "3.2063" in text
    code, text = run("info", "--g", 1, "--kappa", 4)
    assert "CriticallyDamped" in text and "none" in text
    code, text = run("info", "--g", 1, "--kappa", 8)
    assert "Overdamped" in text


@pytest.mark.parametrize("argv", [
    ["info", "--g", "1", "--kappa", "-1"],
    ["info", "--g", "0", "--kappa", "1"],
    ["info", "--g", "x", "--kappa", "1"],
    ["info", "--g", "1"],
    ["markovian-steps", "--g", "1", "--kappa", "1", "-n", "0"],
    ["bogus"],
])
def test_input_errors_exit_2(argv, capsys):
    assert main(argv, out=io.StringIO()) == 2
    assert capsys.readouterr().err


def test_markovian_steps_command():
    code, text = run("markovian-steps", "--g", 1, "--kappa", 0.8, "-n", 2)
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "m,t,gt"
    assert float(lines[2].split(",")[1]) == pytest.approx(2 * np.pi / np.sqrt(0.96), rel=1e-15)
    code, text = run("markovian-steps", "--g", 1, "--kappa", 8)
    assert code == 0 and text.startswith("#")


def test_pipeline_coherence(tmp_path):
    maps, tens, traj = (tmp_path / n for n in ("m.csv", "t.csv", "p.csv"))
    assert run("maps", "--g", 1, "--kappa", 0.8, "--dt", 0.1, "--steps", 60, "--out", maps)[0] == 0
    assert run("extract", "--in", maps, "--out", tens)[0] == 0
    _, T = csvio.read_series(tens)
    for k in (2, 10, 60):
        assert T[k - 1, 0, 0].real == pytest.approx(jc.Tkc(UNDER, 0.1, k), abs=1e-10)
    assert run("propagate", "--in", tens, "--init", "0.6,0.2", "--steps", 60, "--out", traj)[0] == 0
    t = csvio.read_table(traj)
    assert t.columns == ("t", "re", "im")
    ref = (0.6 + 0.2j) * jc.Ec(UNDER, t.column("t"))
    np.testing.assert_allclose(t.column("re") + 1j * t.column("im"), ref, atol=1e-9)


def test_pipeline_atom(tmp_path):
    maps, tens, traj = (tmp_path / n for n in ("m.csv", "t.csv", "p.csv"))
    assert run("maps", "--g", 1, "--kappa", 0.8, "--dt", 0.2, "--steps", 30,
               "--channel", "atom", "--out", maps)[0] == 0
    assert run("extract", "--in", maps, "--out", tens)[0] == 0
    init = "0.7,0.3,0.2,-0.1"
    assert run("propagate", "--in", tens, "--init", init, "--steps", 30, "--out", traj)[0] == 0
    t = csvio.read_table(traj)
    _, E = csvio.read_series(maps)
    rho0 = np.array([0.7, 0.3, 0.2, -0.1])
    ref = np.vstack([rho0, (E @ rho0).real])
    got = np.column_stack([t.column(c) for c in ("p_up", "p_down", "c_re", "c_im")])
    np.testing.assert_allclose(got, ref, atol=1e-9)


def test_propagate_cutoff(tmp_path):
    maps, tens, traj = (tmp_path / n for n in ("m.csv", "t.csv", "p.csv"))
    run("maps", "--g", 1, "--kappa", 0.8, "--dt", 0.5, "--steps", 10, "--out", maps)
    run("extract", "--in", maps, "--out", tens)
    assert run("propagate", "--in", tens, "--init", "1", "--steps", 10,
               "--cutoff", 1, "--out", traj)[0] == 0
    t = csvio.read_table(traj)
    np.testing.assert_allclose(t.column("re"), jc.Ec(UNDER, 0.5) ** np.arange(11), atol=1e-14)
    assert t.meta["cutoff"] == "1"
    for bad in ("0", "x"):
        assert run("propagate", "--in", tens, "--init", "1", "--steps", 3,
                   "--cutoff", bad, "--out", traj)[0] == 2


def test_propagate_init_mismatch(tmp_path):
    maps, tens, out = (tmp_path / n for n in ("m.csv", "t.csv", "p.csv"))
    run("maps", "--g", 1, "--kappa", 0.8, "--dt", 0.5, "--steps", 4, "--out", maps)
    run("extract", "--in", maps, "--out", tens)
    assert run("propagate", "--in", tens, "--init", "1,0,0,0", "--steps", 3, "--out", out)[0] == 2
    assert not out.exists()


def test_malformed_input_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(GOOD.replace("2,0,0,0.25,0", "2,0,0,zz,0"))
    out = tmp_path / "o.csv"
    assert run("extract", "--in", bad, "--out", out)[0] == 2
    assert "bad.csv:5" in capsys.readouterr().err
    assert not out.exists()


def test_missing_input_exit_3(tmp_path):
    assert run("extract", "--in", tmp_path / "nope.csv", "--out", tmp_path / "o.csv")[0] == 3


def test_unwritable_output_exit_3(tmp_path):
    out = tmp_path / "no" / "such" / "dir.csv"
    assert run("maps", "--g", 1, "--kappa", 0.8, "--dt", 0.1, "--steps", 2, "--out", out)[0] == 3
    assert not out.exists()


def test_maps_validation(tmp_path):
    out = tmp_path / "m.csv"
    assert run("maps", "--g", 1, "--kappa", 0.8, "--dt", 0, "--steps", 2, "--out", out)[0] == 2
    assert run("maps", "--g", 1, "--kappa", 0.8, "--dt", 0.1, "--steps", 0, "--out", out)[0] == 2
    assert not out.exists()


def test_kernel_compare(tmp_path):
    out = tmp_path / "k.csv"
    assert run("kernel-compare", "--g", 1, "--kappa", 0.8, "--t-max", 0.8, "--samples", 4,
               "--k", "2,4,8", "--out", out)[0] == 0
    t = csvio.read_table(out)
    assert t.columns == ("t", "k", "difference") and len(t.rows) == 12
    assert run("kernel-compare", "--g", 1, "--kappa", 0.8, "--t-max", 1, "--k", ",",
               "--out", out)[0] == 2
    assert run("kernel-compare", "--g", 1, "--kappa", 0.8, "--t-max", 1, "--k", "1,2",
               "--out", out)[0] == 2


def test_heatmap_with_zero_lines(tmp_path):
    out, zeros = tmp_path / "h.csv", tmp_path / "z.csv"
    assert run("heatmap", "--gt-max", 10, "--ratio-max", 1.5, "--nx", 11, "--ny", 7,
               "--zero-orders", 2, "--zeros-out", zeros, "--out", out)[0] == 0
    h = csvio.read_table(out)
    assert h.columns == ("gt", "r", "T2c") and len(h.rows) == 77
    assert np.all(h.column("T2c") <= 0)
    z = csvio.read_table(zeros)
    assert set(z.column("m")) == {1.0, 2.0}


def test_trajectory(tmp_path):
    out = tmp_path / "tr.csv"
    assert run("trajectory", "--g-kappa-list", "1:0.8,1:4,1:8", "--t-max", 10,
               "--samples", 21, "--mark-zeros", 3, "--out", out)[0] == 0
    t = csvio.read_table(out)
    assert len(t.rows) == 3 * 21 + 3
    assert run("trajectory", "--g-kappa-list", "1-0.8", "--t-max", 10, "--out", out)[0] == 2


def test_outputs_byte_identical(tmp_path):
    cmds = [
        ["heatmap", "--gt-max", 10, "--ratio-max", 2, "--nx", 20, "--ny", 10],
        ["kernel-compare", "--g", 1, "--kappa", 0.8, "--t-max", 2, "--samples", 5],
        ["trajectory", "--g-kappa-list", "1:0.8,1:4,1:8", "--t-max", 10, "--mark-zeros", 3],
        ["maps", "--g", 1, "--kappa", 0.8, "--dt", 0.3, "--steps", 10, "--channel", "atom"],
    ]
    for i, cmd in enumerate(cmds):
        a, b = tmp_path / f"{i}a.csv", tmp_path / f"{i}b.csv"
        assert run(*cmd, "--out", a)[0] == 0
        assert run(*cmd, "--out", b)[0] == 0
        assert a.read_bytes() == b.read_bytes()


def test_selftest_pass_and_perturbed():
    code, text = run("selftest")
    assert code == 0, text
    assert "FAIL" not in text
    code, text = run("selftest", "--perturb", 1e-6)
    assert code == 1 and "FAIL" in text


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ttmkit", "info", "--g", "1", "--kappa", "-2"],
                          capture_output=True, text=True, cwd=tmp_path, env=dict(os.environ))
    assert proc.returncode == 2
    assert proc.stdout == "" and "kappa" in proc.stderr
