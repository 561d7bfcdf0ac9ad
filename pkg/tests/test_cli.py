import io
import json

import numpy as np
import pytest

from dpbeam.cli import main
from dpbeam.config import ConfigError, locate, parse_config
from dpbeam.sim import ExperimentConfig, LinkEnd, build_design
from dpbeam.tables import fmt, read_codebooks, write_codebooks

SMALL = {"tx": {"m_h": 4, "m_v": 4, "q_h": 2, "q_v": 2, "l_h": 3, "l_v": 3},
         "rx": {"m_h": 4, "m_v": 4, "q_h": 2, "q_v": 2, "l_h": 3, "l_v": 3},
         "trials": 6, "snr_db": [-5, 0], "pattern": {"az_points": 5, "el_points": 3}}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(SMALL, indent=2))
    return str(p)


# --- config --------------------------------------------------------------------

def test_parse_full_config():
    text = json.dumps({**SMALL, "channel": {"k_db": "inf", "phi_range_deg": [-5, 5], "chi_range": [0.3, 0.3]},
                       "kappa1": [1, 1], "phase_bits": None, "criterion": "mip", "seed": 2 ** 64 - 1})
    cfg = parse_config(text)
    exp = cfg.experiment
    assert exp.tx == LinkEnd(4, 4, 2, 2, 3, 3, 4)
    assert np.isinf(exp.channel.k_db)
    assert exp.channel.phi_range[1] == pytest.approx(np.pi / 36)
    assert exp.kappa1 == 1 + 1j and exp.phase_bits is None and exp.seed == 2 ** 64 - 1


@pytest.mark.parametrize("text, line, key", [
    ('{\n  "trials": 0\n}', 2, "trials"),
    ('{\n  "tx": {\n    "m_h": 8,\n    "bogus": 1\n  }\n}', 4, "tx.bogus"),
    ('{\n "snr_db": []\n}', 2, "snr_db"),
    ('{\n "channel": {\n  "k_db": 13.2,\n  "n_nlos": -1\n }\n}', 4, "channel.n_nlos"),
    ('{\n "criterion": "best"\n}', 2, "criterion"),
    ('{\n "seed": -1\n}', 2, "seed"),
    ('{\n "trials": 5,\n "pilot_j": 2,\n', 4, None),
])
def test_config_errors_name_the_line(text, line, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "c.json")
    msg = str(err.value)
    assert msg.startswith(f"c.json:{line}:")
    if key:
        assert f" {key}:" in msg


def test_locate_nested():
    text = '{\n "rx": {"m_h": 1},\n "tx": {\n  "m_h": 2\n }\n}'
    assert locate(text, ("tx", "m_h")) == 4
    assert locate(text, ("nope",)) is None


def test_pattern_region_checked():
    with pytest.raises(ConfigError):
        parse_config(json.dumps({**SMALL, "pattern": {"region": [3, 1]}}))


# --- tables --------------------------------------------------------------------

def test_fmt_nine_digits():
    assert fmt(np.pi) == "3.14159265"
    assert fmt(3) == "3"
    assert fmt(1e-20) == "1e-20"


@pytest.mark.parametrize("hybrid", [True, False])
def test_codebook_round_trip(hybrid):
    exp = ExperimentConfig(tx=LinkEnd(4, 4, 2, 2, 3, 3), rx=LinkEnd(4, 4, 2, 2, 3, 3), hybrid=hybrid)
    d = build_design(exp, "se")
    buf = io.StringIO()
    write_codebooks(buf, [d.align_tx, d.single_rx])
    text = buf.getvalue()
    assert text.splitlines()[0].startswith("# codebook end=tx")
    assert text.splitlines()[2].startswith("end,criterion,p,q,kind,w0_re,w0_im")
    back = read_codebooks(io.StringIO(text))
    assert np.abs(back["tx"].matrix() - d.align_tx.matrix()).max() < 1e-8
    assert np.abs(back["rx"].matrix() - d.single_rx.matrix()).max() < 1e-8
    assert back["rx"].geom.dual is False
    if hybrid:
        h0, h1 = back["tx"].codewords[0].hybrid, d.align_tx.codewords[0].hybrid
        assert np.abs(h0.analog - h1.analog).max() < 1e-8
        assert np.abs(h0.digital - h1.digital).max() < 1e-8
    else:
        assert back["tx"].codewords[0].hybrid is None


# --- CLI -----------------------------------------------------------------------

def test_design_command(cfg_path, tmp_path):
    out = tmp_path / "cb.csv"
    assert main(["design", "--config", cfg_path, "--criterion", "baseline", "--out", str(out)]) == 0
    books = read_codebooks(io.StringIO(out.read_text()))
    assert set(books) == {"tx", "rx"}
    assert books["tx"].criterion == "baseline"
    assert "criterion=dft-baseline" in out.read_text()


def test_pattern_command(cfg_path, tmp_path):
    out = tmp_path / "pat.csv"
    assert main(["pattern", "--config", cfg_path, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "theta_az,theta_el,gain,gain_db,gain_normalized"
    assert len(lines) == 1 + 5 * 3


def test_rate_command_and_determinism(cfg_path, tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["rate", "--config", cfg_path, "--seed", "7", "--out", str(a)]) == 0
    assert main(["rate", "--config", cfg_path, "--seed", "7", "--threads", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "snr_db,mean_rate,stderr,trials"
    assert lines[1].startswith("-5,") and lines[1].endswith(",6")
    assert "mean_rate" in capsys.readouterr().out


def test_rate_overrides(cfg_path, capsys):
    assert main(["rate", "--config", cfg_path, "--snr-db", "-3,2", "--trials", "2", "--pilot-j", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [l.split(",")[0] for l in lines[1:]] == ["-3", "2"]
    assert all(l.endswith(",2") for l in lines[1:])


def test_cdf_command(cfg_path, capsys):
    assert main(["cdf", "--config", cfg_path, "--trials", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "rate,cdf"
    assert [float(l.split(",")[1]) for l in lines[1:]] == [0.25, 0.5, 0.75, 1.0]


def test_verify_command(cfg_path, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["verify", "--config", cfg_path, "--out", str(a)]) == 0
    assert main(["verify", "--config", cfg_path, "--threads", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert all(l.startswith("PASS") for l in a.read_text().splitlines())


def test_verify_reports_failure(cfg_path, monkeypatch, capsys):
    from dpbeam import verify
    monkeypatch.setattr(verify, "CHECKS", verify.CHECKS + [("broken", lambda cfg: (False, "x"))])
    assert main(["verify", "--config", cfg_path]) == 1
    assert "FAIL broken x" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["rate", "--trials", "0"],
    ["rate", "--seed", str(2 ** 64)],
    ["rate", "--criterion", "best"],
    ["rate", "--snr-db", "a,b"],
])
def test_config_error_exit_code(argv):
    assert main(argv) == 2


def test_bad_config_file_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n "trials": 0\n}')
    assert main(["rate", "--config", str(p)]) == 2
    assert f"{p}:2" in capsys.readouterr().err


def test_io_error_exit_code(tmp_path):
    assert main(["rate", "--config", str(tmp_path / "missing.json")]) == 3
    assert main(["cdf", "--trials", "1", "--out", str(tmp_path / "no" / "dir.csv")]) == 3


def test_readme_schema_is_the_default_config():
    import pathlib
    import re
    text = (pathlib.Path(__file__).parents[1] / "README.md").read_text()
    cfg = parse_config(re.search(r"```json\n(.*?)```", text, re.S).group(1))
    assert cfg.experiment == ExperimentConfig() and cfg.out is None
