import json
import subprocess
import sys

import pytest

from afdmsim import cli

SMALL_BER = """
[experiment]
kind = ber
waveforms = ofdm, otfs, afdm
seed = 11
trials = 48

[frame]
n = 64
doppler_bins = 8
delay_bins = 8

[channel]
l_max = 3
alpha_max = 2
n_paths = 3

[ber]
snr_db = 0, 10, 20
batch = 8
"""


def write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def header(path):
    lines = [ln for ln in path.read_text().splitlines() if ln.startswith("#")]
    return dict(ln[2:].split(": ", 1) for ln in lines)


def test_fig3_end_to_end(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["run", "--config", "fig3.cfg", "--out", str(out), "--quiet"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["outputs"] == ["ambiguity_cut.csv"]
    assert {"config", "seed", "version", "wall_time_s"} <= set(man)
    h = header(out / "ambiguity_cut.csv")
    assert h["fingerprint"] == man["fingerprint"]
    cfg = cli.load_config(cli.bundled_config("fig3.cfg"))
    assert h["fingerprint"] == cfg.fingerprint()
    body = [ln for ln in (out / "ambiguity_cut.csv").read_text().splitlines() if not ln.startswith("#")]
    assert body[0] == "waveform,axis,value,magnitude_db"
    assert {ln.split(",")[1] for ln in body[1:]} == {"delay", "doppler"}
    assert {ln.split(",")[0] for ln in body[1:]} == {"ofdm", "ocdm", "otfs", "afdm"}


def test_ber_outputs_are_byte_identical_across_threads(tmp_path):
    cfg = write(tmp_path, SMALL_BER)
    files = {}
    for t in (1, 3):
        out = tmp_path / f"t{t}"
        assert cli.main(["run", "--config", cfg, "--out", str(out), "--threads", str(t), "--quiet"]) == 0
        files[t] = (out / "ber.csv").read_bytes()
    assert files[1] == files[3]
    rows = files[1].decode().splitlines()
    assert "waveform,snr_db,trials,bit_errors,ber" in rows
    assert len([r for r in rows if not r.startswith("#")]) == 1 + 3 * 3


def test_seed_override_changes_fingerprint(tmp_path):
    cfg = write(tmp_path, SMALL_BER)
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["run", "--config", cfg, "--out", str(a), "--quiet"])
    cli.main(["run", "--config", cfg, "--out", str(b), "--seed", "12", "--quiet"])
    ha, hb = header(a / "ber.csv"), header(b / "ber.csv")
    assert ha["seed"] == "11" and hb["seed"] == "12"
    assert ha["fingerprint"] != hb["fingerprint"]


@pytest.mark.parametrize("kind", ["papr", "security", "sensing", "effective-channel"])
def test_other_experiments_run(tmp_path, kind):
    n_paths = 0 if kind == "security" else 3
    text = f"""
[experiment]
kind = {kind}
waveforms = afdm
trials = 50
[channel]
l_max = 3
alpha_max = 2
n_paths = {n_paths}
"""
    out = tmp_path / "o"
    assert cli.main(["run", "--config", write(tmp_path, text), "--out", str(out), "--quiet"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    for name in man["outputs"]:
        text = (out / name).read_text()
        assert man["fingerprint"] in text
    if kind == "sensing":
        est = json.loads((out / "estimate.json").read_text())
        ch = json.loads((out / "channel.json").read_text())
        assert sorted(t[2:] for t in est["channel"]["taps"]) == sorted(t[2:] for t in ch["channel"]["taps"])


@pytest.mark.parametrize("text,needle", [
    ("[experiment]\nkind = ber\nbogus = 1\n", "bogus"),
    ("[experiment]\nkind = nonsense\n", "kind"),
    ("[experiment]\nwaveforms = afdm\n", "required"),
    ("[experiment]\nkind = ber\n[frame]\nn = sixty\n", "n"),
    ("[experiment]\nkind = ber\n[extra]\n", "extra"),
    ("not an ini file", "syntax"),
    ("[experiment]\nkind = ber\nwaveforms = otfs\n[frame]\nn = 64\ndoppler_bins = 8\ndelay_bins = 4\n", "delay_bins"),
])
def test_malformed_config_exits_2_without_outputs(tmp_path, capsys, text, needle):
    out = tmp_path / "never"
    assert cli.main(["run", "--config", write(tmp_path, text), "--out", str(out)]) == 2
    assert not out.exists()
    assert needle in capsys.readouterr().err


def test_infeasible_physics_exits_3(tmp_path):
    text = "[experiment]\nkind = ber\n[frame]\nn = 16\n[channel]\nl_max = 3\nalpha_max = 6\nn_paths = 2\n"
    out = tmp_path / "never"
    assert cli.main(["run", "--config", write(tmp_path, text), "--out", str(out)]) == 3
    assert not out.exists()
    text = "[experiment]\nkind = ber\n[frame]\nprefix_len = 1\n[channel]\nl_max = 3\nn_paths = 2\n"
    assert cli.main(["run", "--config", write(tmp_path, text), "--out", str(out)]) == 3


def test_io_error_exits_4(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = write(tmp_path, "[experiment]\nkind = papr\ntrials = 10\n")
    assert cli.main(["run", "--config", cfg, "--out", str(blocker / "sub")]) == 4


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    cfg = write(tmp_path, "[experiment]\nkind = papr\ntrials = 10\n")
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.main(["run", "--config", cfg, "--quiet"]) == 0
    assert (tmp_path / "env" / "papr_ccdf.csv").exists()
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "flag"), "--quiet"]) == 0
    assert (tmp_path / "flag" / "papr_ccdf.csv").exists()


def test_describe(capsys, tmp_path):
    assert cli.main(["describe", "--config", "fig2.cfg"]) == 0
    text = capsys.readouterr().out
    assert f"c1 = {7 / 128!r}" in text
    assert "K*L = 8*8 = 64 vs N = 64: ok" in text
    assert "pilot guard" in text and "unambiguous" in text
    ident = write(tmp_path, "[experiment]\nkind = ber\n[frame]\nn = 64\nguard = 0\n")
    assert cli.main(["describe", "--config", ident]) == 0
    assert f"c1 = {1 / 128!r}" in capsys.readouterr().out


def test_console_entry_point_and_usage_errors(tmp_path):
    r = subprocess.run([sys.executable, "-m", "afdmsim.cli", "describe", "--config", "fig3.cfg"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "N = 64" in r.stdout
    assert cli.main(["launch"]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
