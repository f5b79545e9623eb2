import json

import pytest

from fraclap import cli


def _cfg(**kw):
    base = {"version": 1, "n": 1, "s": 0.5, "task": {"constants": {}}}
    base.update(kw)
    return json.dumps(base)


def test_minimal_config():
    cfg = cli.parse_config(_cfg().encode())
    assert cfg.task_name == "constants" and cfg.params.s == 0.5


@pytest.mark.parametrize("text,pointer", [
    (_cfg(s=1.2), "/s"),
    (_cfg(n=4), "/n"),
    (json.dumps({"version": 1, "n": 1, "s": 0.5}), ""),
    (_cfg(extra=1), "/extra"),
    (_cfg(task={"wos": {"x": [0.1], "seeds": 3}}), "/task/wos/seeds"),
    (_cfg(task={"rates": {"kind": "rhs", "deltas": [0.1, 2.0, 0.01]}}), "/task/rates/deltas/1"),
    (_cfg(version=2), "/version"),
])
def test_config_errors_point_at_key(text, pointer):
    with pytest.raises(cli.ConfigError) as exc:
        cli.parse_config(text)
    assert exc.value.pointer == pointer


def test_syntax_and_encoding_errors():
    with pytest.raises(cli.ConfigError, match="syntax"):
        cli.parse_config("{version: 1}")
    with pytest.raises(cli.ConfigError, match="UTF-8"):
        cli.parse_config(b"\xff\xfe")


def test_version_hint():
    with pytest.raises(cli.ConfigError, match="version 1"):
        cli.parse_config(_cfg(version=0))


def test_verify_suite_needs_no_params():
    cfg = cli.parse_config(json.dumps({"version": 1, "task": {"verify-suite": {}}}))
    assert cfg.params is None
    with pytest.raises(cli.ConfigError) as exc:
        cli.parse_config(json.dumps({"version": 1, "task": {"wos": {"x": [0.0]}}}))
    assert exc.value.pointer == "/n"


def test_config_round_trip():
    text = _cfg(task={"rates": {"kind": "rhs", "beta": 0.75}}, output={"format": "csv"})
    cfg = cli.parse_config(text)
    again = cli.parse_config(json.dumps(cfg.to_dict()))
    assert again.to_dict() == cfg.to_dict()


def test_constants(capsys):
    assert cli.main(["constants", "--n", "1", "--s", "0.5"]) == 0
    out, err = capsys.readouterr()
    assert json.loads(out)["c"] == pytest.approx(0.3183098862, abs=1e-10)
    assert "c=0.3183098862" in err


def test_rates_task(tmp_path):
    out = tmp_path / "r.csv"
    assert cli.main(["rates", "--n", "1", "--s", "0.5", "--kind", "rhs", "--beta", "0.75", "--out", str(out)]) == 0
    fit = json.loads((tmp_path / "r.fit.json").read_text())
    assert fit["exponent"] == pytest.approx(0.25, abs=0.05) and not fit["log_factor"]
    lines = out.read_text().splitlines()
    assert lines[0] == "x0,delta,value" and len(lines) > 3


def test_config_file_and_flag_override(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(_cfg(task={"rates": {"kind": "rhs", "beta": 0.25}}))
    out = tmp_path / "o.csv"
    assert cli.main(["rates", "--config", str(path), "--beta", "0.75", "--out", str(out)]) == 0
    assert json.loads((tmp_path / "o.fit.json").read_text())["beta"] == 0.75
    # a config for another task is a usage error
    assert cli.main(["wos", "--config", str(path)]) == cli.EXIT_USAGE


def test_eval_kernel_csv(capsys):
    assert cli.main(["eval-kernel", "--n", "2", "--s", "0.5", "--kernel", "green",
                     "--x", "[[0.1, 0.2], [0.0, 0.5]]", "--y", "[[0.3, 0.0]]"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x0,x1,y0,y1,delta,value"
    assert all(float(row.split(",")[-1]) > 0 for row in lines[1:])


def test_points_csv(tmp_path, capsys):
    pts = tmp_path / "p.csv"
    pts.write_text("x0,x1\n0.1,0.2\n0.3,0.0\n")
    assert cli.main(["eval-kernel", "--n", "2", "--s", "0.5", "--kernel", "torsion", "--points", str(pts)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


@pytest.mark.parametrize("argv,code", [
    (["constants", "--n", "1", "--s", "1.5"], cli.EXIT_USAGE),
    (["eval-kernel", "--n", "1", "--s", "0.5", "--kernel", "poisson", "--x", "[[0.0]]", "--y", "[[0.5]]"],
     cli.EXIT_NUMERIC),
    (["solve-semilinear", "--n", "1", "--s", "0.5", "--scheme", "superlinear", "--power", "8", "--beta", "0.3",
      "--q", "8", "--lam", "1"], cli.EXIT_NONEXISTENCE),
    (["wos", "--n", "2", "--s", "0.5", "--x", "[[0.99999, 0]]", "--max-steps", "1", "--n-paths", "2000"],
     cli.EXIT_UNRELIABLE),
])
def test_exit_codes(argv, code, capsys):
    assert cli.main(argv) == code
    assert capsys.readouterr().err.startswith("fraclap: ")


def test_bad_flag_is_usage():
    with pytest.raises(SystemExit) as exc:
        cli.main(["constants", "--bogus"])
    assert exc.value.code == cli.EXIT_USAGE


def test_threads_env(monkeypatch):
    monkeypatch.setenv("FRACLAP_THREADS", "many")
    assert cli.main(["constants", "--n", "1", "--s", "0.5"]) == cli.EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["wos", "--n", "2", "--s", "0.5", "--x", "[[0.3, 0.1]]", "--n-paths", "20000", "--seed", "5", "--f", "one"],
    ["solve-linear", "--n", "1", "--s", "0.5", "--points", "[[0.0], [0.5]]", "--g", '"one"', "--f", '"one"'],
    ["solve-semilinear", "--n", "1", "--s", "0.5", "--scheme", "damping", "--power", "3", "--g", "one",
     "--grid", "64"],
])
def test_byte_identical_runs(argv, tmp_path):
    outs = []
    for k, threads in enumerate(("1", "3")):
        path = tmp_path / f"run{k}.csv"
        assert cli.main(argv + ["--out", str(path), "--threads", threads]) == 0
        outs.append(sorted((q.name.replace(f"run{k}", "run"), q.read_bytes()) for q in tmp_path.glob(f"run{k}*")))
    assert outs[0] == outs[1]
    for _, data in outs[0]:
        assert b"\r" not in data
        data.decode("utf-8")


def test_json_artifacts_reparse(tmp_path):
    path = tmp_path / "w.json"
    assert cli.main(["wos", "--n", "1", "--s", "0.5", "--x", "[[0.2]]", "--n-paths", "1000", "--out", str(path)]) == 0
    est = json.loads(path.read_text())
    assert est["stderr"] >= 0 and est["n_paths"] == 1000


def test_verify_suite_filter(tmp_path):
    path = tmp_path / "v.json"
    assert cli.main(["verify-suite", "--filter", "mv_remainder[n=1", "--out", str(path)]) == 0
    body = json.loads(path.read_text())
    assert body["passed"] and all(r["pass"] for r in body["reports"])
