import json
import math

import pytest

from parisi.cli import dumps, main, parse_config
from parisi.errors import ConfigError


def run(tmp_path, command, cfg, capsys, *extra):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    code = main([command, "--config", str(path), *extra])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_replica_symmetric(tmp_path, capsys):
    code, out, _ = run(tmp_path, "eval", {"gamma": 1.0, "order_parameter": {"k": 0}}, capsys)
    assert code == 0
    d = json.loads(out)
    assert d["p_hat"] == pytest.approx(math.log(2) + 0.25, abs=1e-14)


def test_eval_zero_temperature(tmp_path, capsys):
    code, out, _ = run(tmp_path, "eval", {"gamma": 0.0, "order_parameter": {"k": 0}}, capsys)
    assert code == 0 and json.loads(out)["p_hat"] == pytest.approx(math.log(2), abs=1e-15)


def test_bad_order_parameter_exit_2(tmp_path, capsys):
    cfg = {"gamma": 1.0, "order_parameter": {"k": 3, "q": [0.1, 0.2, 0.3], "m": [0.5, 0.2]}}
    code, _, err = run(tmp_path, "eval", cfg, capsys)
    assert code == 2 and "m[1]" in err


def test_unknown_key_exit_2(tmp_path, capsys):
    code, _, err = run(tmp_path, "eval", {"gamma": 1.0, "bogus": 1}, capsys)
    assert code == 2 and "bogus" in err


def test_missing_gamma_exit_2(tmp_path, capsys):
    code, _, _ = run(tmp_path, "eval", {"order_parameter": {"k": 0}}, capsys)
    assert code == 2


def test_rem_csv_and_out_dir(tmp_path, capsys):
    out = tmp_path / "out"
    code, text, _ = run(tmp_path, "rem", {"gamma_grid": [0.5, 2.0]}, capsys, "--out", str(out))
    assert code == 0
    assert text.splitlines()[0] == "gamma,p_rem,regime"
    assert (out / "rem.csv").read_text() == text


def test_repeated_runs_are_byte_identical(tmp_path, capsys):
    cfg = {"gamma": 1.5, "order_parameter": {"k": 2, "q": [0.2, 0.6], "m": [0.3]}}
    first = run(tmp_path, "eval", cfg, capsys)[1]
    assert run(tmp_path, "eval", cfg, capsys)[1] == first


def test_scan_replica_symmetric_slope(tmp_path, capsys):
    code, out, _ = run(tmp_path, "scan", {"gamma_grid": [0.5, 0.8], "k": 1}, capsys)
    lines = out.strip().splitlines()
    assert code == 0
    col = lines[0].split(",").index("dvalue_fd")
    for row in lines[1:]:
        assert float(row.split(",")[col]) == pytest.approx(0.25, abs=1e-6)


def test_legendre_divergent(tmp_path, capsys):
    cfg = {"order_parameter": {"k": 1, "q": [1.0]}}
    code, out, _ = run(tmp_path, "legendre", cfg, capsys)
    assert code == 0
    assert '"value": Infinity' in out and '"divergent": true' in out


def test_dumps_precision():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps({"a": [1, math.inf]}) == '{\n  "a": [1, Infinity]\n}'


def test_parse_config_defaults_to_sk():
    cfg = parse_config({})
    assert cfg.mixture.coeffs == pytest.approx((2 ** -0.5,))
    with pytest.raises(ConfigError):
        parse_config({"minimize": {"nonsense": 1}})
