import json
import shutil
from importlib import resources

import pytest

from ellmod.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_jcheck_golden_passes(capsys):
    code, out, _ = _run(capsys, "jcheck", "--family", "p8", "--order", "20", "--golden")
    assert code == 0
    rep = json.loads(out)
    assert rep["command"] == "jcheck" and all(c["status"] == "pass" for c in rep["checks"])
    coeffs = dict((e, c) for e, c in next(iter(rep["series"].values())))
    assert coeffs["0"] == "744" and coeffs["3"] == "196884"


def test_order_below_minimum_is_config_error(capsys):
    code, _, err = _run(capsys, "correlators", "--family", "p8", "--order", "2")
    assert code == 2 and "minimum" in err


def test_p8_only_commands_reject_other_families(capsys):
    assert _run(capsys, "eta", "--family", "x9")[0] == 2
    assert _run(capsys, "catalog", "--family", "p8")[0] == 2


def test_bad_fixture_directory(capsys, tmp_path):
    assert _run(capsys, "jcheck", "--fixtures", str(tmp_path / "missing"))[0] == 2


def _fixture_copy(tmp_path):
    src = resources.files("ellmod").joinpath("fixtures")
    dst = tmp_path / "fixtures"
    dst.mkdir()
    for f in src.iterdir():
        if f.name.endswith(".json"):
            (dst / f.name).write_text(f.read_text())
    return dst


def test_golden_mismatch_exits_one_with_first_difference(capsys, tmp_path):
    fx = _fixture_copy(tmp_path)
    path = fx / "p8_j_expansion.json"
    data = json.loads(path.read_text())
    data["entries"][0]["terms"]["3"] = "196885"
    path.write_text(json.dumps(data))
    code, _, err = _run(capsys, "jcheck", "--family", "p8", "--order", "20", "--golden", "--fixtures", str(fx))
    assert code == 1
    assert "exponent 3" in err and "196885" in err and "196884" in err


def test_correlator_golden_mismatch(capsys, tmp_path):
    fx = _fixture_copy(tmp_path)
    path = fx / "j10_correlators.json"
    data = json.loads(path.read_text())
    data["entries"][0]["terms"]["6"] = "2"
    path.write_text(json.dumps(data))
    code, _, err = _run(capsys, "correlators", "--family", "j10", "--order", "32", "--golden", "--fixtures", str(fx))
    assert code == 1 and "golden mismatch" in err


def test_json_output_is_deterministic(capsys):
    a = _run(capsys, "mirror", "--family", "x9", "--order", "12")[1]
    b = _run(capsys, "mirror", "--family", "x9", "--order", "12")[1]
    assert a == b
    rep = json.loads(a)
    assert set(rep) == {"command", "family", "order", "checks", "series"}


def test_config_file_with_flags_winning(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults for a CI job\nfamily = x9\norder = 12\nemit = text\n")
    code, out, _ = _run(capsys, "mirror", "--config", str(cfg), "--emit", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["family"] == "X9" and rep["order"] == "12"


def test_config_file_errors(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert _run(capsys, "mirror", "--config", str(cfg))[0] == 2
    assert _run(capsys, "mirror", "--config", str(tmp_path / "none.cfg"))[0] == 2


def test_csv_and_text_output(capsys):
    code, out, _ = _run(capsys, "eta", "--order", "20", "--emit", "csv")
    assert code == 0 and out.splitlines()[0] == "kind,name,key,value"
    assert any(line.startswith("check,") for line in out.splitlines())
    code, out, _ = _run(capsys, "eta", "--order", "20", "--emit", "text")
    assert code == 0 and out.startswith("eta family=P8") and "[PASS]" in out


def test_lambda_value_parses(capsys):
    assert _run(capsys, "periods", "--order", "6", "--lambda-value", "6.283185307179586j")[0] == 0
    assert _run(capsys, "periods", "--order", "6", "--lambda-value", "abc")[0] == 2


@pytest.mark.parametrize("command,family", [("periods", "x9"), ("catalog", "j10"), ("genus1", "p8"),
                                            ("certify", "p8"), ("givental-check", "p8")])
def test_commands_succeed(capsys, command, family):
    code, out, _ = _run(capsys, command, "--family", family, "--order", "20", "--golden")
    assert code == 0, out


def test_unknown_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_console_script_installed():
    assert shutil.which("ellmod") is not None


def test_all_families_end_to_end(capsys):
    code, out, _ = _run(capsys, "all", "--order", "60", "--golden")
    rep = json.loads(out)
    assert code == 0 and rep["family"] == "ALL"
    assert {c["name"].split("/")[0] for c in rep["checks"]} == {"P8", "X9", "J10"}
