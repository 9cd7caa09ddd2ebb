import math
from pathlib import Path

import pytest

from gpex.cli import (
    EXIT_CAP,
    EXIT_CHECK_FAILED,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_PARSE,
    ScenarioError,
    main,
    parse_scenario,
)
from gpex.exchange import builtin, format_gpe


def write_scenario(tmp_path: Path, body: str, name: str = "s.scn") -> Path:
    p = tmp_path / name
    p.write_text("gpex-scenario 1\n" + body)
    return p


def read_kv(path: Path) -> dict[str, str]:
    return dict(ln.split(" = ", 1) for ln in path.read_text().splitlines())


def test_parse_defaults(tmp_path):
    sc = parse_scenario("gpex-scenario 1\nsystem = baker\n", tmp_path)
    assert sc.N == 8 and sc.seed == 0 and sc.out == tmp_path / "out"
    assert not sc.is_billiard


@pytest.mark.parametrize(
    "body, message",
    [
        ("system = baker\nfoo = 1\n", "unknown key"),
        ("system = baker\nN = 0\n", "positive"),
        ("system = baker\nN = 3\nN = 4\n", "duplicate"),
        ("system = baker\ntable = square\n", "exactly one"),
        ("N = 3\n", "exactly one"),
        ("system = nope\n", "unknown builtin"),
        ("gpe = missing.gpe\n", "not found"),
        ("table = missing.tbl\n", "neither"),
        ("system = baker\njunk\n", "key = value"),
        ("table = square\nparam.alpha = 1/2\n", "param"),
        ("system = baker\ntol = -1\n", "positive"),
    ],
)
def test_parse_errors(tmp_path, body, message):
    with pytest.raises(ScenarioError, match=message):
        parse_scenario("gpex-scenario 1\n" + body, tmp_path)


def test_missing_header(tmp_path):
    with pytest.raises(ScenarioError, match="header"):
        parse_scenario("system = baker\n", tmp_path)


def test_baker_levels_csv(tmp_path):
    scn = write_scenario(tmp_path, "system = baker\nN = 10\nout = res\n")
    assert main(["run", str(scn)]) == EXIT_OK
    rows = (tmp_path / "res" / "levels.csv").read_text().splitlines()
    counts = [int(r.split(",")[1]) for r in rows[1:]]
    assert counts == [2**n for n in range(1, 11)]
    kv = read_kv(tmp_path / "res" / "bounds.txt")
    assert abs(float(kv["h_estimate"]) - math.log(2)) < 1e-9


def test_identity_entropy_zero(tmp_path):
    scn = write_scenario(tmp_path, "system = identity-exchange\nN = 6\n")
    assert main(["run", str(scn)]) == EXIT_OK
    assert read_kv(tmp_path / "out" / "bounds.txt")["h_estimate"] == "0"


def test_params_and_flags(tmp_path):
    scn = write_scenario(tmp_path, "system = rotation\nparam.alpha = 1/3\nN = 5\n")
    assert main(["run", str(scn), "--out", str(tmp_path / "o2"), "--seed", "4", "--tol", "1e-8"]) == EXIT_OK
    counts = [r.split(",")[1] for r in (tmp_path / "o2" / "levels.csv").read_text().splitlines()[1:]]
    assert counts == ["2", "3", "3", "3", "3"]
    assert read_kv(tmp_path / "o2" / "bounds.txt")["tol"] == "1e-08"


def test_bad_param(tmp_path):
    scn = write_scenario(tmp_path, "system = rotation\nparam.beta = 1/3\n")
    assert main(["run", str(scn)]) == EXIT_PARSE


def test_cap_keeps_partial_levels(tmp_path):
    scn = write_scenario(tmp_path, "system = baker\nN = 12\n")
    assert main(["run", str(scn), "--cap-cells", "100"]) == EXIT_CAP
    rows = (tmp_path / "out" / "levels.csv").read_text().splitlines()
    assert len(rows) == 1 + 6


def test_corrupted_gpe_fails_validation(tmp_path):
    text = format_gpe(builtin("rotation")).replace("atom 0 0 2/5 0 2/5 1 0 1", "atom 0 0 1/2 0 1/2 1 0 1")
    (tmp_path / "bad.gpe").write_text(text)
    scn = write_scenario(tmp_path, "gpe = bad.gpe\nN = 4\n")
    assert main(["verify", str(scn)]) == EXIT_INVALID
    assert main(["run", str(scn)]) == EXIT_INVALID


def test_malformed_gpe_is_parse_error(tmp_path):
    (tmp_path / "bad.gpe").write_text("gpex-gpe 1\nspace 0 0 1\n")
    scn = write_scenario(tmp_path, "gpe = bad.gpe\n")
    assert main(["run", str(scn)]) == EXIT_PARSE


def test_verify_passes(tmp_path, capsys):
    scn = write_scenario(tmp_path, "system = skew-rotation\nN = 6\n")
    assert main(["verify", str(scn)]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out and all(ln.startswith("PASS") for ln in out)


def test_verify_failure_is_nonzero(tmp_path, monkeypatch, capsys):
    import gpex.cli as cli

    monkeypatch.setattr(cli, "grid_join_count", lambda g, n: -1)
    scn = write_scenario(tmp_path, "system = rotation\nN = 4\n")
    assert main(["verify", str(scn)]) == EXIT_CHECK_FAILED
    assert "FAIL  grid oracle" in capsys.readouterr().out


def test_billiard_run(tmp_path):
    scn = write_scenario(tmp_path, "table = square\nN = 4\n")
    assert main(["run", str(scn)]) == EXIT_OK
    out = tmp_path / "out"
    rows = (out / "singular.csv").read_text().splitlines()
    assert [r.split(",")[1] for r in rows[1:]] == ["12", "28", "52", "92"]
    assert (out / "curves.dump").read_text().startswith("# s theta curve_id generation")
    assert read_kv(out / "bounds.txt")["finsler_convexity"] == "assumed, not tested"


def test_table_file(tmp_path):
    (tmp_path / "tri.tbl").write_text("gpex-table 1\nname tri\nvertex 0 0\nvertex 2 0\nvertex 0 1\n")
    scn = write_scenario(tmp_path, "table = tri.tbl\nN = 2\n")
    assert main(["run", str(scn)]) == EXIT_OK
    assert (tmp_path / "out" / "levels.csv").read_text().splitlines()[1] == "1,6"


def test_describe(capsys):
    assert main(["describe", "baker"]) == EXIT_OK
    assert "gpex-gpe 1" in capsys.readouterr().out
    assert main(["describe", "square"]) == EXIT_OK
    assert main(["describe", "nope"]) == EXIT_PARSE


def test_outputs_deterministic(tmp_path):
    scn = write_scenario(tmp_path, "system = skew-baker\nN = 6\nout = a\n")
    assert main(["run", str(scn)]) == EXIT_OK
    assert main(["run", str(scn), "--out", str(tmp_path / "b")]) == EXIT_OK
    for f in ("levels.csv", "bounds.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
