import json

import pytest

from arbor.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_gen_validate_realize(tmp_path, capsys):
    out = tmp_path / "gen"
    code, env = run(capsys, "gen", "punctured-circle", "--depth", "2", "--output", str(out))
    assert code == 0 and env["schema"] == "arbor-report/1"
    assert "system.json" in env["artifacts"]
    code, env = run(capsys, "validate", "--input", str(out / "system.json"))
    assert code == 0 and env["report"]["ok"]
    code, env = run(capsys, "realize", "--input", str(out / "system.json"), "--output", str(tmp_path / "r"))
    assert code == 0 and "realization.json" in env["artifacts"]
    assert (tmp_path / "r" / "report.json").exists()


def test_same_seed_same_bytes(tmp_path, capsys):
    texts = []
    for k in range(2):
        d = tmp_path / str(k)
        main(["gen", "random", "--seed", "3", "--depth", "2", "--output", str(d)])
        capsys.readouterr()
        texts.append((d / "system.json").read_text())
    assert texts[0] == texts[1]


def test_consolidate_and_compare(tmp_path, capsys):
    out = tmp_path / "gen"
    run(capsys, "gen", "random", "--seed", "1", "--output", str(out))
    code, env = run(capsys, "consolidate", "--input", str(out / "system.json"), "--seed", "2")
    assert code == 0
    run(capsys, "gen", "punctured-circle", "--depth", "3", "--output", str(out))
    code, env = run(capsys, "compare", "--input", str(out / "system.json"), "--threshold", "0.15")
    assert code == 0 and env["report"]["data"]["relative"] <= 0.15


def test_saturate_labeled_path(tmp_path, capsys):
    out = tmp_path / "gen"
    run(capsys, "gen", "labeled-path", "--depth", "5", "--output", str(out))
    code, env = run(capsys, "saturate", "--input", str(out / "labeled.json"), "--output", str(tmp_path / "s"))
    assert code == 0
    assert (tmp_path / "s" / "rewrite_log.json").exists()


def test_missing_input_is_an_io_error(tmp_path, capsys):
    code, env = run(capsys, "validate", "--input", str(tmp_path / "nope.json"))
    assert code == 3 and env["status"] == 3


def test_bad_arguments_exit_with_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "no-such-kind"])
    assert exc.value.code == 2


def test_decompose_rejects_a_peripheral_on_a_separator(tmp_path, capsys):
    out = tmp_path / "gen"
    run(capsys, "gen", "punctured-circle", "--depth", "2", "--output", str(out))
    code, env = run(capsys, "decompose", "--input", str(out / "system.json"), "--point", "35", "--radii", "0.4,0.15")
    assert code == 0
    code, env = run(capsys, "decompose", "--input", str(out / "system.json"), "--point", "35", "--radii", "0.6")
    assert code == 1


@pytest.mark.parametrize("command,extra", [("inverse", ["--kind", "standard"]), ("threads", ["--kind", "conical", "--levels", "2"])])
def test_inverse_commands(tmp_path, capsys, command, extra):
    out = tmp_path / "gen"
    run(capsys, "gen", "punctured-circle", "--depth", "2", "--output", str(out))
    code, env = run(capsys, command, "--input", str(out / "system.json"), *extra)
    assert code == 0, env["report"]


def test_decomposition_pipeline(tmp_path, capsys):
    out = tmp_path / "gen"
    run(capsys, "gen", "punctured-circle", "--depth", "2", "--output", str(out))
    system = str(out / "system.json")
    code, env = run(capsys, "decompose", "--input", system, "--point", "35", "--radii", "0.4,0.15", "--output", str(tmp_path / "d"))
    assert code == 0
    dec = str(tmp_path / "d" / "decomposition.json")
    for command in ("dualtree", "subdivide", "roundtrip"):
        code, env = run(capsys, command, "--input", system, "--decomposition", dec, "--output", str(tmp_path / command))
        assert code == 0, (command, env["report"])
    assert (tmp_path / "dualtree" / "dualtree.dot").exists() or (tmp_path / "dualtree" / "dualtree.json").exists()
