import pytest

from owncash.cli import main


def test_list(capsys):
    assert main(["--list"]) == 0
    assert len(capsys.readouterr().out.split()) == 8


def test_single_run_deterministic(tmp_path, capsys):
    paths = []
    for k in range(2):
        r, t = tmp_path / f"r{k}", tmp_path / f"t{k}"
        assert main(["--scenario", "double_spend", "--seed", "7", "--report", str(r), "--trace", str(t)]) == 0
        paths.append((r.read_bytes(), t.read_bytes()))
    assert paths[0] == paths[1]
    assert "PASS double_spend seed=7" in capsys.readouterr().out


def test_all(tmp_path):
    assert main(["--all", "--report", str(tmp_path / "reports")]) == 0
    assert len(list((tmp_path / "reports").iterdir())) == 80


def test_verdict_failure_exit_1():
    assert main(["--scenario", "quorum_check_payment", "--policy", "quorum_threshold=0"]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["--scenario", "nope"],
        ["--scenario", "double_spend", "--seed", "-1"],
        ["--scenario", "double_spend", "--seed", "abc"],
        ["--scenario", "double_spend", "--policy", "novalue"],
        ["--list", "--all"],
        ["--bogus"],
    ],
)
def test_bad_flags_exit_2(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 2


def test_unknown_policy_key_exit_2(capsys):
    assert main(["--scenario", "double_spend", "--policy", "colour=red"]) == 2
    assert "unknown policy key" in capsys.readouterr().err
