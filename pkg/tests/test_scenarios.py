import re

import pytest

from owncash.scenarios import (
    SCENARIOS,
    Settings,
    UsageError,
    build_world,
    double_spend_divergence,
    parse_overrides,
    run_scenario,
)

REPORT_LINE = re.compile(r"(PASS|FAIL) [a-z_]+( .*)?")


@pytest.mark.parametrize("name", list(SCENARIOS))
@pytest.mark.parametrize(
    "policy",
    [{}, {"require_acceptance_signature": "true"}, {"retain_history": "true", "quorum_threshold": "3"}],
    ids=["default", "strict", "history"],
)
def test_scenario_passes(name, policy):
    report = run_scenario(name, 3, policy)
    assert report.passed, report.render()


def test_registered_names():
    assert list(SCENARIOS) == [
        "honest_issue_and_pay",
        "double_spend",
        "bank_accomplice",
        "theft_without_key",
        "replay_old_certificate",
        "key_rotation",
        "over_issuance_audit",
        "quorum_check_payment",
    ]


def test_report_format(tmp_path):
    report = run_scenario("double_spend", 2, report_path=tmp_path / "r.txt", trace_path=tmp_path / "t.txt")
    text = (tmp_path / "r.txt").read_text()
    assert text == report.render()
    lines = text.splitlines()
    first_owners = lines.index("OWNERS 0")
    assert all(REPORT_LINE.fullmatch(l) for l in lines[:first_owners])
    assert lines.count("OWNCASHDB v1") == 5
    trace = (tmp_path / "t.txt").read_text().splitlines()
    assert trace and all(len(l.split()) == 8 for l in trace)
    assert report.trace_path == str(tmp_path / "t.txt")
    owners = {n: k for n, k in report.final_owners[0].items()}
    assert list(owners) == [12345]


def test_quorum_knob_is_meaningful():
    report = run_scenario("quorum_check_payment", 1, {"quorum_threshold": "0"})
    failed = [v.check for v in report.verdicts if not v.passed]
    assert failed == ["merchant_refused_on_quorum"]


@pytest.mark.parametrize(
    "overrides",
    [{"colour": "red"}, {"retain_history": "maybe"}, {"quorum_threshold": "9"}, {"quorum_threshold": "x"}],
)
def test_bad_overrides(overrides):
    with pytest.raises(UsageError):
        parse_overrides(overrides)


def test_unknown_scenario():
    with pytest.raises(UsageError):
        run_scenario("nope", 1)


def test_overrides_parse():
    s = parse_overrides({"retain_history": "1", "require_acceptance_signature": "off", "quorum_threshold": "1"})
    assert s == Settings(require_acceptance_signature=False, retain_history=True, quorum_threshold=1)


def test_key_rotation_verdicts_do_not_leak_old_key():
    world = build_world("key_rotation", 4, Settings())
    old = world.wallet(1).public_key.hex()
    verdicts = SCENARIOS["key_rotation"](world)
    assert all(old[:16] not in v.line() for v in verdicts)


def test_holdings_coherent_after_honest_run():
    world = build_world("honest_issue_and_pay", 5, Settings())
    SCENARIOS["honest_issue_and_pay"](world)
    for i in range(1, 5):
        w = world.wallet(i)
        for n, note in w.holdings.items():
            assert note.part_a == w.db.current(n)


def test_divergence_measurement_is_informational():
    assert double_spend_divergence(1, 1) in (1, 2)
    assert double_spend_divergence(1, 4) == double_spend_divergence(1, 4)
