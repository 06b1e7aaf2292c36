# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The ccu Authors
import json
import pathlib

import pytest

import ccu

ROOT = pathlib.Path(__file__).resolve().parents[2]
FIXTURES = ROOT / "fixtures"
SCENARIO = str(FIXTURES / "scenarios" / "basin.json")
INSTRUCTIONS = str(FIXTURES / "instructions" / "build_instructions.json")
RULES = str(FIXTURES / "rules" / "decompose.rules")


@pytest.fixture(scope="module")
def planner():
    return ccu.Planner(SCENARIO, INSTRUCTIONS, RULES)


def test_parse_triplet_normalizes():
    assert ccu.parse_triplet("  Sand -  Mineral   Cast - BASIN ") == ("sand", "mineral cast", "basin")


def test_parse_triplet_error_code():
    with pytest.raises(ccu.CcuError) as info:
        ccu.parse_triplet("sand - basin")
    assert info.value.code == "MissingField"


def test_combinations(planner):
    assert planner.combinations() == [
        ("polish", "mineral cast", "basin"),
        ("sand", "mineral cast", "basin"),
    ]


def test_basin_plan(planner):
    plan_text, trace_text = planner.plan("sand - mineral cast - basin")
    plan = json.loads(plan_text)
    assert [c["kind"] for c in plan] == (
        ["check_end_effector"] + ["execute_step"] * 7 + ["operator_check"]
    )
    grits = [c["payload"]["parameters"]["grit"] for c in plan if c["kind"] == "execute_step"]
    assert grits == sorted(grits) and len(set(grits)) == 7
    assert json.loads(trace_text)["quiescent"] is True


def test_validation_error(planner):
    with pytest.raises(ccu.CcuError) as info:
        planner.validate("weld - mineral cast - basin")
    assert info.value.code == "ProcessUnsupported"


def test_explanation_names_rules(planner):
    entries = json.loads(planner.explain("sand - mineral cast - basin"))
    assert len(entries) == 9
    assert all(e["rule"] and e["facts"] for e in entries)


def test_rework_is_last_step_plus_check(planner):
    plan = json.loads(planner.rework("sand - mineral cast - basin", ["rim"]))
    assert [c["kind"] for c in plan] == ["execute_step", "operator_check"]
    assert plan[0]["payload"]["parameters"]["grit"] == 600
    assert plan[0]["payload"]["region"] == "rim"


def test_snapshot_starts_at_root(planner):
    assert planner.snapshot().splitlines()[0] == "0\t-\tstate\tnode\t-"


def test_run_cli_json_matches_plan(planner):
    code, out, _ = ccu.run_cli([
        "run", "--scenario", SCENARIO, "--instructions", INSTRUCTIONS, "--rules", RULES,
        "--triplet", "sand - mineral cast - basin", "--auto-confirm", "--format", "json",
    ])
    assert code == 0
    document = json.loads(out)
    plan_text, _ = planner.plan("sand - mineral cast - basin")
    assert document["plan"] == json.loads(plan_text)
    assert document["status"] == "done"


def test_run_cli_unknown_object():
    code, _, err = ccu.run_cli([
        "run", "--scenario", SCENARIO, "--instructions", INSTRUCTIONS, "--rules", RULES,
        "--triplet", "sand - mineral cast - bathtub",
    ])
    assert code == 2
    assert "NoSuchObject" in err
