"""Command line entry points and exit codes."""

import json

import pytest

from dqik.cli import main
from dqik.rig import load_hand_model, load_rig, rig_to_dict, save_rig
from dqik.session import import_trace


@pytest.fixture()
def hand_path(tmp_path):
    rig_file = tmp_path / "hand.rig.json"
    save_rig(rig_file, load_hand_model())
    return str(rig_file)


def write_goals(tmp_path, goals, name="goals.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"goals": goals}))
    return str(path)


class TestHand:
    def test_writes_rig(self, tmp_path, capsys):
        out = tmp_path / "hand.json"
        assert main(["hand", "--out", str(out)]) == 0
        assert rig_to_dict(load_rig(out)) == rig_to_dict(load_hand_model())
        assert str(out) in capsys.readouterr().out


class TestValidate:
    def test_valid_rig(self, hand_path, capsys):
        assert main(["validate", "--rig", hand_path]) == 0
        assert "ok" in capsys.readouterr().out

    def test_invalid_rig(self, hand_path, tmp_path, capsys):
        data = json.loads(open(hand_path).read())
        data["joints"][3]["parent"] = 7
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        assert main(["validate", "--rig", str(bad)]) == 1
        assert "invalid" in capsys.readouterr().out

    def test_missing_file(self, tmp_path, capsys):
        assert main(["validate", "--rig", str(tmp_path / "nope.json")]) == 1
        assert "error" in capsys.readouterr().err


class TestSolve:
    def test_reachable_exits_zero(self, hand_path, tmp_path, capsys):
        goals = write_goals(tmp_path, [
            {"effector": 0, "position": [-0.033, 0.15, 0.05]}])
        trace = tmp_path / "trace.csv"
        code = main(["solve", "--rig", hand_path, "--goals", goals,
                     "--trace", str(trace)])
        assert code == 0
        assert "status: reached" in capsys.readouterr().out
        records = import_trace(trace)
        assert records
        assert records[-1].reason == "reached"

    def test_unreachable_exits_two(self, hand_path, tmp_path):
        goals = write_goals(tmp_path, [
            {"effector": 0, "position": [0.0, 0.5, 0.0]}])
        assert main(["solve", "--rig", hand_path, "--goals", goals]) == 2

    def test_fd_jacobian_flag(self, hand_path, tmp_path):
        goals = write_goals(tmp_path, [
            {"effector": 0, "position": [-0.033, 0.16, 0.03]}])
        assert main(["solve", "--rig", hand_path, "--goals", goals,
                     "--fd-jacobian"]) == 0

    def test_config_file_applied(self, hand_path, tmp_path):
        goals = write_goals(tmp_path, [
            {"effector": 0, "position": [-0.033, 0.15, 0.05]}])
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"outer_max_steps": 1}))
        assert main(["solve", "--rig", hand_path, "--goals", goals,
                     "--config", str(cfg)]) == 2

    def test_bad_goal_file_exits_one(self, hand_path, tmp_path, capsys):
        goals = write_goals(tmp_path, [{"effector": 99, "position": [0, 0, 0]}])
        assert main(["solve", "--rig", hand_path, "--goals", goals]) == 1
        assert "error" in capsys.readouterr().err

    def test_bad_config_file_exits_one(self, hand_path, tmp_path):
        goals = write_goals(tmp_path, [
            {"effector": 0, "position": [-0.033, 0.15, 0.05]}])
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]")
        assert main(["solve", "--rig", hand_path, "--goals", goals,
                     "--config", str(cfg)]) == 1
