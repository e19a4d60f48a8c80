import json

import pytest

import cli
import config


def _run(*argv):
    return cli.main([str(a) for a in argv])


def _load(path):
    return json.loads(path.read_text())


def test_rate_oneshot_writes_report(reports_dir, samples_dir):
    code = _run("rate-oneshot", "--channel", samples_dir / "three_user_flip.json", "--out", "oneshot.json")
    assert code == cli.EXIT_OK
    payload = _load(reports_dir / "oneshot.json")
    assert payload["command"] == "rate-oneshot"
    assert payload["version"] == config.VERSION
    assert payload["config"]["eps1"] == 1e-3
    report = payload["result"]["report"]
    assert report["kind"] == "one_shot"
    assert set(report["per_set_b"]) == {"{}", "{1}", "{2}", "{3}", "{1,3}"}


def test_default_output_name(reports_dir, samples_dir):
    assert _run("rate-asymptotic", "--channel", samples_dir / "three_user_flip.json") == cli.EXIT_OK
    assert (reports_dir / "rate-asymptotic.json").exists()


def test_output_path_with_directory_is_used_as_given(tmp_path, samples_dir):
    target = tmp_path / "nested" / "asym.json"
    assert _run("rate-asymptotic", "--channel", samples_dir / "three_user_flip.json", "--out", target) == cli.EXIT_OK
    assert target.exists()


def test_access_file_overrides_embedded_structure(reports_dir, samples_dir):
    code = _run(
        "rate-asymptotic", "--channel", samples_dir / "three_user_flip.json",
        "--access", samples_dir / "threshold_2_of_3.json", "--out", "threshold.json",
    )
    assert code == cli.EXIT_OK
    access = _load(reports_dir / "threshold.json")["result"]["access"]
    assert access["minimal_authorized"] == [[1, 2], [1, 3], [2, 3]]


def test_simulate_is_reproducible(reports_dir, samples_dir):
    args = ["simulate", "--channel", samples_dir / "two_user_flip.json", "--n", 2, "--seed", 5, "--trials", 2000]
    assert _run(*args, "--out", "first.json") == cli.EXIT_OK
    assert _run(*args, "--out", "second.json") == cli.EXIT_OK
    first = (reports_dir / "first.json").read_bytes()
    assert first == (reports_dir / "second.json").read_bytes()
    summary = _load(reports_dir / "first.json")["result"]["summary"]
    assert summary["within_budget"] is True


def test_simulate_requires_seed(reports_dir, samples_dir):
    assert _run("simulate", "--channel", samples_dir / "two_user_flip.json") == cli.EXIT_VALIDATION


def test_simulate_rejects_quantum_channel(reports_dir, samples_dir):
    code = _run("simulate", "--channel", samples_dir / "qubit_pair.json", "--seed", 1)
    assert code == cli.EXIT_VALIDATION


def test_invalid_channel_file(tmp_path, reports_dir):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"users": 1, "input_alphabet": 2, "kind": "flip", "outputs": {"flips": [1.5]}}))
    assert _run("rate-asymptotic", "--channel", bad) == cli.EXIT_VALIDATION
    assert not (reports_dir / "rate-asymptotic.json").exists()


def test_unknown_command_exits_with_usage_error(samples_dir):
    with pytest.raises(SystemExit) as excinfo:
        _run("rate-everything", "--channel", samples_dir / "two_user_flip.json")
    assert excinfo.value.code == 2


def test_second_order_sweep_writes_csv(reports_dir, samples_dir):
    code = _run(
        "rate-second-order", "--channel", samples_dir / "two_user_flip.json",
        "--eps1", 0.01, "--sweep", "n=100,1000,10000", "--out", "sweep.json",
    )
    assert code == cli.EXIT_OK
    raw = (reports_dir / "sweep.csv").read_bytes()
    lines = raw.split(b"\r\n")
    assert lines[-1] == b""
    assert len(lines) == 5
    assert lines[0].startswith(b"n,rate,band,term_b,term_a,penalties,")
    assert lines[1].startswith(b"100,")
    payload = _load(reports_dir / "sweep.json")
    assert payload["result"]["points"] == [100, 1000, 10000]
    assert len(payload["result"]["reports"]) == 3


def test_sweep_must_ascend(reports_dir, samples_dir):
    code = _run("rate-second-order", "--channel", samples_dir / "two_user_flip.json", "--sweep", "n=1000,100")
    assert code == cli.EXIT_VALIDATION
    code = _run("capacity", "--channel", samples_dir / "two_user_flip.json", "--sweep", "n=10,100")
    assert code == cli.EXIT_VALIDATION


def test_capacity_command(reports_dir, samples_dir):
    assert _run("capacity", "--channel", samples_dir / "noiseless_user_one.json", "--out", "cap.json") == cli.EXIT_OK
    report = _load(reports_dir / "cap.json")["result"]["report"]
    assert report["rate"] == pytest.approx(0.0, abs=1e-12)


def test_converse_command(reports_dir, samples_dir):
    code = _run(
        "rate-converse", "--channel", samples_dir / "two_user_flip.json",
        "--eps", 0.01, "--secret-size", 2, "--grid-step", 0.5, "--out", "converse.json",
    )
    assert code == cli.EXIT_OK
    details = _load(reports_dir / "converse.json")["result"]["report"]["details"]
    assert details["grid_points"] == 9


def test_hypothesis_testing_path(reports_dir, samples_dir):
    code = _run(
        "rate-oneshot", "--channel", samples_dir / "two_user_flip.json", "--path", "hypothesis-testing",
        "--delta", 20, "--out", "ht.json",
    )
    assert code == cli.EXIT_OK
    report = _load(reports_dir / "ht.json")["result"]["report"]
    assert report["budget"]["eta"] == pytest.approx(5e-4)


def test_entropy_command(reports_dir, samples_dir):
    code = _run(
        "entropy", "--channel", samples_dir / "three_user_flip.json", "--subset", "1,3",
        "--eps", 0.05, "--out", "entropy.json",
    )
    assert code == cli.EXIT_OK
    result = _load(reports_dir / "entropy.json")["result"]
    assert result["subset"] == "{1,3}"
    values = result["entropies"]
    assert values["H_min"]["value"] <= values["H"] + 1e-9 <= values["H_max"]["value"] + 2e-9
    assert values["H_min_smooth"]["value"] >= values["H_min"]["value"] - 1e-9


def test_entropy_smoothing_rejected_on_quantum_channel(reports_dir, samples_dir):
    assert _run("entropy", "--channel", samples_dir / "qubit_pair.json", "--eps", 0.1) == cli.EXIT_VALIDATION


def test_lhl_check_command(reports_dir, samples_dir):
    assert _run("lhl-check", "--channel", samples_dir / "xor_shares.json") == cli.EXIT_VALIDATION
    code = _run("lhl-check", "--channel", samples_dir / "xor_shares.json", "--r", 1, "--subset", "1", "--out", "lhl.json")
    assert code == cli.EXIT_OK
    check = _load(reports_dir / "lhl.json")["result"]["check"]
    assert check["holds"] is True
    assert check["full_family"] is True


def test_input_dist_size_checked(reports_dir, samples_dir):
    code = _run("rate-asymptotic", "--channel", samples_dir / "two_user_flip.json", "--input-dist", "[0.2, 0.3, 0.5]")
    assert code == cli.EXIT_VALIDATION
