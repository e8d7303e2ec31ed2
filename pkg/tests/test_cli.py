import json
import subprocess
import sys

from heterotest.cli import main

HETEROTEST = [sys.executable, "-m", "heterotest.cli"]


def run_cli(args, models_dir):
    proc = subprocess.run(
        HETEROTEST + args,
        capture_output=True,
        text=True,
        cwd=str(models_dir.parent),
    )
    return proc


def test_validate_ps2_ok(models_dir, capsys):
    assert main(["validate", str(models_dir / "ps2.json")]) == 0
    out = capsys.readouterr().out
    assert "valid" in out


def test_validate_dft_failure_exit_one(models_dir, capsys):
    # counter.json fails completeness: inc undefined at memory 3
    code = main(["validate", "--dft", str(models_dir / "counter.json")])
    assert code == 1
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert "inc is undefined at memory 3" in out


def test_validate_dft_pass_exit_zero(models_dir, capsys):
    assert main(["validate", "--dft", str(models_dir / "counter_testable.json")]) == 0
    capsys.readouterr()


def test_validate_dft_heterotic_checks_extended_components(models_dir, capsys):
    assert main(["validate", "--dft", str(models_dir / "ps2_heterotic.json")]) == 0
    out = capsys.readouterr().out
    assert "dft [base]" in out and "dft [ps2_control]" in out
    assert "FAIL" not in out


def test_validate_csxm_file(models_dir, capsys):
    assert main(["validate", "--dft", str(models_dir / "ps2_control.json")]) == 0
    capsys.readouterr()


def test_simulate_depth_zero_prints_initial(models_dir, capsys):
    code = main(["simulate", str(models_dir / "ps2.json"), "--depth", "0"])
    assert code == 0
    assert capsys.readouterr().out.strip() == "(s,t)"


def test_simulate_all_branches_shows_paper_run(models_dir, capsys):
    code = main(["simulate", str(models_dir / "ps2.json"), "--depth", "3", "--all-branches"])
    assert code == 0
    out = capsys.readouterr().out
    assert "(s,t) ⟹({r11},{r21}) (abe,b) ⟹({r13,r15},∅) (bcf,ab) "
    assert "(ccf,c)" in out
    assert "(bdf,b)" in out


def test_gen_tests_psystem_exit_zero_and_members(models_dir, tmp_path, capsys):
    out_file = tmp_path / "testset.json"
    code = main([
        "--format", "json", "gen-tests", "psystem",
        str(models_dir / "ps2.json"), "--depth", "3", "-o", str(out_file),
    ])
    assert code == 0
    capsys.readouterr()
    doc = json.loads(out_file.read_text())
    assert doc["method"] == "rule-coverage"
    members = doc["members"]
    assert {"1": "ccf", "2": "c"} in members
    assert doc["report"]["all_covered"]


def test_gen_tests_sxm_and_score_round_trip(models_dir, tmp_path, capsys):
    suite_file = tmp_path / "suite.json"
    code = main([
        "gen-tests", "sxm", str(models_dir / "counter_testable.json"),
        "--extra-states", "0", "-o", str(suite_file),
    ])
    assert code == 0
    mutants_file = tmp_path / "mutants.json"
    code = main([
        "mutate", str(models_dir / "counter_testable.json"),
        "--ops", "transition-retarget", "--seed", "1", "--count", "2",
        "-o", str(mutants_file),
    ])
    assert code == 0
    score_file = tmp_path / "score.json"
    code = main([
        "score", str(models_dir / "counter_testable.json"),
        "--mutants", str(mutants_file), "--suite", str(suite_file),
        "-o", str(score_file),
    ])
    assert code == 0
    capsys.readouterr()
    doc = json.loads(score_file.read_text())
    assert doc["total"] == 2


def test_mutate_and_score_psystem(models_dir, tmp_path, capsys):
    testset_file = tmp_path / "testset.json"
    main(["gen-tests", "psystem", str(models_dir / "ps2.json"), "--depth", "3",
          "-o", str(testset_file)])
    mutants_file = tmp_path / "mutants.json"
    code = main([
        "mutate", str(models_dir / "ps2.json"), "--ops", "rule-delete",
        "--seed", "0", "--count", "7", "-o", str(mutants_file),
    ])
    assert code == 0
    score_file = tmp_path / "score.json"
    code = main([
        "score", str(models_dir / "ps2.json"), "--mutants", str(mutants_file),
        "--test-set", str(testset_file), "-o", str(score_file),
    ])
    assert code == 0
    capsys.readouterr()
    doc = json.loads(score_file.read_text())
    assert doc["killed"] == doc["total"] == 7


def test_gen_tests_heterotic(models_dir, tmp_path, capsys):
    out_file = tmp_path / "suite.json"
    code = main([
        "gen-tests", "heterotic", str(models_dir / "ps2_heterotic.json"),
        "--extra-states", "0", "-o", str(out_file),
    ])
    assert code == 0
    capsys.readouterr()
    doc = json.loads(out_file.read_text())
    assert doc["metadata"]["roles"] == {"base": "base", "control": "ps2_control"}


def test_product_summary(models_dir, tmp_path, capsys):
    # build a system file from the heterotic parts to exercise `product`
    from heterotest.model_io import canonical_json, load_model_file

    h = load_model_file(models_dir / "ps2_heterotic.json")[1]
    sys_file = tmp_path / "system.json"
    # the wrapped base holds built-in functions, so use a pure case-table pair
    control = h.control
    doc = {
        "schema": 1,
        "name": "pair",
        "components": [
            json.loads(canonical_json(_control_dict(control))),
            json.loads(canonical_json(_control_dict(control))),
        ],
    }
    sys_file.write_text(json.dumps(doc))
    code = main(["--format", "json", "product", str(sys_file)])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["states"]
    assert payload["memory_size"] >= 1


def _control_dict(control):
    from heterotest.model_io import csxm_to_dict

    return csxm_to_dict(control)


def test_generation_failure_exit_two(tmp_path, capsys):
    # a rule that can never fire makes the coverage test set incomplete
    doc = {
        "schema": 1,
        "alphabet": ["a", "b", "z"],
        "structure": {"id": 1, "children": []},
        "initial": {"1": "a"},
        "rules": {"1": [
            {"name": "r1", "lhs": "a", "rhs": [["b", "here"]]},
            {"name": "dead", "lhs": "z", "rhs": [["b", "here"]]},
        ]},
    }
    model = tmp_path / "gap.json"
    model.write_text(json.dumps(doc))
    assert main(["gen-tests", "psystem", str(model), "--depth", "3"]) == 2
    out = capsys.readouterr().out
    assert "UNCOVERED" in out


def test_parse_error_exit_three(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", str(bad)]) == 3
    capsys.readouterr()


def test_unknown_keys_rejected(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "schema": 1, "alphabet": ["a"], "structure": {"id": 1},
        "initial": {"1": "a"}, "rules": {}, "surprise": True,
    }))
    assert main(["validate", str(bad)]) == 3
    capsys.readouterr()


def test_byte_identical_artifacts(models_dir, tmp_path, capsys):
    one = tmp_path / "one.json"
    two = tmp_path / "two.json"
    for target in (one, two):
        assert main([
            "gen-tests", "psystem", str(models_dir / "ps2.json"),
            "--depth", "3", "-o", str(target),
        ]) == 0
    capsys.readouterr()
    assert one.read_bytes() == two.read_bytes()


def test_coverage_command(models_dir, capsys):
    assert main(["coverage", str(models_dir / "ps2.json"), "--depth", "3"]) == 0
    out = capsys.readouterr().out
    assert out.count("covered") == 7


def test_cli_subprocess_entry_point(models_dir):
    proc = run_cli(["validate", str(models_dir / "ps2.json")], models_dir)
    assert proc.returncode == 0
    assert "valid" in proc.stdout


def test_byte_identical_across_processes(models_dir, tmp_path):
    # separate interpreter runs get different string-hash seeds; artifacts
    # must not depend on set iteration order
    files = []
    for name in ("a.json", "b.json"):
        target = tmp_path / name
        proc = run_cli(
            ["gen-tests", "heterotic", str(models_dir / "ps2_heterotic.json"),
             "--extra-states", "0", "-o", str(target)],
            models_dir,
        )
        assert proc.returncode == 0
        files.append(target.read_bytes())
    assert files[0] == files[1]


def test_simulate_heterotic_rounds(models_dir, capsys):
    code = main(["--format", "json", "simulate", str(models_dir / "ps2_heterotic.json"),
                 "--rounds", "2"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rounds_completed"] == 2
    directions = [e["direction"] for e in doc["exchanges"]]
    assert directions == ["base_to_control", "control_to_base", "base_to_control"]


def test_simulate_heterotic_with_oracle_cmd(models_dir, tmp_path, capsys):
    script = tmp_path / "oracle.py"
    script.write_text(
        "import json,sys\n"
        "json.loads(sys.stdin.readline())\n"
        "print(json.dumps({'final': {'1': 'bdf', '2': 'b'}, 'steps': 2}))\n"
    )
    code = main([
        "--format", "json", "simulate", str(models_dir / "ps2_heterotic.json"),
        "--rounds", "1", "--oracle-cmd", f"{sys.executable} {script}",
        "--oracle-timeout-ms", "8000",
    ])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["exchanges"][0]["configuration"] == {"1": "bdf", "2": "b"}


def test_simulate_psystem_requires_depth(models_dir, capsys):
    assert main(["simulate", str(models_dir / "ps2.json")]) == 3
    capsys.readouterr()


def test_env_seed_default(models_dir, capsys, monkeypatch):
    monkeypatch.setenv("HETEROTEST_SEED", "3")
    code = main(["--format", "json", "simulate", str(models_dir / "ps2.json"),
                 "--depth", "3", "--seed", "1"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["seed"] == 1
    assert doc["mode"] == "seeded"
