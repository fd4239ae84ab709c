import json
import os
import subprocess
import sys

import pytest

from rbrefine.cli import EXIT_FAILED, EXIT_IO, EXIT_OK, EXIT_USAGE, main

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fx(name):
    return os.path.join(FIXTURES, name)


def test_safe_fixture_exits_zero(capsys):
    assert main(["verify", fx("time.rbl")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Time instance method incr_sec is safe.\n" in out
    assert out.count("is safe.") == 5


def test_unsafe_fixture_exits_one(capsys):
    assert main(["verify", fx("aggregate_misspec.rbl")]) == EXIT_FAILED
    out = capsys.readouterr().out
    assert out.startswith("Aggregate instance method << is unsafe. Counterexample: real_data = ")


def test_empty_program_gives_empty_report(tmp_path, capsys):
    f = tmp_path / "empty.rbl"
    f.write_text("class Nothing\nend\n")
    assert main(["verify", str(f)]) == EXIT_OK
    assert capsys.readouterr().out == ""


def test_missing_file_is_io_error(capsys):
    assert main(["verify", "/no/such/file.rbl"]) == EXIT_IO
    assert "cannot read" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["verify"],
    ["verify", "x.rbl", "--bogus"],
    ["verify", "x.rbl", "--int-mode", "float"],
    ["verify", "x.rbl", "--array-bound", "0"],
    [],
])
def test_usage_errors_exit_two(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_parse_error_is_a_verification_failure(tmp_path, capsys):
    f = tmp_path / "bad.rbl"
    f.write_text("class A\n def f(x) x +; end\nend\n")
    assert main(["verify", str(f)]) == EXIT_FAILED
    assert "bad.rbl:2:14: expected an expression" in capsys.readouterr().err


def test_json_report(capsys):
    assert main(["verify", fx("bank.rbl"), "--json"]) == EXIT_FAILED
    doc = json.loads(capsys.readouterr().out)
    rows = {r["subject"]: r for r in doc["results"]}
    assert rows["Customer instance method deposit"]["verdict"] == "SAFE"
    tx = rows["Bank class method transaction"]
    assert tx["verdict"] == "UNSAFE"
    assert tx["trigger"] == "exceptionRaised(ID is already in log!)"
    assert tx["replayed"] is True
    assert set(tx) >= {"subject", "verdict", "counterexample", "wall_time"}
    assert doc["all_safe"] is False


def test_label_selects_methods(tmp_path, capsys):
    f = tmp_path / "labels.rbl"
    f.write_text("class A\n type '() -> Integer r { r == 1 }', verify: :one\n def a() 1 end\n"
                 " type '() -> Integer r { r == 1 }'\n def b() 2 end\nend\n")
    assert main(["verify", str(f), "--label", "one"]) == EXIT_OK
    assert capsys.readouterr().out == "A instance method a is safe.\n"
    assert main(["verify", str(f)]) == EXIT_FAILED


def test_dump_ir(capsys):
    assert main(["verify", fx("time.rbl"), "--dump-ir"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "define Time_incr_sec(self, x) = if Integer_==(x, 59) then 0 else Integer_+(x, 1) end" \
        in out
    assert "query Time instance method incr_sec" in out
    assert "is safe" not in out


def test_dump_smt_writes_one_file_per_query(tmp_path, capsys):
    out_dir = tmp_path / "smt"
    assert main(["verify", fx("time.rbl"), "--dump-smt", str(out_dir)]) == EXIT_OK
    names = sorted(os.listdir(out_dir))
    assert names == ["Time_incr_min.smt2", "Time_incr_sec.smt2", "Time_is_valid.smt2",
                     "Time_mix.smt2", "Time_to_sec.smt2"]
    text = (out_dir / "Time_incr_sec.smt2").read_text()
    assert "(check-sat)" in text


def test_dump_smt_of_annotation_only_program_writes_nothing(tmp_path, capsys):
    f = tmp_path / "annot.rbl"
    f.write_text("class A\n type :m, '() -> Integer r', :pure\nend\n")
    out_dir = tmp_path / "smt"
    assert main(["verify", str(f), "--dump-smt", str(out_dir)]) == EXIT_OK
    assert os.listdir(out_dir) == []


def test_dumped_file_names_are_safe_for_operators(tmp_path, capsys):
    out_dir = tmp_path / "smt"
    main(["verify", fx("aggregate.rbl"), "--dump-smt", str(out_dir)])
    (name,) = os.listdir(out_dir)
    assert "<" not in name and name.endswith(".smt2")


def test_reports_are_byte_identical_across_runs(capsys):
    outs = []
    for _ in range(2):
        main(["verify", fx("bank.rbl"), fx("time.rbl")])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


def test_parallel_jobs_keep_declaration_order(capsys):
    main(["verify", fx("bv8_corpus.rbl"), "--int-mode", "bv:8"])
    serial = capsys.readouterr().out
    main(["verify", fx("bv8_corpus.rbl"), "--int-mode", "bv:8", "--jobs", "4"])
    assert capsys.readouterr().out == serial


def test_missing_solver_is_unknown(capsys):
    assert main(["verify", fx("time.rbl"), "--solver", "/no/z3"]) == EXIT_FAILED
    out = capsys.readouterr().out
    assert "is unknown: solverError: solver executable not found: /no/z3" in out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rbrefine.cli", "verify", fx("money.rbl")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == ("Arithmetic instance method div_by_val is safe.\n"
                           "Money instance method value is safe.\n")
