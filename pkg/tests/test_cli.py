"""CLI contract: exit codes, pinned record lines, byte determinism."""

import pytest

from cmlab import cli
from cmlab.automaton import build_ten_state, parse


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_obeys_exit_zero(capsys):
    code, out, _ = run_cli(capsys, "verify", "builtin:A4", "--family", "compat'")
    assert code == 0
    assert out == "family=compat' initial=1 verdict=obeys\n"


def test_verify_violation_prints_trace(capsys):
    code, out, _ = run_cli(capsys, "verify", "builtin:A3", "--family", "compat'")
    assert code == 1
    assert out.startswith(
        "family=compat' initial=1 verdict=violates start=1 trace=B+,C+,beta-,B-"
    )
    assert 'reason="' in out


def test_verify_all_initial_states(capsys):
    code, out, _ = run_cli(
        capsys,
        "verify",
        "builtin:A3",
        "--family",
        "context'",
        "--all-initial-states",
    )
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 3
    for s, line in enumerate(lines, start=1):
        assert line == f"family=context' initial={s} verdict=obeys"


def test_verify_human_mode(capsys):
    code, out, _ = run_cli(
        capsys,
        "verify",
        "builtin:A3",
        "--family",
        "compat'",
        "--output",
        "human",
    )
    assert code == 1
    assert "violates compat'" in out
    assert "B+,C+,beta-,B-" in out


def test_verify_input_errors(capsys):
    code, _, err = run_cli(capsys, "verify", "no-such-file", "--family", "rc")
    assert code == 2
    assert "error:" in err
    code, _, err = run_cli(capsys, "verify", "builtin:A3", "--family", "parity")
    assert code == 2
    code, _, err = run_cli(capsys, "verify", "builtin:A7", "--family", "rc")
    assert code == 2


def test_verify_from_file(tmp_path, capsys):
    from cmlab.automaton import builtin, serialize

    path = tmp_path / "a4.txt"
    path.write_text(serialize(builtin("A4")))
    code, out, _ = run_cli(capsys, "verify", str(path), "--family", "context'")
    assert code == 0
    assert "verdict=obeys" in out


def test_bound_lines_pinned(capsys):
    code, out, _ = run_cli(capsys, "bound", "--structure", "extended15")
    assert code == 0
    assert out == "max=9 quantum=15\n"
    code, out, _ = run_cli(capsys, "bound", "--structure", "pm")
    assert code == 0
    assert out == "max=4 quantum=6\n"


def test_chi_line_pinned(capsys):
    code, out, _ = run_cli(capsys, "chi", "builtin:A3")
    assert code == 0
    assert out == (
        "value=6 terms=+1,+1,+1,+1,+1,-1 noncontextual=4 quantum=6\n"
    )


def test_chi_all_orders(capsys):
    code, out, _ = run_cli(capsys, "chi", "builtin:A3", "--all-orders")
    assert code == 0
    assert out.rstrip().endswith("low=6 high=6")


def test_chi_initial_out_of_range(capsys):
    code, _, err = run_cli(capsys, "chi", "builtin:A3", "--initial", "9")
    assert code == 2


def test_squares_lemma_line(capsys):
    code, out, _ = run_cli(capsys, "squares", "--lemma")
    assert code == 0
    assert out == (
        "lemma=true assignments=32768 squares=10 "
        "histogram=0,61440,0,204800,0,61440\n"
    )


def test_oracle_trace(capsys):
    code, out, _ = run_cli(capsys, "oracle", "trace", "pm", "A+,B+,C+")
    assert code == 0
    assert out == "trace=A+,B+,C+ possible=true\n"
    code, out, _ = run_cli(capsys, "oracle", "trace", "pm", "A+,B+,C-")
    assert code == 1
    assert out == "trace=A+,B+,C- possible=false\n"
    code, out, _ = run_cli(
        capsys, "oracle", "trace", "pm", "A+,B+,C-", "--output", "human"
    )
    assert out == "impossible\n"
    code, _, _ = run_cli(capsys, "oracle", "trace", "pm", "Q+")
    assert code == 2
    code, _, _ = run_cli(capsys, "oracle", "trace", "pm", "A*")
    assert code == 2


def test_build10_round_trips(capsys):
    code, out, _ = run_cli(capsys, "build10")
    assert code == 0
    assert parse(out) == build_ten_state()


def test_build10_details(capsys):
    code, out, _ = run_cli(capsys, "build10", "--details")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("states=10 overrides=")
    assert lines[1] == 'state=1 name="|A+B+>"'
    assert "pm-automaton v1" in out


def test_search_summary_line(capsys):
    code, out, _ = run_cli(
        capsys, "search", "--states", "2", "--families", "rc,repeat"
    )
    assert code == 1
    assert out == "status=exhausted k=2 count=0 nodes=17334\n"


def test_search_found_prints_machines(capsys):
    code, out, _ = run_cli(
        capsys, "search", "--states", "3", "--families", "context'"
    )
    assert code == 0
    assert out.startswith("pm-automaton v1\n")
    assert out.rstrip().endswith("status=found k=3 count=1 nodes=102484")
    body = out[: out.index("status=")]
    a = parse(body)
    assert a.k == 3


def test_search_rejects_bad_input(capsys):
    code, _, err = run_cli(
        capsys, "search", "--states", "0", "--families", "rc"
    )
    assert code == 2
    code, _, err = run_cli(
        capsys, "search", "--states", "2", "--families", "parity"
    )
    assert code == 2


def test_search_bytes_independent_of_jobs(capsys):
    args = (
        "search",
        "--states",
        "3",
        "--families",
        "context'",
        "--find-all",
    )
    runs = []
    for jobs in ("1", "3", "1"):
        code, out, _ = run_cli(capsys, *args, "--jobs", jobs)
        assert code == 0
        runs.append(out)
    assert runs[0] == runs[1] == runs[2]
    assert runs[0].rstrip().endswith("status=found k=3 count=4 nodes=880293")


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["search", "--families", "rc"])  # --states missing
    assert exc.value.code == 2


def test_reproduce_quick_subset(capsys):
    code, out, _ = run_cli(
        capsys,
        "reproduce",
        "--skip", "oracle-equivalence",
        "--skip", "theorem1",
        "--skip", "theorem2",
        "--skip", "census",
        "--skip", "theorem3",
        "--skip", "properties",
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "check=parities status=PASS pm_contexts=6 extended_contexts=15 minus_trios=3"
    assert "check=bounds status=PASS pm_max=4 extended_max=9" in lines
    assert any(line.startswith("check=a3-behavior status=PASS chi=6,6,6") for line in lines)
    assert any(line.startswith("check=memory-bracket status=PASS") for line in lines)
    assert "check=pure-states status=PASS reachable_pure=24" in lines
    assert "check=census status=SKIP" in lines
    assert lines[-1] == (
        "overall=PASS m_context=1.585 m_context_compat=2 "
        "m_all_low=2 m_all_high=3.322"
    )
