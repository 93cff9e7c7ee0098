import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from mixchernoff import cli
from mixchernoff.chain_core import ChainModel
from mixchernoff.chainfile import ChainDocument, emit_chain_file, parse_chain_file
from mixchernoff.errors import ParseError, ValidationError

TWO_STATE = """mcct v1
# two-state chain, p = 0.3
mode discrete
n 2
0.7 0.3
0.3 0.7
weights 1
1 0
"""


@pytest.fixture
def two_state_file(tmp_path):
    path = tmp_path / "two.mcct"
    path.write_text(TWO_STATE)
    return str(path)


def run_json(argv):
    code, text = cli.run(argv + ["--json"])
    return code, json.loads(text)


# --- documents -------------------------------------------------------------------


def test_parse_minimal_document():
    doc = parse_chain_file(TWO_STATE)
    assert doc.mode == "discrete" and doc.n == 2
    np.testing.assert_array_equal(doc.matrix, [[0.7, 0.3], [0.3, 0.7]])
    np.testing.assert_array_equal(doc.weights, [[1.0, 0.0]])
    assert doc.start is None


def test_parse_continuous_with_start():
    text = "mcct v1\nmode continuous\nn 2\n-1 1   # rates\n2 -2\nstart\n0.25 0.75\n"
    doc = parse_chain_file(text)
    assert doc.mode == "continuous"
    np.testing.assert_array_equal(doc.start, [0.25, 0.75])


def test_bad_row_sum_reports_line():
    text = TWO_STATE.replace("0.7 0.3\n", "0.6 0.3\n", 1)
    with pytest.raises(ValidationError, match="row 1 sums to 0.9") as info:
        parse_chain_file(text)
    assert info.value.line == 5


def test_negative_rate_is_validation_error():
    text = "mcct v1\nmode continuous\nn 2\n-1 1\n-2 2\n"
    with pytest.raises(ValidationError) as info:
        parse_chain_file(text)
    assert info.value.line == 5


@pytest.mark.parametrize("text,line", [
    ("mcct v2\n", 1),
    ("mcct v1\nmode fast\n", 2),
    ("mcct v1\nmode discrete\nn two\n", 3),
    ("mcct v1\nmode discrete\nn 2\n0.5 0.5\n0.5\n", 5),
    ("mcct v1\nmode discrete\nn 2\n0.5 0.5\n0.5 x\n", 5),
    ("mcct v1\nmode discrete\nn 2\n0.5 0.5\n0.5 0.5\nbogus\n", 6),
    ("mcct v1\nmode discrete\nn 2\n0.5 0.5\n", 5),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as info:
        parse_chain_file(text)
    assert info.value.line == line


def test_weights_outside_unit_interval():
    with pytest.raises(ValidationError, match=r"\[0, 1\]"):
        parse_chain_file(TWO_STATE.replace("1 0\n", "1.5 0\n"))


def test_schedule_tiling_and_mean_check():
    doc = parse_chain_file(TWO_STATE)
    sched = doc.schedule(np.array([0.5, 0.5]), t=9)
    assert sched.t == 9 and sched.mu == 0.5
    two_rows = TWO_STATE.replace("weights 1\n1 0\n", "weights 2\n1 0\n1 1\n")
    with pytest.raises(ValidationError, match="step 2"):
        parse_chain_file(two_rows).schedule(np.array([0.5, 0.5]))


@given(st.integers(2, 6).flatmap(lambda n: hnp.arrays(float, (n, n), elements=st.floats(1e-6, 1.0))))
def test_emit_parse_is_bit_exact(w):
    chain = ChainModel(w / w.sum(axis=1, keepdims=True))
    doc = ChainDocument("discrete", chain, weights=np.full((1, chain.n), 1 / 3))
    back = parse_chain_file(emit_chain_file(doc))
    assert np.array_equal(back.matrix, chain.rows)
    assert np.array_equal(back.weights, doc.weights)


# --- commands ---------------------------------------------------------------------


def test_analyze_two_state(two_state_file):
    code, rep = run_json(["analyze", "--chain", two_state_file, "--epsilon", "0.125"])
    assert code == 0
    np.testing.assert_allclose(rep["pi"], [0.5, 0.5], atol=1e-12)
    assert rep["lambda"] == pytest.approx(0.4, abs=1e-9)
    # |0.4|^t / 2 <= 1/8 first at t = 2
    assert rep["mixing_time"]["0.125"]["T"] == 2


def test_analyze_text_is_key_value(two_state_file):
    code, text = cli.run(["analyze", "--chain", two_state_file])
    assert code == 0
    lines = text.splitlines()
    assert lines == sorted(lines)
    assert all(" = " in line for line in lines)
    assert "ergodic = true" in lines


def test_analyze_non_ergodic(tmp_path):
    path = tmp_path / "flip.mcct"
    path.write_text("mcct v1\nmode discrete\nn 2\n0 1\n1 0\n")
    code, rep = run_json(["analyze", "--chain", str(path)])
    assert code == 1 and rep["diagnostic"] == "periodic, period 2"


def test_bound_mixing_example():
    code, rep = run_json(["bound", "--family", "mixing", "--delta", "1", "--t", "7200",
                          "--T", "10", "--mu", "0.5"])
    assert code == 0
    assert rep["exponent"] == pytest.approx(-5.0, abs=1e-12)


def test_bound_from_chain(two_state_file):
    code, rep = run_json(["bound", "--chain", two_state_file, "--family", "spectral",
                          "--t", "1000", "--delta", "0.5"])
    assert code == 0
    assert rep["params"]["lam"] == pytest.approx(0.4, abs=1e-9)
    assert rep["exponent"] == pytest.approx(-0.25 * 0.6 * 0.5 * 1000 / 36, rel=1e-8)


def test_strict_vacuous_exit_code():
    argv = ["bound", "--family", "mixing", "--delta", "0.1", "--t", "10", "--T", "10", "--mu", "0.5"]
    assert cli.run(argv)[0] == 0
    assert cli.run(argv + ["--strict"])[0] == 2


def test_mgf_reports_agreement(two_state_file):
    code, rep = run_json(["mgf", "--chain", two_state_file, "--t", "6", "--r", "0.1"])
    assert code == 0
    assert rep["exact"] == pytest.approx(rep["brute_force"], rel=1e-12)
    assert rep["exact"] <= rep["bound"] and rep["dominated"]


def test_simulate_requires_seed(two_state_file):
    code, text = cli.run(["simulate", "--chain", two_state_file, "--t", "10"])
    assert code == 1 and "seed" in text


def test_simulate_dominance_and_determinism(two_state_file):
    argv = ["simulate", "--chain", two_state_file, "--t", "40", "--samples", "20000",
            "--seed", "3", "--delta", "0.25", "--json"]
    first = cli.run(argv)
    assert first == cli.run(argv)
    rep = json.loads(first[1])
    assert first[0] == 0 and all(rep["dominated"].values())
    assert set(rep["bounds"]) == {"mixing", "spectral", "union"}


def test_simulate_continuous(tmp_path):
    path = tmp_path / "gen.mcct"
    path.write_text("mcct v1\nmode continuous\nn 2\n-1 1\n1 -1\nweights 1\n1 0\n")
    code, rep = run_json(["simulate", "--chain", str(path), "--t", "20", "--samples", "5000",
                          "--seed", "1", "--delta", "0.5"])
    assert code == 0 and list(rep["bounds"]) == ["continuous"]


def test_verify_claim1_fifty_instances():
    code, text = cli.run(["verify", "--suite", "claim1", "--instances", "50", "--seed", "7"])
    lines = text.splitlines()
    assert code == 0
    assert sum(": pass " in line for line in lines) == 50
    assert lines[-1] == "passed = 50/50"


@pytest.mark.parametrize("suite", ["lemma3", "claim4", "sinclair", "p-operator", "m-operator"])
def test_verify_suites(suite):
    code, rep = run_json(["verify", "--suite", suite, "--instances", "5", "--seed", "2"])
    assert code == 0 and rep["passed"] == rep["total"] == 5


def test_verify_needs_seed_for_generated_instances():
    assert cli.run(["verify", "--suite", "claim1"])[0] == 1


def test_construct_two_state_round_trip(tmp_path):
    code, text = cli.run(["construct", "--kind", "two-state", "--p", "0.3"])
    assert code == 0
    doc = parse_chain_file(text + "\n")
    np.testing.assert_array_equal(doc.matrix, [[0.7, 0.3], [0.3, 0.7]])


def test_construct_split_of_file(two_state_file):
    code, text = cli.run(["construct", "--kind", "split", "--chain", two_state_file])
    assert code == 0 and parse_chain_file(text).n == 6


def test_construct_random_needs_seed():
    assert cli.run(["construct", "--kind", "random"])[0] == 1
    code, text = cli.run(["construct", "--kind", "random", "--n", "3", "--seed", "4"])
    assert code == 0 and parse_chain_file(text).n == 3


def test_usage_errors_exit_one(two_state_file):
    assert cli.run(["bound", "--family", "nope"])[0] == 1
    assert cli.run(["analyze"])[0] == 1
    assert cli.run(["analyze", "--chain", "/nonexistent/file"])[0] == 1


def test_console_entry_point(two_state_file):
    proc = subprocess.run([sys.executable, "-m", "mixchernoff.cli", "analyze", "--chain",
                           two_state_file, "--json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n"] == 2
