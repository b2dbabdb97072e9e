import json

import pytest

from stopping.cli import main


MVS = ["--mu", "1", "--sigma2", "0.5", "--L", "3"]


def run(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_thresholds_csv(capsys):
    code, out, err = run(capsys, "thresholds", *MVS, "--n", "2")
    assert code == 0
    assert out == "i,T_i\n0,1.16666666667\n1,1\n2,0\n"
    assert err == ""


def test_thresholds_point_mass_at_support_bound(capsys):
    code, out, err = run(
        capsys, "thresholds", "--kind", "two-point", "--mu", "1", "--sigma2", "0", "--L", "1", "--n", "3"
    )
    assert code == 0
    assert out == "i,T_i\n0,1\n1,1\n2,1\n3,0\n"
    assert err == ""


def test_run_options_accepted_everywhere(capsys):
    _, plain, _ = run(capsys, "thresholds", *MVS, "--n", "2")
    code, out, _ = run(capsys, "thresholds", *MVS, "--n", "2", "--seed", "5", "--threads", "2")
    assert code == 0
    assert out == plain
    code, _, _ = run(capsys, "momentbound", *MVS, "--xi", "1", "--seed", "5", "--threads", "2")
    assert code == 0
    code, _, _ = run(capsys, "figure", "--figure", "5", *MVS, "--seed", "5", "--threads", "2")
    assert code == 0


def test_thresholds_two_point_turning_point(capsys):
    code, out, _ = run(
        capsys, "thresholds", "--kind", "two-point", "--mu", "1", "--sigma2", "1.3", "--L", "5"
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "i,T_i,f_star_value,g_star_value,is_switch"
    assert len(lines) == 22
    switches = [line.split(",")[0] for line in lines[1:] if line.endswith(",true")]
    assert switches == ["15"]


def test_thresholds_both_methods_json(capsys):
    code, out, _ = run(capsys, "thresholds", *MVS, "--n", "5", "--method", "both", "--out", "json")
    assert code == 0
    document = json.loads(out)
    assert document["method"] == "both"
    assert document["values"] == pytest.approx(document["generic_values"], abs=1e-11)
    assert document["max_difference"] <= 1e-9
    assert document["spec"] == {"kind": "mean-var-support", "mu": 1.0, "sigma2": 0.5, "L": 3.0}


def test_thresholds_output_is_byte_stable(capsys):
    first = run(capsys, "thresholds", *MVS, "--n", "30", "--out", "json")
    second = run(capsys, "thresholds", *MVS, "--n", "30", "--out", "json")
    assert first == second


def test_thresholds_rejects_empty_set(capsys):
    code, out, err = run(capsys, "thresholds", "--mu", "1", "--sigma2", "5", "--L", "3")
    assert code == 1
    assert out.startswith("error,message\nEmptyAmbiguitySet,")
    assert err.startswith("error: Ambiguity set is empty")


def test_thresholds_missing_mean(capsys):
    code, out, _ = run(capsys, "thresholds", "--sigma2", "0.5", "--out", "json")
    assert code == 1
    assert json.loads(out)["error"] == "InvalidParameter"


def test_unsupported_output_format(capsys):
    code, out, _ = run(capsys, "thresholds", *MVS, "--out", "xml")
    assert code == 1
    assert json.loads(out)["error"] == "OutputFormatError"


def test_unknown_option(capsys):
    code, _, err = run(capsys, "thresholds", "--bogus")
    assert code == 1
    assert "bogus" in err


def test_momentbound(capsys):
    code, out, _ = run(capsys, "momentbound", *MVS, "--xi", "1")
    assert code == 0
    document = json.loads(out)
    assert document["value"] == 0.833333333333
    assert document["regime"] == "middle"
    assert document["regime_index"] == 2
    assert document["atoms"] == [[0.0, 0.166666666667], [1.0, 0.75], [3.0, 0.0833333333333]]
    assert document["dual"]["basis"] == "polynomial2"
    assert "breakpoint_source" not in document


def test_momentbound_mad_csv(capsys):
    code, out, _ = run(capsys, "momentbound", "--mu", "1", "--mad", "0.5", "--L", "4", "--xi", "1.2",
                       "--out", "csv")
    assert code == 0
    assert out == "point,probability\n0,0.25\n1.33333333333,0.75\n"


def test_momentbound_xi_out_of_range(capsys):
    code, out, _ = run(capsys, "momentbound", *MVS, "--xi", "4")
    assert code == 1
    assert json.loads(out)["error"] == "XiOutOfRange"


def test_spec_file(capsys, tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"kind": "mean-var-support", "mu": 1, "sigma2": 0.5, "L": 3}))
    code, out, _ = run(capsys, "thresholds", "--spec", str(path), "--n", "2")
    assert code == 0
    assert out == "i,T_i\n0,1.16666666667\n1,1\n2,0\n"

    code, _, err = run(capsys, "thresholds", "--spec", str(path), "--mu", "2")
    assert code == 1
    assert "not both" in err

    code, _, _ = run(capsys, "thresholds", "--spec", str(tmp_path / "missing.json"))
    assert code == 1


def test_output_file(capsys, tmp_path):
    path = tmp_path / "out.csv"
    code, out, _ = run(capsys, "thresholds", *MVS, "--n", "2", "--output-file", str(path))
    assert code == 0
    assert out == ""
    assert path.read_text() == "i,T_i\n0,1.16666666667\n1,1\n2,0\n"


def test_simulate_worst_case(capsys):
    code, out, _ = run(capsys, "simulate", *MVS, "--n", "5", "--episodes", "2000", "--seed", "3")
    assert code == 0
    document = json.loads(out)
    assert document["episodes"] == 2000
    assert document["seed"] == 3
    assert len(document["selection_histogram"]) == 6
    assert sum(document["selection_histogram"]) == 2000
    assert document["no_acceptance"] == 0


def test_simulate_threads_do_not_change_the_result(capsys):
    args = ["simulate", *MVS, "--n", "5", "--episodes", "2000", "--block-size", "500", "--seed", "9"]
    code, single, _ = run(capsys, *args, "--threads", "1")
    assert code == 0
    code, pooled, _ = run(capsys, *args, "--threads", "4")
    assert code == 0
    assert pooled == single
    assert json.loads(single)["seed"] == 9


def test_simulate_fixed_distribution(capsys, tmp_path):
    member = tmp_path / "member.json"
    member.write_text(json.dumps({"atoms": [[0, 1 / 3], [1.5, 2 / 3]]}))
    code, out, _ = run(capsys, "simulate", *MVS, "--n", "3", "--rule", "first",
                       "--nature", f"fixed:{member}", "--episodes", "500", "--out", "csv")
    assert code == 0
    header, row = out.splitlines()
    assert header.split(",")[-1] == "selection_histogram"
    assert row.endswith(",0;500;0;0")

    outsider = tmp_path / "outsider.json"
    outsider.write_text(json.dumps({"atoms": [[0, 0.5], [2, 0.5]]}))
    code, out, _ = run(capsys, "simulate", *MVS, "--nature", f"fixed:{outsider}", "--episodes", "10")
    assert code == 1
    assert json.loads(out)["error"] == "InvalidDistribution"


def test_simulate_bad_rule(capsys):
    code, out, _ = run(capsys, "simulate", *MVS, "--rule", "sometimes", "--episodes", "10")
    assert code == 1
    assert json.loads(out)["error"] == "InvalidParameter"


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--mu", "1", "--mad", "0.5", "--L", "4",
                       "--xi-sweep", "5", "--grid", "21", "--n", "5")
    assert code == 0
    document = json.loads(out)
    assert document["passed"] is True
    assert "oracle_agreement" in document["checks"]

    code, long_form, _ = run(capsys, "verify", "--mu", "1", "--mad", "0.5", "--L", "4",
                             "--xi-sweep", "5", "--grid-points", "21", "--n", "5")
    assert code == 0
    assert long_form == out


def test_figure_one(capsys):
    code, out, _ = run(capsys, "figure", "--figure", "1", "--mu", "1", "--sigma2", "1.3", "--L", "5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "i,f_star,g_star,threshold,is_switch"
    assert len(lines) == 22
    assert lines[16].startswith("15,") and lines[16].endswith(",true")


def test_figure_five(capsys):
    code, out, _ = run(capsys, "figure", "--figure", "5", *MVS, "--out", "json")
    assert code == 0
    document = json.loads(out)
    assert document["figure"] == 5
    assert len(document["rows"]) == 19
    assert document["rows"][-1]["xi"] == 1.0


@pytest.mark.parametrize("number", ["2", "0"])
def test_figure_unknown(capsys, number):
    code, _, _ = run(capsys, "figure", "--figure", number, *MVS)
    assert code == 1
