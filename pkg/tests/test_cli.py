import json

import pytest

from linvar.cli import main
from linvar.dsl import parse_theory, render_theory
from linvar.presets import maltsev, semilattice
from linvar.theories import theory_equal


@pytest.fixture
def maltsev_file(tmp_path):
    path = tmp_path / "maltsev.thy"
    path.write_text(render_theory(maltsev()))
    return str(path)


@pytest.fixture
def semilattice_file(tmp_path):
    path = tmp_path / "semilattice.thy"
    path.write_text(render_theory(semilattice()))
    return str(path)


class TestValidateCommand:
    def test_valid_theory(self, maltsev_file, capsys):
        assert main(["validate", maltsev_file]) == 0
        out = capsys.readouterr().out
        assert "linear=yes" in out
        assert "derivable" in out

    def test_nonlinear_theory_exits_1(self, tmp_path, capsys):
        path = tmp_path / "bad.thy"
        path.write_text("theory bad\nop f/1\nop g/1\n"
                        "axiom f(g(x)) = x\naxiom f(x) = x\naxiom g(x) = x\n")
        assert main(["validate", str(path)]) == 1
        out = capsys.readouterr().out
        assert "non-linear axiom: v0 = f(g(v0))" in out

    def test_parse_error_exits_1(self, tmp_path, capsys):
        path = tmp_path / "broken.thy"
        path.write_text("theory broken\nop p/3\naxiom p(x,y) = x\n")
        assert main(["validate", str(path)]) == 1
        err = capsys.readouterr().err
        assert "line 3" in err and "arity" in err


class TestClassifyCommand:
    def test_maltsev_summary(self, maltsev_file, capsys, tmp_path):
        report_path = tmp_path / "report.json"
        code = main(["classify", maltsev_file, "--json", str(report_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "CM: yes" in out and "NCI: yes" in out and "n-permutable: yes" in out
        data = json.loads(report_path.read_text())
        verdicts = data["result"]["verdicts"]
        assert set(verdicts) == {"cm", "nci", "nperm"}
        assert verdicts["cm"]["answer"] == "yes"
        assert "traces" in data["result"]

    def test_semilattice_all_no(self, semilattice_file, capsys):
        assert main(["classify", semilattice_file]) == 0
        out = capsys.readouterr().out
        assert "CM: no" in out and "model of size 2" in out

    def test_nonlinear_rejected_without_flag(self, tmp_path, capsys):
        path = tmp_path / "wrapped.thy"
        path.write_text("theory wrapped\nop p/3\nop f/1\n"
                        "axiom p(x,y,y) = f(x)\naxiom p(y,y,x) = f(x)\n"
                        "axiom f(f(x)) = x\naxiom f(x) = x\n")
        assert main(["classify", str(path)]) == 1
        assert "not linear" in capsys.readouterr().err

    def test_sufficient_only_mode_exits_2(self, tmp_path, capsys):
        path = tmp_path / "wrapped.thy"
        path.write_text("theory wrapped\nop p/3\nop f/1\n"
                        "axiom p(x,y,y) = f(x)\naxiom p(y,y,x) = f(x)\n"
                        "axiom f(f(x)) = x\naxiom f(x) = x\n")
        assert main(["classify", str(path), "--sufficient-only"]) == 2
        out = capsys.readouterr().out
        assert "CM: yes" in out and "unknown" in out


class TestEntailCommand:
    def test_not_entailed_with_countermodel(self, maltsev_file, capsys):
        assert main(["entail", maltsev_file, "x = p(y,x,x)"]) == 0
        out = capsys.readouterr().out
        assert "not entailed" in out and "countermodel size 2" in out

    def test_entailed_prints_derivation_json(self, maltsev_file, capsys):
        assert main(["entail", maltsev_file, "p(x,y,y) = x"]) == 0
        out = capsys.readouterr().out
        assert "entailed (1 steps)" in out
        payload = json.loads(out.split("\n", 1)[1])
        assert payload["terms"] == ["p(x,y,y)", "x"]

    def test_budget_flag(self, maltsev_file, capsys):
        assert main(["entail", maltsev_file, "x = p(x,y,y)", "--budget", "5"]) == 0

    def test_budget_env(self, maltsev_file, monkeypatch):
        monkeypatch.setenv("LINVAR_BUDGET", "6")
        assert main(["entail", maltsev_file, "x = p(x,y,y)"]) == 0

    def test_deep_goal_unknown_exits_2(self, maltsev_file, capsys):
        code = main(["entail", maltsev_file, "p(p(x,y,y),y,y) = p(y,y,y)",
                     "--max-depth", "2", "--max-terms", "50"])
        assert code == 2
        assert "unknown" in capsys.readouterr().out


class TestModelsCommand:
    def test_find_model(self, semilattice_file, capsys):
        assert main(["models", semilattice_file, "--min", "2", "--max", "2"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["size"] == 2
        assert data["tables"]["m"] == [0, 0, 0, 1]

    def test_refute(self, maltsev_file, capsys):
        assert main(["models", maltsev_file, "--refute", "x = p(y,x,x)"]) == 0
        out = capsys.readouterr().out
        assert '"size": 2' in out and "assignment" in out


class TestJoinCommand:
    def test_join_prints_theory(self, maltsev_file, semilattice_file, capsys):
        assert main(["join", maltsev_file, semilattice_file]) == 0
        joined = parse_theory(capsys.readouterr().out)
        assert {s.name for s in joined.symbols} == {"m", "p"}

    def test_check_decomposition(self, maltsev_file, semilattice_file, capsys):
        assert main(["join", maltsev_file, semilattice_file,
                     "--check-decomposition"]) == 0
        out = capsys.readouterr().out
        assert "derivative distributes over the join" in out and "holds" in out
        assert "cm: join=True left=True right=False (ok)" in out


class TestProjectAndCheckDerivation:
    def test_round_trip_through_files(self, maltsev_file, semilattice_file,
                                      tmp_path, capsys):
        from linvar.rewriting import derivation_to_json
        from test_projection import _spec_example_derivation

        d = _spec_example_derivation(maltsev(), semilattice())
        deriv_path = tmp_path / "derivation.json"
        deriv_path.write_text(json.dumps(derivation_to_json(d)))

        code = main(["project", maltsev_file, semilattice_file, str(deriv_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "verified against maltsev" in out
        projected = json.loads(out[:out.rindex("}") + 1])
        assert projected["terms"] == ["p(x,y,y)", "x"]

    def test_check_derivation_valid_and_corrupted(self, maltsev_file, tmp_path, capsys):
        from linvar.rewriting import derivation_to_json
        from linvar.derivatives import derivative
        from linvar.saturation import is_inconsistent

        verdict = is_inconsistent(derivative(maltsev()))
        data = derivation_to_json(verdict.derivation)
        good = tmp_path / "good.json"
        good.write_text(json.dumps(data))
        prime = tmp_path / "prime.thy"
        prime.write_text(render_theory(derivative(maltsev())))
        assert main(["check-derivation", str(prime), str(good)]) == 0
        assert "valid derivation" in capsys.readouterr().out

        data["steps"][0]["pos"] = [1]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        assert main(["check-derivation", str(prime), str(bad)]) == 0
        assert "INVALID at step 0" in capsys.readouterr().out

    def test_missing_file_exits_1(self, capsys):
        assert main(["classify", "/nonexistent/nope.thy"]) == 1
        assert "error" in capsys.readouterr().err


class TestPipelines:
    def test_classify_certificate_replays_through_the_cli(self, maltsev_file,
                                                          tmp_path, capsys):
        """classify --json emits a certificate that check-derivation accepts
        against the derived stage produced by derive."""
        report_path = tmp_path / "report.json"
        assert main(["classify", maltsev_file, "--json", str(report_path)]) == 0
        capsys.readouterr()
        data = json.loads(report_path.read_text())
        cert = data["result"]["verdicts"]["cm"]["derivation"]
        cert_path = tmp_path / "cert.json"
        cert_path.write_text(json.dumps(cert))

        assert main(["derive", maltsev_file]) == 0
        stage_path = tmp_path / "stage.thy"
        stage_path.write_text(capsys.readouterr().out)

        assert main(["check-derivation", str(stage_path), str(cert_path)]) == 0
        assert "valid derivation of x = y" in capsys.readouterr().out


class TestDeriveCommand:
    def test_single_application(self, maltsev_file, capsys):
        assert main(["derive", maltsev_file]) == 0
        derived = parse_theory(capsys.readouterr().out)
        from linvar.derivatives import derivative

        assert theory_equal(derived, derivative(maltsev()))

    def test_iterate_with_json_trace(self, maltsev_file, tmp_path, capsys):
        trace_path = tmp_path / "trace.json"
        assert main(["derive", maltsev_file, "--order", "--iterate",
                     "--json", str(trace_path)]) == 0
        out = capsys.readouterr().out
        assert "stopped: inconsistent at stage 1" in out
        data = json.loads(trace_path.read_text())
        assert data["result"]["stop"] == "inconsistent"
        assert len(data["result"]["stages"]) == 2
        assert "certificate" in data["result"]
