from __future__ import annotations

import asyncio
import csv
import io

import pytest

from gforge.cli import (
    EXIT_FRAGMENT,
    EXIT_NO_WITNESS,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VERIFY,
    PipelineConfig,
    first_witness,
    load_sentence,
    main,
    prepare,
    report_bounds,
    run_pipeline,
)
from gforge.corpus import corpus, entry, roles_model
from gforge.logic_syntax import Signature
from gforge.model_builder import build_deterministic, solve_extension
from gforge.structure_lab import FiniteStructure, write_structure
from gforge.type_algebra import atom_space, reduct_bits
from gforge.witness_engine import densify, read_witness

SOUND = [
    e.name for e in corpus() if e.fragment == "GF" and e.satisfiable and e.sentence().signature.width <= 2
]
CHECKS = ("guarded=true", "extension=true", "model_check_nf=true", "model_check=true")


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv("GFORGE_SEED", raising=False)


def test_parse_reports_the_fragment(capsys):
    assert main(["parse", "corpus:roles"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "# fragment=GF" in out
    assert "# width=3" in out


def test_syntax_error_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.gf"
    path.write_text("exists x (P(x) & & Q(x))\n")
    assert main(["parse", str(path)]) == EXIT_PARSE
    assert "error:" in capsys.readouterr().err


def test_unknown_input_exits_2():
    assert main(["parse", "corpus:no-such-entry"]) == EXIT_PARSE
    assert main(["parse", "/no/such/file.gf"]) == EXIT_PARSE


def test_fragment_violations_exit_3(tmp_path):
    path = tmp_path / "fo.gf"
    path.write_text("forall x y z (R(x,y) -> S(y,z))\n")
    assert main(["nf", str(path)]) == EXIT_FRAGMENT
    assert main(["nf", "corpus:better-than"]) == EXIT_FRAGMENT
    assert main(["nf", str(path), "--mode", "tgf"]) == EXIT_FRAGMENT


def test_normal_form_command(tmp_path, capsys):
    out_file = tmp_path / "nf.txt"
    assert main(["nf", "corpus:roles", "--out", str(out_file)]) == EXIT_OK
    assert "# kind: skolem" in out_file.read_text()
    out = capsys.readouterr().out
    assert "# fresh=R_chi_1,R_chi_2" in out
    assert main(["nf", "corpus:roles", "--split", "5"]) == EXIT_PARSE


def test_unsatisfiable_input_exits_4():
    assert main(["witness", "corpus:contradiction"]) == EXIT_NO_WITNESS
    assert main(["build", "corpus:unary-clash", "--seed", "1", "--n", "4"]) == EXIT_NO_WITNESS


def test_witness_command(tmp_path, capsys):
    path = tmp_path / "w.txt"
    assert main(["witness", "corpus:edge-out", "--out", str(path)]) == EXIT_OK
    w = read_witness(path)
    assert w.width == 2
    out = capsys.readouterr().out
    assert "# skolem-supported=true" in out


def test_sampling_needs_a_seed(monkeypatch):
    assert main(["build", "corpus:edge-out", "--n", "5"]) == EXIT_PARSE
    monkeypatch.setenv("GFORGE_SEED", "x")
    assert main(["build", "corpus:edge-out", "--n", "5"]) == EXIT_PARSE


def test_bad_option_combinations_exit_2():
    assert main(["build", "corpus:edge-out", "--algo", "deterministic", "--seed", "1"]) == EXIT_PARSE
    assert main(["build", "corpus:edge-out", "--seed", "1", "--n", "8", "--lazy"]) == EXIT_PARSE
    assert main(["build", "corpus:better-than", "--mode", "tgf", "--algo", "independent", "--seed", "1", "--n", "4"]) == EXIT_PARSE
    with pytest.raises(SystemExit):
        main(["build", "corpus:edge-out", "--n", "5", "--auto-n"])


def test_build_writes_artifacts(tmp_path, capsys):
    out_dir = tmp_path / "run"
    code = main(["build", "corpus:edge-out", "--seed", "0", "--n", "40", "--out", str(out_dir)])
    assert code == EXIT_OK
    for name in ("normal-form.txt", "witness.txt", "structure.txt", "report.txt"):
        assert (out_dir / name).exists()
    report = (out_dir / "report.txt").read_text().splitlines()
    assert "model_check=true" in report
    assert "n=40" in report
    assert any(line.startswith("thresholds.delta1=") for line in report)
    assert "model_check=true" in capsys.readouterr().out


def test_deterministic_build(capsys):
    assert main(["build", "corpus:universal-only", "--algo", "deterministic"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert "algo=deterministic" in out
    assert "model_check=true" in out
    assert any(line.startswith("deterministic.witness_primes=") for line in out)
    assert "deterministic.primes=67,71,73" in out


def test_lazy_build_answers_queries(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO("# comment\n0:1,1:2\n0:1,0:1\n"))
    assert main(["build", "corpus:universal-only", "--algo", "deterministic", "--lazy"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert "verification=lazy" in out
    assert any(line.startswith("{") for line in out)
    assert any(line.startswith("error:") for line in out)


def test_check_command(tmp_path, capsys):
    good = tmp_path / "roles.txt"
    write_structure(roles_model(), good)
    assert main(["check", str(good), "corpus:roles", "--naive"]) == EXIT_OK
    assert "naive_model_check=true" in capsys.readouterr().out
    sig = entry("roles").sentence().signature
    bad = tmp_path / "empty.txt"
    write_structure(FiniteStructure.from_facts(sig, 2, []), bad)
    assert main(["check", str(bad), "corpus:roles"]) == EXIT_VERIFY


def test_monte_carlo_csv(tmp_path, capsys):
    path = tmp_path / "mc.csv"
    args = ["mc", "corpus:unary-exists", "--seed", "0", "--sizes", "2,4", "--trials", "5", "--csv", str(path)]
    assert main(args) == EXIT_OK
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert [row["n"] for row in rows] == ["2", "4"]
    assert all(row["trials"] == "5" for row in rows)
    assert "n=2 trials=5" in capsys.readouterr().out
    assert main(["mc", "corpus:unary-exists", "--sizes", "2"]) == EXIT_PARSE


def test_lower_bound_commands(tmp_path, capsys):
    assert main(["lb", "emit", "--n", "3"]) == EXIT_OK
    assert "# width=7" in capsys.readouterr().out
    assert main(["lb", "verify", "--n", "3"]) == EXIT_OK
    assert "ok=true" in capsys.readouterr().out.splitlines()
    assert main(["lb", "model", "--n", "4"]) == EXIT_VERIFY


def test_bounds_command(capsys):
    assert main(["bounds", "corpus:edge-out", "--t", "2", "--delta-gap", "5"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert "bounds.t=2" in out
    assert "delta_gap.product_log2=8808" in out
    assert "delta_gap.product_larger=true" in out


def test_report_bounds_exponent_approaches_the_limit():
    sig = Signature((("R", 2),))
    lines = report_bounds(sig, 64)
    assert "bounds.types=16" in lines
    assert "bounds.limit_exponent=0.632121" in lines
    with pytest.raises(ValueError):
        report_bounds(sig, 1)


@pytest.mark.slow
@pytest.mark.parametrize("algo", ["independent", "markov"])
@pytest.mark.parametrize("name", SOUND)
def test_sampled_builds_pass_every_check(name, algo, monkeypatch):
    monkeypatch.setattr("gforge.model_builder.TUPLE_BUDGET", 200_000)
    cfg = PipelineConfig(f"corpus:{name}", algo=algo, auto=True, seed=0, seeds=10)
    summary = asyncio.run(run_pipeline(cfg))
    assert summary["status"] == EXIT_OK, summary["errors"]
    for line in CHECKS:
        assert line in summary["records"]


def _check_lazy(lazy, span: int = 25) -> None:
    sig = lazy.signature
    boundary = atom_space(sig, 2).boundary_mask
    for beta0 in range(min(lazy.modulus, span)):
        e = (0, beta0)
        one = lazy.type_of([e]).bits
        assert lazy.witness.contains(1, one)
        for tau2 in lazy.witness.types(2):
            if reduct_bits(sig, 2, tau2.bits, (0,)) == one:
                beta = solve_extension(lazy, [e], 1, tau2)
                assert lazy.type_of([e, (1, beta)]) == tau2
        for beta1 in range(min(lazy.modulus, span)):
            bits = lazy.type_of([e, (1, beta1)]).bits
            assert lazy.witness.contains(2, bits) or bits & boundary == 0


@pytest.mark.slow
@pytest.mark.parametrize("name", SOUND)
def test_deterministic_builds_pass_every_check(name):
    summary = asyncio.run(run_pipeline(PipelineConfig(f"corpus:{name}", algo="deterministic")))
    if summary["status"] == EXIT_OK:
        for line in CHECKS:
            assert line in summary["records"]
        return
    assert any("MaterializationRefused" in error for error in summary["errors"]), summary["errors"]
    # too large to materialize; query the lazy structure instead
    prepared = prepare(load_sentence(f"corpus:{name}"), "gf")
    _, _, w = asyncio.run(first_witness(prepared, "auto", True))
    _check_lazy(build_deterministic(densify(w)))
