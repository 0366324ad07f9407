import pytest

sfk = pytest.importorskip("sfk")


def test_eval_exact():
    r = sfk.eval("(lebesgue -inf inf)", "(ival 2 5)")
    assert r == {"value": "3", "mode": "exact"}
    assert sfk.eval("(scale inf (dirac 0))", "(atom 0)")["value"] == "inf"


def test_kernel_eval_needs_point():
    assert float(sfk.eval("(param normal id 1)", "(ival 2 100)", at="2")["value"]) == pytest.approx(0.5)
    with pytest.raises(sfk.Error):
        sfk.eval("(param normal id 1)", "(ival 0 1)")


def test_syntax_error_is_an_error():
    with pytest.raises(sfk.SyntaxError):
        sfk.eval("(lebesgue 0", "(ival 0 1)")
    assert issubclass(sfk.SyntaxError, sfk.Error)


def test_calculus():
    assert sfk.classify("(scale inf (uniform 0 1))") == "SFinite"
    parts = sfk.decompose("(sum (normal 0 1) (dirac 0))", "(lebesgue -inf inf)")
    assert "(atom 0)" in parts["singular"]
    with pytest.raises(sfk.Error, match="NotZeroInftyAbsCont"):
        sfk.rn_derivative("(dirac 0)", "(sum (lebesgue -inf inf) (scale inf (dirac 0)))")


def test_ppl():
    program = "let p = sample(uniform 0 1) in score(p); score(1 - p); score(p); p"
    assert sfk.posterior_mean(program, 20000, seed=1) == pytest.approx(0.6, abs=0.02)
    assert sfk.sample(program, 3, seed=4) == sfk.sample(program, 3, seed=4)
    out = sfk.importance("let x = sample(normal 0 1) in x", "(normal 0 1)", "(normal 0 1)")
    assert "score({1}(y))" in out


def test_rejection_acceptance():
    r = sfk.rejection("(beta 2 2)", "(uniform 0 1)", 1.5, 5000, seed=2)
    assert len(r["samples"]) == 5000
    assert r["acceptance"] == pytest.approx(2 / 3, abs=0.03)


def test_suites_run():
    assert "fubini" in sfk.suites()
    report = sfk.check("fubini", seed=3)
    assert report["cases"] == 200 and report["failures"] == []
