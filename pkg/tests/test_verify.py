import numpy as np
import pytest

from bachpinch import metric_zoo as mz
from bachpinch import verify


class TestAlgebraSuite:
    @pytest.mark.parametrize("n", [4, 7])
    def test_passes(self, n):
        checks = verify.algebra_checks(n, trials=100, seed=3)
        assert all(c.passed for c in checks), [c for c in checks if not c.passed]
        assert len({c.name for c in checks}) == len(checks) == 14

    def test_seeded(self):
        a = verify.algebra_checks(5, trials=20, seed=1)
        b = verify.algebra_checks(5, trials=20, seed=1)
        assert [c.value for c in a] == [c.value for c in b]

    def test_report_shape(self):
        rep = verify.run_suite("algebra", dims=[4], trials=10)
        d = rep.to_dict()
        assert d["passed"] and d["failures"] == 0 and d["suite"] == "algebra"
        assert set(d["checks"][0]) == {"name", "subject", "value", "limit", "passed", "detail"}

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            verify.run_suite("geometry")


class TestEngineSuite:
    def test_sphere_checks(self):
        checks = verify.engine_checks(mz.make_round_sphere(4))
        names = [c.name for c in checks]
        assert names == ["fd-vs-closed-form-riemann", "raw-riemann-symmetry", "weyl-divergence",
                         "trace-free-second-bianchi", "bach-vanishes"]
        assert all(c.passed for c in checks)

    def test_perturbed_checks(self):
        checks = {c.name: c for c in verify.engine_checks(mz.make_perturbed_flat(4, 0.1, 42))}
        assert set(checks) == {"raw-riemann-symmetry", "kato", "bach-nonzero-control"}
        assert all(c.passed for c in checks.values())
        assert checks["bach-nonzero-control"].detail["relative_drift"] <= verify.BACH_STABILITY

    def test_control_fails_on_bach_flat_metric(self):
        c = verify.bach_control(mz.make_round_sphere(4))
        assert not c.passed and c.value < verify.BACH_CONTROL_MIN

    def test_failure_is_reported(self):
        c = verify._upto("x", "s", 2.0, 1.0)
        rep = verify.SuiteReport("algebra", [c, verify._upto("y", "s", 0.5, 1.0)])
        assert not rep.passed and rep.failures == [c]
        assert np.isclose(rep.to_dict()["failures"], 1)
