import numpy as np
import pytest

from shapattr import Configuration, SyntheticRebalanceEvaluator, kernels


def small():
    return SyntheticRebalanceEvaluator(
        seed=0, n_signals=2, n_assets=6, n_periods=40
    )


class TestConstruction:
    def test_shapes_and_names(self):
        ev = small()
        assert ev.n_features == 4  # 2 signals + risk limit + smoothing
        assert ev.metric_names == ("active_return", "active_risk", "turnover")
        assert ev.feature_names == (
            "signal_1",
            "signal_2",
            "risk_limit",
            "smoothing",
        )

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            SyntheticRebalanceEvaluator(n_signals=0)
        with pytest.raises(ValueError):
            SyntheticRebalanceEvaluator(n_assets=1)
        with pytest.raises(ValueError):
            SyntheticRebalanceEvaluator(n_periods=1)
        with pytest.raises(ValueError):
            SyntheticRebalanceEvaluator(risk_aversion=0.0)
        with pytest.raises(ValueError):
            SyntheticRebalanceEvaluator(risk_limit_pct=-1.0)
        with pytest.raises(ValueError):
            SyntheticRebalanceEvaluator(smoothing_weight=0.0)
        with pytest.raises(ValueError):
            SyntheticRebalanceEvaluator(smoothing_weight=1.5)


class TestEvaluation:
    def test_deterministic(self):
        a = small().evaluate(Configuration(4, 0b1011))
        b = small().evaluate(Configuration(4, 0b1011))
        assert a.values == b.values

    def test_all_off_is_exact_zero(self):
        # no forecasts -> no active positions -> no trading, on any backend
        ev = small()
        for backend in kernels.available_backends():
            prev = kernels.use_backend(backend)
            try:
                v = ev.evaluate(Configuration(4, 0))
            finally:
                kernels.use_backend(prev)
            assert v.values == (0.0, 0.0, 0.0)

    def test_backends_agree(self):
        ev = small()
        masks = range(1 << 4)
        prev = kernels.use_backend("numpy")
        try:
            base = [ev.evaluate(Configuration(4, m)).values for m in masks]
        finally:
            kernels.use_backend(prev)
        for backend in kernels.available_backends():
            prev = kernels.use_backend(backend)
            try:
                got = [ev.evaluate(Configuration(4, m)).values for m in masks]
            finally:
                kernels.use_backend(prev)
            np.testing.assert_allclose(got, base, rtol=1e-12, atol=1e-14)

    def test_signals_add_return(self):
        ev = small()
        none = ev.evaluate(Configuration(4, 0b0000)).values[0]
        both = ev.evaluate(Configuration(4, 0b0011)).values[0]
        assert both > none

    def test_risk_limit_cuts_risk(self):
        ev = SyntheticRebalanceEvaluator(
            seed=0, n_signals=2, n_assets=6, n_periods=120, risk_limit_pct=1.0
        )
        unlimited = ev.evaluate(Configuration(4, 0b0011)).values[1]
        limited = ev.evaluate(Configuration(4, 0b0111)).values[1]
        assert limited < unlimited

    def test_smoothing_cuts_turnover(self):
        ev = small()
        rough = ev.evaluate(Configuration(4, 0b0011)).values[2]
        smooth = ev.evaluate(Configuration(4, 0b1011)).values[2]
        assert smooth < rough

    def test_seed_changes_values(self):
        a = SyntheticRebalanceEvaluator(seed=1, n_signals=2, n_assets=6, n_periods=40)
        b = SyntheticRebalanceEvaluator(seed=2, n_signals=2, n_assets=6, n_periods=40)
        va = a.evaluate(Configuration(4, 0b0011)).values
        vb = b.evaluate(Configuration(4, 0b0011)).values
        assert va != vb
