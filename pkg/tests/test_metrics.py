import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orars.metrics import (EvalReport, UndefinedCorrelationError, evaluate,
                           inter_rater_baseline, mae, pcc, scc)

from oracles import mae_loop, pearson_loop, spearman_loop

vectors = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=40)


class TestMae:
    def test_examples(self):
        assert mae([1, 2, 3], [1, 2, 3]) == 0
        assert mae([1, 2, 3], [1, 3, 5]) == 1.0

    def test_errors(self):
        with pytest.raises(ValueError, match="length"):
            mae([1, 2], [1])
        with pytest.raises(ValueError, match="at least 1"):
            mae([], [])

    @given(vectors, st.integers(0, 2**32 - 1))
    def test_symmetric_nonnegative(self, x, seed):
        y = np.random.default_rng(seed).normal(size=len(x))
        assert mae(x, y) == mae(y, x) >= 0
        assert mae(x, x) == 0


class TestPcc:
    def test_examples(self, rng):
        x = rng.normal(size=20)
        assert pcc(x, x) == pytest.approx(1.0, abs=1e-12)
        assert pcc([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(100)
        x, y = rng.normal(size=100), rng.normal(size=100)
        assert abs(pcc(x, y) - pearson_loop(x.tolist(), y.tolist())) <= 1e-12

    def test_constant_input(self):
        with pytest.raises(UndefinedCorrelationError):
            pcc([1, 1, 1], [1, 2, 3])

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-10, 10))
    def test_affine_invariance_and_bounds(self, seed, a, b):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=30), rng.normal(size=30)
        assert -1 <= pcc(x, y) <= 1
        assert abs(pcc(a * x + b, y) - pcc(x, y)) <= 1e-12
        assert pcc(a * x + b, x) == pytest.approx(1.0, abs=1e-12)
        assert pcc(-a * x + b, x) == pytest.approx(-1.0, abs=1e-12)


class TestScc:
    def test_example(self):
        assert scc([1, 2, 3], [10, 30, 20]) == pytest.approx(0.5, abs=1e-12)

    def test_ties_use_average_ranks(self):
        # x ranks (1.5, 1.5, 3, 4), y ranks (1, 3, 2, 4): Pearson of those by hand
        x, y = [1, 1, 2, 3], [10, 30, 20, 40]
        rx, ry = np.array([1.5, 1.5, 3, 4]), np.array([1, 3, 2, 4.0])
        dx, dy = rx - 2.5, ry - 2.5
        expected = (dx @ dy) / np.sqrt((dx @ dx) * (dy @ dy))
        assert expected == pytest.approx(0.632455532033676, abs=1e-12)
        assert scc(x, y) == pytest.approx(expected, abs=1e-12)

    def test_all_ties(self):
        with pytest.raises(UndefinedCorrelationError):
            scc([2, 2, 2], [1, 2, 3])

    @given(st.lists(st.integers(-500, 500), min_size=3, max_size=40)
           .filter(lambda v: len(set(v)) > 1))
    def test_monotone_invariance(self, x):
        x = np.asarray(x, dtype=float)
        assert scc(x, np.exp(x / 50) * 3 + 1) == pytest.approx(1.0, abs=1e-12)
        y = np.random.default_rng(0).normal(size=x.size)
        assert abs(scc(x ** 3, y) - scc(x, y)) <= 1e-12


class TestInterRater:
    def test_identical_raters(self, rng):
        r = np.tile(np.round(rng.uniform(0, 5, 20) * 4) / 4, (4, 1))
        rep = inter_rater_baseline(r)
        assert rep.mae == 0 and rep.pcc == pytest.approx(1) and rep.scc == pytest.approx(1)

    def test_shifted_rater(self, rng):
        a = rng.uniform(0, 4, 15)
        rep = inter_rater_baseline(np.stack([a, a + 1]))
        assert rep.mae == pytest.approx(1.0, abs=1e-12)
        assert rep.pcc == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("method", ["leave_one_out", "pairwise"])
    def test_matches_loop(self, method):
        R = np.random.default_rng(4).uniform(0, 5, size=(4, 30))
        comps = []
        for r in range(4):
            if method == "leave_one_out":
                others = [sum(R[o][i] for o in range(4) if o != r) / 3 for i in range(30)]
                comps.append((R[r].tolist(), others))
            else:
                comps += [(R[r].tolist(), R[o].tolist()) for o in range(r + 1, 4)]
        expect = [sum(f(a, b) for a, b in comps) / len(comps)
                  for f in (mae_loop, pearson_loop, spearman_loop)]
        rep = inter_rater_baseline(R, method)
        np.testing.assert_allclose([rep.mae, rep.pcc, rep.scc], expect, rtol=0, atol=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError, match="2 raters"):
            inter_rater_baseline([[1, 2, 3]])
        with pytest.raises(ValueError, match="missing"):
            inter_rater_baseline([[1, 2, np.nan], [1, 2, 3]])


class TestReport:
    def test_json_and_table(self):
        rep = evaluate([1, 2, 3.5], [1, 2.5, 3], label="x")
        rep.per_fold = [(0.5, 0.9, 1.0)]
        d = json.loads(rep.to_json())
        assert d["n"] == 3 and d["per_fold"][0]["pcc"] == 0.9
        assert "MAE" in rep.table() and "fold 1" in rep.table()

    def test_no_mae(self):
        rep = evaluate([-3, -2, -1], [1, 2, 3], with_mae=False)
        assert rep.mae is None
        assert "/" in rep.table()
        assert isinstance(rep, EvalReport)
