import math

import numpy as np
import pytest

from lenscran.rates import DropResult, summarize


def result(drop, rate, budget=2.0, arch="lens", csi="perfect", antennas=(3, 5), streams=(1, 2)):
    return DropResult(drop, budget, arch, csi, np.zeros(2), np.array(rate, dtype=float),
                      np.array(antennas), np.array(streams), 5.0)


def test_mean_and_stderr():
    # [TRIVIAL] per-drop means 2 and 4
    s = summarize([result(0, [1, 3]), result(1, [4, 4])])
    assert len(s) == 1
    assert s[0].mean_rate == pytest.approx(3.0)
    assert s[0].stderr == pytest.approx(np.std([2, 4], ddof=1) / math.sqrt(2))
    assert s[0].mean_antennas == pytest.approx(4.0)
    assert s[0].mean_streams == pytest.approx(1.5)
    assert s[0].drops == 2


def test_single_drop_stderr_zero():
    assert summarize([result(0, [1, 1])])[0].stderr == 0.0


def test_ordering():
    rs = [result(0, [1, 1], budget=math.inf, arch="upa"), result(0, [1, 1], arch="upa", csi="estimated"),
          result(0, [1, 1], arch="lens", csi="estimated"), result(0, [1, 1], budget=0.4)]
    keys = [(s.budget_gbps, s.arch, s.csi) for s in summarize(rs)]
    assert keys == [(0.4, "lens", "perfect"), (2.0, "lens", "estimated"),
                    (2.0, "upa", "estimated"), (math.inf, "upa", "perfect")]


def test_permutation_invariant():
    rng = np.random.default_rng(0)
    rs = [result(d, rng.uniform(0, 5, 2), budget=b) for d in range(5) for b in (0.4, 8.0)]
    a = summarize(rs)
    b = summarize([rs[i] for i in rng.permutation(len(rs))])
    assert [(x.mean_rate, x.stderr) for x in a] == [(x.mean_rate, x.stderr) for x in b]


def test_errors():
    with pytest.raises(ValueError):
        summarize([])
    with pytest.raises(ValueError):
        result(0, [1], arch="dish")
    with pytest.raises(ValueError):
        result(0, [1], csi="partial")
