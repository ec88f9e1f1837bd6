import numpy as np
import pytest

from cyclouwb.caf import CfTlSet, caf_estimate
from cyclouwb.complexity import COUNTED, MultCounter, complexity_count
from cyclouwb.signals.iq import IQBuffer

K = 10_000
OMEGA1_COUNTS = [2, 2]


def test_proposed_total():
    for d in ("t_prop_1", "t_prop_2"):
        assert complexity_count(d, OMEGA1_COUNTS, K).total == 321_192


def test_dg_total():
    assert complexity_count("t_dg", OMEGA1_COUNTS, K).total == 804_088


def test_adhoc_total():
    assert complexity_count("t_ad_hoc", OMEGA1_COUNTS, K, l_n=5).total == 140_032


def test_itemised_terms_add_up():
    r = complexity_count("t_prop_1", OMEGA1_COUNTS, K)
    assert r.as_dict() == {"caf": 80_000, "covariance": 4 * (6 * K + 260), "inverse": 128, "statistic": 24}
    assert r.rows()[-1] == ("t_prop_1", "total", 321_192)


def test_sum_dg_formula():
    # 2JK + (6K + 4L) sum N_i^2 + sum_i (8 N_i^3 + 24 N_i^2 + 4 N_i^2 + 2 N_i)
    want = 2 * 4 * K + (6 * K + 260) * 8 + 2 * (64 + 96 + 16 + 4)
    assert complexity_count("t_sum_dg", OMEGA1_COUNTS, K).total == want
    assert complexity_count("t_max_dg", OMEGA1_COUNTS, K).total == want


def test_ordering_at_reference_scale():
    c = {d: complexity_count(d, OMEGA1_COUNTS, K).total for d in COUNTED}
    assert 1 / 3 <= c["t_prop_1"] / c["t_ad_hoc"] <= 3
    assert max(c["t_prop_1"], c["t_ad_hoc"]) < c["t_sum_dg"] < c["t_dg"]


@pytest.mark.parametrize("counts", [[], [0, 2], [-1]])
def test_rejects_bad_structure(counts):
    with pytest.raises(ValueError):
        complexity_count("t_dg", counts, K)


def test_rejects_bad_sizes_and_names():
    with pytest.raises(ValueError):
        complexity_count("t_dg", [2], 0)
    with pytest.raises(ValueError):
        complexity_count("t_ad_hoc", [2], K, l_n=-1)
    with pytest.raises(ValueError):
        complexity_count("t_ed", [2], K)


@pytest.mark.parametrize("lag", [0, 3, 17])
def test_counter_tallies_two_per_summand(rng, lag):
    x = IQBuffer(rng.standard_normal(500) + 1j * rng.standard_normal(500), 1e9)
    c = MultCounter()
    v = c.caf(x, 0.05, lag)
    assert c.mults == 2 * (500 - lag)
    assert v == pytest.approx(caf_estimate(x, 0.05, lag), abs=1e-12)


def test_counter_matches_caf_term_for_small_lags(rng):
    x = IQBuffer(rng.standard_normal(K) + 0j, 1e9)
    cftl = CfTlSet.shared_lags([0.0625, -0.0625], [2, 4])
    c = MultCounter()
    vals = c.caf_vector(x, cftl)
    assert vals.shape == (4,)
    model = complexity_count("t_prop_1", cftl.counts, K).as_dict()["caf"]
    # the model rounds K - tau up to K for every pair
    assert model - c.mults == 2 * sum(t for _, t in cftl.pairs)
    assert np.isclose(c.mults / model, 1, atol=1e-3)
