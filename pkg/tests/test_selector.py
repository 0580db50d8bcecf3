import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import REFERENCE_ORIGINAL, REFERENCE_VARIANTS
from defog.errors import InvalidParams
from defog.metrics import MetricsReport, report_from_precomputed
from defog.selector import GateThresholds, RankKey, Reason, gate, rank, select_and_rank

DEFAULT = GateThresholds(epsilon=0.001, tau=1.0, mu=1.0)


def reference(vid: str) -> MetricsReport:
    areas, total = REFERENCE_VARIANTS[vid]
    return report_from_precomputed(areas, total, *REFERENCE_ORIGINAL, variant_id=vid)


def make_report(vid="r", rav=(0.5, 0.5), vvo=(2.0, 1.0), rvv=2.0):
    return MetricsReport(vid, 1.0, tuple(rav), tuple(rav), tuple(vvo), 0.1, rvv)


def test_threshold_validation():
    for kwargs in [dict(epsilon=0), dict(epsilon=1.5), dict(epsilon=0.05), dict(tau=0.9), dict(mu=0.5)]:
        with pytest.raises(InvalidParams):
            GateThresholds(**kwargs)
    assert GateThresholds(epsilon=0.05, strict=False).epsilon == 0.05


def test_solid_area_rejected():
    v = gate(reference("240_5_2_26_1"), DEFAULT)
    assert not v.accepted
    assert v.reasons == (Reason.SOLID_AREA,)


def test_fake_detail_rejected():
    v = gate(reference("0_5_0_39_1"), DEFAULT)
    assert v.reasons == (Reason.FAKE_DETAIL_EVERYWHERE,)


def test_good_variant_accepted():
    v = gate(reference("60_1_0_13_0"), DEFAULT)
    assert v.accepted and v.reasons == ()


def test_self_report_has_no_gain():
    areas, total = REFERENCE_ORIGINAL
    own = report_from_precomputed(areas, total, areas, total, "original")
    v = gate(own, DEFAULT)
    assert v.reasons == (Reason.NO_DETAIL_GAIN,)


def test_solid_area_not_rescued_by_gain():
    v = gate(make_report(rav=(0.0, 0.9), vvo=(0.0, 50.0), rvv=10), DEFAULT)
    assert v.reasons == (Reason.SOLID_AREA,)


def test_infinite_vvo_counts_as_gain():
    v = gate(make_report(vvo=(math.inf, 0.5)), GateThresholds(mu=1e9))
    assert v.accepted


def test_rank_by_max_vvo_and_rvv():
    pair = [reference("240_7_1_13_0"), reference("60_1_0_13_0")]
    by_vvo = rank(pair, RankKey.MAX_VVO)
    assert by_vvo.ids == ["60_1_0_13_0", "240_7_1_13_0"]
    assert [e.key_value for e in by_vvo] == pytest.approx([10.0626, 5.7917], abs=1e-3)
    by_rvv = rank(pair, "rvv")
    assert by_rvv.ids == ["60_1_0_13_0", "240_7_1_13_0"]
    assert [e.rank for e in by_rvv] == [1, 2]


def test_rank_singleton_and_ties():
    only = rank([make_report("z")], RankKey.RVV)
    assert only.ids == ["z"] and only.rank_of("z") == 1
    tied = rank([make_report("b"), make_report("a"), make_report("c", vvo=(3.0, 1.0))])
    assert tied.ids == ["c", "a", "b"]


def test_rank_key_parse():
    assert RankKey.parse("max-vvo") is RankKey.MAX_VVO
    assert RankKey.parse("RVV") is RankKey.RVV
    with pytest.raises(InvalidParams):
        RankKey.parse("mean")


def test_select_reference_table():
    reports = [reference(v) for v in REFERENCE_VARIANTS]
    ranked, verdicts = select_and_rank(reports, DEFAULT)
    assert ranked.ids == ["60_1_0_13_0", "240_7_1_13_0"]
    assert sum(not v.accepted for v in verdicts) == 3


def test_select_empty():
    ranked, verdicts = select_and_rank([], DEFAULT)
    assert len(ranked) == 0 and verdicts == []


reports_strategy = st.builds(
    make_report,
    vid=st.text("abcdef", min_size=1, max_size=4),
    rav=st.lists(st.floats(0, 2), min_size=2, max_size=2),
    vvo=st.lists(st.floats(0, 20) | st.just(math.inf), min_size=2, max_size=2),
    rvv=st.floats(0, 20),
)


@given(
    reps=st.lists(reports_strategy, max_size=10),
    eps=st.floats(1e-6, 0.009),
    tau=st.floats(1, 10),
    mu=st.floats(1, 10),
)
def test_verdicts_independent_of_batch(reps, eps, tau, mu):
    th = GateThresholds(eps, tau, mu)
    ranked, verdicts = select_and_rank(reps, th)
    assert verdicts == [gate(r, th) for r in reps]
    assert sorted(ranked.ids) == sorted(r.variant_id for r, v in zip(reps, verdicts) if v.accepted)
    for v in verdicts:
        assert v.accepted == (not v.reasons)
