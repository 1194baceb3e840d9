import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relrank.engine import RunLogRecord
from relrank.errors import InputContractError
from relrank.metrics import (
    dispersion_series,
    effective_ratio,
    popoviciu_check,
    population_variance,
)


def test_effective_ratio_mixed_batch():
    stats = effective_ratio([[1, 1, 1], [1, 0, 1]])
    assert stats.groups_total == 2
    assert stats.groups_effective == 1
    assert stats.ratio == 0.5


def test_effective_ratio_prr_batch_is_one():
    from relrank.core import RankVector, shape_prr

    batch = []
    rng = np.random.default_rng(3)
    for _ in range(50):
        perm = rng.permutation(8) + 1
        batch.append(shape_prr(RankVector(ranks=tuple(int(r) for r in perm), r_max=8)))
    assert effective_ratio(batch).ratio == 1.0


def test_effective_ratio_unanimous_and_empty():
    assert effective_ratio([[1, 1], [0, 0], [0.5, 0.5]]).ratio == 0.0
    empty = effective_ratio([])
    assert empty.ratio == 0.0 and empty.groups_total == 0


def test_popoviciu_two_point_bound_attained():
    assert population_variance([0.0, 1.0]) == 0.25
    assert popoviciu_check([0.0, 1.0], 0.0, 1.0)


def test_popoviciu_zero_variance():
    assert popoviciu_check([0.5, 0.5, 0.5], 0.0, 1.0)


def test_popoviciu_rejects_out_of_support_rewards():
    with pytest.raises(InputContractError):
        popoviciu_check([1.5, 0.2], 0.0, 1.0)


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=16))
@settings(max_examples=300)
def test_popoviciu_holds_on_unit_interval(rewards):
    assert popoviciu_check(rewards, 0.0, 1.0)


@given(
    st.lists(st.floats(-3, 3), min_size=2, max_size=10),
    st.floats(0.1, 4.0),
    st.floats(-5, 5),
)
@settings(max_examples=200)
def test_effective_flag_invariant_under_increasing_affine_maps(rewards, scale, shift):
    before = effective_ratio([rewards]).groups_effective
    after = effective_ratio([[scale * r + shift for r in rewards]]).groups_effective
    # equality of rewards is preserved exactly by affine maps, up to the
    # variance tolerance; unanimous stays unanimous
    if len(set(rewards)) == 1:
        assert before == after == 0


def _record(step, lo, hi, std, raw=None):
    return RunLogRecord(
        step=step,
        effective_ratio=1.0,
        reward_mean=(lo + hi) / 2,
        reward_std=std,
        reward_min=lo,
        reward_max=hi,
        reward_range=hi - lo,
        greedy_accuracy=0.5,
        mean_correct_length=100.0,
        popoviciu_ok=True,
        raw_score_min=raw[0] if raw else None,
        raw_score_max=raw[1] if raw else None,
    )


def test_dispersion_series_shaped():
    records = [_record(1, 0.0, 1.0, 0.5), _record(2, 0.0, 0.0, 0.0)]
    series = dispersion_series(records)
    assert [s.reward_range for s in series] == [1.0, 0.0]
    assert series[0].population_variance == 0.25


def test_dispersion_series_binary_rewards_range_is_zero_or_one():
    records = [_record(s, 0.0, 1.0, 0.5) for s in range(1, 4)] + [_record(4, 1.0, 1.0, 0.0)]
    series = dispersion_series(records)
    assert set(s.reward_range for s in series) <= {0.0, 1.0}


def test_dispersion_series_raw_skips_missing():
    records = [_record(1, 0, 1, 0.5), _record(2, 0, 1, 0.5, raw=(-3.0, 7.0))]
    series = dispersion_series(records, source="raw")
    assert len(series) == 1
    assert series[0].reward_range == 10.0
    assert math.isnan(series[0].population_variance)


def test_dispersion_series_rejects_bad_source():
    with pytest.raises(InputContractError):
        dispersion_series([], source="other")


def test_dispersion_raw_range_tracks_drifting_score_scale():
    # a scalar ranker whose scale ends 10x larger multiplies the raw-score
    # range of a fixed response set by the same factor
    from relrank.core import Response
    from relrank.rankers import NoisyScalarRanker

    rate = math.log(10) / 100
    ranker = NoisyScalarRanker(scale_growth_rate=rate)
    responses = [
        Response(id=i, prompt_id="p", correct=True, length=100, latent_quality=q)
        for i, q in enumerate([-1.0, 0.2, 1.5])
    ]
    records = []
    for step in (0, 100):
        scores = ranker.scores(responses, step=step)
        records.append(_record(step, 0.0, 1.0, 0.4, raw=(min(scores), max(scores))))
    series = dispersion_series(records, source="raw")
    assert series[1].reward_range == pytest.approx(10 * series[0].reward_range, rel=1e-12)
