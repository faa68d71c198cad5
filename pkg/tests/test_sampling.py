import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvoskit import SamplingScheme, SelectionMode, invert_plan, make_plan, plan_to_json
from rvoskit.errors import InvalidArgumentError
from rvoskit.sampling import SamplingPlan

ALL_SCHEMES = list(SamplingScheme)


class TestMakePlan:
    def test_non_continuous_interleaves(self):
        plan = make_plan(6, 3, SamplingScheme.NON_CONTINUOUS)
        assert plan.subsets == ((0, 2, 4), (1, 3, 5))
        assert plan.selection_mode is SelectionMode.PER_SUBSET

    def test_continuous_blocks(self):
        plan = make_plan(6, 3, SamplingScheme.CONTINUOUS)
        assert plan.subsets == ((0, 1, 2), (3, 4, 5))
        assert plan.selection_mode is SelectionMode.PER_SUBSET

    def test_non_continuous_remainder(self):
        plan = make_plan(7, 3, SamplingScheme.NON_CONTINUOUS)
        assert plan.num_subsets == 3
        assert plan.subsets == ((0, 3, 6), (1, 4), (2, 5))

    def test_no_sampling_is_blocks_plus_global_selection(self):
        plan = make_plan(7, 3, SamplingScheme.NO_SAMPLING)
        assert plan.subsets == make_plan(7, 3, SamplingScheme.CONTINUOUS).subsets
        assert plan.selection_mode is SelectionMode.GLOBAL

    def test_chunk_length_one_gives_singletons_for_both_sampled_schemes(self):
        nc = make_plan(5, 1, SamplingScheme.NON_CONTINUOUS)
        co = make_plan(5, 1, SamplingScheme.CONTINUOUS)
        assert nc.subsets == co.subsets == ((0,), (1,), (2,), (3,), (4,))

    @pytest.mark.parametrize("frames,chunk", [(0, 3), (3, 0), (-1, 1), (1, -1)])
    def test_invalid_arguments(self, frames, chunk):
        with pytest.raises(InvalidArgumentError):
            make_plan(frames, chunk, SamplingScheme.CONTINUOUS)

    def test_parse_scheme(self):
        assert SamplingScheme.parse("no-sampling") is SamplingScheme.NO_SAMPLING
        with pytest.raises(InvalidArgumentError):
            SamplingScheme.parse("zigzag")


class TestPlanValidation:
    def test_rejects_non_partition(self):
        with pytest.raises(InvalidArgumentError):
            SamplingPlan(
                SamplingScheme.CONTINUOUS, 4, 2, ((0, 1), (1, 3)), SelectionMode.PER_SUBSET
            )

    def test_rejects_oversized_subset(self):
        with pytest.raises(InvalidArgumentError):
            SamplingPlan(
                SamplingScheme.CONTINUOUS, 4, 2, ((0, 1, 2), (3,)), SelectionMode.PER_SUBSET
            )


class TestInvertPlan:
    def test_example_frame_three(self):
        plan = make_plan(6, 3, SamplingScheme.NON_CONTINUOUS)
        assert invert_plan(plan)[3] == (1, 1)

    def test_single_frame(self):
        plan = make_plan(1, 30, SamplingScheme.NO_SAMPLING)
        assert invert_plan(plan) == {0: (0, 0)}

    @pytest.mark.parametrize("scheme", ALL_SCHEMES)
    def test_round_trips_the_plan(self, scheme):
        plan = make_plan(23, 4, scheme)
        lookup = invert_plan(plan)
        assert sorted(lookup) == list(range(23))
        for frame, (n, pos) in lookup.items():
            assert plan.subsets[n][pos] == frame


@settings(max_examples=300, deadline=None)
@given(
    frames=st.integers(1, 400),
    chunk=st.integers(1, 60),
    scheme=st.sampled_from(ALL_SCHEMES),
)
def test_plan_invariants(frames, chunk, scheme):
    plan = make_plan(frames, chunk, scheme)
    flat = [f for subset in plan.subsets for f in subset]
    assert sorted(flat) == list(range(frames))  # disjoint and covering
    assert plan.num_subsets == math.ceil(frames / chunk)
    assert all(len(s) <= chunk for s in plan.subsets)
    if scheme is SamplingScheme.NON_CONTINUOUS:
        stride = plan.num_subsets
        for subset in plan.subsets:
            assert all(b - a == stride for a, b in zip(subset, subset[1:]))
    else:
        for subset in plan.subsets:
            assert list(subset) == list(range(subset[0], subset[-1] + 1))


@settings(max_examples=150, deadline=None)
@given(frames=st.integers(1, 300))
def test_schemes_coincide_at_chunk_length_one(frames):
    nc = make_plan(frames, 1, SamplingScheme.NON_CONTINUOUS)
    co = make_plan(frames, 1, SamplingScheme.CONTINUOUS)
    assert nc.subsets == co.subsets


@settings(max_examples=150, deadline=None)
@given(frames=st.integers(1, 80), extra=st.integers(0, 40), scheme=st.sampled_from(ALL_SCHEMES))
def test_whole_video_when_chunk_covers_it(frames, extra, scheme):
    plan = make_plan(frames, frames + extra, scheme)
    assert plan.subsets == (tuple(range(frames)),)


def test_json_view_is_plain_data():
    plan = make_plan(7, 3, SamplingScheme.NON_CONTINUOUS)
    doc = plan_to_json(plan)
    assert json.loads(json.dumps(doc)) == {
        "scheme": "non-continuous",
        "T": 7,
        "T_c": 3,
        "subsets": [[0, 3, 6], [1, 4], [2, 5]],
    }
