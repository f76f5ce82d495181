import pytest

from torsynth.validation import per_rank_deviation, weight_cdf
from torsynth.vertical import scale_uniform

from conftest import make_consensus, make_relay, random_consensus


class TestWeightCdf:
    def test_collapses_equal_weights(self):
        c = make_consensus(
            [make_relay(i, weight=w) for i, w in enumerate([10, 10, 20])]
        )
        assert weight_cdf(c) == [(10, pytest.approx(2 / 3)), (20, 1.0)]

    def test_upper_clip_point_count(self):
        c = make_consensus([make_relay(i, weight=i + 1) for i in range(100)])
        assert len(weight_cdf(c, upper_clip=0.99)) == 99

    def test_non_decreasing_and_ends_at_one(self):
        c = random_consensus(200, seed=1)
        points = weight_cdf(c)
        shares = [s for _, s in points]
        assert shares == sorted(shares)
        assert shares[-1] == 1.0
        weights = [w for w, _ in points]
        assert weights == sorted(weights)


class TestPerRankDeviation:
    def test_identical_consensuses(self, excerpt_consensus):
        report = per_rank_deviation(excerpt_consensus, excerpt_consensus)
        assert report.median_deviation == 0.0
        assert all(d == 0.0 for d in report.per_rank_deviations)
        assert report.n_compared == len(excerpt_consensus)

    def test_hand_computed_case(self):
        scaled = make_consensus(
            [make_relay(i, weight=w) for i, w in enumerate([10, 20, 30])]
        )
        reference = make_consensus(
            [make_relay(i, weight=w) for i, w in enumerate([10, 20, 36])]
        )
        report = per_rank_deviation(scaled, reference)
        assert report.median_deviation == 0.0
        assert max(report.per_rank_deviations) == pytest.approx(600 / 22)
        assert report.n_compared == 3

    def test_count_mismatch_resampled_to_smaller(self):
        scaled = random_consensus(100, seed=2)
        reference = random_consensus(97, seed=3)
        report = per_rank_deviation(scaled, reference)
        assert report.n_compared == 97
        assert len(report.per_rank_deviations) == 97

    def test_resampling_is_exact_on_equal_quantiles(self):
        # a list compared against its own subsample via quantile
        # interpolation keeps zero deviation at matching ranks
        c = make_consensus([make_relay(i, weight=10 * (i + 1)) for i in range(5)])
        report = per_rank_deviation(c, c)
        assert report.median_deviation == 0.0

    def test_scale_sensitivity_is_monotone(self):
        c = random_consensus(300, seed=4)
        medians = [
            per_rank_deviation(scale_uniform(c, f), c).median_deviation
            for f in (1.0, 1.1, 1.5)
        ]
        assert medians[0] <= medians[1] <= medians[2]
        assert medians[1] > 0

    def test_reordering_invariance(self):
        c = random_consensus(50, seed=5)
        shuffled = c.with_relays(reversed(c.relays))
        a = per_rank_deviation(c, shuffled)
        assert a.median_deviation == 0.0
        assert all(d == 0.0 for d in a.per_rank_deviations)

    def test_cdf_pairs_included(self, excerpt_consensus):
        report = per_rank_deviation(excerpt_consensus, excerpt_consensus)
        assert report.cdf_scaled == report.cdf_reference
        assert report.cdf_scaled[-1][1] == 1.0
