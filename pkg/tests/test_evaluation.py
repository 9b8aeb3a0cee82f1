from datetime import datetime, timedelta

import numpy as np
import pytest

from presage.detector import Verdict
from presage.errors import DataError, OrderingError, StateError
from presage.evaluation import (
    LeadStatus,
    evaluate_run,
    false_warnings,
    lead_time,
    retraining_ratio,
    timing_stats,
)

from helpers import make_record

T0 = datetime(2021, 6, 1, 0, 0)
MIN = timedelta(minutes=1)


def anomaly_at(ts, index=0):
    return make_record(index, timestamp=ts, verdict=Verdict.ANOMALY)


def normal_at(ts, index=0):
    return make_record(index, timestamp=ts, verdict=Verdict.NORMAL)


class TestLeadTime:
    def test_proactive_report(self):
        label = T0 + 1000 * MIN
        records = [anomaly_at(label - 450 * MIN)]
        (result,) = lead_time(records, [label])
        assert result.status is LeadStatus.PROACTIVE
        assert result.lead_minutes == pytest.approx(450.0)

    def test_on_time_report(self):
        label = T0
        (result,) = lead_time([anomaly_at(label)], [label])
        assert result.status is LeadStatus.ON_TIME
        assert result.lead_minutes == 0.0

    def test_late_report_within_grace(self):
        label = T0
        (result,) = lead_time([anomaly_at(label + 30 * MIN)], [label])
        assert result.status is LeadStatus.LATE
        assert result.lead_minutes == pytest.approx(-30.0)

    def test_missed_label(self):
        label = T0 + 5000 * MIN
        records = [anomaly_at(T0)]  # far outside [label-1440, label+60]
        (result,) = lead_time(records, [label])
        assert result.status is LeadStatus.MISSED
        assert result.first_report_timestamp is None
        assert result.lead_minutes is None

    def test_earliest_report_wins(self):
        label = T0 + 600 * MIN
        records = [
            anomaly_at(label - 100 * MIN, index=1),
            anomaly_at(label - 400 * MIN, index=0),
        ]
        records.sort(key=lambda r: r.timestamp)
        (result,) = lead_time(records, [label])
        assert result.lead_minutes == pytest.approx(400.0)

    def test_unordered_records_rejected(self):
        records = [anomaly_at(T0 + 10 * MIN, index=1), anomaly_at(T0, index=0)]
        with pytest.raises(OrderingError):
            lead_time(records, [T0])

    def test_anomaly_without_timestamp_rejected(self):
        with pytest.raises(DataError):
            lead_time([make_record(0, timestamp=None, verdict=Verdict.ANOMALY)], [T0])


class TestAttribution:
    def test_report_goes_to_nearest_label(self):
        first = T0 + 1000 * MIN
        second = T0 + 1100 * MIN
        report = anomaly_at(first + 70 * MIN)  # 70 min after first, 30 before second
        results = lead_time([report], [first, second])
        assert results[0].status is LeadStatus.MISSED
        assert results[1].status is LeadStatus.PROACTIVE
        assert false_warnings([report], [first, second]) == 0

    def test_tie_goes_to_earlier_label(self):
        first = T0 + 1000 * MIN
        second = T0 + 1200 * MIN
        midpoint = first + 100 * MIN  # equidistant and inside both windows
        results = lead_time([anomaly_at(midpoint)], [first, second], grace_minutes=120)
        assert results[0].status is LeadStatus.LATE  # attributed to the earlier label
        assert results[1].status is LeadStatus.MISSED

    def test_each_report_counted_once(self):
        label = T0 + 2000 * MIN
        inside = anomaly_at(label - 60 * MIN, index=1)
        outside = anomaly_at(T0, index=0)
        records = [outside, inside]
        assert false_warnings(records, [label]) == 1
        (result,) = lead_time(records, [label])
        assert result.first_report_timestamp == inside.timestamp


class TestFalseWarnings:
    def test_no_anomalies(self):
        assert false_warnings([normal_at(T0)], [T0 + 100 * MIN]) == 0

    def test_report_inside_window_is_not_false(self):
        label = T0 + 500 * MIN
        assert false_warnings([anomaly_at(label - 5 * MIN)], [label]) == 0

    def test_reports_far_from_all_labels(self):
        label = T0 + 5000 * MIN
        records = [anomaly_at(T0 + k * MIN, index=k) for k in (10, 20)]
        assert false_warnings(records, [label]) == 2

    def test_no_labels_everything_is_false(self):
        records = [anomaly_at(T0 + k * MIN, index=k) for k in range(3)]
        assert false_warnings(records, []) == 3

    def test_widening_pre_window_is_monotone(self):
        rng = np.random.default_rng(99)
        for _ in range(30):
            labels = sorted(T0 + int(m) * MIN for m in rng.integers(0, 3000, 3))
            records = [
                anomaly_at(T0 + int(m) * MIN, index=k)
                for k, m in enumerate(sorted(rng.integers(-500, 3500, 6)))
            ]
            narrow_results = lead_time(records, labels, pre_window_minutes=200)
            wide_results = lead_time(records, labels, pre_window_minutes=800)
            narrow_hits = sum(r.status is not LeadStatus.MISSED for r in narrow_results)
            wide_hits = sum(r.status is not LeadStatus.MISSED for r in wide_results)
            assert wide_hits >= narrow_hits
            assert false_warnings(records, labels, pre_window_minutes=800) <= false_warnings(
                records, labels, pre_window_minutes=200
            )


class TestRetrainingRatio:
    def test_reference_denominators(self):
        records = [make_record(k, retrained=k < 38) for k in range(4032)]
        assert retraining_ratio(records, 3) == pytest.approx(38 / 4027)
        records = [make_record(k, retrained=k < 134) for k in range(22695)]
        assert retraining_ratio(records, 3) == pytest.approx(134 / 22690)
        assert retraining_ratio(records, 3) == pytest.approx(0.0059, abs=2e-4)

    def test_zero_retrains(self):
        records = [make_record(k) for k in range(100)]
        assert retraining_ratio(records, 3) == 0.0

    def test_run_shorter_than_ramp(self):
        records = [make_record(k) for k in range(5)]
        with pytest.raises(StateError):
            retraining_ratio(records, 3)


class TestTimingStats:
    def test_constant_times(self):
        records = [make_record(k, decision_time=0.02) for k in range(5)]
        assert timing_stats(records) == pytest.approx((0.02, 0.0))

    def test_two_values(self):
        records = [make_record(0, decision_time=0.01), make_record(1, decision_time=0.03)]
        avg, std = timing_stats(records)
        assert avg == pytest.approx(0.02)
        assert std == pytest.approx(0.01)

    def test_empty_run(self):
        with pytest.raises(StateError):
            timing_stats([])

    def test_negative_time_rejected(self):
        with pytest.raises(DataError):
            timing_stats([make_record(0, decision_time=-1.0)])


class TestEvaluateRun:
    def test_composite_summary(self):
        label = T0 + 1000 * MIN
        records = [
            make_record(
                k,
                timestamp=T0 + k * 5 * MIN,
                verdict=Verdict.ANOMALY if k == 150 else Verdict.NORMAL,
                retrained=k in (80, 150),
                decision_time=0.002,
            )
            for k in range(300)
        ]
        summary = evaluate_run(records, [label], look_back=3)
        assert summary.lead_times[0].status is LeadStatus.PROACTIVE
        assert summary.lead_times[0].lead_minutes == pytest.approx(1000 - 150 * 5)
        assert summary.false_warning_count == 0
        assert summary.retraining_ratio == pytest.approx(2 / 295)
        assert summary.avg_decision_time == pytest.approx(0.002)
