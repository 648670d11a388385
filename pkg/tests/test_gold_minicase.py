"""Frozen end-to-end expectations for the hand-checkable mini fleet.

Machine 0001 (commands CountNote / Initialize, jam failure on day index
10) and machine 0002 (clean, sparse) are small enough that every binned
count, cumulative value and label below was computed by hand.  Any
change in binning, cycle accumulation or labeling must show up here.
"""

import datetime

import numpy as np
import pytest

from faultcast.dataset import LabelPolicy, build_dataset, build_vocabulary
from faultcast.fleet import emit_gold_minicase

START = datetime.date(2021, 3, 1)


@pytest.fixture(scope="module")
def manifest():
    events, records, _ = emit_gold_minicase()
    return build_dataset(events, records, LabelPolicy(), build_vocabulary(events))


def _sample(manifest, machine, day_index):
    date = START + datetime.timedelta(days=day_index)
    matches = [
        s
        for s in manifest.samples
        if s.machine_id == machine and s.date == date
    ]
    assert len(matches) == 1
    return matches[0]


def test_vocabulary_and_shape(manifest):
    assert manifest.vocabulary.commands == ("CountNote", "Initialize")
    assert manifest.n_channels == 4
    assert manifest.series_length == 144


def test_sample_inventory(manifest):
    # 0001: days 0-10 kept (11); 11-14 censored with < 7 days coverage.
    # 0002: no failures; coverage keeps days 0-8 (9).
    assert manifest.n_samples == 20
    assert manifest.positives == 7
    per_machine = {}
    for s in manifest.samples:
        per_machine.setdefault(s.machine_id, []).append(s.date)
    assert len(per_machine["0001"]) == 11
    assert len(per_machine["0002"]) == 9
    assert max(per_machine["0001"]) == START + datetime.timedelta(days=10)
    assert max(per_machine["0002"]) == START + datetime.timedelta(days=8)


def test_labels(manifest):
    # failure on day 10: dtf < 7 on days 4..10
    for d in range(11):
        s = _sample(manifest, "0001", d)
        assert s.label == (1 if d >= 4 else 0), f"day {d}"
        assert s.days_to_failure == 10 - d
    for d in range(9):
        s = _sample(manifest, "0002", d)
        assert s.label == 0
        assert s.days_to_failure is None


def test_day0_binning_and_cumulation(manifest):
    s = _sample(manifest, "0001", 0)
    # 00:05:30 CountNote ok -> channel 0 interval 0
    # 07:49:55 Initialize err -> channel 3 interval 46
    expected = np.zeros((4, 144), dtype=np.int64)
    expected[0, 0:] = 1
    expected[3, 46:] = 1
    np.testing.assert_array_equal(s.series, expected)
    assert s.cycle_id == 0


def test_day1_carries_previous_day(manifest):
    s = _sample(manifest, "0001", 1)
    # carry ch0=1, ch3=1; two CountNote ok in interval 3 (00:30, 00:39:59)
    expected = np.zeros((4, 144), dtype=np.int64)
    expected[0, :3] = 1
    expected[0, 3:] = 3
    expected[3, :] = 1
    np.testing.assert_array_equal(s.series, expected)


def test_quiet_days_stay_constant(manifest):
    for d in range(2, 9):
        s = _sample(manifest, "0001", d)
        expected = np.zeros((4, 144), dtype=np.int64)
        expected[0, :] = 3
        expected[3, :] = 1
        np.testing.assert_array_equal(s.series, expected)


def test_day9_and_failure_day(manifest):
    s9 = _sample(manifest, "0001", 9)
    # two Initialize errors at 12:00 and 12:05 -> interval 72
    assert s9.series[3, 71] == 1 and s9.series[3, 72] == 3
    assert s9.series[3, 143] == 3
    s10 = _sample(manifest, "0001", 10)
    # errors at 08:00/08:10/08:20 -> intervals 48, 49, 50
    np.testing.assert_array_equal(
        s10.series[3, 46:52], [3, 3, 4, 5, 6, 6]
    )
    assert s10.series[3, 143] == 6
    assert s10.series[0, 143] == 3
    assert s10.cycle_id == 0


def test_cycle_resets_after_failure(manifest):
    # day 11 starts cycle 1 with zero carry; it is censored out of the
    # manifest, so the reset is visible through the raw-counts build
    events, records, _ = emit_gold_minicase()
    raw = build_dataset(
        events,
        records,
        LabelPolicy(censored_handling="label_negative"),
        build_vocabulary(events),
    )
    s11 = _sample(raw, "0001", 11)
    assert s11.cycle_id == 1
    expected = np.zeros((4, 144), dtype=np.int64)
    expected[0, 54:] = 1  # 09:00 CountNote ok
    np.testing.assert_array_equal(s11.series, expected)
    s14 = _sample(raw, "0001", 14)
    assert s14.series[0, 142] == 1 and s14.series[0, 143] == 2


def test_machine_0002_sparse_counts(manifest):
    s0 = _sample(manifest, "0002", 0)
    expected = np.zeros((4, 144), dtype=np.int64)
    expected[0, 60:] = 1  # 10:00 -> interval 60
    np.testing.assert_array_equal(s0.series, expected)
    s7 = _sample(manifest, "0002", 7)
    expected7 = np.zeros((4, 144), dtype=np.int64)
    expected7[0, :60] = 1  # carry of day 0
    expected7[0, 60:] = 2  # second event at 10:00
    np.testing.assert_array_equal(s7.series, expected7)
    # day 8 has no events: constant carry of both earlier events
    s8 = _sample(manifest, "0002", 8)
    np.testing.assert_array_equal(s8.series[0], np.full(144, 2))
    np.testing.assert_array_equal(s8.series[1:], np.zeros((3, 144)))
