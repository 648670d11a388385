"""Build labeled machine-day multivariate time series from event logs.

Each operating day of each machine becomes one sample: a ``D x 144`` matrix
of event counts per 10-minute interval, accumulated since the start of the
current failure cycle.  The binary label marks days with a failure less than
``horizon_days`` ahead.
"""

from __future__ import annotations

import dataclasses
import datetime
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .eventlog import (
    CommandVocabulary,
    StateEvent,
    build_vocabulary,
    parse_annotations,
    parse_states,
)

logger = logging.getLogger(__name__)

POINTS_PER_DAY = 144
INTERVAL_MINUTES = 10


@dataclass
class LabelPolicy:
    """How machine-days are mapped to binary labels.

    horizon_days: label 1 iff the next failure is fewer than this many days
    ahead.  include_failure_day: whether the failure day itself (distance 0)
    is positive.  censored_handling: what to do with trailing days whose
    forward record coverage is shorter than the horizon.
    """

    horizon_days: int = 7
    include_failure_day: bool = True
    censored_handling: str = "exclude"  # or "label_negative"

    def __post_init__(self):
        if self.horizon_days < 1:
            raise ValueError("horizon_days must be >= 1")
        if self.censored_handling not in ("exclude", "label_negative"):
            raise ValueError(
                f"bad censored_handling {self.censored_handling!r}"
            )

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class MachineDaySample:
    """One machine-day MTS with its label and provenance."""

    machine_id: str
    date: datetime.date
    cycle_id: int
    series: np.ndarray  # (D, 144) int32, cumulative within the cycle
    label: int
    days_to_failure: Optional[int]  # None when censored


@dataclass
class DatasetManifest:
    samples: list
    vocabulary: CommandVocabulary
    policy: LabelPolicy
    raw_counts: bool = False

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def n_channels(self) -> int:
        return self.vocabulary.num_channels

    @property
    def series_length(self) -> int:
        return POINTS_PER_DAY

    @property
    def positives(self) -> int:
        return sum(s.label for s in self.samples)

    def tensor(self) -> np.ndarray:
        """Stack all sample series into an (N, D, L) array."""
        if not self.samples:
            return np.zeros(
                (0, self.n_channels, POINTS_PER_DAY), dtype=np.int32
            )
        return np.stack([s.series for s in self.samples])

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def machines(self) -> np.ndarray:
        return np.array([s.machine_id for s in self.samples])

    def describe(self) -> str:
        n = self.n_samples
        pos = self.positives
        ratio = pos / n if n else 0.0
        return (
            f"N={n}, D={self.n_channels}, L={self.series_length}, "
            f"positives={pos} ({ratio:.1%})"
        )


def bin_day(
    events: Sequence[StateEvent], vocabulary: CommandVocabulary
) -> np.ndarray:
    """Count events of one machine-day into a (D, 144) matrix.

    All events must belong to the same machine and date.
    """
    counts = np.zeros((vocabulary.num_channels, POINTS_PER_DAY), dtype=np.int32)
    if not events:
        return counts
    key = (events[0].machine_id, events[0].date)
    for e in events:
        if (e.machine_id, e.date) != key:
            raise ValueError("bin_day requires events of one machine-day")
        channel = vocabulary.channel_index(e.command, e.success)
        counts[channel, e.interval] += 1
    return counts


def accumulate_cycles(day_counts, failure_dates):
    """Turn per-day interval counts into per-cycle cumulative series.

    ``day_counts`` is a list of (date, matrix) pairs sorted ascending by
    date; ``failure_dates`` the failure annotation dates for this machine.
    The running sum resets at the first interval of the day after each
    failure date.  Returns a list of (date, cycle_id, cumulative matrix).
    """
    failure_dates = sorted(set(failure_dates))
    out = []
    cycle = 0
    carry = None
    prev_date = None
    fail_iter = iter(failure_dates)
    next_fail = next(fail_iter, None)
    for date, counts in day_counts:
        if prev_date is not None and date <= prev_date:
            raise ValueError("day_counts must be strictly ascending by date")
        # advance past failures that ended a cycle strictly before this day
        while next_fail is not None and next_fail < date:
            cycle += 1
            carry = None
            next_fail = next(fail_iter, None)
        cumulative = np.cumsum(counts, axis=1, dtype=np.int32)
        if carry is not None:
            cumulative += carry[:, None]
        out.append((date, cycle, cumulative))
        carry = cumulative[:, -1].copy()
        prev_date = date
    return out


def label_days(dates, failure_dates, policy: LabelPolicy, last_date=None):
    """Label each date against the machine's failure dates.

    Returns a list of (days_to_failure, label, keep) triples aligned with
    ``dates``.  ``days_to_failure`` is None for censored days (no recorded
    future failure).  ``last_date`` defaults to the latest of ``dates``.
    """
    failure_dates = sorted(set(failure_dates))
    if last_date is None and dates:
        last_date = max(dates)
    lower = 0 if policy.include_failure_day else 1
    out = []
    for date in dates:
        nxt = next((f for f in failure_dates if f >= date), None)
        if nxt is not None:
            dtf = (nxt - date).days
            label = int(lower <= dtf < policy.horizon_days)
            out.append((dtf, label, True))
        else:
            # censored: coverage counts the day itself
            coverage = (last_date - date).days + 1
            if coverage >= policy.horizon_days:
                out.append((None, 0, True))
            elif policy.censored_handling == "label_negative":
                out.append((None, 0, True))
            else:
                out.append((None, 0, False))
    return out


def _group_by_machine_day(events):
    grouped = {}
    for e in events:
        grouped.setdefault(e.machine_id, {}).setdefault(e.date, []).append(e)
    return grouped


def build_dataset(
    states,
    annotations,
    policy: Optional[LabelPolicy] = None,
    vocabulary: Optional[CommandVocabulary] = None,
    raw_counts: bool = False,
) -> DatasetManifest:
    """Assemble the labeled machine-day dataset.

    ``states`` and ``annotations`` may be file paths, open streams, raw CSV
    strings, or already-parsed collections.  Operating days of a machine are
    the full calendar range between its first and last event; days without
    events yield all-constant cumulative series.  With ``raw_counts=True``
    the per-interval counts are kept instead of cycle-cumulative values.
    """
    policy = policy or LabelPolicy()
    events = _load(states, parse_states)
    records = _load(annotations, parse_annotations)

    if vocabulary is None:
        if events:
            vocabulary = build_vocabulary(events)
        else:
            return DatasetManifest(
                samples=[],
                vocabulary=CommandVocabulary(["<none>"]),
                policy=policy,
                raw_counts=raw_counts,
            )

    grouped = _group_by_machine_day(events)
    failures = {}
    for r in records:
        if r.is_failure():
            failures.setdefault(r.machine_id, set()).add(r.date)
    for machine in failures:
        if machine not in grouped:
            logger.warning(
                "machine %s has annotations but no state events", machine
            )

    samples = []
    for machine in sorted(grouped):
        days = grouped[machine]
        first, last = min(days), max(days)
        dates = [
            first + datetime.timedelta(days=i)
            for i in range((last - first).days + 1)
        ]
        day_counts = [
            (d, bin_day(days.get(d, []), vocabulary)) for d in dates
        ]
        fail_dates = sorted(failures.get(machine, ()))
        if raw_counts:
            accumulated = []
            cycle, fi = 0, 0
            for d, counts in day_counts:
                while fi < len(fail_dates) and fail_dates[fi] < d:
                    cycle += 1
                    fi += 1
                accumulated.append((d, cycle, counts))
        else:
            accumulated = accumulate_cycles(day_counts, fail_dates)
        labeled = label_days(dates, fail_dates, policy, last_date=last)
        for (date, cycle, series), (dtf, label, keep) in zip(
            accumulated, labeled
        ):
            if not keep:
                continue
            samples.append(
                MachineDaySample(
                    machine_id=machine,
                    date=date,
                    cycle_id=cycle,
                    series=series,
                    label=label,
                    days_to_failure=dtf,
                )
            )
    return DatasetManifest(
        samples=samples,
        vocabulary=vocabulary,
        policy=policy,
        raw_counts=raw_counts,
    )


def _load(source, parser):
    if isinstance(source, (list, tuple)):
        return list(source)
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, newline="") as fh:
            return parser(fh)
    return parser(source)


def flatten_tabular(manifest: DatasetManifest):
    """Flatten the manifest into per-time-slice tabular rows.

    Returns ``(X, y, groups, sample_index)`` where ``X`` has ``N * L`` rows
    and ``D`` columns; row ``i * L + t`` is sample ``i``'s channel vector at
    time ``t``.  ``groups`` carries the machine id per row and
    ``sample_index`` the originating sample per row.
    """
    if manifest.n_samples == 0:
        raise ValueError("cannot flatten an empty manifest")
    tensor = manifest.tensor()  # (N, D, L)
    n, d, length = tensor.shape
    x = tensor.transpose(0, 2, 1).reshape(n * length, d)
    y = np.repeat(manifest.labels(), length)
    groups = np.repeat(manifest.machines(), length)
    sample_index = np.repeat(np.arange(n), length)
    return x.astype(np.float64), y, groups, sample_index


def save_manifest(manifest: DatasetManifest, path) -> None:
    """Persist the manifest as an npz file with a JSON metadata header."""
    meta = {
        "vocabulary": {
            "commands": list(manifest.vocabulary.commands),
            "overflow": manifest.vocabulary.overflow,
        },
        "policy": manifest.policy.to_dict(),
        "raw_counts": manifest.raw_counts,
    }
    dtf = np.array(
        [
            -1 if s.days_to_failure is None else s.days_to_failure
            for s in manifest.samples
        ],
        dtype=np.int64,
    )
    payload = dict(
        meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), np.uint8),
        series=manifest.tensor(),
        labels=manifest.labels(),
        days_to_failure=dtf,
        cycles=np.array([s.cycle_id for s in manifest.samples], np.int64),
        machines=manifest.machines(),
        dates=np.array([s.date.isoformat() for s in manifest.samples]),
    )
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".npz.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_manifest(path) -> DatasetManifest:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        series = data["series"]
        labels = data["labels"]
        dtf = data["days_to_failure"]
        cycles = data["cycles"]
        machines = data["machines"]
        dates = data["dates"]
    vocabulary = CommandVocabulary(
        meta["vocabulary"]["commands"],
        overflow=meta["vocabulary"]["overflow"],
    )
    samples = [
        MachineDaySample(
            machine_id=str(machines[i]),
            date=datetime.date.fromisoformat(str(dates[i])),
            cycle_id=int(cycles[i]),
            series=series[i],
            label=int(labels[i]),
            days_to_failure=None if dtf[i] < 0 else int(dtf[i]),
        )
        for i in range(len(labels))
    ]
    return DatasetManifest(
        samples=samples,
        vocabulary=vocabulary,
        policy=LabelPolicy.from_dict(meta["policy"]),
        raw_counts=meta["raw_counts"],
    )
