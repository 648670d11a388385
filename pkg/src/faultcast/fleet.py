"""Seeded synthetic ATM fleet generator.

Produces states/annotations files in the exact formats consumed by the
parsers, with plantable pre-failure error signatures per machine (a burst
of consecutive errors or isolated errors at a fixed spacing) and a ground
truth of failure dates for end-to-end verification.  All randomness flows
from NumPy's PCG64 generator; per-machine substreams are derived with
``SeedSequence([seed, machine_index])`` so parallel generation would equal
serial output.
"""

from __future__ import annotations

import dataclasses
import datetime
import json
from dataclasses import dataclass

import numpy as np

from .dataset import POINTS_PER_DAY
from .eventlog import MAINTENANCE_TYPES, MaintenanceRecord, StateEvent

DEFAULT_COMMANDS = (
    "AcceptDeposit",
    "CheckCassette",
    "CloseShutter",
    "CountNote",
    "DispenseCash",
    "EjectCard",
    "Initialize",
    "OpenShutter",
    "PrepareWithdrawal",
    "PrintReceipt",
    "QueryBalance",
    "ReadCard",
    "Reboot",
    "ReplenishCassette",
    "RetainCard",
    "SelfTest",
    "TransferFunds",
    "UpdateFirmware",
    "VerifyPin",
)

_ERROR_LABELS = (
    "NVNoteSerialNumberError - 0x3510",
    "NoteRemainInCashSlot - 0x0611",
    "SensorTimeout - 0x2204",
    "MotorStall - 0x1108",
)
_OK_LABEL = "ResponseOk - 0x0000"

_FAILURE_FLAG_CHOICES = tuple(
    i for i, t in enumerate(MAINTENANCE_TYPES) if t != "preventive_maintenance"
)
_PREVENTIVE_FLAG = MAINTENANCE_TYPES.index("preventive_maintenance")


@dataclass
class FleetConfig:
    num_machines: int = 40
    num_days: int = 180
    start_date: datetime.date = datetime.date(2021, 1, 1)
    commands: tuple = DEFAULT_COMMANDS
    base_intensity: float = 0.02  # mean successes per command per interval
    base_error_rate: float = 0.03  # errors as a fraction of traffic
    mean_cycle_days: float = 67.0  # ~ horizon / target positive ratio
    signature_window_days: int = 7
    signature_strength: float = 3.0
    signature_commands: int = 3
    burst_length: int = 18  # intervals per burst run
    periodic_spacing: int = 12  # intervals between periodic errors
    preventive_rate: float = 0.01  # preventive annotations per machine-day
    noise_burst_rate: float = 0.01  # decoy error bursts per machine-day
    target_positive_ratio: float = 0.104
    seed: int = 0

    def __post_init__(self):
        if self.num_machines < 1 or self.num_days < 1:
            raise ValueError("fleet must have machines and days")
        if self.signature_window_days < 1:
            raise ValueError("signature_window_days must be >= 1")
        if self.base_intensity < 0 or not 0 <= self.base_error_rate <= 1:
            raise ValueError("bad intensity or error rate")
        if self.signature_strength < 0:
            raise ValueError("signature_strength must be >= 0")


@dataclass
class GroundTruth:
    failure_dates: dict  # machine_id -> sorted list of dates
    signature_kinds: dict  # machine_id -> "burst" | "periodic"
    config: FleetConfig

    def days_to_failure(self, machine_id, date):
        nxt = next(
            (f for f in self.failure_dates.get(machine_id, ()) if f >= date),
            None,
        )
        return None if nxt is None else (nxt - date).days

    def to_json(self) -> str:
        cfg = dataclasses.asdict(self.config)
        cfg["start_date"] = self.config.start_date.isoformat()
        return json.dumps(
            {
                "failure_dates": {
                    m: [d.isoformat() for d in dates]
                    for m, dates in self.failure_dates.items()
                },
                "signature_kinds": self.signature_kinds,
                "config": cfg,
            },
            indent=2,
            sort_keys=True,
        )


def _machine_rng(config, index):
    return np.random.default_rng(
        np.random.SeedSequence([config.seed, index])
    )


def _schedule_failures(config, rng):
    """Failure day indices from a gamma-distributed cycle length."""
    days = []
    day = 0.0
    floor = config.signature_window_days + 2
    while True:
        cycle = max(floor, rng.gamma(4.0, config.mean_cycle_days / 4.0))
        day += cycle
        if day >= config.num_days:
            break
        days.append(int(day))
    return days


def _command_intensities(config):
    # deterministic spread of traffic across commands, heavier head
    n = len(config.commands)
    ranks = np.arange(n)
    return config.base_intensity * (0.25 + 1.5 * (n - ranks) / n)


def _counts_to_events(machine_id, date, counts_ok, counts_err, config, rng):
    """Expand per-interval counts into timestamped events, file-ordered."""
    events = []
    for interval in range(POINTS_PER_DAY):
        n_events = counts_ok[interval].sum() + counts_err[interval].sum()
        if n_events == 0:
            continue
        offsets = np.sort(rng.integers(0, 600, size=int(n_events)))
        pos = 0
        for c, command in enumerate(config.commands):
            for success, count in (
                (True, counts_ok[interval, c]),
                (False, counts_err[interval, c]),
            ):
                for _ in range(int(count)):
                    second = interval * 600 + int(offsets[pos])
                    pos += 1
                    label = (
                        _OK_LABEL
                        if success
                        else _ERROR_LABELS[
                            int(rng.integers(len(_ERROR_LABELS)))
                        ]
                    )
                    code = int(label.rsplit("0x", 1)[1], 16)
                    events.append(
                        StateEvent(
                            machine_id=machine_id,
                            date=date,
                            time=datetime.time(
                                second // 3600,
                                (second % 3600) // 60,
                                second % 60,
                            ),
                            command=command,
                            response_code=code,
                            response_label=label,
                        )
                    )
    return events


def _inject_signature(counts_err, day_offsets, sig_cols, kind, config, rng):
    """Amplify errors of the signatured commands on pre-failure days."""
    strength = config.signature_strength
    if strength <= 0:
        return
    for day in day_offsets:
        if kind == "burst":
            start = int(rng.integers(0, POINTS_PER_DAY - config.burst_length))
            run = slice(start, start + config.burst_length)
            for col in sig_cols:
                counts_err[day, run, col] += rng.poisson(
                    strength, config.burst_length
                )
        else:  # periodic
            phase = int(rng.integers(config.periodic_spacing))
            hits = np.arange(phase, POINTS_PER_DAY, config.periodic_spacing)
            for col in sig_cols:
                counts_err[day, hits, col] += 1 + rng.poisson(
                    max(strength - 1, 0.0), hits.size
                )


def generate_fleet(config: FleetConfig):
    """Generate (events, annotations, ground_truth) for the whole fleet.

    Deterministic given ``config`` (including its seed).  Raises if the
    configuration yields no failures at all.
    """
    intensities = _command_intensities(config)
    all_events = []
    all_records = []
    failure_dates = {}
    signature_kinds = {}

    for index in range(config.num_machines):
        machine_id = f"{1000 + index:04d}"
        rng = _machine_rng(config, index)
        fail_days = _schedule_failures(config, rng)
        kind = "burst" if rng.integers(2) == 0 else "periodic"
        sig_cols = np.sort(
            rng.choice(
                len(config.commands), config.signature_commands, replace=False
            )
        )

        shape = (config.num_days, POINTS_PER_DAY, len(config.commands))
        counts_ok = rng.poisson(intensities, size=shape)
        counts_err = rng.poisson(
            intensities * config.base_error_rate, size=shape
        )

        # decoy bursts unrelated to any failure
        n_noise = rng.poisson(config.noise_burst_rate * config.num_days)
        for _ in range(n_noise):
            day = int(rng.integers(config.num_days))
            col = int(rng.integers(len(config.commands)))
            start = int(rng.integers(0, POINTS_PER_DAY - config.burst_length))
            counts_err[
                day, start : start + config.burst_length, col
            ] += rng.poisson(1.0, config.burst_length)

        for fail_day in fail_days:
            window = range(
                max(0, fail_day - config.signature_window_days + 1),
                fail_day + 1,
            )
            _inject_signature(
                counts_err, window, sig_cols, kind, config, rng
            )

        dates = [
            config.start_date + datetime.timedelta(days=d)
            for d in range(config.num_days)
        ]
        for d, date in enumerate(dates):
            all_events.extend(
                _counts_to_events(
                    machine_id,
                    date,
                    counts_ok[d],
                    counts_err[d],
                    config,
                    rng,
                )
            )

        machine_failures = [dates[d] for d in fail_days]
        failure_dates[machine_id] = machine_failures
        signature_kinds[machine_id] = kind
        for date in machine_failures:
            flags = [0] * 6
            flags[_FAILURE_FLAG_CHOICES[int(rng.integers(
                len(_FAILURE_FLAG_CHOICES)
            ))]] = 1
            all_records.append(
                MaintenanceRecord(
                    machine_id=machine_id,
                    date=date,
                    task_flags=tuple(flags),
                )
            )
        n_preventive = rng.poisson(config.preventive_rate * config.num_days)
        for _ in range(n_preventive):
            flags = [0] * 6
            flags[_PREVENTIVE_FLAG] = 1
            all_records.append(
                MaintenanceRecord(
                    machine_id=machine_id,
                    date=dates[int(rng.integers(config.num_days))],
                    task_flags=tuple(flags),
                )
            )

    if not any(failure_dates.values()):
        raise ValueError("configuration produced no failures in the fleet")

    all_records.sort(key=lambda r: (r.machine_id, r.date))
    truth = GroundTruth(
        failure_dates=failure_dates,
        signature_kinds=signature_kinds,
        config=config,
    )
    return all_events, all_records, truth


def emit_gold_minicase():
    """Fixed two-machine, 15-day fleet with hand-checkable counts.

    Machine 0001 uses commands CountNote and Initialize and fails (jam) on
    day index 10; machine 0002 runs clean with sparse CountNote traffic.
    Event times, per-interval counts, cumulative values and labels are all
    small enough to verify by hand; the frozen expectations live in the
    regression tests.
    """
    start = datetime.date(2021, 3, 1)

    def day(i):
        return start + datetime.timedelta(days=i)

    def ev(machine, day_index, hh, mm, ss, command, ok=True):
        label = _OK_LABEL if ok else _ERROR_LABELS[0]
        return StateEvent(
            machine_id=machine,
            date=day(day_index),
            time=datetime.time(hh, mm, ss),
            command=command,
            response_code=0 if ok else int(
                _ERROR_LABELS[0].rsplit("0x", 1)[1], 16
            ),
            response_label=label,
        )

    events = [
        # machine 0001, day 0: one success, one error
        ev("0001", 0, 0, 5, 30, "CountNote"),
        ev("0001", 0, 7, 49, 55, "Initialize", ok=False),
        # day 1: two successes in the same interval
        ev("0001", 1, 0, 30, 0, "CountNote"),
        ev("0001", 1, 0, 39, 59, "CountNote"),
        # days 2-8: quiet
        # day 9: pre-failure errors
        ev("0001", 9, 12, 0, 0, "Initialize", ok=False),
        ev("0001", 9, 12, 5, 0, "Initialize", ok=False),
        # day 10: failure day, dense errors
        ev("0001", 10, 8, 0, 0, "Initialize", ok=False),
        ev("0001", 10, 8, 10, 0, "Initialize", ok=False),
        ev("0001", 10, 8, 20, 0, "Initialize", ok=False),
        # day 11: fresh cycle, one success
        ev("0001", 11, 9, 0, 0, "CountNote"),
        # day 14: last observed day
        ev("0001", 14, 23, 59, 59, "CountNote"),
        # machine 0002: sparse clean traffic over the same span
        ev("0002", 0, 10, 0, 0, "CountNote"),
        ev("0002", 7, 10, 0, 0, "CountNote"),
        ev("0002", 14, 10, 0, 0, "CountNote"),
    ]
    records = [
        MaintenanceRecord(
            machine_id="0001",
            date=day(4),
            task_flags=(0, 0, 0, 1, 0, 0),  # preventive: must be filtered
        ),
        MaintenanceRecord(
            machine_id="0001",
            date=day(10),
            task_flags=(0, 0, 1, 0, 0, 0),  # jam
        ),
    ]
    truth = GroundTruth(
        failure_dates={"0001": [day(10)], "0002": []},
        signature_kinds={"0001": "burst", "0002": "burst"},
        config=FleetConfig(num_machines=2, num_days=15, start_date=start),
    )
    return events, records, truth
