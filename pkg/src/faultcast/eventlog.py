"""Parsing and representation of ATM states and annotations files.

The states file is a CSV stream of machine operations (one command execution
per row, with the machine response).  The annotations file lists maintenance
interventions with six binary task flags.  Both parsers are strict: malformed
rows raise :class:`EventLogError` with the offending line number.
"""

from __future__ import annotations

import csv
import datetime
import io
import re
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

STATES_HEADER = ["Machine", "Date", "Time", "CmdType", "RespErr"]
ANNOTATIONS_HEADER = ["Machine", "Date", "F1", "F2", "F3", "F4", "F5", "F6"]

MAINTENANCE_TYPES = (
    "foreign_body",
    "generic_failure",
    "jam",
    "preventive_maintenance",
    "replacement",
    "bad_usage",
)

_PREVENTIVE_INDEX = MAINTENANCE_TYPES.index("preventive_maintenance")

_HEX_CODE = re.compile(r"0x([0-9a-fA-F]+)")


class EventLogError(ValueError):
    """Malformed row in a states or annotations file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class StateEvent:
    """One operation performed by a machine and its response."""

    machine_id: str
    date: datetime.date
    time: datetime.time
    command: str
    response_code: int
    response_label: str

    @property
    def success(self) -> bool:
        return self.response_code == 0

    @property
    def interval(self) -> int:
        """Index of the 10-minute interval of the day, in [0, 144)."""
        return (self.time.hour * 60 + self.time.minute) // 10


@dataclass(frozen=True)
class MaintenanceRecord:
    """One maintenance intervention with its six task flags."""

    machine_id: str
    date: datetime.date
    task_flags: tuple

    def __post_init__(self):
        if len(self.task_flags) != 6:
            raise ValueError("exactly six task flags required")
        if not any(self.task_flags):
            raise ValueError("at least one task flag must be set")

    def is_failure(self) -> bool:
        """True iff any flag other than preventive maintenance is set."""
        return any(
            f for i, f in enumerate(self.task_flags) if i != _PREVENTIVE_INDEX
        )


class CommandVocabulary:
    """Ordered command catalogue mapping (command, outcome) to a channel.

    Commands are kept in lexicographic order so the mapping is deterministic
    for identical inputs.  Channel ``2*rank(c)`` holds successes of command
    ``c`` and ``2*rank(c) + 1`` holds its errors.  With ``overflow=True`` an
    extra channel pair at the end absorbs commands that were not seen when
    the vocabulary was frozen.
    """

    def __init__(self, commands: Iterable[str], overflow: bool = False):
        self.commands = tuple(sorted(set(commands)))
        if not self.commands:
            raise ValueError("vocabulary must contain at least one command")
        self.overflow = overflow
        self._rank = {c: i for i, c in enumerate(self.commands)}

    @property
    def num_channels(self) -> int:
        return 2 * len(self.commands) + (2 if self.overflow else 0)

    def channel_index(self, command: str, success: bool) -> int:
        rank = self._rank.get(command)
        if rank is None:
            if not self.overflow:
                raise KeyError(f"unknown command {command!r}")
            rank = len(self.commands)
        return 2 * rank + (0 if success else 1)

    def channel_names(self) -> list:
        names = []
        for c in self.commands:
            names.append(f"{c}:ok")
            names.append(f"{c}:err")
        if self.overflow:
            names.append("<other>:ok")
            names.append("<other>:err")
        return names

    def with_overflow(self) -> "CommandVocabulary":
        return CommandVocabulary(self.commands, overflow=True)

    def __eq__(self, other):
        return (
            isinstance(other, CommandVocabulary)
            and self.commands == other.commands
            and self.overflow == other.overflow
        )

    def __len__(self):
        return len(self.commands)

    def __repr__(self):
        return (
            f"CommandVocabulary({len(self.commands)} commands, "
            f"overflow={self.overflow})"
        )


def build_vocabulary(events: Sequence[StateEvent]) -> CommandVocabulary:
    """Derive the command vocabulary from a collection of parsed events."""
    if not events:
        raise ValueError("cannot build a vocabulary from zero events")
    return CommandVocabulary(e.command for e in events)


def _as_stream(source) -> TextIO:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _parse_date(text, line):
    try:
        return datetime.date.fromisoformat(text.strip())
    except ValueError:
        raise EventLogError(f"bad date {text!r}", line) from None


def parse_states(source) -> list:
    """Parse a states stream into :class:`StateEvent` rows in file order.

    ``source`` may be an open text stream or a string holding the CSV
    content.  A header-only stream yields an empty list.
    """
    stream = _as_stream(source)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        return []
    header = [h.strip() for h in header]
    if header != STATES_HEADER:
        raise EventLogError(f"unexpected header {header}", line=1)
    events = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise EventLogError(f"expected 5 fields, got {len(row)}", lineno)
        machine, date, time, command, resp = (f.strip() for f in row)
        day = _parse_date(date, lineno)
        try:
            tod = datetime.time.fromisoformat(time)
        except ValueError:
            raise EventLogError(f"bad time {time!r}", lineno) from None
        match = _HEX_CODE.search(resp)
        if match is None:
            raise EventLogError(f"no 0x literal in {resp!r}", lineno)
        events.append(
            StateEvent(
                machine_id=machine,
                date=day,
                time=tod,
                command=command,
                response_code=int(match.group(1), 16),
                response_label=resp,
            )
        )
    return events


def parse_annotations(source) -> list:
    """Parse an annotations stream into :class:`MaintenanceRecord` rows."""
    stream = _as_stream(source)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        return []
    header = [h.strip() for h in header]
    if header != ANNOTATIONS_HEADER:
        raise EventLogError(f"unexpected header {header}", line=1)
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 8:
            raise EventLogError(f"expected 8 fields, got {len(row)}", lineno)
        machine, date = row[0].strip(), row[1].strip()
        day = _parse_date(date, lineno)
        flags = []
        for field in row[2:]:
            field = field.strip()
            if field not in ("0", "1"):
                raise EventLogError(f"flag {field!r} not in {{0,1}}", lineno)
            flags.append(int(field))
        if not any(flags):
            raise EventLogError("all-zero task flags", lineno)
        records.append(
            MaintenanceRecord(
                machine_id=machine, date=day, task_flags=tuple(flags)
            )
        )
    return records


def serialize_states(events: Sequence[StateEvent], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(STATES_HEADER)
    for e in events:
        writer.writerow(
            [
                e.machine_id,
                e.date.isoformat(),
                e.time.strftime("%H:%M:%S"),
                e.command,
                e.response_label,
            ]
        )


def serialize_annotations(
    records: Sequence[MaintenanceRecord], stream: TextIO
) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(ANNOTATIONS_HEADER)
    for r in records:
        writer.writerow([r.machine_id, r.date.isoformat(), *r.task_flags])
