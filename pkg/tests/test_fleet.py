import datetime
import io
import json

import pytest

from faultcast.dataset import LabelPolicy, build_dataset, build_vocabulary
from faultcast.eventlog import parse_annotations, parse_states
from faultcast.eventlog import serialize_annotations, serialize_states
from faultcast.fleet import (
    DEFAULT_COMMANDS,
    FleetConfig,
    emit_gold_minicase,
    generate_fleet,
)


def _small_config(**overrides):
    params = dict(num_machines=4, num_days=40, seed=7)
    params.update(overrides)
    return FleetConfig(**params)


def _serialize(events, records):
    s, a = io.StringIO(), io.StringIO()
    serialize_states(events, s)
    serialize_annotations(records, a)
    return s.getvalue(), a.getvalue()


class TestGenerateFleet:
    def test_byte_identical_determinism(self):
        first = _serialize(*generate_fleet(_small_config())[:2])
        second = _serialize(*generate_fleet(_small_config())[:2])
        assert first == second

    def test_seed_changes_output(self):
        base = _serialize(*generate_fleet(_small_config())[:2])
        other = _serialize(*generate_fleet(_small_config(seed=8))[:2])
        assert base != other

    def test_round_trips_through_parsers(self):
        events, records, _ = generate_fleet(_small_config())
        states_text, ann_text = _serialize(events, records)
        assert parse_states(states_text) == events
        assert parse_annotations(ann_text) == records

    def test_truth_consistent_with_annotations(self):
        events, records, truth = generate_fleet(_small_config())
        failures = {}
        for r in records:
            if r.is_failure():
                failures.setdefault(r.machine_id, []).append(r.date)
        for machine, dates in truth.failure_dates.items():
            assert sorted(failures.get(machine, [])) == sorted(dates)

    def test_machine_ids_and_span(self):
        config = _small_config()
        events, _, truth = generate_fleet(config)
        machines = {e.machine_id for e in events}
        assert machines == {f"{1000 + i:04d}" for i in range(4)}
        assert set(truth.signature_kinds) == machines
        last = config.start_date + datetime.timedelta(days=config.num_days - 1)
        assert all(config.start_date <= e.date <= last for e in events)

    def test_commands_from_catalog(self):
        events, _, _ = generate_fleet(_small_config())
        assert {e.command for e in events} <= set(DEFAULT_COMMANDS)

    def test_zero_failure_config_rejected(self):
        # cycles far longer than the horizon: no machine ever fails
        config = _small_config(num_days=5, mean_cycle_days=10000.0)
        with pytest.raises(ValueError):
            generate_fleet(config)

    def test_signature_strength_adds_presignal_errors(self):
        def window_error_count(strength):
            config = _small_config(
                num_machines=6, num_days=90, signature_strength=strength
            )
            events, _, truth = generate_fleet(config)
            errors = 0
            for e in events:
                if e.success:
                    continue
                dtf = truth.days_to_failure(e.machine_id, e.date)
                if dtf is not None and dtf < config.signature_window_days:
                    errors += 1
            return errors

        assert window_error_count(5.0) > 2 * window_error_count(0.0)

    def test_truth_json_round_trip(self):
        _, _, truth = generate_fleet(_small_config())
        payload = json.loads(truth.to_json())
        assert payload["config"]["seed"] == 7
        for machine, dates in payload["failure_dates"].items():
            assert dates == [d.isoformat() for d in truth.failure_dates[machine]]

    def test_positive_ratio_near_target(self):
        config = FleetConfig(num_machines=20, num_days=120, seed=3)
        events, records, _ = generate_fleet(config)
        manifest = build_dataset(
            events, records, LabelPolicy(), build_vocabulary(events)
        )
        ratio = manifest.positives / manifest.n_samples
        assert 0.05 <= ratio <= 0.2

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            FleetConfig(num_machines=0)
        with pytest.raises(ValueError):
            FleetConfig(base_error_rate=1.5)
        with pytest.raises(ValueError):
            FleetConfig(signature_window_days=0)


class TestGoldMinicase:
    def test_parses_clean_and_is_frozen(self):
        events, records, truth = emit_gold_minicase()
        states_text, ann_text = _serialize(events, records)
        assert parse_states(states_text) == events
        assert parse_annotations(ann_text) == records
        assert truth.failure_dates["0001"] == [datetime.date(2021, 3, 11)]
        assert truth.failure_dates["0002"] == []
        # stable across calls
        assert _serialize(*emit_gold_minicase()[:2]) == (states_text, ann_text)

    def test_preventive_record_is_not_failure(self):
        _, records, _ = emit_gold_minicase()
        preventive = [r for r in records if not r.is_failure()]
        assert len(preventive) == 1
        assert preventive[0].date == datetime.date(2021, 3, 5)
