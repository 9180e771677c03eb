import pytest
from hypothesis import given

from kato.lab.records import SWEEP_COLUMNS, SweepRecord
from tests.kato.utils.helpers import sweep_records


@given(record=sweep_records())
def test_serialization(record: SweepRecord):
    assert SweepRecord.deserialize(record.serialize()) == record


class TestSweepRecord:
    def test_row_follows_columns(self):
        record = SweepRecord(0.01, 0.2, 0.0, 0.3, 0.05, 0.4, -1e-3, 1.5, grid="8x256@2")
        assert tuple(record.row()) == SWEEP_COLUMNS
        assert record.row()["gronwall_max_violation"] == -1e-3

    def test_from_row(self):
        row = {column: str(index + 1) for index, column in enumerate(SWEEP_COLUMNS)}
        row["extra"] = "ignored"
        record = SweepRecord.from_row(row)
        assert record.nu == 1.0
        assert record.wall_clock == float(len(SWEEP_COLUMNS))
        assert record.grid == ""

    def test_from_dict_ignores_unknown_keys(self):
        record = SweepRecord(0.01, 0.2, 0.0, 0.3, 0.05, 0.4, 0.0, 1.5)
        assert SweepRecord.from_dict({**record.dictify(), "host": "lab"}) == record

    @pytest.mark.parametrize(
        "overrides",
        [
            {"nu": 0.0},
            {"nu": -0.1},
            {"e_sup": -1e-9},
            {"kato_d": -1.0},
            {"diss_total": -0.5},
            {"kato_d": 0.2},
        ],
    )
    def test_rejects_invalid_values(self, overrides: dict):
        values = {
            "nu": 0.01,
            "e1_final": 0.0,
            "e2_final": 0.0,
            "e_sup": 0.0,
            "kato_d": 0.0,
            "diss_total": 0.0,
            "gronwall_max_violation": 0.0,
            "wall_clock": 0.0,
        }
        with pytest.raises(ValueError):
            SweepRecord(**{**values, **overrides})

    def test_layer_dissipation_bounded_by_total(self):
        with pytest.raises(ValueError, match="exceeds diss_total"):
            SweepRecord(0.01, 0.0, 0.0, 0.0, 0.3, 0.2, 0.0, 0.0)
        assert SweepRecord(0.01, 0.0, 0.0, 0.0, 0.2, 0.2, 0.0, 0.0).kato_d == 0.2
