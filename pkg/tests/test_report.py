from __future__ import annotations

import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vacqueue.analytic_sv import sv_measures
from vacqueue.model import Engine, ModelParams
from vacqueue.report import PerformanceReport, round_sig


def test_round_sig() -> None:
    assert round_sig(0.123456789012345) == 0.123456789012
    assert round_sig(123456789.0123456, 4) == 123500000.0
    assert round_sig(None) is None
    assert round_sig(math.nan) is None
    assert round_sig(math.inf) is None
    assert round_sig(7) == 7


def test_json_round_trip_of_engine_report() -> None:
    p = ModelParams(0.5, 1, 0.5, 0.2)
    report = sv_measures(p)
    text = report.to_json(p)
    assert json.loads(text)["params"]["lambda"] == 0.5
    back = PerformanceReport.from_json(text)
    assert back == report.rounded()
    assert back.to_json(p) == text


def test_unknown_schema_rejected() -> None:
    data = json.loads(sv_measures(ModelParams(0.5, 1, 0.5, 0.2)).to_json())
    data["schema"] = 99
    with pytest.raises(ValueError):
        PerformanceReport.from_dict(data)


finite = st.floats(-1e6, 1e6, allow_nan=False)
maybe = st.one_of(st.none(), finite)


@given(values=st.lists(finite, min_size=11, max_size=11), optional=st.lists(maybe, min_size=2, max_size=2),
       extra=st.dictionaries(st.text("abcdef_", min_size=1, max_size=8), maybe, max_size=4))
def test_round_trip_property(values, optional, extra) -> None:
    names = [n for n in PerformanceReport.MEASURES if n not in ("sojourn_10", "sojourn_00")]
    report = PerformanceReport(engine=Engine.ORACLE, sojourn_10=optional[0], sojourn_00=optional[1],
                               extra=extra, **dict(zip(names, values)))
    back = PerformanceReport.from_json(report.to_json())
    assert back == report.rounded()
    assert PerformanceReport.from_json(back.to_json()) == back
