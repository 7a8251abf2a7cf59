from __future__ import annotations

from datetime import datetime, timezone
from decimal import Decimal

import pytest

from hubstar.errors import EvalError
from hubstar.values import (
    EPOCH,
    coerce_scalar,
    format_timestamp,
    parse_timestamp,
    value_to_string,
    values_equal,
)


def utc(*args):
    return datetime(*args, tzinfo=timezone.utc)


def test_parse_timestamp_accepts_common_iso_shapes():
    assert parse_timestamp("1970-01-01") == EPOCH
    assert parse_timestamp("2024-03-01T08:30:00Z") == utc(2024, 3, 1, 8, 30)
    assert parse_timestamp("2024-03-01 08:30") == utc(2024, 3, 1, 8, 30)
    assert parse_timestamp("2024-03-01T08:30:00.25Z") == utc(2024, 3, 1, 8, 30, 0, 250000)


def test_parse_timestamp_converts_offsets_to_utc():
    assert parse_timestamp("2024-06-01T12:00:00+02:00") == utc(2024, 6, 1, 10)
    assert parse_timestamp("2024-06-01T12:00:00-05:30") == utc(2024, 6, 1, 17, 30)


@pytest.mark.parametrize("bad", ["", "not a date", "2024-13-01", "20240301", "2024-03-01TT08"])
def test_parse_timestamp_rejects_garbage(bad):
    with pytest.raises(ValueError):
        parse_timestamp(bad)


def test_format_timestamp_is_canonical_and_round_trips():
    ts = utc(2024, 3, 1, 8, 30, 15)
    assert format_timestamp(ts) == "2024-03-01T08:30:15Z"
    assert parse_timestamp(format_timestamp(ts)) == ts
    # sub-second digits only when nonzero, trailing zeros trimmed
    assert format_timestamp(utc(2024, 3, 1, 0, 0, 0, 250000)) == "2024-03-01T00:00:00.25Z"
    # naive datetimes are treated as UTC
    assert format_timestamp(datetime(2024, 3, 1)) == "2024-03-01T00:00:00Z"


def test_coerce_scalar_nulls():
    assert coerce_scalar(None, "integer") is None
    assert coerce_scalar("", "integer") is None
    assert coerce_scalar("", "timestamp") is None
    # empty string *is* a string value, not a null
    assert coerce_scalar("", "string") == ""


def test_coerce_scalar_happy_paths():
    assert coerce_scalar(" 42 ", "integer") == 42
    assert coerce_scalar(Decimal("7"), "integer") == 7
    assert coerce_scalar("1.50", "decimal") == Decimal("1.50")
    assert coerce_scalar(3, "decimal") == Decimal(3)
    assert coerce_scalar("true", "boolean") is True
    assert coerce_scalar("0", "boolean") is False
    assert coerce_scalar(1, "boolean") is True
    assert coerce_scalar("2024-01-02", "timestamp") == utc(2024, 1, 2)
    assert coerce_scalar(42, "string") == "42"


@pytest.mark.parametrize("raw,ctype", [
    ("1.5", "integer"),
    (Decimal("1.5"), "integer"),
    ("yes", "boolean"),
    (2, "boolean"),
    ("soon", "timestamp"),
    (object(), "string"),
    (True, "decimal"),
])
def test_coerce_scalar_rejects_lossy_conversions(raw, ctype):
    with pytest.raises(ValueError):
        coerce_scalar(raw, ctype)


def test_value_to_string_forms():
    assert value_to_string(42) == "42"
    assert value_to_string(Decimal("1.50")) == "1.50"
    assert value_to_string(True) == "true"
    assert value_to_string(utc(2024, 3, 1, 8, 0)) == "2024-03-01T08:00:00Z"
    assert value_to_string("abc") == "abc"
    with pytest.raises(EvalError):
        value_to_string(None)


def test_values_equal_is_null_safe_and_numeric():
    assert values_equal(None, None)
    assert not values_equal(None, 0)
    assert not values_equal("", None)
    assert values_equal(1, Decimal("1.0"))
    assert not values_equal(1, Decimal("1.01"))
    assert values_equal("a", "a")
    assert not values_equal(True, "true")
