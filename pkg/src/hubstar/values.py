"""Scalar value handling: types, timestamps, coercion, canonical rendering.

Every persisted value is one of: integer (int), decimal (Decimal), string
(str), boolean (bool), timestamp (tz-aware UTC datetime), or None. Bronze
tables may additionally hold collections: lists of flat string-keyed dicts.
"""

from __future__ import annotations

import re
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation

from .errors import EvalError

SCALAR_TYPES = ("integer", "decimal", "string", "boolean", "timestamp")

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

_TS_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})"
    r"(?:[T ](\d{2}):(\d{2})(?::(\d{2})(?:\.(\d{1,6}))?)?)?"
    r"(Z|[+-]\d{2}:\d{2})?$"
)


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; absent time components are zero-filled.

    Accepts date-only forms ("1970-01-01"), space or T separators, optional
    fractional seconds, and an optional Z/offset suffix. Naive values are
    taken as UTC; offset values are converted to UTC.
    """
    m = _TS_RE.match(text.strip())
    if not m:
        raise ValueError(f"not an ISO-8601 timestamp: {text!r}")
    year, month, day = int(m.group(1)), int(m.group(2)), int(m.group(3))
    hour = int(m.group(4) or 0)
    minute = int(m.group(5) or 0)
    second = int(m.group(6) or 0)
    frac = m.group(7)
    micro = int(frac.ljust(6, "0")) if frac else 0
    offset = m.group(8)
    dt = datetime(year, month, day, hour, minute, second, micro, tzinfo=timezone.utc)
    if offset and offset != "Z":
        sign = 1 if offset[0] == "+" else -1
        oh, om = int(offset[1:3]), int(offset[4:6])
        shifted = dt.replace(tzinfo=None) - sign * (datetime(2000, 1, 1, oh, om) - datetime(2000, 1, 1))
        dt = shifted.replace(tzinfo=timezone.utc)
    return dt


def format_timestamp(ts: datetime) -> str:
    """Render a UTC timestamp as ISO-8601 with a Z suffix.

    Sub-second digits appear only when nonzero, so rendering is canonical.
    """
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    else:
        ts = ts.astimezone(timezone.utc)
    base = ts.strftime("%Y-%m-%dT%H:%M:%S")
    if ts.microsecond:
        base += f".{ts.microsecond:06d}".rstrip("0")
    return base + "Z"


def coerce_scalar(raw, ctype: str):
    """Coerce a raw parsed value (from CSV/JSON) into the declared type.

    None and empty CSV fields map to None for every type. Raises ValueError
    with a reason on anything unconvertible.
    """
    if raw is None:
        return None
    if isinstance(raw, str) and raw == "" and ctype != "string":
        return None
    if ctype == "string":
        if isinstance(raw, str):
            return raw
        if isinstance(raw, bool):
            return "true" if raw else "false"
        if isinstance(raw, (int, Decimal)):
            return str(raw)
        raise ValueError(f"cannot treat {type(raw).__name__} as string")
    if ctype == "integer":
        if isinstance(raw, bool):
            return int(raw)
        if isinstance(raw, int):
            return raw
        if isinstance(raw, Decimal):
            if raw == raw.to_integral_value():
                return int(raw)
            raise ValueError(f"decimal {raw} is not an integer")
        if isinstance(raw, str):
            return int(raw.strip())
        raise ValueError(f"cannot coerce {type(raw).__name__} to integer")
    if ctype == "decimal":
        if isinstance(raw, bool):
            raise ValueError("cannot coerce boolean to decimal")
        if isinstance(raw, Decimal):
            return raw
        if isinstance(raw, int):
            return Decimal(raw)
        if isinstance(raw, str):
            try:
                return Decimal(raw.strip())
            except InvalidOperation as exc:
                raise ValueError(f"bad decimal literal {raw!r}") from exc
        raise ValueError(f"cannot coerce {type(raw).__name__} to decimal")
    if ctype == "boolean":
        if isinstance(raw, bool):
            return raw
        if isinstance(raw, str):
            low = raw.strip().lower()
            if low in ("true", "1"):
                return True
            if low in ("false", "0"):
                return False
            raise ValueError(f"bad boolean literal {raw!r}")
        if isinstance(raw, int):
            if raw in (0, 1):
                return bool(raw)
            raise ValueError(f"bad boolean value {raw}")
        raise ValueError(f"cannot coerce {type(raw).__name__} to boolean")
    if ctype == "timestamp":
        if isinstance(raw, datetime):
            return raw if raw.tzinfo else raw.replace(tzinfo=timezone.utc)
        if isinstance(raw, str):
            return parse_timestamp(raw)
        raise ValueError(f"cannot coerce {type(raw).__name__} to timestamp")
    raise ValueError(f"unknown scalar type {ctype!r}")


def value_to_string(value) -> str:
    """Canonical string form used by key concatenation and hashing.

    Integers and decimals keep their literal form, booleans render as
    true/false, timestamps as ISO-8601 Z.
    """
    if value is None:
        raise EvalError("cannot stringify null")
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, Decimal)):
        return str(value)
    if isinstance(value, datetime):
        return format_timestamp(value)
    if isinstance(value, str):
        return value
    raise EvalError(f"cannot stringify {type(value).__name__}")


def values_equal(a, b) -> bool:
    """Equality used by change detection; Decimal/int compare numerically."""
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, (int, Decimal)) and not isinstance(a, bool) and \
       isinstance(b, (int, Decimal)) and not isinstance(b, bool):
        return Decimal(a) == Decimal(b)
    return a == b
