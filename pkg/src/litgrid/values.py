"""Runtime values produced by evaluation.

A value is one of: float (Number), str (Text), bool (Boolean), the EMPTY
sentinel, or an ErrorValue. Numbers are finite 64-bit floats by invariant;
any operation that would produce NaN or an infinity yields Error(VALUE)
instead. bool is checked before float everywhere since bool subclasses int.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


class _Empty:
    """Singleton for an empty cell / absent value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EMPTY"


EMPTY = _Empty()

ERROR_KINDS = ("DIV0", "VALUE", "NAME", "REF", "CYCLE", "PARSE")


@dataclass(frozen=True)
class ErrorValue:
    kind: str

    def __post_init__(self):
        if self.kind not in ERROR_KINDS:
            raise ValueError(f"unknown error kind {self.kind!r}")

    def __repr__(self) -> str:
        return f"Error({self.kind})"


Value = Union[float, str, bool, _Empty, ErrorValue]

_MAX_SIG_DIGITS = 15


def _sig_digits(text: str) -> int:
    mantissa = text.split("e")[0].split("E")[0]
    return len(mantissa.replace("-", "").replace(".", "").lstrip("0"))


def clamp_number(x: float) -> float:
    """Reduce x to at most 15 significant decimal digits (display precision)."""
    s = repr(x)
    if _sig_digits(s) > _MAX_SIG_DIGITS:
        return float(format(x, f".{_MAX_SIG_DIGITS}g"))
    return x


def format_number(x: float) -> str:
    """Shortest decimal text that round-trips x, capped at 15 significant digits.

    Integral values render without a fraction part, so splices, tables, the
    CLI and JSON all agree on e.g. "3" rather than "3.0".
    """
    x = clamp_number(x)
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def format_value(v: Value) -> str:
    """Single display rule shared by weave, the CLI, and value splices."""
    if isinstance(v, ErrorValue):
        return f"#{v.kind}!"
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float):
        return format_number(v)
    if v is EMPTY:
        return ""
    return str(v)
