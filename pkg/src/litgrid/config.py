"""Tunable thresholds with frozen defaults.

The classifier thresholds operationalize qualitative level descriptions and
are deliberately overridable; tests pin the defaults. Overrides come from a
plain `key = value` file pointed at by the LITGRID_CONFIG environment
variable (or passed explicitly).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path


@dataclass(frozen=True)
class Config:
    # classifier thresholds
    explicit_min_words: int = 20
    literate_min_headings: int = 2
    literate_min_coverage: float = 0.5
    imported_label_max_words: int = 3  # imported-grid text cells need > this many words to count as narrative
    # grid growth caps for set_cell
    max_rows: int = 10_000
    max_cols: int = 256


DEFAULT_CONFIG = Config()

_INT_KEYS = {"explicit_min_words", "literate_min_headings", "imported_label_max_words", "max_rows", "max_cols"}
_FLOAT_KEYS = {"literate_min_coverage"}


def load_config(path: str | Path | None = None) -> Config:
    """Build a Config from a `key = value` file; unset keys keep defaults.

    With no path, consults $LITGRID_CONFIG; absent both, returns the defaults.
    Unknown keys and malformed lines raise ValueError so a typo cannot
    silently fall back to a default.
    """
    if path is None:
        path = os.environ.get("LITGRID_CONFIG")
    if path is None:
        return DEFAULT_CONFIG
    overrides: dict[str, int | float] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _INT_KEYS:
            overrides[key] = int(value)
        elif key in _FLOAT_KEYS:
            overrides[key] = float(value)
        else:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    return replace(DEFAULT_CONFIG, **overrides)
