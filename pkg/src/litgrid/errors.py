"""Exception hierarchy for litgrid.

Structural problems found in documents are reported as Diagnostic values,
not exceptions; exceptions are reserved for misuse of the API surface
(unknown ids, bad indices, unusable inputs).
"""

from __future__ import annotations


class LitgridError(Exception):
    """Base class for all litgrid errors."""


class EditError(LitgridError):
    """An edit could not be applied to a document snapshot."""


class UnknownChunk(EditError):
    pass


class BadIndex(EditError):
    pass


class GridBoundsExceeded(EditError):
    pass


class UnknownTheme(LitgridError):
    pass


class UnknownTemplate(LitgridError):
    pass


class IdCollision(LitgridError):
    pass


class EmptyLibrary(LitgridError):
    pass


class UnresolvedContext(LitgridError):
    """A bare cell reference was used where no grid context exists."""


class FormulaParseError(LitgridError):
    """Raised by the expression parser; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.message = message
        self.offset = offset


class UnknownFunction(FormulaParseError):
    pass


class BareRefOutsideGrid(FormulaParseError):
    """A bare cell address was parsed where no grid context exists.

    Reported as an UnknownRef diagnostic rather than a ParseError one.
    """


class LsheetFatalError(LitgridError):
    """The .lsheet file could not be parsed at all (e.g. unterminated fence)."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.message = message
        self.line = line


class CsvImportError(LitgridError):
    """CSV input is structurally broken; carries 1-based row/col."""

    def __init__(self, message: str, row: int, col: int):
        super().__init__(f"row {row}, col {col}: {message}")
        self.message = message
        self.row = row
        self.col = col
