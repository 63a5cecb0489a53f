"""litgrid: a literate spreadsheet engine.

Documents are ordered chunks — narrative, headings, grids, named formulas,
assertions, assets, themes — with computation driven purely by the global
reference graph, so presentation order never affects values.
"""

from .config import Config, DEFAULT_CONFIG, load_config
from .engine import EvalResult, RefGraph, build_graph, check_assertions, eval_expr, evaluate, evaluate_with_assertions, topo_order
from .errors import (
    BadIndex,
    EditError,
    EmptyLibrary,
    FormulaParseError,
    GridBoundsExceeded,
    IdCollision,
    LitgridError,
    UnknownChunk,
    UnknownFunction,
    UnknownTemplate,
    UnknownTheme,
    UnresolvedContext,
)
from .formula import Expr, format_expr, parse_expr, refs_of
from .model import (
    Assertion,
    Asset,
    CellAddr,
    CellContent,
    Chunk,
    DeleteChunk,
    Diagnostic,
    Document,
    Edit,
    Formula,
    FormulaCell,
    Grid,
    Heading,
    InsertChunk,
    MoveChunk,
    Narrative,
    SetCell,
    SetChunk,
    SetTheme,
    ThemeDef,
    apply_edit,
    sniff_cell,
    theme_view,
    validate_document,
)
from .values import EMPTY, ErrorValue, Value, format_number, format_value

__version__ = "0.1.0"
