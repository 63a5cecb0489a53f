"""Reference-graph evaluation: build the global dependency graph over all
computable entities, order it, evaluate, and check assertions.

Node keys: `grid!ADDR` for cells, the bare chunk id for formula chunks and
assertions. Calculation depends only on this graph — never on chunk order,
themes, or narrative text — so presentation is fully decoupled from
computation.

Value semantics (mirrored by the independent test oracle):

- Empty coerces to 0 in arithmetic and to "" under `&`; Text or Boolean in
  arithmetic is Error(VALUE). x/0 is Error(DIV0); results that would be NaN
  or infinite are Error(VALUE).
- Any Error operand propagates, leftmost first. Only IF is lazy: the
  unselected branch's error is ignored (its refs are still graph edges).
- `=`/`<>` compare (type, value) with no coercion; mixed types are simply
  unequal. Ordering comparisons require like types, except Empty coerces to
  0 against Number and "" against Text; anything else is Error(VALUE).
- Aggregates consider Numbers only (Empty, Text and Boolean are skipped).
  COUNT counts numeric values; AVERAGE of zero numerics is Error(DIV0);
  MIN/MAX of zero numerics is Error(VALUE). Range and whole-grid arguments
  expand to their populated member cells in row-major order.
- A range or whole-grid reference in scalar position is Error(VALUE).
- ROUND is half-away-from-zero; the digit count is truncated to an integer.
- AND/OR/NOT and IF's condition require strict Booleans.
- A cycle member is valued Error(CYCLE); a node that merely *reads* a cycle
  member gets Error(REF), so Error(CYCLE) identifies exactly the cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BareRefOutsideGrid, FormulaParseError
from .formula import (
    Binary,
    BoolLit,
    Call,
    CellRef,
    Expr,
    NameRef,
    NumberLit,
    RangeRef,
    RefCell,
    RefRange,
    TextLit,
    Unary,
    parse_expr,
    refs_of,
)
from .model import Assertion, CellAddr, Diagnostic, Document, Formula, FormulaCell, Grid
from .values import EMPTY, ErrorValue, Value, format_value


class CellSet:
    """Member values of a range or whole-grid reference, row-major."""

    __slots__ = ("items",)

    def __init__(self, items: list[Value]):
        self.items = items


def cell_key(grid: str, addr: CellAddr) -> str:
    return f"{grid}!{addr.text}"


@dataclass
class RefGraph:
    nodes: tuple[str, ...]  # computable node keys plus unknown-name placeholders
    edges: frozenset[tuple[str, str]]  # (node, node it reads); targets may be literal cells
    deps: dict[str, tuple[str, ...]]  # node -> computable/placeholder deps, sorted
    exprs: dict[str, Expr | None] = field(default_factory=dict)
    contexts: dict[str, str | None] = field(default_factory=dict)
    fixed: dict[str, Value] = field(default_factory=dict)  # parse failures, placeholders
    diagnostics: list[Diagnostic] = field(default_factory=list)


@dataclass
class EvalResult:
    values: dict[str, Value]
    diagnostics: list[Diagnostic]
    order: tuple[str, ...]


def _ref_sort_key(ref):
    if isinstance(ref, RefCell):
        return (0, ref.grid, ref.addr.row, ref.addr.col, 0, 0)
    if isinstance(ref, RefRange):
        return (1, ref.grid, ref.start.row, ref.start.col, ref.end.row, ref.end.col)
    return (2, ref.name, 0, 0, 0, 0)


def build_graph(doc: Document) -> RefGraph:
    """Graph over all formula cells, formula chunks and assertions.

    Unknown names become Error(NAME) placeholder nodes with an UnknownRef
    diagnostic. Range references contribute edges to every populated member
    cell within the grid's bounds; a whole-grid name contributes edges to
    every populated cell of that grid.
    """
    grids = {c.id: c for c in doc.chunks if isinstance(c, Grid)}
    formula_ids = {c.id for c in doc.chunks if isinstance(c, Formula)}
    chunk_ids = doc.ids()

    sources: list[tuple[str, str, str | None, str | None, CellAddr | None]] = []
    for chunk in doc.chunks:
        if isinstance(chunk, Grid):
            for addr in chunk.populated():
                content = chunk.cells[addr]
                if isinstance(content.parsed, FormulaCell):
                    sources.append((cell_key(chunk.id, addr), content.parsed.expr_text, chunk.id, chunk.id, addr))
        elif isinstance(chunk, (Formula, Assertion)):
            sources.append((chunk.id, chunk.expr_text, None, chunk.id, None))

    nodes = [key for key, *_ in sources]
    node_set = set(nodes)
    exprs: dict[str, Expr | None] = {}
    contexts: dict[str, str | None] = {}
    fixed: dict[str, Value] = {}
    diagnostics: list[Diagnostic] = []
    edges: set[tuple[str, str]] = set()
    deps: dict[str, set[str]] = {key: set() for key in nodes}
    placeholders: list[str] = []

    for key, expr_text, ctx, chunk_id, addr in sources:
        contexts[key] = ctx
        try:
            expr = parse_expr(expr_text, ctx=ctx)
        except BareRefOutsideGrid as e:
            exprs[key] = None
            fixed[key] = ErrorValue("REF")
            diagnostics.append(Diagnostic("UnknownRef", "error", e.message, chunk_id=chunk_id, cell=addr))
            continue
        except FormulaParseError as e:
            exprs[key] = None
            fixed[key] = ErrorValue("PARSE")
            prefix = f"cell {addr.text}: " if addr is not None else ""
            diagnostics.append(Diagnostic("ParseError", "error", prefix + e.message, chunk_id=chunk_id, cell=addr))
            continue
        exprs[key] = expr

        for ref in sorted(refs_of(expr, ctx), key=_ref_sort_key):
            if isinstance(ref, RefCell):
                if ref.grid not in grids:
                    diagnostics.append(
                        Diagnostic("UnknownRef", "error", f"unknown grid {ref.grid!r}", chunk_id=chunk_id, cell=addr)
                    )
                    continue
                grid = grids[ref.grid]
                if not (1 <= ref.addr.row <= grid.n_rows and 1 <= ref.addr.col <= grid.n_cols):
                    diagnostics.append(
                        Diagnostic(
                            "UnknownRef", "error",
                            f"cell {ref.grid}!{ref.addr.text} is outside the grid bounds",
                            chunk_id=chunk_id, cell=addr,
                        )
                    )
                    continue
                content = grid.cells.get(ref.addr)
                if content is None or content.parsed is EMPTY:
                    continue  # reading an empty cell needs no edge
                target = cell_key(ref.grid, ref.addr)
                edges.add((key, target))
                if target in node_set:
                    deps[key].add(target)
            elif isinstance(ref, RefRange):
                if ref.grid not in grids:
                    diagnostics.append(
                        Diagnostic("UnknownRef", "error", f"unknown grid {ref.grid!r}", chunk_id=chunk_id, cell=addr)
                    )
                    continue
                for member in grids[ref.grid].populated():
                    if ref.start.row <= member.row <= ref.end.row and ref.start.col <= member.col <= ref.end.col:
                        target = cell_key(ref.grid, member)
                        edges.add((key, target))
                        if target in node_set:
                            deps[key].add(target)
            else:  # RefName
                if ref.name in formula_ids:
                    edges.add((key, ref.name))
                    deps[key].add(ref.name)
                elif ref.name in grids:
                    for member in grids[ref.name].populated():
                        target = cell_key(ref.name, member)
                        edges.add((key, target))
                        if target in node_set:
                            deps[key].add(target)
                elif ref.name in chunk_ids:
                    # exists, but only formula chunks and grids are referenceable
                    diagnostics.append(
                        Diagnostic(
                            "UnknownRef", "error",
                            f"name {ref.name!r} does not refer to a formula or grid",
                            chunk_id=chunk_id, cell=addr,
                        )
                    )
                else:
                    diagnostics.append(
                        Diagnostic("UnknownRef", "error", f"unknown name {ref.name!r}", chunk_id=chunk_id, cell=addr)
                    )
                    if ref.name not in fixed:
                        placeholders.append(ref.name)
                        fixed[ref.name] = ErrorValue("NAME")
                    edges.add((key, ref.name))
                    deps[key].add(ref.name)

    for name in placeholders:
        if name not in node_set:
            nodes.append(name)
            node_set.add(name)
            deps[name] = set()
            exprs[name] = None
            contexts[name] = None

    return RefGraph(
        nodes=tuple(nodes),
        edges=frozenset(edges),
        deps={key: tuple(sorted(targets)) for key, targets in deps.items()},
        exprs=exprs,
        contexts=contexts,
        fixed=fixed,
        diagnostics=diagnostics,
    )


def _cyclic_nodes(g: RefGraph) -> list[list[str]]:
    """Strongly connected components of size > 1, plus self-loops, as sorted
    member lists ordered by smallest member."""
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0

    def strongconnect(root: str) -> None:
        nonlocal counter
        work = [(root, iter(g.deps.get(root, ())))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for dep in it:
                if dep not in index:
                    index[dep] = lowlink[dep] = counter
                    counter += 1
                    stack.append(dep)
                    on_stack.add(dep)
                    work.append((dep, iter(g.deps.get(dep, ()))))
                    advanced = True
                    break
                if dep in on_stack:
                    lowlink[node] = min(lowlink[node], index[dep])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                if len(component) > 1 or node in g.deps.get(node, ()):
                    sccs.append(sorted(component))

    for node in sorted(g.nodes):
        if node not in index:
            strongconnect(node)
    return sorted(sccs, key=lambda members: members[0])


def _cycle_path(members: list[str], g: RefGraph) -> tuple[str, ...]:
    """A concrete closed dependency walk through the component, starting from
    its smallest member and always following the smallest in-component dep."""
    member_set = set(members)
    path = [members[0]]
    seen = {members[0]: 0}
    while True:
        current = path[-1]
        next_node = min(d for d in g.deps[current] if d in member_set)
        if next_node in seen:
            return tuple(path[seen[next_node]:] + [next_node])
        seen[next_node] = len(path)
        path.append(next_node)


def topo_order(g: RefGraph) -> tuple[list[str], list[tuple[str, ...]]]:
    """Deterministic evaluation order plus explicit cycle paths.

    Ready nodes are emitted in lexicographic layers (each generation sorted
    ascending). Cycle members are excluded from the order; nodes downstream
    of a cycle are still ordered and evaluated.
    """
    cycles = _cyclic_nodes(g)
    cyclic = {member for component in cycles for member in component}

    indegree: dict[str, int] = {}
    dependents: dict[str, list[str]] = {}
    for node in g.nodes:
        if node in cyclic:
            continue
        live_deps = [d for d in g.deps.get(node, ()) if d not in cyclic]
        indegree[node] = len(live_deps)
        for dep in live_deps:
            dependents.setdefault(dep, []).append(node)

    order: list[str] = []
    layer = sorted(node for node, degree in indegree.items() if degree == 0)
    while layer:
        order.extend(layer)
        next_layer: list[str] = []
        for node in layer:
            for dependent in dependents.get(node, ()):
                indegree[dependent] -= 1
                if indegree[dependent] == 0:
                    next_layer.append(dependent)
        layer = sorted(next_layer)

    return order, [_cycle_path(component, g) for component in cycles]


class _Env:
    """Resolves references against literal content and already-computed values."""

    def __init__(self, doc: Document, values: dict[str, Value]):
        self.grids = {c.id: c for c in doc.chunks if isinstance(c, Grid)}
        self.formula_ids = {c.id for c in doc.chunks if isinstance(c, Formula)}
        self.values = values

    def resolve(self, ref) -> Value | CellSet:
        if isinstance(ref, RefCell):
            grid = self.grids.get(ref.grid)
            if grid is None:
                return ErrorValue("NAME")
            if not (1 <= ref.addr.row <= grid.n_rows and 1 <= ref.addr.col <= grid.n_cols):
                return ErrorValue("REF")
            return self._cell(ref.grid, grid, ref.addr)
        if isinstance(ref, RefRange):
            grid = self.grids.get(ref.grid)
            if grid is None:
                return ErrorValue("NAME")
            items = [
                self._cell(ref.grid, grid, addr)
                for addr in grid.populated()
                if ref.start.row <= addr.row <= ref.end.row and ref.start.col <= addr.col <= ref.end.col
            ]
            return CellSet(items)
        if ref.name in self.formula_ids:
            return self.values.get(ref.name, ErrorValue("NAME"))
        if ref.name in self.grids:
            grid = self.grids[ref.name]
            return CellSet([self._cell(ref.name, grid, addr) for addr in grid.populated()])
        return ErrorValue("NAME")

    def _cell(self, grid_id: str, grid: Grid, addr: CellAddr) -> Value:
        content = grid.cells.get(addr)
        if content is None or content.parsed is EMPTY:
            return EMPTY
        if isinstance(content.parsed, FormulaCell):
            return self.values.get(cell_key(grid_id, addr), ErrorValue("REF"))
        return content.parsed


def _is_number(v) -> bool:
    return isinstance(v, float) and not isinstance(v, bool)


def _num(v: Value) -> Value:
    if isinstance(v, ErrorValue):
        return v
    if v is EMPTY:
        return 0.0
    if _is_number(v):
        return v
    return ErrorValue("VALUE")


def _text(v: Value) -> Value:
    if isinstance(v, ErrorValue):
        return v
    if v is EMPTY:
        return ""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if _is_number(v):
        return format_value(v)
    return v


def _finite(x: float) -> Value:
    if math.isnan(x) or math.isinf(x):
        return ErrorValue("VALUE")
    return x


def _round_half_away(x: float, digits: int) -> float:
    scale = 10.0 ** digits
    scaled = x * scale
    return math.copysign(math.floor(abs(scaled) + 0.5), x) / scale


def _demote_cycle(v: Value) -> Value:
    # only cycle members themselves carry Error(CYCLE)
    if isinstance(v, ErrorValue) and v.kind == "CYCLE":
        return ErrorValue("REF")
    return v


def _scalar(v: Value | CellSet) -> Value:
    if isinstance(v, CellSet):
        return ErrorValue("VALUE")
    return v


def eval_expr(e: Expr, env, ctx: str | None = None) -> Value:
    """Evaluate one expression; env is a callable from resolved Ref to a
    Value or CellSet. Errors are always values, never exceptions."""
    return _scalar(_eval(e, env, ctx))


def _resolve(e, env, ctx) -> Value | CellSet:
    refs = refs_of(e, ctx)
    (ref,) = refs
    value = env(ref)
    if isinstance(value, CellSet):
        return CellSet([_demote_cycle(v) for v in value.items])
    return _demote_cycle(value)


def _eval(e: Expr, env, ctx: str | None) -> Value | CellSet:
    if isinstance(e, NumberLit):
        return e.value
    if isinstance(e, TextLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, (CellRef, RangeRef, NameRef)):
        return _resolve(e, env, ctx)
    if isinstance(e, Unary):
        v = _num(_scalar(_eval(e.arg, env, ctx)))
        if isinstance(v, ErrorValue):
            return v
        return _finite(-v)
    if isinstance(e, Binary):
        return _eval_binary(e, env, ctx)
    if isinstance(e, Call):
        return _eval_call(e, env, ctx)
    raise TypeError(f"not an expression: {e!r}")


def _eval_binary(e, env, ctx) -> Value:
    lhs = _scalar(_eval(e.lhs, env, ctx))
    rhs = _scalar(_eval(e.rhs, env, ctx))
    if isinstance(lhs, ErrorValue):
        return lhs
    if isinstance(rhs, ErrorValue):
        return rhs
    op = e.op
    if op == "&":
        return _text(lhs) + _text(rhs)
    if op in ("+", "-", "*", "/", "^"):
        a = _num(lhs)
        if isinstance(a, ErrorValue):
            return a
        b = _num(rhs)
        if isinstance(b, ErrorValue):
            return b
        if op == "+":
            return _finite(a + b)
        if op == "-":
            return _finite(a - b)
        if op == "*":
            return _finite(a * b)
        if op == "/":
            if b == 0.0:
                return ErrorValue("DIV0")
            return _finite(a / b)
        try:
            # math.pow raises where ** would go complex (negative base,
            # fractional exponent) or overflow
            return _finite(math.pow(a, b))
        except (OverflowError, ValueError, ZeroDivisionError):
            return ErrorValue("VALUE")
    if op in ("=", "<>"):
        same = _values_equal(lhs, rhs)
        return same if op == "=" else not same
    return _ordering(op, lhs, rhs)


def _values_equal(a: Value, b: Value) -> bool:
    if a is EMPTY or b is EMPTY:
        return a is b
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    if _is_number(a) != _is_number(b):
        return False
    return a == b


def _ordering(op: str, a: Value, b: Value) -> Value:
    if a is EMPTY and b is EMPTY:
        a, b = 0.0, 0.0
    elif a is EMPTY:
        a = 0.0 if _is_number(b) else "" if isinstance(b, str) else a
    elif b is EMPTY:
        b = 0.0 if _is_number(a) else "" if isinstance(a, str) else b
    comparable = (
        (_is_number(a) and _is_number(b))
        or (isinstance(a, str) and isinstance(b, str))
        or (isinstance(a, bool) and isinstance(b, bool))
    )
    if not comparable:
        return ErrorValue("VALUE")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _flatten_args(args, env, ctx) -> list[Value] | ErrorValue:
    items: list[Value] = []
    for arg in args:
        v = _eval(arg, env, ctx)
        if isinstance(v, CellSet):
            for member in v.items:
                if isinstance(member, ErrorValue):
                    return member
                items.append(member)
        elif isinstance(v, ErrorValue):
            return v
        else:
            items.append(v)
    return items


def _eval_call(e, env, ctx) -> Value | CellSet:
    fn = e.fn
    if fn in ("SUM", "AVERAGE", "MIN", "MAX", "COUNT"):
        flat = _flatten_args(e.args, env, ctx)
        if isinstance(flat, ErrorValue):
            return flat
        numbers = [v for v in flat if _is_number(v)]
        if fn == "COUNT":
            return float(len(numbers))
        if fn == "SUM":
            return _finite(math.fsum(numbers))
        if fn == "AVERAGE":
            if not numbers:
                return ErrorValue("DIV0")
            return _finite(math.fsum(numbers) / len(numbers))
        if not numbers:
            return ErrorValue("VALUE")
        return min(numbers) if fn == "MIN" else max(numbers)
    if fn == "IF":
        cond = _scalar(_eval(e.args[0], env, ctx))
        if isinstance(cond, ErrorValue):
            return cond
        if not isinstance(cond, bool):
            return ErrorValue("VALUE")
        return _eval(e.args[1] if cond else e.args[2], env, ctx)
    if fn == "ABS":
        v = _num(_scalar(_eval(e.args[0], env, ctx)))
        if isinstance(v, ErrorValue):
            return v
        return _finite(abs(v))
    if fn == "ROUND":
        x = _num(_scalar(_eval(e.args[0], env, ctx)))
        if isinstance(x, ErrorValue):
            return x
        d = _num(_scalar(_eval(e.args[1], env, ctx)))
        if isinstance(d, ErrorValue):
            return d
        return _finite(_round_half_away(x, int(d)))
    if fn in ("AND", "OR"):
        flags: list[bool] = []
        for arg in e.args:
            v = _scalar(_eval(arg, env, ctx))
            if isinstance(v, ErrorValue):
                return v
            if not isinstance(v, bool):
                return ErrorValue("VALUE")
            flags.append(v)
        return all(flags) if fn == "AND" else any(flags)
    if fn == "NOT":
        v = _scalar(_eval(e.args[0], env, ctx))
        if isinstance(v, ErrorValue):
            return v
        if not isinstance(v, bool):
            return ErrorValue("VALUE")
        return not v
    if fn == "CONCAT":
        parts: list[str] = []
        for arg in e.args:
            v = _text(_scalar(_eval(arg, env, ctx)))
            if isinstance(v, ErrorValue):
                return v
            parts.append(v)
        return "".join(parts)
    raise AssertionError(f"unreachable function {fn}")


def evaluate(doc: Document) -> EvalResult:
    """Evaluate the whole document.

    Literal cells are valued directly; computable nodes are evaluated in
    topological order; cycle members get Error(CYCLE) plus one CycleError
    diagnostic per cycle. The values map is a pure function of document
    content, independent of chunk order and themes.
    """
    values: dict[str, Value] = {}
    for chunk in doc.chunks:
        if isinstance(chunk, Grid):
            for addr in chunk.populated():
                content = chunk.cells[addr]
                if not isinstance(content.parsed, FormulaCell):
                    values[cell_key(chunk.id, addr)] = content.parsed

    graph = build_graph(doc)
    order, cycles = topo_order(graph)
    diagnostics = list(graph.diagnostics)

    for path in cycles:
        first = path[0]
        chunk_id, _, addr_text = first.partition("!")
        diagnostics.append(
            Diagnostic(
                "CycleError",
                "error",
                "circular reference: " + " -> ".join(path),
                chunk_id=chunk_id,
                cell=CellAddr.parse(addr_text) if addr_text else None,
                cycle_path=path,
            )
        )
        for member in set(path):
            values[member] = ErrorValue("CYCLE")

    env = _Env(doc, values)
    for key in order:
        if key in graph.fixed:
            values[key] = graph.fixed[key]
        else:
            values[key] = eval_expr(graph.exprs[key], env.resolve, graph.contexts[key])

    return EvalResult(values=values, diagnostics=diagnostics, order=tuple(order))


def check_assertions(doc: Document, result: EvalResult) -> list[Diagnostic]:
    """One AssertionFailure per assertion that is not Boolean true.

    A false assertion carries its authored message verbatim; a non-Boolean
    or Error value reports what the assertion evaluated to instead.
    """
    out: list[Diagnostic] = []
    for chunk in doc.chunks:
        if not isinstance(chunk, Assertion):
            continue
        value = result.values.get(chunk.id)
        if value is True:
            continue
        if value is False:
            message = chunk.msg or f"assertion {chunk.id} is false"
        elif isinstance(value, ErrorValue):
            message = f"assertion {chunk.id} did not evaluate to a boolean (got {format_value(value)})"
        else:
            message = f"assertion {chunk.id} did not evaluate to a boolean (got {type(value).__name__})"
        out.append(Diagnostic("AssertionFailure", "error", message, chunk_id=chunk.id))
    return out


def evaluate_with_assertions(doc: Document) -> EvalResult:
    """evaluate() plus assertion diagnostics, as served by the CLI and API."""
    result = evaluate(doc)
    return EvalResult(
        values=result.values,
        diagnostics=result.diagnostics + check_assertions(doc, result),
        order=result.order,
    )
