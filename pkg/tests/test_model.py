import pytest

from litgrid.errors import BadIndex, EditError, GridBoundsExceeded, IdCollision, UnknownChunk, UnknownTheme
from litgrid.model import (
    CellAddr,
    DeleteChunk,
    Document,
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
from litgrid.values import EMPTY


def make_doc(*chunks, revision=1):
    return Document(meta={"title": "t"}, chunks=tuple(chunks), revision=revision)


H1 = Heading(id="top", level=1, title="Top")
N1 = Narrative(id="note1", body="Some prose.")
G1 = Grid(id="data", cells={CellAddr(1, 1): sniff_cell("4")}, n_rows=2, n_cols=2)


class TestCellAddr:
    def test_parse_and_render(self):
        assert CellAddr.parse("B12") == CellAddr(row=12, col=2)
        assert CellAddr.parse("b12").text == "B12"
        assert CellAddr.parse("AA1").col == 27
        assert CellAddr.parse("ZZZ1").col == 18278

    def test_rejects_garbage(self):
        for bad in ("", "12", "ABCD1", "A0", "A-1"):
            with pytest.raises(ValueError):
                CellAddr.parse(bad)

    def test_row_major_ordering(self):
        addrs = [CellAddr.parse(t) for t in ("B1", "A2", "A1", "B2")]
        assert [a.text for a in sorted(addrs)] == ["A1", "B1", "A2", "B2"]


class TestSniff:
    def test_empty(self):
        assert sniff_cell("").parsed is EMPTY

    def test_formula(self):
        c = sniff_cell("=B2*2")
        assert c.parsed == FormulaCell("B2*2")
        assert c.raw == "=B2*2"

    def test_number_boolean_text(self):
        assert sniff_cell("3").parsed == 3.0
        assert sniff_cell("-2.5e2").parsed == -250.0
        assert sniff_cell("TRUE").parsed is True
        assert sniff_cell("true").parsed == "true"
        assert sniff_cell("widget").parsed == "widget"

    def test_quoted_suppresses_sniffing_but_not_formula(self):
        assert sniff_cell("123", quoted=True).parsed == "123"
        assert sniff_cell("TRUE", quoted=True).parsed == "TRUE"
        assert isinstance(sniff_cell("=x", quoted=True).parsed, FormulaCell)

    def test_overflowing_literal_stays_text(self):
        assert sniff_cell("1e999").parsed == "1e999"


class TestValidate:
    def test_wellformed_doc_is_clean(self):
        assert validate_document(make_doc(H1, N1, G1)) == []

    def test_duplicate_id(self):
        doc = make_doc(Formula(id="total", expr_text="1"), Formula(id="total", expr_text="2"))
        kinds = [d.kind for d in validate_document(doc)]
        assert kinds == ["DuplicateId"]

    def test_bad_theme_names_missing_member(self):
        doc = make_doc(N1, ThemeDef(id="tour", members=("ghost",)))
        diags = validate_document(doc)
        assert [d.kind for d in diags] == ["BadTheme"]
        assert "ghost" in diags[0].message

    def test_cell_shaped_id_rejected(self):
        doc = make_doc(Formula(id="ab12", expr_text="1"))
        assert any(d.kind == "ParseError" and "cell address" in d.message for d in validate_document(doc))

    def test_stub_body_must_be_todo(self):
        doc = make_doc(Narrative(id="note2", body="oops", is_stub=True))
        assert any("TODO:" in d.message for d in validate_document(doc))

    def test_unparsable_formula_cell_is_warning(self):
        grid = Grid(id="gridx", cells={CellAddr(1, 1): sniff_cell("=SUM(")}, n_rows=1, n_cols=1)
        diags = validate_document(make_doc(grid))
        assert len(diags) == 1
        assert diags[0].kind == "ParseError" and diags[0].severity == "warning"

    def test_validation_is_evaluation_free(self):
        from litgrid.engine import evaluate

        doc = make_doc(H1, G1, Formula(id="total", expr_text="SUM(data!A1:B2)"))
        before = validate_document(doc)
        evaluate(doc)
        assert validate_document(doc) == before


class TestThemeView:
    def test_all_excludes_themedefs(self):
        doc = make_doc(H1, N1, G1, ThemeDef(id="themex", members=("data",)))
        assert theme_view(doc, "all") == ["top", "note1", "data"]

    def test_named_theme_keeps_its_own_order(self):
        doc = make_doc(N1, G1, ThemeDef(id="themex", members=("data", "note1")))
        assert theme_view(doc, "themex") == ["data", "note1"]

    def test_missing_theme(self):
        with pytest.raises(UnknownTheme):
            theme_view(make_doc(N1), "missing")


class TestApplyEdit:
    def test_set_cell_bumps_revision_and_reparses(self):
        doc = make_doc(G1, revision=3)
        out = apply_edit(doc, SetCell(grid="data", addr=CellAddr.parse("B2"), raw="7"))
        assert out.revision == 4
        grid = out.chunk("data")
        assert grid.cell(CellAddr.parse("B2")).parsed == 7.0
        # original snapshot untouched
        assert doc.chunk("data").cell(CellAddr.parse("B2")).parsed is EMPTY

    def test_set_cell_grows_bounds_to_cap(self):
        doc = make_doc(G1)
        out = apply_edit(doc, SetCell(grid="data", addr=CellAddr.parse("D9"), raw="1"))
        grid = out.chunk("data")
        assert (grid.n_rows, grid.n_cols) == (9, 4)
        with pytest.raises(GridBoundsExceeded):
            apply_edit(doc, SetCell(grid="data", addr=CellAddr(row=10_001, col=1), raw="1"))
        with pytest.raises(GridBoundsExceeded):
            apply_edit(doc, SetCell(grid="data", addr=CellAddr(row=1, col=257), raw="1"))

    def test_unparsable_formula_still_stored(self):
        doc = make_doc(G1)
        out = apply_edit(doc, SetCell(grid="data", addr=CellAddr.parse("A2"), raw="=SUM("))
        content = out.chunk("data").cell(CellAddr.parse("A2"))
        assert content.raw == "=SUM("
        assert isinstance(content.parsed, FormulaCell)

    def test_delete_unknown_chunk(self):
        with pytest.raises(UnknownChunk):
            apply_edit(make_doc(N1), DeleteChunk(chunk_id="ghost"))

    def test_delete_cascades_theme_membership(self):
        doc = make_doc(N1, G1, ThemeDef(id="tour", members=("note1", "data")))
        out = apply_edit(doc, DeleteChunk(chunk_id="note1"))
        assert out.chunk("tour").members == ("data",)

    def test_insert_at_front_changes_all_view(self):
        doc = make_doc(N1)
        out = apply_edit(doc, InsertChunk(index=0, chunk=H1))
        assert theme_view(out, "all") == ["top", "note1"]

    def test_insert_duplicate_id(self):
        with pytest.raises(IdCollision):
            apply_edit(make_doc(N1), InsertChunk(index=0, chunk=Narrative(id="note1", body="x")))

    def test_insert_bad_index(self):
        with pytest.raises(BadIndex):
            apply_edit(make_doc(N1), InsertChunk(index=5, chunk=H1))

    def test_move(self):
        doc = make_doc(H1, N1, G1)
        out = apply_edit(doc, MoveChunk(chunk_id="data", index=0))
        assert [c.id for c in out.chunks] == ["data", "top", "note1"]

    def test_set_chunk_keeps_id(self):
        doc = make_doc(N1)
        out = apply_edit(doc, SetChunk(chunk_id="note1", chunk=Narrative(id="note1", body="new text")))
        assert out.chunk("note1").body == "new text"
        with pytest.raises(EditError):
            apply_edit(doc, SetChunk(chunk_id="note1", chunk=Narrative(id="note2", body="x")))

    def test_set_theme_upserts(self):
        doc = make_doc(N1, G1)
        out = apply_edit(doc, SetTheme(name="tour", members=("data",)))
        assert theme_view(out, "tour") == ["data"]
        out2 = apply_edit(out, SetTheme(name="tour", members=("note1", "data")))
        assert theme_view(out2, "tour") == ["note1", "data"]
        with pytest.raises(UnknownChunk):
            apply_edit(doc, SetTheme(name="tour", members=("ghost",)))

    def test_edit_determinism(self):
        edits = [
            InsertChunk(index=0, chunk=H1),
            SetCell(grid="data", addr=CellAddr.parse("B1"), raw="=A1*2"),
            MoveChunk(chunk_id="data", index=0),
        ]
        a = make_doc(N1, G1)
        b = make_doc(N1, G1)
        for e in edits:
            a = apply_edit(a, e)
            b = apply_edit(b, e)
        assert a == b

    def test_revision_strictly_increments_by_one(self):
        doc = make_doc(N1, G1)
        for edit in (SetCell(grid="data", addr=CellAddr.parse("A1"), raw="9"), DeleteChunk(chunk_id="note1")):
            new = apply_edit(doc, edit)
            assert new.revision == doc.revision + 1
            doc = new
