"""Acceptance suite: one test per release criterion, each printing a PASS
line with its measured numbers. Tolerances are pinned here and nowhere else.
"""

import io
import json
import math
import random
import re
import time
from pathlib import Path

from litgrid.annotate import classify, survey
from litgrid.cli import run_cli
from litgrid.engine import evaluate
from litgrid.formula import format_expr, parse_expr, refs_of
from litgrid.lsheet import parse_lsheet, serialize_lsheet, value_to_obj
from litgrid.model import Document
from litgrid.reuse import index_library, suggest_reuse
from litgrid.values import ErrorValue
from litgrid.weave import cross_refs, render_html, term_index, toc, weave

from corpus import build_corpus
from gen_docs import gen_ast, gen_eval_doc, gen_roundtrip_doc
from oracle import oracle_evaluate

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def values_fingerprint(values) -> str:
    return json.dumps({k: value_to_obj(values[k]) for k in sorted(values)}, separators=(",", ":"))


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_fixture_survey(tmp_path):
    """classify over the 104-document fixture reproduces the target
    proportions within 0.5 and runs in under 5 seconds."""
    paths = build_corpus(tmp_path)
    start = time.perf_counter()
    stats = survey(paths).stats
    elapsed = time.perf_counter() - start

    assert stats.n_total == 104
    assert stats.pct_computational == 41.3 and abs(stats.pct_computational - 41) <= 0.5
    assert stats.pct_implicit_of_comp == 41.9 and abs(stats.pct_implicit_of_comp - 42) <= 0.5
    assert stats.pct_explicit_of_comp == 58.1 and abs(stats.pct_explicit_of_comp - 58) <= 0.5
    assert stats.pct_literate_of_comp == 27.9 and abs(stats.pct_literate_of_comp - 28) <= 0.5
    assert elapsed < 5.0

    code, out, _ = cli("classify", str(tmp_path), "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["stats"]["pct_computational"] == 41.3
    print(
        f"PASS fixture survey: 41.3/41.9/58.1/27.9 over n=104 in {elapsed:.2f}s"
    )


def test_evaluator_oracle_equivalence():
    """200 random acyclic documents: engine values match the independent
    tree-walking oracle on every node key (exact for Text/Boolean/Error,
    <= 1e-12 relative for Numbers) in under 30 seconds."""
    rng = random.Random(0xACCE97)
    start = time.perf_counter()
    checked_nodes = 0
    for i in range(200):
        doc = gen_eval_doc(rng, max_depth=5)
        got = evaluate(doc).values
        want = oracle_evaluate(doc)
        assert set(want) <= set(got), f"doc {i}: engine missing keys"
        for key, expected in want.items():
            actual = got[key]
            checked_nodes += 1
            if isinstance(expected, float) and not isinstance(expected, bool):
                assert isinstance(actual, float) and not isinstance(actual, bool), (i, key, actual, expected)
                if expected != actual:
                    rel = abs(actual - expected) / max(abs(expected), 1e-300)
                    assert rel <= 1e-12, (i, key, actual, expected)
            else:
                assert type(actual) is type(expected) and actual == expected, (i, key, actual, expected)
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    print(f"PASS evaluator oracle equivalence: 200 docs, {checked_nodes} nodes in {elapsed:.2f}s")


def test_presentation_decoupling():
    """50 random documents x 5 chunk permutations each (themes included):
    the values map is bit-identical to the original's."""
    rng = random.Random(0xDEC0)
    permutations_checked = 0
    for i in range(50):
        doc = gen_eval_doc(rng)
        baseline = values_fingerprint(evaluate(doc).values)
        for p in range(5):
            shuffled = list(doc.chunks)
            rng.shuffle(shuffled)
            permuted = Document(meta=doc.meta, chunks=tuple(shuffled), revision=doc.revision)
            assert values_fingerprint(evaluate(permuted).values) == baseline, (i, p)
            permutations_checked += 1
    print(f"PASS presentation decoupling: {permutations_checked} permutations bit-identical")


def test_cycle_handling():
    """Injected 2- and 3-node cycles: members get Error(CYCLE), exactly one
    CycleError with a closed path per cycle, off-cycle nodes still valued."""
    text = (
        "@title: cycles\n"
        "::: grid name=data rows=1 cols=1\n7\n:::\n\n"
        "::: formula name=a\na = b + 1\n:::\n\n"
        "::: formula name=b\nb = a + 1\n:::\n\n"
        "::: formula name=x\nx = y * 2\n:::\n\n"
        "::: formula name=y\ny = z * 2\n:::\n\n"
        "::: formula name=z\nz = x * 2\n:::\n\n"
        "::: formula name=clean\nclean = data!A1 * 3\n:::\n\n"
        "::: formula name=downstream\ndownstream = a + clean\n:::\n"
    )
    doc, _ = parse_lsheet(text)
    result = evaluate(doc)

    for member in ("a", "b", "x", "y", "z"):
        assert result.values[member] == ErrorValue("CYCLE"), member
    cycle_diags = [d for d in result.diagnostics if d.kind == "CycleError"]
    assert len(cycle_diags) == 2
    for d in cycle_diags:
        assert d.cycle_path[0] == d.cycle_path[-1]
        assert len(d.cycle_path) >= 3
    sizes = sorted(len(set(d.cycle_path)) for d in cycle_diags)
    assert sizes == [2, 3]
    assert result.values["clean"] == 21.0
    assert result.values["downstream"] == ErrorValue("REF")  # reads a cycle, is not one
    assert result.values["data!A1"] == 7.0
    print("PASS cycle handling: 2- and 3-cycles flagged once each, off-cycle values intact")


def test_round_trip():
    """parse/serialize identity on 50 generated documents and the checked-in
    samples; serialization idempotent; 500 expression ASTs round-trip."""
    rng = random.Random(0x20260810)
    for i in range(50):
        doc = gen_roundtrip_doc(rng)
        text = serialize_lsheet(doc)
        again, _ = parse_lsheet(text)
        assert again == doc, f"generated doc {i}"
        assert serialize_lsheet(again) == text, f"idempotence {i}"

    sample_files = sorted(SAMPLES.rglob("*.lsheet"))
    assert sample_files, "no checked-in samples found"
    for path in sample_files:
        text = path.read_text(encoding="utf-8")
        doc, diags = parse_lsheet(text)
        assert [d for d in diags if d.severity == "error"] == [], path
        assert serialize_lsheet(doc) == text, f"{path} is not canonical"
        again, _ = parse_lsheet(serialize_lsheet(doc))
        assert again == doc, path

    for i in range(500):
        expr = gen_ast(rng, rng.randint(0, 6))
        text = format_expr(expr)
        assert parse_expr(text, ctx="g1") == expr, f"ast {i}: {text}"
        assert refs_of(parse_expr(text, ctx="g1"), "g1") == refs_of(expr, "g1")
    print(f"PASS round-trip: 50 documents, {len(sample_files)} sample files, 500 ASTs")


def test_stub_workflow(tmp_path):
    """Three undocumented computables: stubs lists 3, apply then lists 0,
    classification unchanged by the inserted stubs."""
    path = tmp_path / "bare.lsheet"
    path.write_text(
        "@title: bare\n"
        "::: grid name=data rows=2 cols=2\n1,2\n3,4\n:::\n\n"
        "::: formula name=total\ntotal = SUM(data!A1:B2)\n:::\n\n"
        "::: assert msg=\"positive\"\ntotal > 0\n:::\n",
        encoding="utf-8",
    )
    before = classify(parse_lsheet(path.read_text(encoding="utf-8"))[0])

    code, out, _ = cli("stubs", str(path))
    assert code == 0 and "3 stubs pending" in out
    code, out, _ = cli("stubs", str(path), "--apply")
    assert code == 0 and "3 stubs inserted" in out
    code, out, _ = cli("stubs", str(path))
    assert code == 0 and "0 stubs pending" in out

    after = classify(parse_lsheet(path.read_text(encoding="utf-8"))[0])
    assert before == after
    print("PASS stub workflow: 3 -> apply -> 0, classification unchanged")


def test_assertions_drive_exit_codes(tmp_path):
    """A failing assertion carries its authored message verbatim through
    `check` with exit 1; fixing the cell flips the exit code to 0."""
    message = "Total must be non-negative"
    path = tmp_path / "m.lsheet"
    path.write_text(
        "@title: m\n"
        "::: grid name=data rows=1 cols=1\n-5\n:::\n\n"
        "::: formula name=total\ntotal = SUM(data!A1:A1)\n:::\n\n"
        f'::: assert msg="{message}"\ntotal >= 0\n:::\n',
        encoding="utf-8",
    )
    code, _, err = cli("check", str(path))
    assert code == 1
    assert message in err

    doc, _ = parse_lsheet(path.read_text(encoding="utf-8"))
    from litgrid.model import CellAddr, SetCell, apply_edit

    fixed = apply_edit(doc, SetCell(grid="data", addr=CellAddr.parse("A1"), raw="5"))
    path.write_text(serialize_lsheet(fixed), encoding="utf-8")
    code, out, err = cli("check", str(path))
    assert code == 0, err
    print("PASS assertions: verbatim message, exit 1 -> fix -> exit 0")


def test_weave_navigation(tmp_path):
    """Generated HTML: every TOC/xref anchor resolves, TOC ids equal the
    theme's headings, two runs are byte-identical."""
    doc, _ = parse_lsheet((SAMPLES / "tax_model.lsheet").read_text(encoding="utf-8"))
    for theme in ("all", "analyst", "reader"):
        result = evaluate(doc)
        rt = weave(doc, theme, result)
        html = render_html(rt, toc(doc, theme), cross_refs(doc), term_index(doc))
        html2 = render_html(weave(doc, theme, evaluate(doc)), toc(doc, theme), cross_refs(doc), term_index(doc))
        assert html == html2, "renders differ between runs"

        ids = set(re.findall(r'id="([^"]+)"', html))
        for target in re.findall(r'href="#([^"]+)"', html):
            assert target in ids, f"dangling anchor #{target} in theme {theme}"

        from litgrid.model import Heading, theme_view

        toc_ids = set()

        def collect(entries):
            for e in entries:
                toc_ids.add(e.chunk_id)
                collect(e.children)

        collect(toc(doc, theme))
        heading_ids = {cid for cid in theme_view(doc, theme) if isinstance(doc.chunk(cid), Heading)}
        assert toc_ids == heading_ids, theme
    print("PASS weave navigation: anchors sound, TOC == theme headings, byte-identical")


def test_suggest_acceptance(tmp_path):
    """Self-retrieval at rank 1 on a 20-chunk library; the 3-chunk
    hand-computed tf-idf case matches to 1e-9."""
    bodies = []
    parts = ["@title: big library"]
    vocab = [
        "interest principal growth",
        "shipping manifest customs",
        "solar panel inverter yield",
        "payroll ledger withholding",
        "train timetable platform",
        "yeast hydration baking",
        "telescope aperture focal",
        "vaccine cohort dosage",
        "irrigation moisture sensor",
        "portfolio rebalance drift",
        "glacier melt albedo",
        "opera libretto staging",
        "chess endgame zugzwang",
        "pottery kiln glaze",
        "marathon pacing split",
        "quantum qubit decoherence",
        "harvest silo moisture",
        "freight pallet weight",
        "coral reef bleaching",
        "violin luthier varnish",
    ]
    for i, words in enumerate(vocab):
        body = f"{words} chunk number {i} with unique flavour"
        bodies.append(body)
        parts.append(body)
    lib = tmp_path / "big.lsheet"
    lib.write_text("\n\n".join(parts) + "\n", encoding="utf-8")
    index = index_library([lib])
    assert index.n == 20
    for i, body in enumerate(bodies):
        results = suggest_reuse(body, index, k=3)
        assert results[0].chunk_id == f"narrative-{i + 1}", f"self-retrieval failed for chunk {i + 1}"

    # 3-chunk hand computation (vocabulary: alpha beta gamma delta epsilon)
    small = tmp_path / "small.lsheet"
    small.write_text("@title: s\nalpha beta alpha\n\nbeta gamma\n\ndelta epsilon epsilon\n", encoding="utf-8")
    small_index = index_library([small])
    results = suggest_reuse("alpha beta", small_index, k=3)
    idf_a = math.log(3 / 2) + 1
    idf_b = math.log(3 / 3) + 1
    idf_g = math.log(3 / 2) + 1
    nq = math.sqrt(idf_a**2 + idf_b**2)
    expect_1 = (2 * idf_a * idf_a + idf_b * idf_b) / (math.sqrt((2 * idf_a) ** 2 + idf_b**2) * nq)
    expect_2 = (idf_b * idf_b) / (math.sqrt(idf_b**2 + idf_g**2) * nq)
    assert abs(results[0].score - expect_1) <= 1e-9
    assert abs(results[1].score - expect_2) <= 1e-9
    print("PASS suggest: 20-chunk self-retrieval at rank 1, hand tf-idf within 1e-9")
