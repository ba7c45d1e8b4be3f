import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridlab.addr import MAX_COL, MAX_ROW, Addr, Rect, col_index, col_label
from gridlab.errors import GridlabError, InputError, OutOfBounds
from gridlab.grid import (
    BLANK,
    CIRC,
    DIV0,
    REF,
    VALUE,
    CellError,
    Formula,
    Literal,
    Sheet,
    binary_op,
    format_value,
    parse_sheet_text,
    truth,
)

A = Addr.parse


def test_column_labels():
    assert [col_label(i) for i in (1, 26, 27, 52, 702)] == ["A", "Z", "AA", "AZ", "ZZ"]
    assert all(col_index(col_label(i)) == i for i in range(1, MAX_COL + 1))


def test_addr_and_rect_parsing():
    assert A("B7") == Addr(2, 7)
    assert A("$B$7") == Addr(2, 7)
    assert Rect.parse("B3:A1") == Rect(1, 1, 2, 3)
    assert str(Rect.parse("A1:B3")) == "A1:B3"
    assert list(Rect.parse("A1:B3").cells())[:3] == [A("A1"), A("B1"), A("A2")]
    with pytest.raises(GridlabError):
        A("A0")
    assert not Addr(MAX_COL + 1, 1).in_grid() and not Addr(1, MAX_ROW + 1).in_grid()


def test_set_literal_formula_and_clear():
    s = Sheet()
    s.set_content(A("A1"), "1")
    assert s.get(A("A1")) == Literal(1.0)
    s.set_content(A("A2"), "=A1+A2")
    f = s.get(A("A2"))
    assert isinstance(f, Formula) and f.cached is BLANK and f.prior is BLANK
    s.set_content(A("A1"), "")
    assert s.get(A("A1")) is None and s.read_value(A("A1")) is BLANK
    assert len(s) == 1


def test_empty_reads_blank_and_blank_adds_as_zero():
    assert Sheet().read_value(A("B7")) is BLANK
    assert binary_op("+", BLANK, 1.0) == 1.0


def test_out_of_bounds_set():
    with pytest.raises(OutOfBounds):
        Sheet(max_col=3, max_row=3).set_content(Addr(4, 1), "1")


@pytest.mark.parametrize(
    "op, a, b, want",
    [
        ("+", 1.0, 2.0, 3.0),
        ("/", 1.0, 0.0, DIV0),
        ("/", 1.0, BLANK, DIV0),
        ("*", "x", 2.0, VALUE),
        ("-", True, 1.0, VALUE),
        ("+", REF, DIV0, REF),
        ("+", 1.0, CIRC, CIRC),
        ("=", BLANK, 0.0, True),
        ("=", BLANK, "", True),
        ("<", 5.0, "a", True),
        ("<", "z", False, True),
        ("<>", 1.0, "1", True),
        ("=", REF, REF, REF),
    ],
)
def test_coercion_table(op, a, b, want):
    assert binary_op(op, a, b) == want


def test_truth():
    assert truth(0.0) is False and truth(2.0) is True and truth(BLANK) is False
    assert truth("x") == VALUE and truth(REF) == REF


values = (
    st.floats(allow_nan=False, allow_infinity=False, width=32)
    | st.text(max_size=3)
    | st.booleans()
    | st.just(BLANK)
    | st.sampled_from([REF, CIRC, VALUE, DIV0])
)


@given(st.sampled_from(["+", "-", "*", "/", "=", "<>", "<", ">", "<=", ">="]), values, values)
def test_coercion_is_total_and_left_error_wins(op, a, b):
    r = binary_op(op, a, b)
    assert isinstance(r, (float, bool, CellError))
    if isinstance(a, CellError):
        assert r == a
    elif isinstance(b, CellError):
        assert r == b
    elif op in "+-*/" and (isinstance(a, (str, bool)) or isinstance(b, (str, bool))):
        assert r == VALUE


@given(st.lists(st.tuples(st.integers(1, 5), st.integers(1, 5), st.sampled_from(["", "1", "x", "=A1"])), max_size=40))
def test_storage_sparsity(ops):
    s = Sheet()
    occupied = set()
    for c, r, raw in ops:
        s.set_content(Addr(c, r), raw)
        (occupied.add if raw else occupied.discard)((c, r))
    assert len(s) == len(occupied)


@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e9, max_value=1e9))
def test_read_value_never_raises(x):
    s = Sheet()
    s.set_content(A("A1"), repr(x))
    assert s.read_value(A("A1")) == x
    assert s.read_value(A("Q99")) is BLANK


def test_format_value():
    assert format_value(4.5) == "4.5"
    assert format_value(5.0) == "5"
    assert format_value(0.1 + 0.2) == "0.3"
    assert format_value(1 / 3) == "0.333333333"
    assert format_value(-0.0) == "0"
    assert format_value('say "hi"') == '"say \\"hi\\""'
    assert format_value(REF) == "#REF!"
    assert format_value(BLANK) == ""
    assert format_value(True) == "TRUE"


def test_sheet_text_parsing():
    entries = parse_sheet_text("# comment\nA1 = 1\n\nA2 = =A1+A2\nB1 = hello world\n")
    assert entries == [(A("A1"), "1"), (A("A2"), "=A1+A2"), (A("B1"), "hello world")]


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("A1 = 1\nbogus\n", 2, 1),
        ("A1 = 1\nQQQQ1 = 2\n", 2, 1),
        ("A1 = =1+\n", 1, 9),
        ("A1 = =SUM(A1,A2)\n", 1, 13),
    ],
)
def test_sheet_text_errors_name_line_and_column(text, line, col):
    with pytest.raises(InputError) as info:
        parse_sheet_text(text, "demo.sheet")
    err = info.value
    assert (err.path, err.line, err.column) == ("demo.sheet", line, col)
    assert str(err).startswith(f"demo.sheet:{line}:{col}:")
