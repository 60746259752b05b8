import pytest

from slamjs.parser import (
    ParseDiagnostic,
    SlamjsParseError,
    SourceProgram,
    parse,
    pretty,
    try_parse,
)
from slamjs.syntax import (
    App,
    Box,
    Closure,
    Const,
    ConstKind,
    Delete,
    Fun,
    Hole,
    Marked,
    Prim,
    PrimOp,
    Read,
    Record,
    Run,
    RunIn,
    Var,
    Write,
    forget_labels,
)


def test_let_desugars_to_application():
    e = parse("let x = 1 in x")
    assert isinstance(e, App)
    assert isinstance(e.fn, Fun) and e.fn.param == "x"
    assert e.arg == Const.num(1, e.arg.label)


def test_constants():
    assert parse("1.5").value == 1.5
    assert parse('"a\\"b"').value == 'a"b'
    assert parse("null").kind is ConstKind.NULL
    assert parse("undef").kind is ConstKind.UNDEF
    assert parse("false").value is False


def test_operator_precedence():
    e = parse("typeof x == \"number\"")
    assert isinstance(e, Prim) and e.op is PrimOp.EQ
    assert e.left.op is PrimOp.TYPEOF
    sub = parse("a - b")
    assert sub.op is PrimOp.SUB


def test_postfix_chains_left_to_right():
    e = parse('f(1)["a"](2)')
    assert isinstance(e, App)
    assert isinstance(e.fn, Read)
    assert isinstance(e.fn.target, App)


def test_record_fields_accept_names_and_strings():
    e = parse('{"__proto__": null, a: 1}')
    assert isinstance(e, Record)
    assert e.field_names() == ("__proto__", "a")
    assert parse("{}") == Record((), 0)


def test_assignment_and_delete():
    w = parse('r["x"] = 1')
    assert isinstance(w, Write)
    assert isinstance(w.target, Var)
    d = parse('del r["x"]')
    assert isinstance(d, Delete)


def test_markers():
    e = parse("(Secret : x)")
    assert isinstance(e, Marked) and e.marker == "Secret"


def test_comments_are_ignored():
    assert forget_labels(parse("// note\n1")) == Const.num(1)


# --- Errors ---

def test_assignment_requires_field_read():
    with pytest.raises(SlamjsParseError, match="left side"):
        parse("x = 1")


def test_delete_requires_field_read():
    with pytest.raises(SlamjsParseError, match="del"):
        parse("del x")


def test_duplicate_record_field_is_rejected():
    with pytest.raises(SlamjsParseError, match="duplicate"):
        parse('{"a": 1, "a": 2}')


def test_intermediate_forms_need_opt_in():
    for text in ["_", "(x, {})", "run x in {}"]:
        with pytest.raises(SlamjsParseError, match="intermediate"):
            parse(text)
    assert isinstance(parse("_", allow_intermediate=True), Hole)
    assert isinstance(parse("(x, {y ↦ 1})", allow_intermediate=True), Closure)
    assert isinstance(parse("run x in {}", allow_intermediate=True), RunIn)


def test_env_bindings_must_be_values():
    with pytest.raises(SlamjsParseError, match="not a stage-0 value"):
        parse("(x, {y |-> f(1)})", allow_intermediate=True)


def test_diagnostics_carry_position_and_origin():
    with pytest.raises(SlamjsParseError) as excinfo:
        parse(SourceProgram("let x = 1 in\n  x )", origin="bad.sjs"))
    diagnostic = excinfo.value.diagnostics[0]
    assert diagnostic.origin == "bad.sjs"
    assert diagnostic.line == 2
    assert str(diagnostic).startswith("bad.sjs:2:")


def test_unexpected_end_of_input():
    diagnostics = try_parse("fun(x){")
    assert isinstance(diagnostics, list)
    assert isinstance(diagnostics[0], ParseDiagnostic)
    assert "end of input" in diagnostics[0].message


def test_reserved_words_are_reported():
    diagnostics = try_parse("let in = 1 in 2")
    assert "reserved word" in diagnostics[0].message


def test_try_parse_returns_expression_on_success():
    assert isinstance(try_parse("box 1"), Box)
    assert isinstance(try_parse("run box 1"), Run)


# --- Printing ---

@pytest.mark.parametrize(
    "source",
    [
        "if ((H : true)) { (L : false) } else { 1 }",
        "run (box (if (unbox (box true)) { false } else { 1 }))",
        "((fun(x){ (I : fun(y){ x }) })((H : 1)))((L : 2))",
        'let r = {"__proto__": null, "a": 1} in del (r["b"] = 2)["a"]',
        "typeof (f(1) - 2) == \"number\"",
        "box unbox x",
    ],
)
def test_pretty_output_parses_back(source):
    e = parse(source)
    assert forget_labels(parse(pretty(e))) == forget_labels(e)


def test_pretty_numbers_and_labels():
    assert pretty(parse("2.0")) == "2"
    assert pretty(parse("2.5")) == "2.5"
    assert pretty(parse("(H : 1)"), show_labels=True) == "(H : 1@0)@1"


def test_pretty_closures_hide_environments_by_default():
    e = parse("(fun(x){x}, {y ↦ 1})", allow_intermediate=True)
    assert pretty(e) == "(fun(x){x}, {…})"
    assert pretty(e, show_envs=True) == "(fun(x){x}, {y↦1})"
