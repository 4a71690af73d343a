use super::*;
use lexer::{tokenize, Tok};

fn toks(src: &str) -> Vec<Tok> {
    tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
}

#[test]
fn indentation_produces_balanced_blocks() {
    let t = toks("if x:\n    y = 1\n\n    # note\n    if z:\n        pass\nw\n");
    let indents = t.iter().filter(|t| **t == Tok::Indent).count();
    let dedents = t.iter().filter(|t| **t == Tok::Dedent).count();
    assert_eq!(indents, 2);
    assert_eq!(dedents, 2);
    assert_eq!(t.last(), Some(&Tok::Eof));
}

#[test]
fn brackets_join_lines() {
    let t = toks("f(1,\n  2)\n");
    assert_eq!(t.iter().filter(|t| **t == Tok::Newline).count(), 1);
}

#[test]
fn string_prefixes_and_escapes() {
    assert_eq!(toks("r'\\d+'")[0], Tok::Str("\\d+".into()));
    assert_eq!(toks("'a\\tb'")[0], Tok::Str("a\tb".into()));
    assert_eq!(toks("'''x\ny'''")[0], Tok::Str("x\ny".into()));
    assert!(matches!(toks("f'{a}'")[0], Tok::FStr(_)));
}

#[test]
fn numbers() {
    assert_eq!(toks("1_000")[0], Tok::Int(1000));
    assert_eq!(toks("0x1f")[0], Tok::Int(31));
    assert_eq!(toks("1e3")[0], Tok::Float(1000.0));
    assert_eq!(toks(".5")[0], Tok::Float(0.5));
}

#[test]
fn inconsistent_dedent_is_an_indentation_error() {
    let err = tokenize("if x:\n        a\n    b\n").unwrap_err();
    assert_eq!(err.kind, "IndentationError");
}

#[test]
fn unterminated_string_reports_line() {
    let err = tokenize("x = 1\ny = 'abc\n").unwrap_err();
    assert_eq!(err.kind, "SyntaxError");
    assert_eq!(err.line(), Some(2));
}

#[test]
fn module_level_statements_parse() {
    let body = parser::parse_module("import a.b as c\nfrom d import (e, f as g)\nx: int = 1\ny = 'a' 'b'\ndef h(*, k=1, **kw) -> None:\n    global x\n    return\n").unwrap();
    assert_eq!(body.len(), 5);
    assert!(matches!(body[4].kind, StmtKind::FunctionDef(_)));
    let err = parser::parse_module("@dec\ndef h():\n    pass\n").unwrap_err();
    assert_eq!(err.kind, "SyntaxError");
}

#[test]
fn check_syntax_flags_errors() {
    assert!(check_syntax("def f(:\n    pass\n").is_err());
    assert!(check_syntax("def f():\n    return [x for x in y if x]\n").is_ok());
}

#[test]
fn top_level_lines_are_one_based() {
    let items = top_level("import a\n\ndef f():\n    '''doc\nstill doc'''\n    return 1\nx = 2\n").unwrap();
    assert_eq!(
        items,
        vec![
            TopLevel { kind: TopLevelKind::Import, line: 1 },
            TopLevel { kind: TopLevelKind::Function("f".into()), line: 3 },
            TopLevel { kind: TopLevelKind::Other, line: 7 },
        ]
    );
}
