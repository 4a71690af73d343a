use std::rc::Rc;

use minipy::{run, MemorySink, Output, Policy, RunFailure, RunOutput};

fn all_tools() -> Policy {
    Policy::with_tools(["geopandas", "pandas", "matplotlib", "folium", "contextily", "shapely", "numpy"])
}

fn exec(src: &str) -> Result<RunOutput, RunFailure> {
    run(src, "main", &[], all_tools(), Rc::new(MemorySink::new()))
}

fn value(src: &str) -> Output {
    match exec(src) {
        Ok(out) => out.value,
        Err(e) => panic!("{}\n{}", e.exception, e.exception.traceback()),
    }
}

fn error_kind(src: &str) -> String {
    match exec(src) {
        Ok(out) => panic!("expected an error, got {:?}", out.value),
        Err(e) => e.exception.kind.clone(),
    }
}

fn s(x: &str) -> Output {
    Output::Str(x.into())
}

#[test]
fn arithmetic_and_precedence() {
    assert_eq!(value("def main():\n    return 2 + 3 * 4 ** 2 // 5 - -1\n"), Output::Int(12));
    assert_eq!(value("def main():\n    return 7 / 2\n"), Output::Float(3.5));
    assert_eq!(value("def main():\n    return -7 // 2, -7 % 3\n"), Output::Tuple(vec![Output::Int(-4), Output::Int(2)]));
    assert_eq!(value("def main():\n    return 1 < 2 < 3 and not 3 < 2\n"), Output::Bool(true));
    assert_eq!(error_kind("def main():\n    return 1 / 0\n"), "ZeroDivisionError");
}

#[test]
fn strings_and_formatting() {
    let src = r#"
def main():
    name = "roads"
    n = 3
    x = 1234.5678
    return f"{name.upper()}: {n:03d} {x:,.2f} {x!r:>12}|{'%s-%d' % ('a', 2)}|{'{} {}'.format(1, 'b')}"
"#;
    assert_eq!(value(src), s("ROADS: 003 1,234.57    1234.5678|a-2|1 b"));
    assert_eq!(value("def main():\n    return ', '.join(sorted(['b', 'a'])) + 'xyz'[::-1]\n"), s("a, bzyx"));
    assert_eq!(value("def main():\n    return 'a,b,,c'.split(',')\n"), Output::List(vec![s("a"), s("b"), s(""), s("c")]));
}

#[test]
fn collections_and_comprehensions() {
    let src = r#"
def main():
    d = {k: v * 2 for k, v in zip("abc", range(3)) if k != "b"}
    d.setdefault("z", 9)
    items = [x for row in [[1, 2], [3]] for x in row]
    st = {1, 2} | {3}
    return d, items, len(st), sum(items), max(items, key=lambda x: -x)
"#;
    assert_eq!(
        value(src),
        Output::Tuple(vec![
            Output::Dict(vec![(s("a"), Output::Int(0)), (s("c"), Output::Int(4)), (s("z"), Output::Int(9))]),
            Output::List(vec![Output::Int(1), Output::Int(2), Output::Int(3)]),
            Output::Int(3),
            Output::Int(6),
            Output::Int(1),
        ])
    );
}

#[test]
fn closures_defaults_and_star_args() {
    let src = r#"
def make(k):
    def add(x, y=1, *rest, **kw):
        return x + y + k + sum(rest) + kw.get("extra", 0)
    return add

def main():
    f = make(10)
    return f(1), f(1, 2, 3, 4, extra=100)
"#;
    assert_eq!(value(src), Output::Tuple(vec![Output::Int(12), Output::Int(120)]));
}

#[test]
fn exceptions_are_catchable_and_carry_lines() {
    let src = r#"
def main():
    try:
        {}["missing"]
    except KeyError as e:
        caught = "key"
    else:
        caught = "none"
    finally:
        done = True
    try:
        raise ValueError("bad")
    except (TypeError, ValueError) as e:
        msg = str(e)
    return caught, msg, done
"#;
    assert_eq!(value(src), Output::Tuple(vec![s("key"), s("bad"), Output::Bool(true)]));
    let err = exec("def main():\n    x = 1\n    return x.nope\n").unwrap_err();
    assert_eq!(err.exception.kind, "AttributeError");
    assert_eq!(err.exception.line(), Some(3));
    assert!(err.exception.traceback().contains("line 3, in main"));
}

#[test]
fn syntax_errors_report_line() {
    let err = exec("def main():\n    return (1,\n\ndef other(:\n    pass\n").unwrap_err();
    assert_eq!(err.exception.kind, "SyntaxError");
    let err = exec("class A:\n    pass\n").unwrap_err();
    assert_eq!(err.exception.kind, "SyntaxError");
}

#[test]
fn disallowed_imports_raise_isolation_error() {
    assert_eq!(error_kind("import os\ndef main():\n    return 1\n"), "IsolationError");
    assert_eq!(error_kind("def main():\n    import subprocess\n"), "IsolationError");
    assert_eq!(error_kind("from urllib import request\ndef main():\n    return 1\n"), "IsolationError");
    let narrow = Policy::with_tools(["pandas"]);
    let err = run("import folium\ndef main():\n    return 1\n", "main", &[], narrow, Rc::new(MemorySink::new())).unwrap_err();
    assert_eq!(err.exception.kind, "IsolationError");
}

#[test]
fn isolation_errors_cannot_be_swallowed() {
    let src = r#"
def main():
    try:
        import socket
    except Exception:
        return "swallowed"
    except:
        return "bare"
    return "ok"
"#;
    assert_eq!(error_kind(src), "IsolationError");
}

#[test]
fn stdlib_whitelist_is_importable() {
    let src = r#"
from __future__ import annotations
import json, math, warnings
from typing import List, Optional

def main() -> Optional[List[float]]:
    warnings.filterwarnings("ignore")
    return json.loads(json.dumps({"r": round(math.sqrt(16) + math.pi, 2)}))["r"]
"#;
    assert_eq!(value(src), Output::Float(7.14));
}

#[test]
fn runaway_loops_time_out() {
    let policy = Policy {
        step_limit: 10_000,
        ..all_tools()
    };
    let err = run("def main():\n    while True:\n        pass\n", "main", &[], policy, Rc::new(MemorySink::new())).unwrap_err();
    assert_eq!(err.exception.kind, "TimeoutError");
    let src = "def main():\n    try:\n        while True:\n            pass\n    except Exception:\n        return 1\n";
    let policy = Policy {
        step_limit: 10_000,
        ..all_tools()
    };
    let err = run(src, "main", &[], policy, Rc::new(MemorySink::new())).unwrap_err();
    assert_eq!(err.exception.kind, "TimeoutError");
}

#[test]
fn deep_recursion_is_bounded() {
    assert_eq!(error_kind("def f(n):\n    return f(n + 1)\ndef main():\n    return f(0)\n"), "RecursionError");
}

#[test]
fn files_cannot_be_opened() {
    assert_eq!(error_kind("def main():\n    return open('x.txt').read()\n"), "PermissionError");
}

#[test]
fn print_goes_to_captured_stdout() {
    let out = exec("def main():\n    print('a', 1, sep='-')\n    print([1.5, None])\n").unwrap();
    assert_eq!(out.stdout, "a-1\n[1.5, None]\n");
    assert_eq!(out.value, Output::None);
}

#[test]
fn missing_entry_point_is_a_name_error() {
    let err = run("x = 1\n", "execute", &[], all_tools(), Rc::new(MemorySink::new())).unwrap_err();
    assert_eq!(err.exception.kind, "NameError");
}

#[test]
fn function_signatures_are_listed() {
    let sigs = minipy::functions("def execute(df_1, df_2, k=3):\n    pass\n\ndef helper(*args):\n    pass\n").unwrap();
    assert_eq!(sigs.len(), 2);
    assert_eq!(sigs[0].name, "execute");
    assert_eq!(sigs[0].params, vec!["df_1", "df_2", "k"]);
    assert_eq!(sigs[0].required, 2);
    assert!(sigs[1].varargs);
}

#[test]
fn host_modules_are_importable() {
    let policy = all_tools().with_module("ai", "import math\n\ndef area(r):\n    return round(math.pi * r * r, 2)\n");
    let src = "import ai\n\ndef main():\n    return ai.area(2)\n";
    let out = run(src, "main", &[], policy, Rc::new(MemorySink::new())).unwrap();
    assert_eq!(out.value, Output::Float(12.57));
    let policy = Policy::with_tools(Vec::<String>::new()).with_module("ai", "import os\n");
    let err = run("import ai\ndef main():\n    return 1\n", "main", &[], policy, Rc::new(MemorySink::new())).unwrap_err();
    assert_eq!(err.exception.kind, "IsolationError");
}
