mod common;

use std::sync::Arc;

use smartframe::backend::{FnBackend, InstrumentedBackend};
use smartframe::codegen::MAX_ATTEMPTS;
use smartframe::{BackendError, ChatOptions, CodegenError, Error, Role, SmartFrame};

use common::*;

const GOOD: &str = "```python\ndef execute(df_1):\n    return len(df_1)\n```";

fn bad(i: usize) -> String {
    format!("```python\ndef execute(df_1):\n    raise ValueError(\"attempt {i}\")\n```")
}

fn instrumented(f: impl Fn(usize) -> Result<String, BackendError> + Send + Sync + 'static) -> Arc<InstrumentedBackend> {
    Arc::new(InstrumentedBackend::new(Arc::new(FnBackend::new(move |_, i| f(i)))))
}

fn frame(backend: Arc<InstrumentedBackend>, dir: &std::path::Path) -> SmartFrame {
    let e = engine(dir, backend, public2());
    SmartFrame::new(&e, load("flooded_areas.geojson"), FLOODED_DESCRIPTION).unwrap()
}

#[test]
fn four_failures_then_success() {
    let dir = tempfile::tempdir().unwrap();
    let backend = instrumented(|i| Ok(if i < 4 { bad(i) } else { GOOD.into() }));
    let mut f = frame(backend.clone(), dir.path());
    f.chat("count", ChatOptions::new().return_type("int")).unwrap();
    assert_eq!(backend.call_count(), 5);
    let attempts = &f.history()[0].attempts;
    assert_eq!(attempts.len(), 5);
    assert!(attempts[..4].iter().all(|a| a.error.as_deref().is_some_and(|e| e.contains("ValueError"))));
    assert!(attempts[4].error.is_none());
    // each retry carries the failing code and its error
    let calls = backend.calls();
    let last = &calls[4].request.messages;
    assert_eq!(last.len(), 2 + 4);
    assert!(last[5].content.contains("attempt 3"));
    assert!(last[5].content.contains("def execute(df_1)"));
}

#[test]
fn five_failures_exhaust() {
    let dir = tempfile::tempdir().unwrap();
    let backend = instrumented(|i| Ok(bad(i)));
    let mut f = frame(backend.clone(), dir.path());
    let err = f.chat("count", ChatOptions::new().return_type("int")).err().unwrap();
    assert_eq!(backend.call_count(), MAX_ATTEMPTS);
    let ex = err.exhausted().expect("exhausted");
    assert_eq!(ex.attempts.len(), 5);
    assert!(ex.last_code.contains("attempt 4"));
    assert!(ex.last_error.contains("attempt 4"));
    // nothing is cached or recorded
    assert!(f.history().is_empty());
    assert!(f.engine().cache().keys().unwrap().is_empty());
}

#[test]
fn unusable_answers_count_as_attempts() {
    let dir = tempfile::tempdir().unwrap();
    let answers = [
        "I cannot do that.".to_string(),
        "```python\ndef execute(df_1, df_2):\n    return 1\n```".into(),
        "```python\ndef execute(df_1):\n    return 'text'\n```".into(),
        "```python\ndef execute(df_1):\n    return len(df_1\n```".into(),
        GOOD.into(),
    ];
    let backend = instrumented(move |i| Ok(answers[i].clone()));
    let mut f = frame(backend.clone(), dir.path());
    f.chat("count", ChatOptions::new().return_type("int")).unwrap();
    let errors: Vec<String> = f.history()[0].attempts.iter().filter_map(|a| a.error.clone()).collect();
    assert_eq!(errors.len(), 4);
    assert!(errors[0].contains("no code"));
    assert!(errors[1].contains("expected 1"));
    assert!(errors[2].contains("int"), "{}", errors[2]);
}

#[test]
fn backend_errors_are_not_retried() {
    let dir = tempfile::tempdir().unwrap();
    let backend = instrumented(|_| Err(BackendError::Transport("connection refused".into())));
    let mut f = frame(backend.clone(), dir.path());
    let err = f.chat("count", ChatOptions::new().return_type("int")).err().unwrap();
    assert!(matches!(err, Error::Generation(CodegenError::Backend(_))));
    assert_eq!(backend.call_count(), 1);
}

fn is_type_call(call: &smartframe::backend::Call) -> bool {
    call.request.messages.iter().any(|m| m.role == Role::User && m.content.starts_with("Permitted return types:"))
}

#[test]
fn singleton_return_type_skips_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let backend = instrumented(|_| Ok(GOOD.into()));
    let mut f = frame(backend.clone(), dir.path());
    f.chat("count", ChatOptions::new().return_type("int")).unwrap();
    assert_eq!(backend.calls().iter().filter(|c| is_type_call(c)).count(), 0);
    assert_eq!(f.history()[0].return_type, "int");
}

#[test]
fn default_return_types_need_one_question() {
    let dir = tempfile::tempdir().unwrap();
    let backend = instrumented(|i| Ok(if i == 0 { "TYPE: int".into() } else { GOOD.into() }));
    let mut f = frame(backend.clone(), dir.path());
    assert_eq!(f.return_types().len(), 10);
    f.chat("count", ChatOptions::new()).unwrap();
    assert_eq!(backend.calls().iter().filter(|c| is_type_call(c)).count(), 1);
    assert_eq!(backend.call_count(), 2);
    assert!(backend.calls()[1].request.messages[1].content.contains("must return a value of type int"));
}

#[test]
fn unreadable_type_answer_is_asked_once_more() {
    let dir = tempfile::tempdir().unwrap();
    let backend = instrumented(|i| {
        Ok(match i {
            0 => "It is probably a number.".into(),
            1 => "TYPE: int".into(),
            _ => GOOD.into(),
        })
    });
    let mut f = frame(backend.clone(), dir.path());
    f.chat("count", ChatOptions::new()).unwrap();
    assert_eq!(backend.calls().iter().filter(|c| is_type_call(c)).count(), 2);

    let dir = tempfile::tempdir().unwrap();
    let backend = instrumented(|_| Ok("no idea".into()));
    let mut f = frame(backend.clone(), dir.path());
    let err = f.chat("count", ChatOptions::new()).err().unwrap();
    assert!(matches!(err, Error::Generation(CodegenError::TypeResolution { .. })));
    assert_eq!(backend.call_count(), 2);
}

#[test]
fn cache_hit_skips_the_backend() {
    let dir = tempfile::tempdir().unwrap();
    let backend = instrumented(|i| Ok(if i == 0 { "TYPE: int".into() } else { GOOD.into() }));
    let mut f = frame(backend.clone(), dir.path());
    f.chat("count", ChatOptions::new()).unwrap();
    backend.reset();
    f.chat("count", ChatOptions::new()).unwrap();
    assert_eq!(backend.call_count(), 0);
    assert_eq!(f.history()[0].return_type, "int");
    assert!(f.history()[0].attempts.is_empty());
}

#[test]
fn improve_prompt_carries_history() {
    let dir = tempfile::tempdir().unwrap();
    let backend = instrumented(|_| Ok(GOOD.into()));
    let mut f = frame(backend.clone(), dir.path());
    f.chat("count the rows", ChatOptions::new().return_type("int")).unwrap();
    f.improve("now do it faster", ChatOptions::new()).unwrap();
    let user = &backend.calls()[1].request.messages[1].content;
    assert!(user.contains("Prompt 1: count the rows"));
    assert!(user.contains("return len(df_1)"));
    assert!(user.ends_with("Request: now do it faster"));
}

#[test]
fn linked_frames_widen_the_signature() {
    let dir = tempfile::tempdir().unwrap();
    let backend = instrumented(|_| Ok("```python\ndef execute(df_1, df_2):\n    return len(df_1) + len(df_2)\n```".into()));
    let e = engine(dir.path(), backend.clone(), public2());
    let mut a = SmartFrame::new(&e, load("flooded_areas.geojson"), FLOODED_DESCRIPTION).unwrap();
    let b = SmartFrame::new(&e, load("highways.geojson"), HIGHWAYS_DESCRIPTION).unwrap();
    let out = a.chat("count both", ChatOptions::new().link(&b).return_type("int")).unwrap();
    assert_eq!(out.value(), Some(&smartframe::minipy::Output::Int(16)));
    let msgs = &backend.calls()[0].request.messages;
    assert!(msgs[1].content.contains("def execute(df_1, df_2)"));
    assert!(msgs[0].content.contains("Frame df_2:"));
}
