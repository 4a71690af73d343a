mod common;

use std::sync::Arc;

use proptest::prelude::*;
use smartframe::backend::{FnBackend, InstrumentedBackend};
use smartframe::geoframe::Frame;
use smartframe::minipy::{Output, Policy};
use smartframe::state::{default_return_types, default_toolset};
use smartframe::{ChatOptions, Config, Engine, Error, FrameMetadata, Outcome, SmartFrame};

use common::*;

fn counting_backend() -> Arc<InstrumentedBackend> {
    Arc::new(InstrumentedBackend::new(Arc::new(FnBackend::new(|req, _| {
        let q = req.last_user().unwrap_or_default().lines().last().unwrap_or_default().to_string();
        Ok(format!("```python\ndef execute(df_1):\n    # {q}\n    return len(df_1)\n```"))
    }))))
}

fn engine_with(dir: &std::path::Path, safe_mode: bool) -> (Arc<Engine>, Arc<InstrumentedBackend>) {
    std::fs::create_dir_all(dir.join("work")).unwrap();
    let backend = counting_backend();
    let config = Config { safe_mode, ..config(dir) };
    (Engine::builder(config).backend(backend.clone()).descriptor(public2()).build().unwrap(), backend)
}

fn int() -> ChatOptions<'static> {
    ChatOptions::new().return_type("int")
}

#[derive(Debug, Clone)]
enum Op {
    Chat(String),
    Improve(String),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        "[a-z]{1,6}( [a-z]{1,6}){0,2}".prop_map(Op::Chat),
        "[a-z]{1,6}( [a-z]{1,6}){0,2}".prop_map(Op::Improve),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn chat_resets_and_improve_appends(ops in prop::collection::vec(op(), 1..7)) {
        let dir = tempfile::tempdir().unwrap();
        let (e, _) = engine_with(dir.path(), false);
        let mut f = SmartFrame::new(&e, load("flooded_areas.geojson"), FLOODED_DESCRIPTION).unwrap();
        for op in ops {
            let before: Vec<_> = f.history().to_vec();
            match op {
                Op::Chat(q) => {
                    f.chat(&q, int()).unwrap();
                    prop_assert_eq!(f.history().len(), 1);
                    prop_assert_eq!(&f.history()[0].query, &q);
                }
                Op::Improve(q) if before.is_empty() => {
                    prop_assert!(matches!(f.improve(&q, ChatOptions::new()), Err(Error::Usage(_))));
                    prop_assert!(f.history().is_empty());
                }
                Op::Improve(q) => {
                    f.improve(&q, ChatOptions::new()).unwrap();
                    prop_assert_eq!(f.history().len(), before.len() + 1);
                    prop_assert_eq!(&f.history()[..before.len()], &before[..]);
                    prop_assert_eq!(f.return_types().len(), 1);
                }
            }
        }
    }
}

fn assert_initial(s: &SmartFrame, frame: &Frame) {
    assert!(s.is_initial());
    assert!(s.history().is_empty());
    assert_eq!(s.toolset(), &default_toolset());
    assert_eq!(s.return_types(), &default_return_types());
    assert!(s.linked().is_empty());
    assert_eq!(s.frame(), frame);
    assert_eq!(s.metadata(), &FrameMetadata::new(frame, ""));
}

#[test]
fn execute_leaves_every_tutorial_state_alone() {
    let dir = tempfile::tempdir().unwrap();
    let (engine, _) = replay_engine(dir.path(), public2());
    let t = run_tutorial(&engine).unwrap();
    for s in [&t.flooded, &t.facilities, &t.highways, &t.flooded_facilities] {
        let digest = s.digest();
        let frame = s.frame().clone();
        let history = s.history().to_vec();
        let first = s.execute().unwrap();
        let second = s.execute().unwrap();
        assert_eq!(s.digest(), digest);
        assert_eq!(s.frame(), &frame);
        assert_eq!(s.history(), &history[..]);
        assert_eq!(first.value(), second.value());
        if let Outcome::Frame { frame, .. } = &first {
            let Output::Frame(raw) = first.value() else { panic!() };
            assert_initial(frame, raw);
        }
    }
    // the flooded-column result came back as a fresh state and was then chatted once
    assert_eq!(t.flooded_facilities.description(), "");
    assert_eq!(t.flooded_facilities.history().len(), 1);
    assert!(t.flooded_facilities.frame().column("Flooded").is_some());
    assert!(t.facilities.frame().column("Flooded").is_none());
}

#[test]
fn non_geo_frames_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let (e, _) = engine_with(dir.path(), false);
    let mut plain = load("flooded_areas.geojson");
    plain.clear_geometry();
    assert!(matches!(SmartFrame::new(&e, plain, ""), Err(Error::Construction(_))));
}

#[test]
fn chat_options_reset_and_improve_inherits() {
    let dir = tempfile::tempdir().unwrap();
    let (e, _) = engine_with(dir.path(), false);
    let mut f = SmartFrame::new(&e, load("flooded_areas.geojson"), FLOODED_DESCRIPTION).unwrap();
    let other = SmartFrame::new(&e, load("highways.geojson"), HIGHWAYS_DESCRIPTION).unwrap();
    f.chat("q", ChatOptions::new().toolset(["pandas"]).return_type("int")).unwrap();
    assert_eq!(f.toolset().len(), 1);
    f.improve("q2", ChatOptions::new()).unwrap();
    assert_eq!(f.toolset().len(), 1);
    assert_eq!(f.return_types().len(), 1);
    let backend = Arc::new(FnBackend::scripted(["TYPE: int", "```python\ndef execute(df_1, df_2):\n    return 1\n```"]));
    let e2 = engine(tempfile::tempdir().unwrap().path(), backend, public2());
    let mut g = SmartFrame::new(&e2, load("flooded_areas.geojson"), FLOODED_DESCRIPTION).unwrap();
    g.chat("q", ChatOptions::new().link(&other)).unwrap();
    assert_eq!(g.linked().len(), 1);
    assert_eq!(g.metadata().linked.len(), 1);
    assert_eq!(g.return_types(), &default_return_types());
}

#[test]
fn failed_chat_leaves_a_reset_state() {
    let dir = tempfile::tempdir().unwrap();
    let backend = Arc::new(FnBackend::new(|req, _| {
        if req.last_user().unwrap().contains("Request: good") {
            Ok("```python\ndef execute(df_1):\n    return 1\n```".into())
        } else {
            Ok("no code here".into())
        }
    }));
    let e = engine(dir.path(), backend, public2());
    let mut f = SmartFrame::new(&e, load("flooded_areas.geojson"), FLOODED_DESCRIPTION).unwrap();
    f.chat("good", int()).unwrap();
    assert!(f.chat("bad", int()).is_err());
    assert!(f.history().is_empty());
    assert!(f.is_initial());
}

#[test]
fn safe_mode_prints_instead_of_running() {
    let dir = tempfile::tempdir().unwrap();
    let (e, _) = engine_with(dir.path(), true);
    let mut f = SmartFrame::new(&e, load("flooded_areas.geojson"), FLOODED_DESCRIPTION).unwrap();
    let reply = f.chat("count", int()).unwrap();
    assert!(reply.outcome().is_none());
    let reply = reply.improve("count again", ChatOptions::new()).unwrap();
    assert!(reply.outcome().is_none());
    assert_eq!(e.stats().real_runs(), 0);
    assert_eq!(e.stats().validation_runs(), 2);
    let printed = e.take_console();
    assert_eq!(printed.len(), 2);
    assert!(printed[1].contains("def execute(df_1)"));
    let out = f.execute().unwrap();
    assert_eq!(out.value(), &Output::Int(4));
    assert_eq!(e.stats().real_runs(), 1);
}

#[test]
fn default_mode_runs_once_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let (e, _) = engine_with(dir.path(), false);
    let mut f = SmartFrame::new(&e, load("flooded_areas.geojson"), FLOODED_DESCRIPTION).unwrap();
    let reply = f.chat("count", int()).unwrap();
    assert_eq!(reply.value(), Some(&Output::Int(4)));
    assert_eq!(e.stats().real_runs(), 1);
    assert_eq!(f.last_output().unwrap().value, Output::Int(4));
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (e, backend) = engine_with(dir.path(), false);
    let mut f = SmartFrame::new(&e, load("flooded_areas.geojson"), FLOODED_DESCRIPTION).unwrap();
    assert!(matches!(f.execute(), Err(Error::Usage(_))));
    assert!(matches!(f.inject("x"), Err(Error::Usage(_))));
    assert!(matches!(f.chat("  ", int()), Err(Error::Usage(_))));
    assert_eq!(backend.call_count(), 0);
}

#[test]
fn inspect_lists_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let (e, _) = engine_with(dir.path(), false);
    let mut f = SmartFrame::new(&e, load("flooded_areas.geojson"), FLOODED_DESCRIPTION).unwrap();
    f.chat("first", int()).unwrap().improve("second", ChatOptions::new()).unwrap();
    let text = f.inspect();
    assert!(text.starts_with("Prompt 1: first\nCode 1:\n\ndef execute(df_1):"));
    assert!(text.contains("\n\nPrompt 2: second\nCode 2:\n\n"));
}

#[test]
fn injected_function_matches_execute() {
    let dir = tempfile::tempdir().unwrap();
    let (engine, _) = replay_engine(dir.path(), public2());
    let t = run_tutorial(&engine).unwrap();
    let module = std::fs::read_to_string(&t.inject.path).unwrap();
    assert!(module.contains("def flooded(df_1, df_2)"));
    assert!(t.inject.instructions.contains("Manual injection procedure"));
    let caller = "import ai\n\ndef run(a, b):\n    return ai.flooded(a, b)\n";
    let inputs = [t.facilities.frame().clone(), t.flooded.frame().clone()];
    let policy = Policy::with_tools(default_toolset().iter()).with_module("ai", module);
    let sink = std::rc::Rc::new(smartframe::minipy::MemorySink::new());
    let via_module = smartframe::minipy::run(caller, "run", &inputs, policy, sink).unwrap().value;
    assert_eq!(&via_module, t.facilities.execute().unwrap().value());

    // a second injection under the same name needs overwrite
    assert!(matches!(t.facilities.inject("flooded"), Err(Error::Inject(_))));
    t.facilities.inject_with("flooded", true).unwrap();
    assert_eq!(std::fs::read_to_string(&t.inject.path).unwrap().matches("def flooded(").count(), 1);
    assert!(matches!(t.facilities.inject("not valid"), Err(Error::Inject(_))));
}

#[test]
fn replay_is_deterministic() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let (engine, _) = replay_engine(dir.path(), public2());
        let t = run_tutorial(&engine).unwrap();
        let module = std::fs::read_to_string(&t.inject.path).unwrap();
        let mut cache: Vec<(String, String)> = engine
            .cache()
            .keys()
            .unwrap()
            .into_iter()
            .map(|k| (k.to_string(), std::fs::read_to_string(engine.cache().dir().join(k.as_str())).unwrap()))
            .collect();
        cache.sort();
        let histories: Vec<Vec<String>> =
            [&t.flooded, &t.facilities, &t.highways].iter().map(|s| s.history().iter().map(|h| h.code.clone()).collect()).collect();
        (module, cache, histories)
    };
    assert_eq!(run(), run());
}
