use std::collections::BTreeMap;

use proptest::prelude::*;
use smartframe::{Message, PromptTemplate, Role, TemplateError, TemplateSet};

const EXAMPLE: &str = include_str!("data/example_template.json");

fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn example_parses_and_renders() {
    let t = PromptTemplate::parse(EXAMPLE).unwrap();
    assert_eq!(t.messages.len(), 2);
    assert_eq!(t.messages[0].role, Role::System);
    assert_eq!(t.messages[1].role, Role::User);
    assert_eq!(t.slots(), vec!["prompt"]);
    let out = t.render(&bind(&[("prompt", "Plot the network")])).unwrap();
    assert_eq!(out[0], t.messages[0]);
    assert!(out[1].content.ends_with("answering: Plot the network"));
}

#[test]
fn malformed_templates_are_rejected() {
    let empty = PromptTemplate::parse(r#"{"messages": []}"#).unwrap_err();
    assert!(matches!(empty, TemplateError::Schema { index: None, .. }));

    let bad_role = PromptTemplate::parse(r#"{"messages": [{"role": "system", "content": "a"}, {"role": "assistant", "content": "b"}]}"#)
        .unwrap_err();
    assert!(matches!(bad_role, TemplateError::Schema { index: Some(1), .. }), "{bad_role}");

    let missing = PromptTemplate::parse(r#"{"messages": [{"role": "user"}]}"#).unwrap_err();
    assert!(matches!(missing, TemplateError::Schema { index: Some(0), .. }));
    assert!(missing.to_string().contains("content"));
}

#[test]
fn other_schema_errors() {
    assert!(matches!(PromptTemplate::parse("{"), Err(TemplateError::Json(_))));
    assert!(PromptTemplate::parse(r#"{"messages": [{"role": "user", "content": "x", "name": "y"}]}"#).is_err());
    assert!(PromptTemplate::parse(r#"{"messages": [{"role": "user", "content": "x"}], "extra": 1}"#).is_err());
    assert!(PromptTemplate::parse(r#"{"messages": [{"role": "user", "content": "{{1abc}}"}]}"#).is_err());
}

#[test]
fn unbound_slot_is_named() {
    let t = PromptTemplate::parse(EXAMPLE).unwrap();
    assert_eq!(t.render(&BTreeMap::new()), Err(TemplateError::Unbound("prompt".into())));
    // extra bindings are ignored
    assert!(t.render(&bind(&[("prompt", "x"), ("unused", "y")])).is_ok());
}

#[test]
fn substitution_is_single_pass() {
    let t = PromptTemplate::parse(EXAMPLE).unwrap();
    let out = t.render(&bind(&[("prompt", "{{x}}")])).unwrap();
    assert!(out[1].content.ends_with("answering: {{x}}"));
}

#[test]
fn no_slots_renders_identity() {
    let t = PromptTemplate::parse(r#"{"messages": [{"role": "system", "content": "fixed text"}]}"#).unwrap();
    assert_eq!(t.render(&BTreeMap::new()).unwrap(), t.messages);
}

#[test]
fn bundled_templates_have_expected_slots() {
    let set = TemplateSet::bundled();
    assert_eq!(set.chat.slots(), vec!["toolset", "utd", "signature", "return_type", "return_types", "query"]);
    assert!(set.improve.slots().contains(&"history".to_string()));
    assert_eq!(set.determine_type.slots(), vec!["return_types", "query"]);
    assert_eq!(set.retry.slots(), vec!["code", "error", "signature", "return_type"]);
}

#[test]
fn overrides_replace_single_templates() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("retry.json"), r#"{"messages": [{"role": "user", "content": "again: {{error}}"}]}"#).unwrap();
    let set = TemplateSet::with_overrides(dir.path()).unwrap();
    assert_eq!(set.retry.messages, vec![Message::user("again: {{error}}")]);
    assert_eq!(set.chat, TemplateSet::bundled().chat);
}

fn message() -> impl Strategy<Value = Message> {
    let piece = prop_oneof![
        "[a-zA-Z0-9 .,:'\"\\n-]{0,12}",
        "[a-z_][a-z0-9_]{0,6}".prop_map(|s| format!("{{{{{s}}}}}")),
    ];
    (any::<bool>(), prop::collection::vec(piece, 0..6)).prop_map(|(sys, parts)| Message {
        role: if sys { Role::System } else { Role::User },
        content: parts.concat(),
    })
}

proptest! {
    #[test]
    fn serialise_parse_round_trip(messages in prop::collection::vec(message(), 1..5)) {
        let t = PromptTemplate { messages };
        let once = PromptTemplate::parse(&t.to_json()).unwrap();
        prop_assert_eq!(&once, &t);
        prop_assert_eq!(PromptTemplate::parse(&once.to_json()).unwrap(), once);
    }

    #[test]
    fn render_is_injective(a in "[a-z ]{0,10}", b in "[a-z ]{0,10}") {
        let t = PromptTemplate::parse(EXAMPLE).unwrap();
        let ra = t.render(&bind(&[("prompt", &a)])).unwrap();
        let rb = t.render(&bind(&[("prompt", &b)])).unwrap();
        prop_assert_eq!(ra == rb, a == b);
    }
}
