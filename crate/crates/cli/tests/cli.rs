use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};
use std::thread;

use smartframe::backend::FixtureStore;
use smartframe::cache::{CacheEntry, CacheKey, CacheStore};
use smartframe::Message;

const VARS: &[&str] = &[
    "BACKEND", "CACHE_DIR", "CORPUS_DIR", "FIXTURES", "SAFE_MODE", "WORKDIR", "TEMPLATES_DIR", "VALIDATION", "MODEL",
    "TEMPERATURE", "MAX_TOKENS", "BASE_URL", "API_KEY", "TIMEOUT", "RAG_K", "ECHO",
];

fn smartframe(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_smartframe"));
    cmd.current_dir(dir);
    for v in VARS {
        cmd.env_remove(format!("SMARTFRAME_{v}"));
    }
    for (k, v) in env {
        cmd.env(format!("SMARTFRAME_{k}"), v);
    }
    cmd.args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn key(i: u8) -> CacheKey {
    CacheKey::parse(&format!("{:064x}", i)).unwrap()
}

#[test]
fn cache_reset_on_empty_cache() {
    let dir = tempfile::tempdir().unwrap();
    let o = smartframe(dir.path(), &["cache", "reset", "--cache-dir", "cache"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0 removed");
}

#[test]
fn cache_reset_counts_entries() {
    let dir = tempfile::tempdir().unwrap();
    let store = CacheStore::new(dir.path().join("cache"));
    for i in 1..=3 {
        store.set(&key(i), &CacheEntry::new("inst", "int", "def execute(df_1):\n    return 1\n")).unwrap();
    }
    std::fs::write(dir.path().join("cache/notes.txt"), "kept").unwrap();
    let o = smartframe(dir.path(), &["cache", "reset"], &[("CACHE_DIR", "cache")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "3 removed");
    assert!(store.keys().unwrap().is_empty());
    assert!(dir.path().join("cache/notes.txt").exists());
}

#[test]
fn cache_reset_reports_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("not-a-dir"), "x").unwrap();
    let o = smartframe(dir.path(), &["cache", "reset", "--cache-dir", "not-a-dir"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not-a-dir"));
}

fn example(id: &str) -> String {
    format!("---\nid: {id}\ntask: Task number {id}\ntags: a, b\n---\nx = 1\n")
}

#[test]
fn corpus_index_counts_valid_files() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    for id in ["one", "two", "three"] {
        std::fs::write(corpus.join(format!("{id}.example")), example(id)).unwrap();
    }
    let o = smartframe(dir.path(), &["corpus", "index", "corpus"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "indexed 3");
}

#[test]
fn corpus_index_on_empty_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = smartframe(dir.path(), &["corpus", "index", "--corpus-dir", "fresh"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "indexed 0");
    assert!(dir.path().join("fresh").is_dir());
}

#[test]
fn corpus_index_lists_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("good.example"), example("good")).unwrap();
    std::fs::write(dir.path().join("broken.example"), "id: broken\nno header\n").unwrap();
    let o = smartframe(dir.path(), &["corpus", "index", "."], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "indexed 1");
    assert!(stderr(&o).contains("broken.example"));
    assert!(!stderr(&o).contains("good.example"));
}

#[test]
fn corpus_index_rejects_duplicate_ids() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.example"), example("same")).unwrap();
    std::fs::write(dir.path().join("b.example"), example("same")).unwrap();
    let o = smartframe(dir.path(), &["corpus", "index", "."], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("same"));
}

#[test]
fn corpus_index_missing_path_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = smartframe(dir.path(), &["corpus", "index", "nowhere"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bundled_corpus_indexes_cleanly() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus");
    let o = smartframe(Path::new(env!("CARGO_MANIFEST_DIR")), &["corpus", "index", corpus.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "indexed 8");
}

fn pairs(o: &Output) -> Vec<(String, String)> {
    stdout(o)
        .lines()
        .map(|l| {
            let (k, v) = l.split_once(" = ").unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn get(pairs: &[(String, String)], k: &str) -> String {
    pairs.iter().find(|(n, _)| n == k).map(|(_, v)| v.clone()).unwrap()
}

#[test]
fn config_show_defaults_to_replay() {
    let dir = tempfile::tempdir().unwrap();
    let o = smartframe(dir.path(), &["config", "show"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let p = pairs(&o);
    assert_eq!(get(&p, "backend"), "replay");
    assert_eq!(get(&p, "safe_mode"), "false");
    assert_eq!(get(&p, "api_key"), "(unset)");
}

#[test]
fn config_show_reflects_env_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let env = [("CACHE_DIR", "/srv/sf-cache"), ("BACKEND", "rag"), ("API_KEY", "sk-very-secret")];
    let p = pairs(&smartframe(dir.path(), &["config", "show"], &env));
    assert_eq!(get(&p, "cache_dir"), "/srv/sf-cache");
    assert_eq!(get(&p, "backend"), "rag");
    assert_eq!(get(&p, "api_key"), "****");

    let o = smartframe(dir.path(), &["--backend", "live", "--safe-mode", "config", "show", "--cache-dir", "here"], &env);
    assert!(!stdout(&o).contains("sk-very-secret"));
    let p = pairs(&o);
    assert_eq!(get(&p, "cache_dir"), "here");
    assert_eq!(get(&p, "backend"), "live");
    assert_eq!(get(&p, "safe_mode"), "true");
}

#[test]
fn bad_settings_are_user_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(smartframe(dir.path(), &["config", "show", "--backend", "magic"], &[]).status.code(), Some(1));
    assert_eq!(smartframe(dir.path(), &["config", "show"], &[("SAFE_MODE", "perhaps")]).status.code(), Some(1));
    assert_eq!(smartframe(dir.path(), &["cache", "wipe"], &[]).status.code(), Some(1));
    assert_eq!(smartframe(dir.path(), &["--help"], &[]).status.code(), Some(0));
}

#[test]
fn fixtures_list_shows_bundled_recordings() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/tutorial.json");
    let store = FixtureStore::load(&fixtures).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let o = smartframe(dir.path(), &["fixtures", "list", "--fixtures", fixtures.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), store.len() + 1);
    assert!(out.lines().last().unwrap().starts_with(&format!("{} fixture(s)", store.len())));
}

/// Answers one chat-completions request.
fn serve_once(answer: &'static str) -> (String, thread::JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut len = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" || line.is_empty() {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
        }
        let mut buf = vec![0; len];
        reader.read_exact(&mut buf).unwrap();
        let body = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": answer}}]}).to_string();
        let mut stream = stream;
        write!(stream, "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}", body.len())
            .unwrap();
        String::from_utf8(buf).unwrap()
    });
    (url, handle)
}

#[test]
fn fixtures_record_stores_the_answer() {
    let dir = tempfile::tempdir().unwrap();
    let messages = vec![Message::system("sys"), Message::user("Request: count rows")];
    std::fs::write(dir.path().join("req.json"), serde_json::to_string(&messages).unwrap()).unwrap();

    let refused = smartframe(dir.path(), &["fixtures", "record", "req.json", "--fixtures", "fx/rec.json"], &[]);
    assert_eq!(refused.status.code(), Some(1));
    assert!(!dir.path().join("fx").exists());

    let (url, server) = serve_once("TYPE: int");
    let o = smartframe(
        dir.path(),
        &["fixtures", "record", "req.json", "--backend", "live", "--fixtures", "fx/rec.json"],
        &[("BASE_URL", url.as_str())],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(server.join().unwrap().contains("count rows"));
    let store = FixtureStore::load(&dir.path().join("fx/rec.json")).unwrap();
    assert_eq!(store.lookup(&messages).unwrap(), "TYPE: int");
}
