mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde_json::Value;
use smartframe::backend::{
    augment_prompt, parse_example, Corpus, CorpusError, FixtureStore, FnBackend, LiveBackend, RagBackend, RecordingBackend,
    ReplayBackend, RAG_MARKER,
};
use smartframe::{Backend, BackendError, BackendRequest, Message, ModelParams};

fn request(text: &str) -> BackendRequest {
    BackendRequest::new(vec![Message::system("sys"), Message::user(text)], ModelParams::default())
}

/// Serves one HTTP exchange and hands back the request head and body.
fn serve_once(status: &'static str, body: String) -> (String, thread::JoinHandle<(String, String)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut head = String::new();
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" || line.is_empty() {
                break;
            }
            head.push_str(&line);
        }
        let len: usize = head
            .lines()
            .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse().unwrap()))
            .unwrap_or(0);
        let mut buf = vec![0; len];
        reader.read_exact(&mut buf).unwrap();
        let mut stream = stream;
        write!(stream, "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}", body.len())
            .unwrap();
        (head, String::from_utf8(buf).unwrap())
    });
    (url, handle)
}

#[test]
fn live_backend_posts_chat_completions() {
    let reply = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": "TYPE: int"}}]}).to_string();
    let (url, server) = serve_once("200 OK", reply);
    let live = LiveBackend::new(url, Some("sk-test".into()), Duration::from_secs(5)).unwrap();
    assert_eq!(live.complete(&request("hello")).unwrap(), "TYPE: int");
    let (head, body) = server.join().unwrap();
    assert!(head.starts_with("POST /v1/chat/completions "));
    assert!(head.to_ascii_lowercase().contains("authorization: bearer sk-test"));
    let body: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(body["max_tokens"], 8192);
    assert_eq!(body["model"], "gpt-4o-mini");
    assert_eq!(body["messages"][1], serde_json::json!({"role": "user", "content": "hello"}));
}

#[test]
fn live_backend_errors() {
    let (url, server) = serve_once("500 Internal Server Error", "{\"error\": \"boom\"}".into());
    let live = LiveBackend::new(url, None, Duration::from_secs(5)).unwrap();
    let err = live.complete(&request("x")).unwrap_err();
    assert!(matches!(err, BackendError::Provider { status: 500, .. }), "{err:?}");
    server.join().unwrap();

    let (url, server) = serve_once("200 OK", "{\"choices\": []}".into());
    let live = LiveBackend::new(url, None, Duration::from_secs(5)).unwrap();
    assert!(matches!(live.complete(&request("x")), Err(BackendError::Response(_))));
    server.join().unwrap();

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let live = LiveBackend::new(format!("http://127.0.0.1:{port}"), None, Duration::from_secs(2)).unwrap();
    assert!(matches!(live.complete(&request("x")), Err(BackendError::Transport(_))));
}

fn toy_corpus() -> Corpus {
    let files = [
        ("plot.example", "---\nid: plot-legend\ntask: Plot roads on a map with a legend\ntags: folium, legend\n---\nm = folium.Map()\n"),
        ("buffer.example", "---\nid: buffer\ntask: Buffer points by a distance\ntags: geopandas\n---\ngdf.buffer(10)\n"),
        ("join.example", "---\nid: join\ntask: Spatial join of points and polygons\ntags: geopandas\n---\ngpd.sjoin(a, b)\n"),
    ];
    let examples = files.iter().map(|(n, t)| parse_example(n, t).unwrap()).collect();
    let mut c = Corpus::new(examples).unwrap();
    c.build_index();
    c
}

#[test]
fn toy_corpus_scores_match_hand_computation() {
    let c = toy_corpus();
    // query terms plot, roads, legend at 1/3 each; the plot example has
    // plot, roads, map, folium at 1/6 and legend at 2/6:
    // dot = 4/18, |q| = sqrt(3)/3, |d| = sqrt(8)/6, cosine = 4/sqrt(24)
    let scores = c.scores("plot roads with legend").unwrap();
    assert!((scores[0] - 4.0 / 24f64.sqrt()).abs() < 1e-12);
    assert_eq!(&scores[1..], &[0.0, 0.0]);
    let ids: Vec<&str> = c.retrieve("plot roads with legend", 3).unwrap().iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, vec!["plot-legend", "buffer", "join"]);
    // "points" hits both geopandas examples equally: the tie goes to the smaller id
    let ids: Vec<&str> = c.retrieve("points", 2).unwrap().iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, vec!["buffer", "join"]);
}

#[test]
fn retrieval_edges() {
    let c = toy_corpus();
    assert!(c.retrieve("anything", 0).unwrap().is_empty());
    assert_eq!(c.retrieve("anything", 10).unwrap().len(), 3);
    let unindexed = Corpus::new(c.examples().to_vec()).unwrap();
    assert_eq!(unindexed.retrieve("x", 1).unwrap_err(), CorpusError::NotIndexed);
    let inner: Arc<dyn Backend> = Arc::new(FnBackend::scripted(["x"]));
    assert!(RagBackend::new(inner, unindexed, 2).is_err());
    let dup = vec![c.examples()[0].clone(), c.examples()[0].clone()];
    assert!(matches!(Corpus::new(dup), Err(CorpusError::DuplicateId(_))));
}

#[test]
fn identical_example_ranks_first() {
    let mut examples = toy_corpus().examples().to_vec();
    let query = "Spatial join of points and polygons and buffer them";
    examples.push(parse_example("q.example", &format!("---\nid: zzz\ntask: {query}\n---\nx = 1\n")).unwrap());
    let mut c = Corpus::new(examples).unwrap();
    c.build_index();
    assert_eq!(c.retrieve(query, 1).unwrap()[0].id, "zzz");
}

#[test]
fn augmentation_is_idempotent() {
    let c = toy_corpus();
    let msgs = request("plot roads").messages;
    assert_eq!(augment_prompt(&msgs, &[]), msgs);
    let ex = c.retrieve("plot roads", 2).unwrap();
    let once = augment_prompt(&msgs, &ex);
    assert_eq!(once.len(), 3);
    assert!(once[1].content.starts_with(RAG_MARKER));
    assert!(once[1].content.contains("plot-legend") && once[1].content.contains("buffer"));
    assert_eq!(once[2], msgs[1]);
    assert_eq!(augment_prompt(&once, &ex), once);
}

#[test]
fn rag_backend_forwards_augmented_prompt() {
    let seen = Arc::new(std::sync::Mutex::new(Vec::new()));
    let s = seen.clone();
    let inner: Arc<dyn Backend> = Arc::new(FnBackend::new(move |req, _| {
        s.lock().unwrap().push(req.messages.clone());
        Ok("ok".into())
    }));
    let rag = RagBackend::new(inner, toy_corpus(), 1).unwrap();
    assert_eq!(rag.complete(&request("plot the roads and a legend")).unwrap(), "ok");
    let sent = seen.lock().unwrap()[0].clone();
    assert_eq!(sent.len(), 3);
    assert!(sent[1].content.contains("# Example plot-legend"));
}

#[test]
fn replay_hit_and_miss() {
    let mut store = FixtureStore::in_memory();
    store.record(&request("one").messages, "TYPE: matplotlib.Figure");
    store.record(&request("two").messages, "answer two");
    let replay = ReplayBackend::new(store);
    assert_eq!(replay.complete(&request("one")).unwrap(), "TYPE: matplotlib.Figure");
    // parameters do not take part in matching
    let mut other = request("one");
    other.params.temperature = 0.9;
    assert!(replay.complete(&other).is_ok());
    let err = replay.complete(&request("three")).unwrap_err();
    let BackendError::FixtureMissing { digest, nearest } = &err else { panic!("{err:?}") };
    assert_eq!(digest, &request("three").digest());
    assert_eq!(nearest.len(), 2);
    assert!(err.to_string().contains(digest.as_str()));
}

#[test]
fn recording_round_trip_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fx.json");
    let inner: Arc<dyn Backend> = Arc::new(FnBackend::new(|req, i| Ok(format!("{i}:{}", req.last_user().unwrap()))));
    let rec = RecordingBackend::new(inner, FixtureStore::load(&path).unwrap());
    let a = rec.complete(&request("a")).unwrap();
    let b = rec.complete(&request("b")).unwrap();
    rec.complete(&request("a")).unwrap();
    rec.save().unwrap();

    let store = FixtureStore::load(&path).unwrap();
    assert_eq!(store.len(), 2);
    let replay = ReplayBackend::new(store);
    assert_eq!(replay.complete(&request("b")).unwrap(), b);
    assert_ne!(replay.complete(&request("a")).unwrap(), a, "the later answer wins");
}

#[test]
fn bundled_fixtures_load() {
    let store = FixtureStore::load(&common::fixtures_path()).unwrap();
    assert!(store.len() >= 20);
    for (digest, f) in store.fixtures() {
        assert_eq!(digest, &smartframe::backend::request_digest(&f.messages));
    }
}

#[test]
fn starter_corpus_is_well_formed() {
    let dir = common::crate_dir().join("corpus");
    let (ok, bad) = smartframe::backend::scan_corpus(&dir).unwrap();
    assert!(bad.is_empty(), "{bad:?}");
    assert_eq!(ok.len(), 8);
    let corpus = Corpus::load_dir(&dir).unwrap();
    assert_eq!(corpus.retrieve("Plot the roads with a scrollable legend", 1).unwrap()[0].id, "folium-legend");
    assert_eq!(corpus.retrieve("Flag facilities that are inside the flood areas", 1).unwrap()[0].id, "points-in-areas");
}
