use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smartframe::backend::{scan_corpus, Corpus, CorpusError, FixtureStore, RecordingBackend};
use smartframe::cache::CacheStore;
use smartframe::{Backend, BackendError, BackendKind, BackendRequest, Config, Message, Role};

#[derive(Parser)]
#[command(name = "smartframe", version, about = "Manage the smartframe cache, corpus, fixtures and configuration")]
struct Cli {
    /// Directory holding cached code.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Directory of `*.example` files used for retrieval.
    #[arg(long, global = true)]
    corpus_dir: Option<PathBuf>,
    /// JSON file of recorded answers.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// live, rag or replay.
    #[arg(long, global = true)]
    backend: Option<String>,
    #[arg(long, global = true)]
    safe_mode: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    #[command(subcommand)]
    Cache(CacheCmd),
    #[command(subcommand)]
    Corpus(CorpusCmd),
    #[command(subcommand)]
    Config(ConfigCmd),
    #[command(subcommand)]
    Fixtures(FixturesCmd),
}

#[derive(Subcommand)]
enum CacheCmd {
    /// Remove every cache entry.
    Reset,
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Validate and index the examples in PATH, or in the corpus directory.
    Index { path: Option<PathBuf> },
}

#[derive(Subcommand)]
enum ConfigCmd {
    /// Print the effective configuration.
    Show,
}

#[derive(Subcommand)]
enum FixturesCmd {
    /// List recorded requests.
    List,
    /// Send the messages in FILE (a JSON array of {role, content}) to the
    /// live backend and store the answer.
    Record { file: PathBuf },
}

enum Failure {
    User(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::User(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Io(_) => Failure::Io(e.to_string()),
            BackendError::Transport(_) => Failure::Io(e.to_string()),
            _ => Failure::User(e.to_string()),
        }
    }
}

fn config(cli: &Cli) -> Result<Config, Failure> {
    let mut c = Config::from_env().map_err(|e| Failure::User(e.to_string()))?;
    if let Some(p) = &cli.cache_dir {
        c.cache_dir = p.clone();
    }
    if let Some(p) = &cli.corpus_dir {
        c.corpus_dir = p.clone();
    }
    if let Some(p) = &cli.fixtures {
        c.fixtures = p.clone();
    }
    if let Some(b) = &cli.backend {
        c.backend = b.parse().map_err(|e: smartframe::ConfigError| Failure::User(e.to_string()))?;
    }
    if cli.safe_mode {
        c.safe_mode = true;
    }
    Ok(c)
}

fn cache_reset(c: &Config) -> Result<(), Failure> {
    let removal = CacheStore::new(&c.cache_dir).clear();
    println!("{} removed", removal.removed);
    match removal.errors.first() {
        None => Ok(()),
        Some(_) => {
            let msgs: Vec<String> = removal.errors.iter().map(|e| e.to_string()).collect();
            Err(Failure::Io(msgs.join("\n")))
        }
    }
}

fn corpus_index(c: &Config, path: Option<&Path>) -> Result<(), Failure> {
    let dir = match path {
        Some(p) => p.to_path_buf(),
        None => {
            fs::create_dir_all(&c.corpus_dir).map_err(|e| Failure::Io(format!("{}: {e}", c.corpus_dir.display())))?;
            c.corpus_dir.clone()
        }
    };
    let (ok, bad) = scan_corpus(&dir).map_err(|e| Failure::Io(e.to_string()))?;
    let mut corpus = match Corpus::new(ok) {
        Ok(corpus) => corpus,
        Err(e @ CorpusError::DuplicateId(_)) => return Err(Failure::User(e.to_string())),
        Err(e) => return Err(Failure::Io(e.to_string())),
    };
    corpus.build_index();
    println!("indexed {}", corpus.examples().len());
    if bad.is_empty() {
        return Ok(());
    }
    for e in &bad {
        eprintln!("malformed {e}");
    }
    Err(Failure::User(format!("{} malformed file(s)", bad.len())))
}

fn config_show(c: &Config) {
    for (k, v) in c.display_pairs() {
        println!("{k} = {v}");
    }
}

fn first_line(text: &str) -> &str {
    text.lines().find(|l| !l.trim().is_empty()).unwrap_or("")
}

fn fixtures_list(c: &Config) -> Result<(), Failure> {
    let store = FixtureStore::load(&c.fixtures)?;
    for (digest, f) in store.fixtures() {
        let last = f.messages.iter().rev().find(|m| m.role == Role::User).map_or("", |m| m.content.as_str());
        println!("{}  {}", &digest[..12], first_line(last));
    }
    println!("{} fixture(s) in {}", store.len(), c.fixtures.display());
    Ok(())
}

fn fixtures_record(c: &Config, file: &Path) -> Result<(), Failure> {
    if c.backend == BackendKind::Replay {
        return Err(Failure::User("recording needs the live or rag backend".into()));
    }
    let text = fs::read_to_string(file).map_err(|e| Failure::Io(format!("{}: {e}", file.display())))?;
    let messages: Vec<Message> =
        serde_json::from_str(&text).map_err(|e| Failure::User(format!("{}: {e}", file.display())))?;
    if messages.is_empty() {
        return Err(Failure::User(format!("{}: no messages", file.display())));
    }
    let recorder = RecordingBackend::new(c.build_backend()?, FixtureStore::load(&c.fixtures)?);
    let request = BackendRequest::new(messages, c.params.clone());
    recorder.complete(&request)?;
    recorder.save()?;
    println!("recorded {}", &request.digest()[..12]);
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let c = config(cli)?;
    match &cli.command {
        Command::Cache(CacheCmd::Reset) => cache_reset(&c),
        Command::Corpus(CorpusCmd::Index { path }) => corpus_index(&c, path.as_deref()),
        Command::Config(ConfigCmd::Show) => {
            config_show(&c);
            Ok(())
        }
        Command::Fixtures(FixturesCmd::List) => fixtures_list(&c),
        Command::Fixtures(FixturesCmd::Record { file }) => fixtures_record(&c, file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::User(msg) | Failure::Io(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
