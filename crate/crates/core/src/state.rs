//! Smart frames: a geospatial frame plus its conversation state.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use geoframe::Frame;
use minipy::Output;
use sha2::{Digest, Sha256};

use crate::backend::Backend;
use crate::cache::{build_state_key, instance_digest, CacheKey, CacheStore, Removal};
use crate::codegen::{Attempt, CacheSlot, GenerationContext, Generator, PromptKind};
use crate::config::Config;
use crate::inject::{inject_into, instructions, is_valid_name, InjectError};
use crate::metadata::{merge_linked_metadata, Descriptor, FrameMetadata, PublicDescriptor};
use crate::sandbox::{gate_auto_execute, make_validation_frames, ExecutionOutput, RunKind, Sandbox, SandboxStats};
use crate::template::TemplateSet;
use crate::Error;

pub const DEFAULT_TOOLSET: [&str; 5] = ["contextily", "pandas", "matplotlib", "folium", "geopandas"];

pub const DEFAULT_RETURN_TYPES: [&str; 10] = [
    "int",
    "float",
    "str",
    "bool",
    "list",
    "dict",
    "geopandas.GeoDataFrame",
    "pandas.DataFrame",
    "folium.Map",
    "matplotlib.Figure",
];

/// Identifier for code run only for its side effects.
pub const NONE_TYPE: &str = "None";

pub fn default_toolset() -> BTreeSet<String> {
    DEFAULT_TOOLSET.iter().map(|s| s.to_string()).collect()
}

pub fn default_return_types() -> BTreeSet<String> {
    DEFAULT_RETURN_TYPES.iter().map(|s| s.to_string()).collect()
}

/// Expands the short names `Figure`, `Map`, `GeoDataFrame` and `DataFrame`.
pub fn normalize_return_type(name: &str) -> String {
    match name {
        "Figure" => "matplotlib.Figure",
        "Map" => "folium.Map",
        "GeoDataFrame" => "geopandas.GeoDataFrame",
        "DataFrame" => "pandas.DataFrame",
        "none" | "NoneType" => NONE_TYPE,
        other => other,
    }
    .to_string()
}

/// Shared services for smart frames.
pub struct Engine {
    config: Config,
    backend: Arc<dyn Backend>,
    cache: CacheStore,
    descriptor: Arc<dyn Descriptor>,
    templates: TemplateSet,
    stats: SandboxStats,
    console: Mutex<Vec<String>>,
}

pub struct EngineBuilder {
    config: Config,
    backend: Option<Arc<dyn Backend>>,
    descriptor: Option<Arc<dyn Descriptor>>,
    templates: Option<TemplateSet>,
}

impl EngineBuilder {
    pub fn backend(mut self, backend: Arc<dyn Backend>) -> Self {
        self.backend = Some(backend);
        self
    }

    pub fn descriptor(mut self, descriptor: Arc<dyn Descriptor>) -> Self {
        self.descriptor = Some(descriptor);
        self
    }

    pub fn templates(mut self, templates: TemplateSet) -> Self {
        self.templates = Some(templates);
        self
    }

    pub fn build(self) -> Result<Arc<Engine>, Error> {
        let backend = match self.backend {
            Some(b) => b,
            None => self.config.build_backend()?,
        };
        let templates = match (self.templates, &self.config.templates_dir) {
            (Some(t), _) => t,
            (None, Some(dir)) => TemplateSet::with_overrides(dir)?,
            (None, None) => TemplateSet::bundled(),
        };
        Ok(Arc::new(Engine {
            cache: CacheStore::new(&self.config.cache_dir),
            descriptor: self.descriptor.unwrap_or_else(|| Arc::new(PublicDescriptor::default())),
            backend,
            templates,
            stats: SandboxStats::default(),
            console: Mutex::new(Vec::new()),
            config: self.config,
        }))
    }
}

impl Engine {
    pub fn builder(config: Config) -> EngineBuilder {
        EngineBuilder { config, backend: None, descriptor: None, templates: None }
    }

    /// Engine for `config` with the configured backend.
    pub fn new(config: Config) -> Result<Arc<Engine>, Error> {
        Self::builder(config).build()
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn backend(&self) -> &Arc<dyn Backend> {
        &self.backend
    }

    pub fn cache(&self) -> &CacheStore {
        &self.cache
    }

    pub fn descriptor(&self) -> &dyn Descriptor {
        &*self.descriptor
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn stats(&self) -> &SandboxStats {
        &self.stats
    }

    /// Shows `text` to the user and keeps a copy.
    pub fn print(&self, text: &str) {
        if self.config.echo {
            println!("{text}");
        }
        self.console.lock().unwrap().push(text.to_string());
    }

    /// Everything printed so far.
    pub fn console(&self) -> Vec<String> {
        self.console.lock().unwrap().clone()
    }

    pub fn take_console(&self) -> Vec<String> {
        std::mem::take(&mut *self.console.lock().unwrap())
    }

    /// Removes every cached generation.
    pub fn reset_cache_global(&self) -> Removal {
        self.cache.clear()
    }
}

/// One (query, code) step of a conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub query: String,
    pub code: String,
    pub return_type: String,
    /// Rounds of the retry loop; empty when the code came from the cache.
    pub attempts: Vec<Attempt>,
    pub cache_key: CacheKey,
}

/// A frame passed alongside the primary one.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkedFrame {
    pub frame: Frame,
    pub metadata: FrameMetadata,
}

/// Optional arguments of chat and improve. Omitted values reset to the
/// defaults for chat and carry over for improve.
#[derive(Default, Clone)]
pub struct ChatOptions<'a> {
    pub toolset: Option<BTreeSet<String>>,
    pub return_types: Option<BTreeSet<String>>,
    pub linked: Option<Vec<&'a SmartFrame>>,
}

impl<'a> ChatOptions<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn toolset<I: IntoIterator<Item = S>, S: Into<String>>(mut self, tools: I) -> Self {
        self.toolset = Some(tools.into_iter().map(Into::into).collect());
        self
    }

    pub fn return_type(self, name: &str) -> Self {
        self.return_types([name])
    }

    pub fn return_types<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, names: I) -> Self {
        self.return_types = Some(names.into_iter().map(|n| normalize_return_type(n.as_ref())).collect());
        self
    }

    pub fn link(mut self, frame: &'a SmartFrame) -> Self {
        self.linked.get_or_insert_with(Vec::new).push(frame);
        self
    }

    pub fn linked(mut self, frames: &[&'a SmartFrame]) -> Self {
        self.linked = Some(frames.to_vec());
        self
    }
}

/// Result of running the last generated code. A geospatial frame result
/// comes back as a new smart frame in its initial state.
#[derive(Clone)]
pub enum Outcome {
    Value(ExecutionOutput),
    Frame { frame: Box<SmartFrame>, output: ExecutionOutput },
}

impl Outcome {
    pub fn output(&self) -> &ExecutionOutput {
        match self {
            Outcome::Value(o) | Outcome::Frame { output: o, .. } => o,
        }
    }

    pub fn value(&self) -> &Output {
        &self.output().value
    }

    pub fn frame(&self) -> Option<&SmartFrame> {
        match self {
            Outcome::Frame { frame, .. } => Some(frame),
            Outcome::Value(_) => None,
        }
    }

    pub fn into_frame(self) -> Option<SmartFrame> {
        match self {
            Outcome::Frame { frame, .. } => Some(*frame),
            Outcome::Value(_) => None,
        }
    }
}

/// Where `inject` wrote and what it printed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectReport {
    pub path: PathBuf,
    pub instructions: String,
}

#[derive(Clone)]
pub struct SmartFrame {
    engine: Arc<Engine>,
    frame: Frame,
    metadata: FrameMetadata,
    linked: Vec<LinkedFrame>,
    history: Vec<HistoryEntry>,
    toolset: BTreeSet<String>,
    return_types: BTreeSet<String>,
    last_output: Option<ExecutionOutput>,
}

impl std::fmt::Debug for SmartFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmartFrame")
            .field("rows", &self.frame.n_rows())
            .field("description", &self.metadata.description)
            .field("history", &self.history.len())
            .field("toolset", &self.toolset)
            .field("return_types", &self.return_types)
            .finish()
    }
}

impl SmartFrame {
    /// Initial state for `frame`, which must have a geometry column.
    pub fn new(engine: &Arc<Engine>, frame: Frame, description: impl Into<String>) -> Result<Self, Error> {
        if !frame.is_geo() {
            return Err(Error::Construction("the frame has no active geometry column".into()));
        }
        Ok(SmartFrame {
            engine: engine.clone(),
            metadata: FrameMetadata::new(&frame, description),
            frame,
            linked: Vec::new(),
            history: Vec::new(),
            toolset: default_toolset(),
            return_types: default_return_types(),
            last_output: None,
        })
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn metadata(&self) -> &FrameMetadata {
        &self.metadata
    }

    pub fn description(&self) -> &str {
        &self.metadata.description
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn toolset(&self) -> &BTreeSet<String> {
        &self.toolset
    }

    pub fn return_types(&self) -> &BTreeSet<String> {
        &self.return_types
    }

    pub fn linked(&self) -> &[LinkedFrame] {
        &self.linked
    }

    pub fn last_output(&self) -> Option<&ExecutionOutput> {
        self.last_output.as_ref()
    }

    pub fn last_code(&self) -> Option<&str> {
        self.history.last().map(|h| h.code.as_str())
    }

    /// Whether this state has the initial-state shape: no history, default
    /// tools and return types, no linked frames.
    pub fn is_initial(&self) -> bool {
        self.history.is_empty()
            && self.toolset == default_toolset()
            && self.return_types == default_return_types()
            && self.linked.is_empty()
            && self.metadata.linked.is_empty()
    }

    /// Digest of metadata, history, tools and return types.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.metadata.canonical());
        for e in &self.history {
            for part in [&e.query, &e.code, &e.return_type] {
                h.update((part.len() as u64).to_le_bytes());
                h.update(part.as_bytes());
            }
        }
        for set in [&self.toolset, &self.return_types] {
            h.update((set.len() as u64).to_le_bytes());
            for s in set {
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    fn reset(&mut self) {
        self.history.clear();
        self.toolset = default_toolset();
        self.return_types = default_return_types();
        self.linked.clear();
        self.metadata.linked.clear();
        self.last_output = None;
    }

    /// Starts a new conversation.
    pub fn chat(&mut self, query: &str, options: ChatOptions<'_>) -> Result<Reply<'_>, Error> {
        if query.trim().is_empty() {
            return Err(Error::Usage("the query is empty".into()));
        }
        self.reset();
        let toolset = options.toolset.unwrap_or_else(default_toolset);
        let return_types = options.return_types.unwrap_or_else(default_return_types);
        let linked = options.linked.map(collect_linked).unwrap_or_default();
        self.step(PromptKind::Chat, query, toolset, return_types, linked)
    }

    /// Refines the current conversation.
    pub fn improve(&mut self, query: &str, options: ChatOptions<'_>) -> Result<Reply<'_>, Error> {
        if self.history.is_empty() {
            return Err(Error::Usage("improve needs an earlier chat".into()));
        }
        if query.trim().is_empty() {
            return Err(Error::Usage("the query is empty".into()));
        }
        let toolset = options.toolset.unwrap_or_else(|| self.toolset.clone());
        let return_types = options.return_types.unwrap_or_else(|| self.return_types.clone());
        let linked = options.linked.map(collect_linked).unwrap_or_else(|| self.linked.clone());
        self.step(PromptKind::Improve, query, toolset, return_types, linked)
    }

    fn step(
        &mut self,
        kind: PromptKind,
        query: &str,
        toolset: BTreeSet<String>,
        return_types: BTreeSet<String>,
        linked: Vec<LinkedFrame>,
    ) -> Result<Reply<'_>, Error> {
        let engine = self.engine.clone();
        let linked_meta: Vec<FrameMetadata> = linked.iter().map(|l| l.metadata.clone()).collect();
        let metadata = merge_linked_metadata(&self.metadata, &linked_meta);
        let history: Vec<(String, String)> = self.history.iter().map(|h| (h.query.clone(), h.code.clone())).collect();
        let key = build_state_key(
            &metadata,
            history.iter().map(|(q, c)| (q.as_str(), c.as_str())),
            query,
            &toolset,
            &return_types,
        );
        let ctx = GenerationContext {
            kind,
            utd: engine.descriptor().describe(&self.frame, &metadata),
            history,
            toolset: toolset.clone(),
            return_types: return_types.clone(),
            query: query.to_string(),
            resolved_type: None,
            linked_count: linked.len(),
        };
        let mut frames: Vec<&Frame> = vec![&self.frame];
        frames.extend(linked.iter().map(|l| &l.frame));
        let validation = make_validation_frames(&frames, engine.descriptor(), engine.config().validation)?;
        let sandbox = Sandbox::new(&engine.config().workdir, engine.stats());
        let generator = Generator {
            backend: &**engine.backend(),
            templates: engine.templates(),
            params: &engine.config().params,
            sandbox: &sandbox,
        };
        let slot = CacheSlot { store: engine.cache(), key: key.clone(), instance: instance_digest(&metadata) };
        let generation = generator.generate(&ctx, Some(&slot), &validation)?;

        self.history.push(HistoryEntry {
            query: query.to_string(),
            code: generation.code.source,
            return_type: generation.return_type,
            attempts: generation.attempts,
            cache_key: key,
        });
        self.toolset = toolset;
        self.return_types = return_types;
        self.linked = linked;
        self.metadata = metadata;

        let outcome = if gate_auto_execute(engine.config().safe_mode) {
            let outcome = self.execute()?;
            self.last_output = Some(outcome.output().clone());
            Some(outcome)
        } else {
            engine.print(self.last_code().unwrap_or_default());
            None
        };
        Ok(Reply { frame: self, outcome })
    }

    /// Runs the last generated code on the real frames. The state is not
    /// modified.
    pub fn execute(&self) -> Result<Outcome, Error> {
        let entry = self.history.last().ok_or_else(|| Error::Usage("nothing to execute; call chat first".into()))?;
        let mut frames = vec![self.frame.clone()];
        frames.extend(self.linked.iter().map(|l| l.frame.clone()));
        let sandbox = Sandbox::new(&self.engine.config().workdir, self.engine.stats());
        let output = sandbox.run(&entry.code, &frames, &entry.return_type, &self.toolset, RunKind::Real)?;
        match &output.value {
            Output::Frame(f) if f.is_geo() => {
                let frame = Box::new(SmartFrame::new(&self.engine, f.clone(), "")?);
                Ok(Outcome::Frame { frame, output })
            }
            _ => Ok(Outcome::Value(output)),
        }
    }

    /// Every (query, code) pair, oldest first. Also printed.
    pub fn inspect(&self) -> String {
        let text = self
            .history
            .iter()
            .enumerate()
            .map(|(i, h)| format!("Prompt {n}: {}\nCode {n}:\n\n{}", h.query, h.code.trim_end(), n = i + 1))
            .collect::<Vec<_>>()
            .join("\n\n");
        self.engine.print(&text);
        text
    }

    /// Writes the last code to the `ai` module as `name`.
    pub fn inject(&self, name: &str) -> Result<InjectReport, Error> {
        self.inject_with(name, false)
    }

    pub fn inject_with(&self, name: &str, overwrite: bool) -> Result<InjectReport, Error> {
        let code = self.last_code().ok_or_else(|| Error::Usage("nothing to inject; call chat first".into()))?;
        if !is_valid_name(name) {
            return Err(InjectError::InvalidName(name.to_string()).into());
        }
        let path = inject_into(&self.engine.config().workdir, code, name, overwrite)?;
        let text = instructions(name);
        self.engine.print(&text);
        Ok(InjectReport { path, instructions: text })
    }

    /// Drops cached generations of this frame: those of the current
    /// conversation when `chat_wise`, otherwise every entry recorded for
    /// this frame and description.
    pub fn reset_cache(&self, chat_wise: bool) -> Removal {
        let cache = self.engine.cache();
        if chat_wise {
            cache.remove_keys(self.history.iter().map(|h| &h.cache_key))
        } else {
            cache.remove_instance(&instance_digest(&self.metadata))
        }
    }
}

fn collect_linked(frames: Vec<&SmartFrame>) -> Vec<LinkedFrame> {
    frames
        .into_iter()
        .map(|s| {
            let mut metadata = s.metadata.clone();
            metadata.linked.clear();
            LinkedFrame { frame: s.frame.clone(), metadata }
        })
        .collect()
}

/// Handle returned by chat and improve. Further calls go to the same
/// conversation.
pub struct Reply<'a> {
    frame: &'a mut SmartFrame,
    outcome: Option<Outcome>,
}

impl<'a> Reply<'a> {
    /// `None` when nothing was executed (safe mode).
    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn into_outcome(self) -> Option<Outcome> {
        self.outcome
    }

    pub fn value(&self) -> Option<&Output> {
        self.outcome.as_ref().map(Outcome::value)
    }

    /// The new smart frame when the result was a geospatial frame.
    pub fn into_frame(self) -> Option<SmartFrame> {
        self.outcome.and_then(Outcome::into_frame)
    }

    pub fn conversation(&self) -> &SmartFrame {
        self.frame
    }

    pub fn improve(self, query: &str, options: ChatOptions<'_>) -> Result<Reply<'a>, Error> {
        let frame = self.frame;
        frame.improve(query, options)
    }

    pub fn inspect(&self) -> String {
        self.frame.inspect()
    }

    pub fn inject(&self, name: &str) -> Result<InjectReport, Error> {
        self.frame.inject(name)
    }
}
