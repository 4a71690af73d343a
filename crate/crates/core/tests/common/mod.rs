#![allow(dead_code)]

pub mod author;
pub mod oracle;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use smartframe::backend::{FixtureStore, FnBackend, InstrumentedBackend, RecordingBackend, ReplayBackend};
use smartframe::geoframe::Frame;
use smartframe::minipy::Output;
use smartframe::{Backend, ChatOptions, Config, Descriptor, Engine, Error, InjectReport, PublicDescriptor, RedactingDescriptor, SmartFrame};

pub const FLOODED_DESCRIPTION: &str = "Flooded areas of the city after the spring storm.";
pub const FACILITIES_DESCRIPTION: &str = "Public facilities of the city such as schools, hospitals and fire stations.";
pub const HIGHWAYS_DESCRIPTION: &str = "Main roads and highways of the city.";
pub const STIB_DESCRIPTION: &str = "GeoDataFrame for the network of public transport operator in Brussels.";

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixtures_path() -> PathBuf {
    crate_dir().join("fixtures/tutorial.json")
}

pub fn load(name: &str) -> Frame {
    let path = crate_dir().join("data").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    Frame::from_geojson_str(&text).unwrap()
}

pub fn config(dir: &Path) -> Config {
    Config {
        cache_dir: dir.join("cache"),
        corpus_dir: dir.join("corpus"),
        fixtures: fixtures_path(),
        workdir: dir.join("work"),
        echo: false,
        ..Config::default()
    }
}

pub fn public2() -> Arc<dyn Descriptor> {
    Arc::new(PublicDescriptor::new(2))
}

pub fn redacting() -> Arc<dyn Descriptor> {
    Arc::new(RedactingDescriptor::new(PublicDescriptor::new(2), &[("contact", "col_1")]))
}

pub fn author_backend() -> Arc<dyn Backend> {
    Arc::new(FnBackend::new(|req, _| author::answer(req)))
}

pub fn replay_backend() -> Arc<InstrumentedBackend> {
    let store = FixtureStore::load(&fixtures_path()).unwrap();
    Arc::new(InstrumentedBackend::new(Arc::new(ReplayBackend::new(store))))
}

pub fn engine(dir: &Path, backend: Arc<dyn Backend>, descriptor: Arc<dyn Descriptor>) -> Arc<Engine> {
    std::fs::create_dir_all(dir.join("work")).unwrap();
    Engine::builder(config(dir)).backend(backend).descriptor(descriptor).build().unwrap()
}

/// Replay engine with every backend call recorded.
pub fn replay_engine(dir: &Path, descriptor: Arc<dyn Descriptor>) -> (Arc<Engine>, Arc<InstrumentedBackend>) {
    let backend = replay_backend();
    (engine(dir, backend.clone(), descriptor), backend)
}

pub struct Tutorial {
    pub flooded: SmartFrame,
    pub facilities: SmartFrame,
    pub highways: SmartFrame,
    pub flooded_facilities: SmartFrame,
    pub bounds: Output,
    pub amenities: Output,
    pub flooded_map: Output,
    pub roads_map: Output,
    pub facilities_figure: Output,
    pub export_written: Vec<String>,
    pub joint_map: Output,
    pub saved_map: Output,
    pub inspect: String,
    pub inject: InjectReport,
}

fn value(reply: smartframe::Reply<'_>) -> Output {
    reply.value().expect("executed").clone()
}

/// The walkthrough on the flood data set.
pub fn run_tutorial(engine: &Arc<Engine>) -> Result<Tutorial, Error> {
    let mut flooded = SmartFrame::new(engine, load("flooded_areas.geojson"), FLOODED_DESCRIPTION)?;
    let mut facilities = SmartFrame::new(engine, load("facilities.geojson"), FACILITIES_DESCRIPTION)?;
    let mut highways = SmartFrame::new(engine, load("highways.geojson"), HIGHWAYS_DESCRIPTION)?;

    let bounds = value(flooded.chat("What are the the bounds of the flooded areas.", ChatOptions::new())?);
    let amenities = value(facilities.chat("Find unique amenities.", ChatOptions::new())?);
    let flooded_map = value(flooded.chat("Plot the flooded areas.", ChatOptions::new())?);
    let roads_map = value(
        highways
            .chat("Plot the roads.", ChatOptions::new())?
            .improve("Add a legend. Roads with the same name should have the same color.", ChatOptions::new())?
            .improve("Improve the legend, it does not fit in its box. Make it scrollable.", ChatOptions::new())?,
    );
    let facilities_figure =
        value(facilities.chat("Plot the facilities.", ChatOptions::new().return_type("matplotlib.Figure"))?);

    let mut flooded_facilities = facilities
        .chat(
            "Add a Flooded column to the facilities based on whether they are in the flooded areas",
            ChatOptions::new().link(&flooded),
        )?
        .into_frame()
        .expect("a new frame");
    let export = flooded_facilities.chat(
        "Export to the Out/floodedSchools.gpkg. Keep only the facilities flooded.",
        ChatOptions::new().return_type("None"),
    )?;
    let export_written = export.outcome().expect("executed").output().written.clone();
    drop(export);

    let joint_map = value(highways.chat(
        "Plot the highways the schools, and flooded areas.",
        ChatOptions::new().linked(&[&flooded, &facilities]).return_type("folium.Map"),
    )?);
    let saved_map = value(highways.improve("Save in map.html file", ChatOptions::new())?);

    let inspect = facilities.inspect();
    let inject = facilities.inject("flooded")?;
    Ok(Tutorial {
        flooded,
        facilities,
        highways,
        flooded_facilities,
        bounds,
        amenities,
        flooded_map,
        roads_map,
        facilities_figure,
        export_written,
        joint_map,
        saved_map,
        inspect,
        inject,
    })
}

pub struct Network {
    pub stib: SmartFrame,
    pub figure: Output,
    pub inject: InjectReport,
}

/// Plot a transit network, add a legend, keep the code as a function.
pub fn run_network(engine: &Arc<Engine>) -> Result<Network, Error> {
    let mut stib = SmartFrame::new(engine, load("stib.geojson"), STIB_DESCRIPTION)?;
    let figure = value(stib.chat("Plot the netword", ChatOptions::new())?.improve("add a legend", ChatOptions::new())?);
    let inject = stib.inject("plot_network")?;
    Ok(Network { stib, figure, inject })
}

/// Records every conversation above under both descriptors. Each run uses
/// a fresh cache so that all prompts reach the backend.
pub fn record_fixtures() -> usize {
    let recorder = Arc::new(RecordingBackend::new(author_backend(), FixtureStore::in_memory()));
    for descriptor in [public2(), redacting()] {
        let dir = tempfile::tempdir().unwrap();
        run_tutorial(&engine(dir.path(), recorder.clone(), descriptor.clone())).unwrap();
        let dir = tempfile::tempdir().unwrap();
        run_network(&engine(dir.path(), recorder.clone(), descriptor)).unwrap();
    }
    let path = fixtures_path();
    let _ = std::fs::remove_file(&path);
    let mut store = FixtureStore::load(&path).unwrap();
    for f in recorder.store().fixtures().values() {
        store.record(&f.messages, f.answer.clone());
    }
    store.save().unwrap();
    store.len()
}
