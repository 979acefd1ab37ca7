//! Recording sessions served by the API: finalized logs from the data root
//! and live sessions fed over HTTP.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;
use tokio::sync::broadcast;
use truckmotion_core::filters::FilterMode;
use truckmotion_core::ingest::{parse_log, parse_record, split_sources, LiveSession, LogFormat, PositionSample};
use truckmotion_core::kinematics::{ChainLatency, KinematicFrame, StreamingChain};
use truckmotion_core::Result;

use crate::analysis::Analysis;
use crate::config::AnalysisConfig;

pub const SAMPLE_FILES: [&str; 2] = ["samples.jsonl", "samples.csv"];
pub const CONFIG_FILE: &str = "config.json";
/// Frames buffered per live subscriber before the oldest are dropped.
pub const LIVE_BUFFER: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceDescriptor {
    File { path: PathBuf, source_id: String },
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Live,
    Finalized,
}

/// Messages on a session's live channel.
#[derive(Debug, Clone)]
pub enum LiveMessage {
    Frame(Arc<str>),
    End,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionInfo {
    pub id: String,
    pub source: SourceDescriptor,
    pub state: SessionState,
    pub samples: usize,
    pub frame_count: usize,
    pub latest_frame: Option<KinematicFrame>,
    pub config: AnalysisConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PushReport {
    pub accepted: u64,
    pub dropped_out_of_order: u64,
    pub malformed: u64,
    /// Records whose source differs from the session's.
    pub foreign_source: u64,
    pub frames_emitted: usize,
}

struct LiveState {
    ingest: LiveSession,
    chain: StreamingChain,
    source: Option<String>,
    emitted: usize,
    latest: Option<KinematicFrame>,
}

type CachedAnalysis = (usize, Arc<std::result::Result<Analysis, String>>);

pub struct Session {
    pub id: String,
    pub source: SourceDescriptor,
    pub config: AnalysisConfig,
    samples: RwLock<Arc<Vec<PositionSample>>>,
    live: Mutex<Option<LiveState>>,
    latency: Option<ChainLatency>,
    tx: broadcast::Sender<LiveMessage>,
    analysis: Mutex<Option<CachedAnalysis>>,
    responses: Mutex<HashMap<String, Arc<[u8]>>>,
}

impl Session {
    fn finalized(id: String, source: SourceDescriptor, config: AnalysisConfig, samples: Vec<PositionSample>) -> Self {
        let (tx, _) = broadcast::channel(LIVE_BUFFER);
        Self {
            id,
            source,
            config,
            samples: RwLock::new(Arc::new(samples)),
            live: Mutex::new(None),
            latency: None,
            tx,
            analysis: Mutex::new(None),
            responses: Mutex::new(HashMap::new()),
        }
    }

    pub fn live(id: String, config: AnalysisConfig) -> Result<Self> {
        let chain = StreamingChain::new(&config.chain.clone().with_mode(FilterMode::Causal))?;
        let latency = chain.latency();
        let (tx, _) = broadcast::channel(LIVE_BUFFER);
        Ok(Self {
            id,
            source: SourceDescriptor::Live,
            config,
            samples: RwLock::new(Arc::new(Vec::new())),
            live: Mutex::new(Some(LiveState {
                ingest: LiveSession::new(),
                chain,
                source: None,
                emitted: 0,
                latest: None,
            })),
            latency: Some(latency),
            tx,
            analysis: Mutex::new(None),
            responses: Mutex::new(HashMap::new()),
        })
    }

    pub fn state(&self) -> SessionState {
        if self.live.lock().expect("live lock").is_some() {
            SessionState::Live
        } else {
            SessionState::Finalized
        }
    }

    pub fn samples(&self) -> Arc<Vec<PositionSample>> {
        Arc::clone(&self.samples.read().expect("samples lock"))
    }

    /// Causal-chain delays of the live stream; `None` for recorded logs.
    pub fn latency(&self) -> Option<ChainLatency> {
        self.latency
    }

    pub fn subscribe(&self) -> broadcast::Receiver<LiveMessage> {
        self.tx.subscribe()
    }

    /// Batch analysis of the current samples, recomputed only when new
    /// samples arrived.
    pub fn analysis(&self) -> Arc<std::result::Result<Analysis, String>> {
        let samples = self.samples();
        let mut cache = self.analysis.lock().expect("analysis lock");
        if let Some((len, a)) = cache.as_ref() {
            if *len == samples.len() {
                return Arc::clone(a);
            }
        }
        let a = Arc::new(Analysis::run(&samples, &self.config).map_err(|e| e.to_string()));
        *cache = Some((samples.len(), Arc::clone(&a)));
        a
    }

    /// Response body for `key`, rendered once per finalized session.
    pub fn cached_response<E>(
        &self,
        key: &str,
        render: impl FnOnce() -> std::result::Result<Vec<u8>, E>,
    ) -> std::result::Result<Arc<[u8]>, E> {
        let finalized = self.state() == SessionState::Finalized;
        if finalized {
            if let Some(body) = self.responses.lock().expect("response lock").get(key) {
                return Ok(Arc::clone(body));
            }
        }
        let body: Arc<[u8]> = render()?.into();
        if finalized {
            self.responses
                .lock()
                .expect("response lock")
                .insert(key.to_string(), Arc::clone(&body));
        }
        Ok(body)
    }

    pub fn info(&self) -> SessionInfo {
        let samples = self.samples().len();
        let live = self
            .live
            .lock()
            .expect("live lock")
            .as_ref()
            .map(|l| (l.emitted, l.latest.clone()));
        let (state, frame_count, latest_frame, error) = match live {
            Some((emitted, latest)) => (SessionState::Live, emitted, latest, None),
            None => match self.analysis().as_ref() {
                Ok(a) => (SessionState::Finalized, a.frames.len(), a.frames.last().cloned(), None),
                Err(e) => (SessionState::Finalized, 0, None, Some(e.clone())),
            },
        };
        SessionInfo {
            id: self.id.clone(),
            source: self.source.clone(),
            state,
            samples,
            frame_count,
            latest_frame,
            config: self.config.clone(),
            error,
        }
    }

    /// Feeds JSONL records into a live session. Returns `None` when the
    /// session is already finalized.
    pub fn push_records(&self, body: &str) -> Option<PushReport> {
        let mut guard = self.live.lock().expect("live lock");
        let live = guard.as_mut()?;
        let before = live.ingest.stats();
        let mut report = PushReport::default();
        for line in body.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let sample = match parse_record(line) {
                Ok(s) => s,
                Err(_) => {
                    // counted by the ingest statistics
                    live.ingest.push_line(line);
                    continue;
                }
            };
            if live.source.as_ref().is_some_and(|s| *s != sample.source_id) {
                report.foreign_source += 1;
                continue;
            }
            if !live.ingest.push_sample(sample.clone()) {
                continue;
            }
            live.source.get_or_insert_with(|| sample.source_id.clone());
            for frame in live.chain.push(&sample) {
                self.emit(live, frame);
                report.frames_emitted += 1;
            }
        }
        let after = live.ingest.stats();
        report.accepted = after.accepted - before.accepted;
        report.dropped_out_of_order = after.dropped_out_of_order - before.dropped_out_of_order;
        report.malformed = after.malformed - before.malformed;
        *self.samples.write().expect("samples lock") = live.ingest.snapshot();
        Some(report)
    }

    fn emit(&self, live: &mut LiveState, frame: KinematicFrame) {
        let json: Arc<str> = serde_json::to_string(&frame).expect("frames serialize").into();
        live.emitted += 1;
        live.latest = Some(frame);
        // no subscribers is fine
        let _ = self.tx.send(LiveMessage::Frame(json));
    }

    /// Flushes the live chain and freezes the session. Returns the number of
    /// frames flushed, or `None` if it was already finalized.
    pub fn finalize(&self) -> Option<usize> {
        let mut guard = self.live.lock().expect("live lock");
        let mut live = guard.take()?;
        live.ingest.finalize();
        let tail = live.chain.finish();
        let flushed = tail.len();
        for frame in tail {
            self.emit(&mut live, frame);
        }
        *self.samples.write().expect("samples lock") = live.ingest.snapshot();
        let _ = self.tx.send(LiveMessage::End);
        Some(flushed)
    }
}

/// Loads every `<root>/<dir>/samples.{jsonl,csv}`. A log with several sources
/// becomes one session per source, named `<dir>.<source>`.
pub fn load_root(root: &Path) -> anyhow::Result<Vec<Session>> {
    let mut sessions = Vec::new();
    if !root.exists() {
        return Ok(sessions);
    }
    let mut dirs: Vec<_> = std::fs::read_dir(root)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .collect();
    dirs.sort_by_key(|e| e.file_name());
    for dir in dirs {
        let name = dir.file_name().to_string_lossy().into_owned();
        let Some(path) = SAMPLE_FILES.iter().map(|f| dir.path().join(f)).find(|p| p.is_file()) else {
            continue;
        };
        let config_path = dir.path().join(CONFIG_FILE);
        let config = if config_path.is_file() {
            AnalysisConfig::load(&config_path)?
        } else {
            AnalysisConfig::default()
        };
        let samples = read_log(&path)?;
        let by_source = split_sources(samples);
        let single = by_source.len() == 1;
        for (source_id, samples) in by_source {
            let id = if single { name.clone() } else { format!("{name}.{source_id}") };
            let source = SourceDescriptor::File {
                path: path.clone(),
                source_id,
            };
            sessions.push(Session::finalized(id, source, config.clone(), samples));
        }
    }
    Ok(sessions)
}

pub fn read_log(path: &Path) -> anyhow::Result<Vec<PositionSample>> {
    let bytes = std::fs::read(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let format = path
        .extension()
        .and_then(|e| e.to_str())
        .and_then(LogFormat::from_extension)
        .unwrap_or(LogFormat::Jsonl);
    parse_log(&bytes, format).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// Writes a finalized live session into the data root layout.
pub fn persist(root: &Path, session: &Session) -> std::io::Result<()> {
    let dir = root.join(&session.id);
    std::fs::create_dir_all(&dir)?;
    let body: String = session.samples().iter().map(|s| s.to_json_line() + "\n").collect();
    std::fs::write(dir.join(SAMPLE_FILES[0]), body)?;
    let config = serde_json::to_string_pretty(&session.config).expect("config serializes");
    std::fs::write(dir.join(CONFIG_FILE), config + "\n")
}

/// Sessions keyed by id.
/// Ids double as directory names under the data root.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && !id.contains(['/', '\\']) && !id.starts_with('.')
}

#[derive(Default)]
pub struct SessionStore {
    sessions: RwLock<BTreeMap<String, Arc<Session>>>,
    next_live: Mutex<u64>,
}

impl SessionStore {
    pub fn new(sessions: Vec<Session>) -> Self {
        Self {
            sessions: RwLock::new(sessions.into_iter().map(|s| (s.id.clone(), Arc::new(s))).collect()),
            next_live: Mutex::new(1),
        }
    }

    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.read().expect("store lock").get(id).cloned()
    }

    pub fn list(&self) -> Vec<Arc<Session>> {
        self.sessions.read().expect("store lock").values().cloned().collect()
    }

    /// Picks `live-N` when no id is given. Fails on a taken id.
    pub fn insert_live(&self, id: Option<String>, config: AnalysisConfig) -> std::result::Result<Arc<Session>, String> {
        let mut sessions = self.sessions.write().expect("store lock");
        let id = match id {
            Some(id) => {
                if !valid_session_id(&id) {
                    return Err(format!("invalid session id `{id}`"));
                }
                if sessions.contains_key(&id) {
                    return Err(format!("session `{id}` already exists"));
                }
                id
            }
            None => {
                let mut n = self.next_live.lock().expect("id lock");
                loop {
                    let candidate = format!("live-{n}");
                    *n += 1;
                    if !sessions.contains_key(&candidate) {
                        break candidate;
                    }
                }
            }
        };
        let session = Arc::new(Session::live(id.clone(), config).map_err(|e| e.to_string())?);
        sessions.insert(id, Arc::clone(&session));
        Ok(session)
    }
}
