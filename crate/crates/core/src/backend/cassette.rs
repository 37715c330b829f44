use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Backend, BackendError, CompletionRequest, CompletionResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CassetteMode {
    Record,
    Replay,
}

impl std::str::FromStr for CassetteMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "record" => Ok(CassetteMode::Record),
            "replay" => Ok(CassetteMode::Replay),
            other => Err(format!("unknown cassette mode `{other}` (expected record or replay)")),
        }
    }
}

/// One line of a cassette file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteRecord {
    pub key: String,
    pub request: CompletionRequest,
    pub response: CompletionResponse,
    pub timestamp: String,
}

/// Hex SHA-256 over the canonical JSON of `(prompt, params, tag)`.
pub fn cassette_key(request: &CompletionRequest) -> String {
    #[derive(Serialize)]
    struct KeyMaterial<'a> {
        prompt: &'a str,
        temperature: f64,
        top_p: f64,
        max_tokens: u32,
        n: u32,
        tag: Option<&'a str>,
    }
    let material = KeyMaterial {
        prompt: &request.prompt,
        temperature: request.params.temperature,
        top_p: request.params.top_p,
        max_tokens: request.params.max_tokens,
        n: request.params.n,
        tag: request.tag.as_deref(),
    };
    let bytes = serde_json::to_vec(&material).expect("key material serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Record/replay wrapper. In record mode every call goes to the inner backend
/// and is appended to the cassette file; in replay mode calls are answered from
/// the file only and unseen keys fail with `cassette_miss`.
pub struct CassetteBackend {
    mode: CassetteMode,
    path: PathBuf,
    inner: Option<Arc<dyn Backend>>,
    recorded: RwLock<HashMap<String, CompletionResponse>>,
    writer: Mutex<Option<File>>,
    id: String,
}

impl CassetteBackend {
    pub fn record(path: &Path, inner: Arc<dyn Backend>) -> Result<Self, BackendError> {
        let recorded = if path.exists() { load(path)? } else { HashMap::new() };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(CassetteBackend {
            mode: CassetteMode::Record,
            path: path.to_path_buf(),
            id: inner.id().to_string(),
            inner: Some(inner),
            recorded: RwLock::new(recorded),
            writer: Mutex::new(Some(file)),
        })
    }

    pub fn replay(path: &Path) -> Result<Self, BackendError> {
        Ok(CassetteBackend {
            mode: CassetteMode::Replay,
            path: path.to_path_buf(),
            inner: None,
            recorded: RwLock::new(load(path)?),
            writer: Mutex::new(None),
            id: "cassette".into(),
        })
    }

    pub fn mode(&self) -> CassetteMode {
        self.mode
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.recorded.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn load(path: &Path) -> Result<HashMap<String, CompletionResponse>, BackendError> {
    let mut map = HashMap::new();
    for (lineno, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CassetteRecord = serde_json::from_str(&line)
            .map_err(|e| BackendError::Config(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        map.entry(rec.key).or_insert(rec.response);
    }
    Ok(map)
}

impl Backend for CassetteBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let key = cassette_key(request);
        if let Some(hit) = self.recorded.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let inner = match (&self.mode, &self.inner) {
            (CassetteMode::Record, Some(inner)) => inner,
            _ => return Err(BackendError::CassetteMiss(key)),
        };
        let response = inner.complete(request)?;

        let mut writer = self.writer.lock().unwrap();
        let mut recorded = self.recorded.write().unwrap();
        if let Some(existing) = recorded.get(&key) {
            return Ok(existing.clone());
        }
        let record = CassetteRecord {
            key: key.clone(),
            request: request.clone(),
            response: response.clone(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        };
        if let Some(file) = writer.as_mut() {
            let mut line = serde_json::to_string(&record).expect("record serializes");
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        recorded.insert(key, response.clone());
        Ok(response)
    }
}
