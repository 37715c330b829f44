use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, CompletionRequest, CompletionResponse};

/// Canned completions for one pass: a single string is broadcast to every
/// requested sample, a list is cycled until `n` completions are filled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedPass {
    One(String),
    Many(Vec<String>),
}

impl ScriptedPass {
    fn fill(&self, n: usize) -> Vec<String> {
        match self {
            ScriptedPass::One(s) => vec![s.clone(); n],
            ScriptedPass::Many(v) if v.is_empty() => vec![String::new(); n],
            ScriptedPass::Many(v) => v.iter().cycle().take(n).cloned().collect(),
        }
    }
}

/// Deterministic backend keyed by `(tag, pass index)`.
///
/// Script files are JSON objects mapping a tag to its passes, for example
/// `{"t1": ["broken code", "fixed code"], "*": "print 1"}`. The `*` entry
/// answers tags without their own entry. Pass indices past the end of a list
/// wrap around.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScriptedBackend {
    script: BTreeMap<String, PassList>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum PassList {
    Single(String),
    Passes(Vec<ScriptedPass>),
}

impl PassList {
    fn pass(&self, pass_index: u32) -> Option<ScriptedPass> {
        match self {
            PassList::Single(s) => Some(ScriptedPass::One(s.clone())),
            PassList::Passes(p) if p.is_empty() => None,
            PassList::Passes(p) => Some(p[(pass_index.max(1) as usize - 1) % p.len()].clone()),
        }
    }
}

pub const FALLBACK_TAG: &str = "*";

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the completion for `tag` at 1-based `pass_index`, padding earlier
    /// passes with the same text when they are missing.
    pub fn with_entry(mut self, tag: &str, pass_index: u32, completion: impl Into<String>) -> Self {
        self.set(tag, pass_index, ScriptedPass::One(completion.into()));
        self
    }

    pub fn with_samples(mut self, tag: &str, pass_index: u32, samples: Vec<String>) -> Self {
        self.set(tag, pass_index, ScriptedPass::Many(samples));
        self
    }

    /// Answer for any tag without its own entry.
    pub fn with_fallback(mut self, completion: impl Into<String>) -> Self {
        self.script.insert(FALLBACK_TAG.into(), PassList::Single(completion.into()));
        self
    }

    fn set(&mut self, tag: &str, pass_index: u32, pass: ScriptedPass) {
        let idx = pass_index.max(1) as usize - 1;
        let entry = self
            .script
            .entry(tag.to_string())
            .or_insert_with(|| PassList::Passes(Vec::new()));
        if let PassList::Single(s) = entry {
            *entry = PassList::Passes(vec![ScriptedPass::One(s.clone())]);
        }
        let PassList::Passes(passes) = entry else { unreachable!() };
        while passes.len() < idx {
            passes.push(pass.clone());
        }
        if passes.len() == idx {
            passes.push(pass);
        } else {
            passes[idx] = pass;
        }
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        serde_json::from_str(text).map_err(|e| BackendError::Config(format!("bad script: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.script.keys().map(String::as_str)
    }
}

impl Backend for ScriptedBackend {
    fn id(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        request.validate()?;
        let tag = request.tag.as_deref().unwrap_or(FALLBACK_TAG);
        let pass = self
            .script
            .get(tag)
            .or_else(|| self.script.get(FALLBACK_TAG))
            .and_then(|p| p.pass(request.pass_index))
            .ok_or_else(|| BackendError::InvalidRequest(format!("script has no entry for tag `{tag}`")))?;
        Ok(CompletionResponse {
            completions: pass.fill(request.params.n as usize),
            backend_id: self.id().to_string(),
            latency_ms: 0,
        })
    }
}
