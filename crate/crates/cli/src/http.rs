//! Wire clients for the two pluggable model services.
//!
//! Both speak JSON over HTTP POST and are deliberately thin: the planner
//! seam turns an instruction into subgoal phrases, the embedding seam turns
//! class names into vectors. All semantic checking stays local — every
//! planner phrase must pass the grammar before anything executes, and
//! similarity cosines are computed here, not by the service.
//!
//! Planner: `POST /plan`
//! `{"instruction": str, "prefix": str|null, "classes": [str]}`
//! → `{"subgoals": [str]}`
//!
//! Embedding: `POST /embed`
//! `{"terms": [str]}` → `{"vectors": [[number]]}`

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Duration;

use homeworld_core::plan::{match_phrase, PlanError};
use homeworld_core::registry::ClassRegistry;
use homeworld_core::replan::{Similarity, SimilarityError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Per-request ceiling for both services.
const REQUEST_TIMEOUT: Duration = Duration::from_secs(10);

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(REQUEST_TIMEOUT))
        .build()
        .new_agent()
}

/// Join an endpoint base with a service path, tolerating trailing slashes.
fn join(endpoint: &str, path: &str) -> String {
    format!("{}/{}", endpoint.trim_end_matches('/'), path)
}

// ---------------------------------------------------------------------------
// Planner
// ---------------------------------------------------------------------------

/// Why an external plan was rejected.
#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("planner transport: {0}")]
    Transport(#[source] Box<ureq::Error>),
    #[error("planner returned no subgoals")]
    MalformedResponse,
    /// The service proposed a phrase the grammar cannot ground; the whole
    /// plan is rejected rather than silently truncated.
    #[error("planner subgoal {index} is not executable: {source}")]
    UnmatchablePhrase {
        index: usize,
        #[source]
        source: PlanError,
    },
}

impl From<ureq::Error> for PlannerError {
    fn from(e: ureq::Error) -> Self {
        PlannerError::Transport(Box::new(e))
    }
}

#[derive(Serialize)]
struct PlanRequest<'a> {
    instruction: &'a str,
    prefix: Option<&'a str>,
    classes: &'a [String],
}

#[derive(Deserialize)]
struct PlanResponse {
    subgoals: Vec<String>,
}

/// Client for an external high-level planner service.
pub struct PlannerClient {
    agent: ureq::Agent,
    endpoint: String,
}

impl PlannerClient {
    pub fn new(endpoint: &str) -> Self {
        PlannerClient { agent: agent(), endpoint: endpoint.to_owned() }
    }

    /// Ask the service for a plan and verify every phrase grounds. Returns
    /// the phrases (not binaries) so the caller can display them verbatim.
    pub fn plan(
        &self,
        instruction: &str,
        prefix: Option<&str>,
        classes: &[String],
        registry: &ClassRegistry,
    ) -> Result<Vec<String>, PlannerError> {
        let request = PlanRequest { instruction, prefix, classes };
        let mut response = self
            .agent
            .post(&join(&self.endpoint, "plan"))
            .send_json(&request)?;
        let parsed: PlanResponse = response.body_mut().read_json()?;
        if parsed.subgoals.is_empty() {
            return Err(PlannerError::MalformedResponse);
        }
        for (index, phrase) in parsed.subgoals.iter().enumerate() {
            match_phrase(phrase, registry)
                .map_err(|source| PlannerError::UnmatchablePhrase { index, source })?;
        }
        Ok(parsed.subgoals)
    }
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EmbedRequest<'a> {
    terms: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

/// Similarity provider backed by an external embedding service. Vectors
/// are fetched once per term and cached for the life of the client, so a
/// benchmark run makes at most one request per distinct class name.
pub struct EmbedSimilarity {
    agent: ureq::Agent,
    endpoint: String,
    cache: Mutex<BTreeMap<String, Vec<f32>>>,
}

impl EmbedSimilarity {
    pub fn new(endpoint: &str) -> Self {
        EmbedSimilarity {
            agent: agent(),
            endpoint: endpoint.to_owned(),
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    /// Vector for one term, from cache or the service.
    fn vector(&self, term: &str) -> Result<Vec<f32>, SimilarityError> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(term) {
            return Ok(v.clone());
        }
        let request = EmbedRequest { terms: vec![term] };
        let mut response = self
            .agent
            .post(&join(&self.endpoint, "embed"))
            .send_json(&request)
            .map_err(|e| SimilarityError::new(format!("embed transport: {e}")))?;
        let parsed: EmbedResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| SimilarityError::new(format!("embed response: {e}")))?;
        let vector = parsed
            .vectors
            .into_iter()
            .next()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| SimilarityError::new(format!("no vector returned for {term:?}")))?;
        self.cache.lock().expect("cache lock").insert(term.to_owned(), vector.clone());
        Ok(vector)
    }
}

/// Cosine similarity clamped to `[0, 1]`; mismatched lengths score zero.
fn cosine_clamped(a: &[f32], b: &[f32]) -> f32 {
    if a.len() != b.len() {
        return 0.0;
    }
    let (mut dot, mut na, mut nb) = (0.0f32, 0.0f32, 0.0f32);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0)
}

impl Similarity for EmbedSimilarity {
    fn score(&self, a: &str, b: &str) -> Result<f32, SimilarityError> {
        if a == b {
            return Ok(1.0);
        }
        Ok(cosine_clamped(&self.vector(a)?, &self.vector(b)?))
    }
}
