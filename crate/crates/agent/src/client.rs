//! Language-model endpoints used by the supervisor and workers.

use std::collections::{HashMap, VecDeque};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use chemvecrag_core::chem::parse_smiles;
use chemvecrag_core::fingerprint::{morgan_fingerprint, tanimoto, DEFAULT_MORGAN_RADIUS, DEFAULT_WIDTH};

use crate::extract::extract_structures;
use crate::retrieve::Document;
use crate::state::{AgentState, Relevance, Verdict};
use crate::worker::Worker;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("{endpoint} timed out")]
    Timeout { endpoint: &'static str },
    #[error("{endpoint} failed: {detail}")]
    Failed { endpoint: &'static str, detail: String },
}

impl ClientError {
    pub fn is_timeout(&self) -> bool {
        matches!(self, ClientError::Timeout { .. })
    }
}

pub trait ModelClient: Send + Sync {
    fn name(&self) -> &str;
    /// `Ok(None)` means the client has no opinion and the keyword rules apply.
    fn route(&self, question: &str) -> Result<Option<Worker>, ClientError>;
    fn grade(&self, question: &str, doc: &Document) -> Result<Relevance, ClientError>;
    fn generate(&self, question: &str, docs: &[&Document]) -> Result<String, ClientError>;
    fn judge_hallucination(&self, docs: &[&Document], generation: &str) -> Result<Verdict, ClientError>;
    fn judge_answer(&self, question: &str, generation: &str) -> Result<Verdict, ClientError>;
    fn rewrite(&self, question: &str) -> Result<String, ClientError>;
    /// Closing summary for a successful run.
    fn summarize(&self, state: &AgentState) -> Result<String, ClientError>;
}

/// Replays per-endpoint response queues from a JSON transcript.
///
/// Each endpoint maps to a list of strings consumed in order; the last entry
/// repeats once the list runs out. `"timeout"` simulates a timed-out call and
/// `"delay:<ms>:<value>"` sleeps before answering. A missing endpoint fails,
/// except `route`, which then defers to the keyword rules.
/// Pending responses, plus the last one served so it can repeat.
type Queue = (VecDeque<String>, Option<String>);

pub struct ScriptedClient {
    queues: Mutex<HashMap<String, Queue>>,
    calls: Mutex<Vec<&'static str>>,
}

#[derive(Debug, Error)]
#[error("bad transcript: {0}")]
pub struct TranscriptError(String);

impl ScriptedClient {
    pub const ENDPOINTS: [&'static str; 7] = [
        "route",
        "grade",
        "generate",
        "judge_hallucination",
        "judge_answer",
        "rewrite",
        "summarize",
    ];

    pub fn from_json(text: &str) -> Result<Self, TranscriptError> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Entries {
            One(String),
            Many(Vec<String>),
        }
        let raw: HashMap<String, Entries> = serde_json::from_str(text).map_err(|e| TranscriptError(e.to_string()))?;
        let mut queues = HashMap::new();
        for (endpoint, entries) in raw {
            if !Self::ENDPOINTS.contains(&endpoint.as_str()) {
                return Err(TranscriptError(format!("unknown endpoint {endpoint:?}")));
            }
            let list = match entries {
                Entries::One(s) => vec![s],
                Entries::Many(v) => v,
            };
            if list.is_empty() {
                return Err(TranscriptError(format!("{endpoint} has no entries")));
            }
            queues.insert(endpoint, (list.into_iter().collect(), None));
        }
        Ok(ScriptedClient {
            queues: Mutex::new(queues),
            calls: Mutex::new(Vec::new()),
        })
    }

    /// Endpoints called so far, in order.
    pub fn calls(&self) -> Vec<&'static str> {
        self.calls.lock().unwrap().clone()
    }

    fn next(&self, endpoint: &'static str) -> Result<Option<String>, ClientError> {
        self.calls.lock().unwrap().push(endpoint);
        let entry = {
            let mut queues = self.queues.lock().unwrap();
            let Some((queue, last)) = queues.get_mut(endpoint) else {
                return Ok(None);
            };
            if let Some(e) = queue.pop_front() {
                *last = Some(e);
            }
            last.clone()
        };
        let Some(entry) = entry else {
            return Ok(None);
        };
        if entry == "timeout" {
            return Err(ClientError::Timeout { endpoint });
        }
        if let Some(rest) = entry.strip_prefix("delay:") {
            if let Some((ms, value)) = rest.split_once(':') {
                if let Ok(ms) = ms.parse() {
                    std::thread::sleep(Duration::from_millis(ms));
                    return Ok(Some(value.to_owned()));
                }
            }
        }
        Ok(Some(entry))
    }

    fn required(&self, endpoint: &'static str) -> Result<String, ClientError> {
        self.next(endpoint)?.ok_or(ClientError::Failed {
            endpoint,
            detail: "no scripted response".into(),
        })
    }

    fn verdict(&self, endpoint: &'static str) -> Result<Verdict, ClientError> {
        match self.required(endpoint)?.as_str() {
            "pass" => Ok(Verdict::Pass),
            "fail" => Ok(Verdict::Fail),
            other => Err(ClientError::Failed {
                endpoint,
                detail: format!("expected pass or fail, got {other:?}"),
            }),
        }
    }
}

impl ModelClient for ScriptedClient {
    fn name(&self) -> &str {
        "scripted"
    }

    fn route(&self, _question: &str) -> Result<Option<Worker>, ClientError> {
        match self.next("route")? {
            None => Ok(None),
            Some(s) if s == "none" => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|detail| ClientError::Failed {
                endpoint: "route",
                detail,
            }),
        }
    }

    fn grade(&self, _question: &str, _doc: &Document) -> Result<Relevance, ClientError> {
        match self.required("grade")?.as_str() {
            "relevant" => Ok(Relevance::Relevant),
            "irrelevant" => Ok(Relevance::Irrelevant),
            other => Err(ClientError::Failed {
                endpoint: "grade",
                detail: format!("expected relevant or irrelevant, got {other:?}"),
            }),
        }
    }

    fn generate(&self, _question: &str, _docs: &[&Document]) -> Result<String, ClientError> {
        self.required("generate")
    }

    fn judge_hallucination(&self, _docs: &[&Document], _generation: &str) -> Result<Verdict, ClientError> {
        self.verdict("judge_hallucination")
    }

    fn judge_answer(&self, _question: &str, _generation: &str) -> Result<Verdict, ClientError> {
        self.verdict("judge_answer")
    }

    fn rewrite(&self, _question: &str) -> Result<String, ClientError> {
        self.required("rewrite")
    }

    fn summarize(&self, _state: &AgentState) -> Result<String, ClientError> {
        self.required("summarize")
    }
}

/// Deterministic stand-in for a language model, driven by fingerprints.
///
/// A document is relevant when its structure shares at least
/// `min_tanimoto` of Morgan bits with a structure in the question, or when
/// either side has no parseable structure (spectra, reactions).
pub struct RuleBasedClient {
    pub min_tanimoto: f64,
}

impl Default for RuleBasedClient {
    fn default() -> Self {
        RuleBasedClient { min_tanimoto: 0.1 }
    }
}

impl ModelClient for RuleBasedClient {
    fn name(&self) -> &str {
        "rules"
    }

    fn route(&self, _question: &str) -> Result<Option<Worker>, ClientError> {
        Ok(None)
    }

    fn grade(&self, question: &str, doc: &Document) -> Result<Relevance, ClientError> {
        let Ok(hit) = parse_smiles(&doc.payload) else {
            return Ok(Relevance::Relevant);
        };
        let hit_fp = morgan_fingerprint(&hit, DEFAULT_MORGAN_RADIUS, DEFAULT_WIDTH);
        let mut any_query = false;
        for s in extract_structures(question).structures {
            let Ok(q) = parse_smiles(&s) else { continue };
            any_query = true;
            let q_fp = morgan_fingerprint(&q, DEFAULT_MORGAN_RADIUS, DEFAULT_WIDTH);
            if tanimoto(&q_fp, &hit_fp).unwrap_or(0.0) >= self.min_tanimoto {
                return Ok(Relevance::Relevant);
            }
        }
        Ok(if any_query {
            Relevance::Irrelevant
        } else {
            Relevance::Relevant
        })
    }

    fn generate(&self, _question: &str, docs: &[&Document]) -> Result<String, ClientError> {
        Ok(format!(
            "The vector store returned {} relevant record(s), listed below in order of embedding distance.",
            docs.len()
        ))
    }

    fn judge_hallucination(&self, docs: &[&Document], generation: &str) -> Result<Verdict, ClientError> {
        // Every `$...$` quotation in the text must be a retrieved payload.
        let quoted = generation.split('$').skip(1).step_by(2);
        let grounded = quoted.into_iter().all(|q| docs.iter().any(|d| d.payload == q));
        Ok(if grounded { Verdict::Pass } else { Verdict::Fail })
    }

    fn judge_answer(&self, _question: &str, generation: &str) -> Result<Verdict, ClientError> {
        Ok(if generation.trim().is_empty() {
            Verdict::Fail
        } else {
            Verdict::Pass
        })
    }

    fn rewrite(&self, question: &str) -> Result<String, ClientError> {
        Ok(format!("Find records closely related to: {question}"))
    }

    fn summarize(&self, state: &AgentState) -> Result<String, ClientError> {
        Ok(format!(
            "In summary, {} relevant record(s) were identified with the {} tool.",
            state.relevant().len(),
            state.worker.tool()
        ))
    }
}

/// Bounds every call of an inner client by running it on a helper thread.
///
/// A call that overruns returns `Timeout`; its thread is left to finish in
/// the background and its answer is discarded.
pub struct TimeoutClient {
    inner: Arc<dyn ModelClient>,
    timeout: Duration,
}

impl TimeoutClient {
    pub fn new(inner: Arc<dyn ModelClient>, timeout: Duration) -> Self {
        TimeoutClient { inner, timeout }
    }

    fn call<T: Send + 'static>(
        &self,
        endpoint: &'static str,
        f: impl FnOnce(&dyn ModelClient) -> Result<T, ClientError> + Send + 'static,
    ) -> Result<T, ClientError> {
        let (tx, rx) = mpsc::channel();
        let inner = Arc::clone(&self.inner);
        std::thread::spawn(move || {
            let _ = tx.send(f(inner.as_ref()));
        });
        rx.recv_timeout(self.timeout)
            .unwrap_or(Err(ClientError::Timeout { endpoint }))
    }
}

impl ModelClient for TimeoutClient {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn route(&self, question: &str) -> Result<Option<Worker>, ClientError> {
        let q = question.to_owned();
        self.call("route", move |c| c.route(&q))
    }

    fn grade(&self, question: &str, doc: &Document) -> Result<Relevance, ClientError> {
        let (q, d) = (question.to_owned(), doc.clone());
        self.call("grade", move |c| c.grade(&q, &d))
    }

    fn generate(&self, question: &str, docs: &[&Document]) -> Result<String, ClientError> {
        let q = question.to_owned();
        let owned: Vec<Document> = docs.iter().map(|d| (*d).clone()).collect();
        self.call("generate", move |c| c.generate(&q, &owned.iter().collect::<Vec<_>>()))
    }

    fn judge_hallucination(&self, docs: &[&Document], generation: &str) -> Result<Verdict, ClientError> {
        let g = generation.to_owned();
        let owned: Vec<Document> = docs.iter().map(|d| (*d).clone()).collect();
        self.call("judge_hallucination", move |c| {
            c.judge_hallucination(&owned.iter().collect::<Vec<_>>(), &g)
        })
    }

    fn judge_answer(&self, question: &str, generation: &str) -> Result<Verdict, ClientError> {
        let (q, g) = (question.to_owned(), generation.to_owned());
        self.call("judge_answer", move |c| c.judge_answer(&q, &g))
    }

    fn rewrite(&self, question: &str) -> Result<String, ClientError> {
        let q = question.to_owned();
        self.call("rewrite", move |c| c.rewrite(&q))
    }

    fn summarize(&self, state: &AgentState) -> Result<String, ClientError> {
        let s = state.clone();
        self.call("summarize", move |c| c.summarize(&s))
    }
}
