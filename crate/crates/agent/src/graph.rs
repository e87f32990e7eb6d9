//! The supervisor and the self-correcting worker loop.
//!
//! Every back edge of the loop spends a bounded counter, which is what makes
//! a run terminate whatever the client answers:
//! - `grade -> retrieve` spends a retrieval. The second and later retries of
//!   one round pass through a `retrieval_retry` rewrite first, and each retry
//!   doubles `k`.
//! - `hallucination_check -> generate` spends a regeneration.
//! - `answer_check -> rewrite -> retrieve` spends a rewrite and a retrieval.
//!
//! Counters are per run and never reset; only the per-round retry count used
//! for `k` resets when the answer check forces a new round.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::ModelClient;
use crate::report::{generate_report, Report};
use crate::retrieve::{RetrieveError, Retriever};
use crate::state::{AgentState, Bounds, Failure, GradedDocument, Node, Relevance, Verdict};
use crate::worker::{route, RouteDecision, Worker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub bounds: Bounds,
    /// Hits requested by the first search of a round.
    pub k: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            bounds: Bounds::default(),
            k: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
    #[error("no query payload: {0}")]
    NoQueryPayload(String),
    #[error("retrieval failed: {0}")]
    Retrieve(RetrieveError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub route: RouteDecision,
    pub state: AgentState,
    pub report: Report,
}

#[derive(Clone, Copy)]
enum RewriteReason {
    RetrievalRetry,
    AnswerCheck,
}

/// Routes the question and runs the chosen worker to completion.
pub fn ask(
    question: &str,
    client: &dyn ModelClient,
    retriever: &dyn Retriever,
    config: &AgentConfig,
) -> Result<RunResult, AgentError> {
    let question = question.trim();
    if question.is_empty() {
        return Err(AgentError::EmptyQuestion);
    }
    let decision = route(question, client);
    let (state, report) = run_worker(AgentState::new(question, decision.worker), retriever, client, config)?;
    Ok(RunResult {
        route: decision,
        state,
        report,
    })
}

pub fn run_worker(
    mut state: AgentState,
    retriever: &dyn Retriever,
    client: &dyn ModelClient,
    config: &AgentConfig,
) -> Result<(AgentState, Report), AgentError> {
    let bounds = config.bounds;
    if bounds.retrievals == 0 {
        return Err(AgentError::InvalidConfig("at least one retrieval is required".into()));
    }
    if config.k == 0 {
        return Err(AgentError::InvalidConfig("k must be positive".into()));
    }
    if state.active_question.trim().is_empty() {
        return Err(AgentError::EmptyQuestion);
    }
    let worker = state.worker;
    let mut node = Node::Retrieve;
    let mut rewrite_reason = RewriteReason::AnswerCheck;
    let mut round_retries = 0u32;
    let mut store_error: Option<String> = None;

    loop {
        match node {
            Node::Retrieve => {
                state.counters.retrievals += 1;
                let k = config.k.saturating_mul(1 << round_retries.min(16));
                let result = match retriever.retrieve(worker, &state.active_question, k) {
                    // A rewritten question may have lost the structure; the
                    // original still carries it.
                    Err(RetrieveError::NoQueryPayload(_)) if state.active_question != state.original_question => {
                        retriever.retrieve(worker, &state.original_question, k)
                    }
                    other => other,
                };
                match result {
                    Ok(r) => {
                        let detail = format!("k={k} hits={}", r.docs.len());
                        state.retrieved = r
                            .docs
                            .into_iter()
                            .map(|document| GradedDocument {
                                document,
                                relevance: Relevance::Pending,
                            })
                            .collect();
                        state.query_payload = Some(r.payload);
                        state.record(Node::Retrieve, None, detail);
                    }
                    Err(RetrieveError::NoQueryPayload(msg)) => return Err(AgentError::NoQueryPayload(msg)),
                    Err(e @ RetrieveError::StoreUnavailable(_)) => {
                        state.retrieved.clear();
                        state.record(Node::Retrieve, Some("error"), e.to_string());
                        store_error = Some(e.to_string());
                    }
                    Err(e) => return Err(AgentError::Retrieve(e)),
                }
                node = Node::Grade;
            }
            Node::Grade => {
                if let Some(detail) = store_error.take() {
                    state.failure = Some(Failure::StoreUnavailable(detail.clone()));
                    state.record(Node::Grade, Some("store_error"), detail);
                    node = Node::Report;
                    continue;
                }
                let mut failed_calls = 0;
                for doc in &mut state.retrieved {
                    doc.relevance = match client.grade(&state.active_question, &doc.document) {
                        Ok(r) => r,
                        Err(_) => {
                            failed_calls += 1;
                            Relevance::Irrelevant
                        }
                    };
                }
                let relevant = state.relevant().len();
                let mut detail = format!("relevant={relevant}/{}", state.retrieved.len());
                if failed_calls > 0 {
                    detail.push_str(&format!(" failed_calls={failed_calls}"));
                }
                if relevant > 0 {
                    state.record(Node::Grade, None, detail);
                    node = Node::Generate;
                } else if state.counters.retrievals < bounds.retrievals {
                    state.record(Node::Grade, Some("all_irrelevant"), detail);
                    round_retries += 1;
                    if round_retries >= 2 {
                        rewrite_reason = RewriteReason::RetrievalRetry;
                        node = Node::Rewrite;
                    } else {
                        node = Node::Retrieve;
                    }
                } else {
                    state.record(Node::Grade, Some("all_irrelevant"), detail);
                    state.failure = Some(Failure::NoRelevantDocuments);
                    node = Node::Report;
                }
            }
            Node::Generate => {
                let docs = state.relevant();
                let result = client.generate(&state.active_question, &docs);
                match result {
                    Ok(text) => {
                        let detail = format!("chars={}", text.chars().count());
                        state.generation = Some(text);
                        state.record(Node::Generate, None, detail);
                    }
                    Err(e) => {
                        state.generation = None;
                        let outcome = if e.is_timeout() { "timeout" } else { "error" };
                        state.record(Node::Generate, Some(outcome), e.to_string());
                    }
                }
                node = Node::HallucinationCheck;
            }
            Node::HallucinationCheck => {
                let (verdict, detail) = match &state.generation {
                    None => (Verdict::Fail, "no generation to check".to_owned()),
                    Some(text) => match client.judge_hallucination(&state.relevant(), text) {
                        Ok(v) => (v, String::new()),
                        Err(e) => (Verdict::Fail, e.to_string()),
                    },
                };
                state.hallucination_verdict = Some(verdict);
                state.record(Node::HallucinationCheck, Some(verdict.as_str()), detail);
                node = if verdict == Verdict::Pass {
                    Node::AnswerCheck
                } else if state.counters.regenerations < bounds.regenerations {
                    state.counters.regenerations += 1;
                    Node::Generate
                } else {
                    state.failure = Some(Failure::Hallucination);
                    Node::Report
                };
            }
            Node::AnswerCheck => {
                let text = state.generation.as_deref().unwrap_or_default();
                let (verdict, detail) = match client.judge_answer(&state.original_question, text) {
                    Ok(v) => (v, String::new()),
                    Err(e) => (Verdict::Fail, e.to_string()),
                };
                state.answer_verdict = Some(verdict);
                state.record(Node::AnswerCheck, Some(verdict.as_str()), detail);
                node = if verdict == Verdict::Pass {
                    Node::Report
                } else if state.counters.rewrites < bounds.rewrites && state.counters.retrievals < bounds.retrievals {
                    state.counters.rewrites += 1;
                    round_retries = 0;
                    rewrite_reason = RewriteReason::AnswerCheck;
                    Node::Rewrite
                } else {
                    state.failure = Some(Failure::Answer);
                    Node::Report
                };
            }
            Node::Rewrite => {
                let outcome = match rewrite_reason {
                    RewriteReason::RetrievalRetry => Some("retrieval_retry"),
                    RewriteReason::AnswerCheck => None,
                };
                let detail = match client.rewrite(&state.active_question) {
                    Ok(q) if !q.trim().is_empty() => {
                        state.active_question = q.trim().to_owned();
                        state.active_question.clone()
                    }
                    Ok(_) => "empty rewrite ignored; question kept".to_owned(),
                    Err(e) => format!("{e}; question kept"),
                };
                state.record(Node::Rewrite, outcome, detail);
                node = Node::Retrieve;
            }
            Node::Report => {
                let report = generate_report(&state, client);
                let outcome = match &state.failure {
                    None => None,
                    Some(Failure::StoreUnavailable(_)) => Some("store_unavailable"),
                    Some(_) => Some("bounds_exhausted"),
                };
                let detail = match &state.failure {
                    None => String::new(),
                    Some(f) => format!("{f:?}"),
                };
                state.record(Node::Report, outcome, detail);
                return Ok((state, report));
            }
        }
    }
}

/// Runs a fixed worker, skipping the supervisor.
pub fn ask_worker(
    question: &str,
    worker: Worker,
    client: &dyn ModelClient,
    retriever: &dyn Retriever,
    config: &AgentConfig,
) -> Result<(AgentState, Report), AgentError> {
    let question = question.trim();
    if question.is_empty() {
        return Err(AgentError::EmptyQuestion);
    }
    run_worker(AgentState::new(question, worker), retriever, client, config)
}
