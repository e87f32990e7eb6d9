use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retrieve::{Document, QueryPayload};
use crate::worker::Worker;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Retrieve,
    Grade,
    Generate,
    HallucinationCheck,
    AnswerCheck,
    Rewrite,
    Report,
}

impl Node {
    pub fn as_str(self) -> &'static str {
        match self {
            Node::Retrieve => "retrieve",
            Node::Grade => "grade",
            Node::Generate => "generate",
            Node::HallucinationCheck => "hallucination_check",
            Node::AnswerCheck => "answer_check",
            Node::Rewrite => "rewrite",
            Node::Report => "report",
        }
    }

    /// Successors in the worker graph. `None` stands for the terminal state.
    pub fn successors(self) -> &'static [Option<Node>] {
        use Node::*;
        match self {
            Retrieve => &[Some(Grade)],
            Grade => &[Some(Generate), Some(Retrieve), Some(Rewrite), Some(Report)],
            Generate => &[Some(HallucinationCheck)],
            HallucinationCheck => &[Some(AnswerCheck), Some(Generate), Some(Report)],
            AnswerCheck => &[Some(Report), Some(Rewrite)],
            Rewrite => &[Some(Retrieve)],
            Report => &[None],
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: usize,
    pub node: Node,
    pub outcome: Option<String>,
    pub detail: String,
}

impl TraceEvent {
    /// `node` or `node:outcome`.
    pub fn label(&self) -> String {
        match &self.outcome {
            Some(o) => format!("{}:{o}", self.node),
            None => self.node.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("trace must start at retrieve, not {0}")]
    BadStart(Node),
    #[error("step {step}: no edge from {from} to {to}")]
    BadEdge { step: usize, from: Node, to: Node },
    #[error("trace must end at report, not {0}")]
    BadEnd(Node),
    #[error("step numbers must count up from 0")]
    BadStep,
}

/// Checks every transition of a finished run against the worker graph.
pub fn validate_trace(trace: &[TraceEvent]) -> Result<(), TraceError> {
    let first = trace.first().ok_or(TraceError::Empty)?;
    if first.node != Node::Retrieve {
        return Err(TraceError::BadStart(first.node));
    }
    if trace.iter().enumerate().any(|(i, e)| e.step != i) {
        return Err(TraceError::BadStep);
    }
    for pair in trace.windows(2) {
        let (from, to) = (pair[0].node, pair[1].node);
        if !from.successors().contains(&Some(to)) {
            return Err(TraceError::BadEdge {
                step: pair[1].step,
                from,
                to,
            });
        }
    }
    let last = trace.last().unwrap().node;
    if !last.successors().contains(&None) {
        return Err(TraceError::BadEnd(last));
    }
    Ok(())
}

/// One JSON object per line, in step order.
pub fn trace_to_jsonl(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&serde_json::to_string(e).expect("trace event serializes"));
        out.push('\n');
    }
    out
}

pub fn trace_from_jsonl(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bounds {
    /// Total retrieve executions, the first one included.
    pub retrievals: u32,
    /// Extra generations after failed hallucination checks.
    pub regenerations: u32,
    /// Question rewrites after failed answer checks.
    pub rewrites: u32,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            retrievals: 3,
            regenerations: 2,
            rewrites: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub retrievals: u32,
    pub regenerations: u32,
    pub rewrites: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relevance {
    Pending,
    Relevant,
    Irrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradedDocument {
    pub document: Document,
    pub relevance: Relevance,
}

/// Why a run stopped before every check passed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum Failure {
    NoRelevantDocuments,
    Hallucination,
    Answer,
    StoreUnavailable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentState {
    pub original_question: String,
    pub active_question: String,
    pub worker: Worker,
    pub query_payload: Option<QueryPayload>,
    pub retrieved: Vec<GradedDocument>,
    pub generation: Option<String>,
    pub hallucination_verdict: Option<Verdict>,
    pub answer_verdict: Option<Verdict>,
    pub counters: Counters,
    pub failure: Option<Failure>,
    pub trace: Vec<TraceEvent>,
}

impl AgentState {
    pub fn new(question: &str, worker: Worker) -> Self {
        AgentState {
            original_question: question.to_owned(),
            active_question: question.to_owned(),
            worker,
            query_payload: None,
            retrieved: Vec::new(),
            generation: None,
            hallucination_verdict: None,
            answer_verdict: None,
            counters: Counters::default(),
            failure: None,
            trace: Vec::new(),
        }
    }

    pub fn record(&mut self, node: Node, outcome: Option<&str>, detail: impl Into<String>) {
        self.trace.push(TraceEvent {
            step: self.trace.len(),
            node,
            outcome: outcome.map(str::to_owned),
            detail: detail.into(),
        });
    }

    pub fn relevant(&self) -> Vec<&Document> {
        self.retrieved
            .iter()
            .filter(|d| d.relevance == Relevance::Relevant)
            .map(|d| &d.document)
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.trace.iter().map(TraceEvent::label).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(nodes: &[Node]) -> Vec<TraceEvent> {
        nodes
            .iter()
            .enumerate()
            .map(|(step, &node)| TraceEvent {
                step,
                node,
                outcome: None,
                detail: String::new(),
            })
            .collect()
    }

    #[test]
    fn accepts_graph_paths() {
        use Node::*;
        assert!(validate_trace(&trace(&[
            Retrieve,
            Grade,
            Generate,
            HallucinationCheck,
            AnswerCheck,
            Report
        ]))
        .is_ok());
        assert!(validate_trace(&trace(&[Retrieve, Grade, Rewrite, Retrieve, Grade, Report])).is_ok());
    }

    #[test]
    fn rejects_shortcuts() {
        use Node::*;
        assert_eq!(validate_trace(&[]), Err(TraceError::Empty));
        assert_eq!(
            validate_trace(&trace(&[Grade, Report])),
            Err(TraceError::BadStart(Grade))
        );
        assert_eq!(
            validate_trace(&trace(&[Retrieve, Generate])),
            Err(TraceError::BadEdge {
                step: 1,
                from: Retrieve,
                to: Generate
            })
        );
        assert_eq!(
            validate_trace(&trace(&[Retrieve, Grade])),
            Err(TraceError::BadEnd(Grade))
        );
        let mut t = trace(&[Retrieve, Grade, Report]);
        t[2].step = 7;
        assert_eq!(validate_trace(&t), Err(TraceError::BadStep));
    }

    #[test]
    fn jsonl_round_trip() {
        let mut t = trace(&[Node::Retrieve, Node::Grade, Node::Report]);
        t[1].outcome = Some("all_irrelevant".into());
        let text = trace_to_jsonl(&t);
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with(r#"{"step":0,"node":"retrieve","outcome":null,"detail":""}"#));
        assert_eq!(trace_from_jsonl(&text).unwrap(), t);
        assert_eq!(t[1].label(), "grade:all_irrelevant");
    }
}
