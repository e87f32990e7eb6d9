//! Research-style Markdown reports.

use std::fmt::Write as _;

use serde::Serialize;

use chemvecrag_core::store::MetaValue;

use crate::client::ModelClient;
use crate::retrieve::{Document, QueryPayload};
use crate::state::{AgentState, Failure, Verdict};
use crate::worker::Worker;

pub const SECTION_TITLES: [&str; 6] = [
    "INTRODUCTION",
    "RESEARCH STEPS",
    "MAIN FINDINGS",
    "CONCLUSION",
    "SOURCES",
    "Summary of Vector Store Context",
];

pub const QUERY_PHRASE: &str = "The user's exact query was:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FigureRef {
    pub path: String,
    pub caption: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub introduction: String,
    pub research_steps: String,
    pub main_findings: String,
    pub conclusion: String,
    pub sources: String,
    pub context: String,
    pub figure: Option<FigureRef>,
}

impl Report {
    pub fn sections(&self) -> [(&'static str, &str); 6] {
        [
            (SECTION_TITLES[0], &self.introduction),
            (SECTION_TITLES[1], &self.research_steps),
            (SECTION_TITLES[2], &self.main_findings),
            (SECTION_TITLES[3], &self.conclusion),
            (SECTION_TITLES[4], &self.sources),
            (SECTION_TITLES[5], &self.context),
        ]
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        for (i, (title, body)) in self.sections().into_iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "## {title}\n\n{}", body.trim_end());
        }
        if let Some(fig) = &self.figure {
            let _ = writeln!(
                out,
                "\nThe NMR Spectra of the most relevant compound is shown below ({}):\n\nFigure Caption: {}",
                fig.path,
                fig.caption.as_deref().unwrap_or("(not available)")
            );
        }
        out
    }
}

/// The strings a report quotes for one relevant document.
fn quoted_payloads(worker: Worker, doc: &Document) -> Vec<String> {
    if worker == Worker::Nmr {
        let compounds: Vec<String> = doc
            .linked
            .iter()
            .filter(|l| !crate::extract::is_image_path(&l.payload))
            .map(|l| l.payload.clone())
            .collect();
        if !compounds.is_empty() {
            return compounds;
        }
    }
    vec![doc.payload.clone()]
}

fn meta_text(doc: &Document, key: &str) -> Option<String> {
    doc.metadata.get(key).map(|v| match v {
        MetaValue::Str(s) => s.clone(),
        other => other.to_string(),
    })
}

fn introduction(state: &AgentState) -> String {
    let mut s = format!(
        "This report answers a {} question with the {} worker. {QUERY_PHRASE} '{}'\n",
        state.worker.description(),
        state.worker,
        state.original_question
    );
    match &state.query_payload {
        Some(QueryPayload::Smiles(p)) => {
            let _ = write!(s, "\nInput Compound: ${p}$");
        }
        Some(QueryPayload::Reaction(p)) => {
            let _ = write!(s, "\nInput Reaction: ${p}$");
        }
        Some(QueryPayload::Image(p)) => {
            let _ = write!(s, "\nInput Image: {p}");
        }
        Some(QueryPayload::Text(_)) | None => {}
    }
    s
}

fn research_steps(state: &AgentState) -> String {
    let c = state.counters;
    let mut steps = vec![format!(
        "Routed the question to the {} worker, which searches with the {} tool.",
        state.worker,
        state.worker.tool()
    )];
    steps.push(match &state.query_payload {
        Some(p) => format!("Ran {} vector store search(es) using `{}`.", c.retrievals, p.value()),
        None => format!("Ran {} vector store search(es).", c.retrievals),
    });
    if state.active_question != state.original_question {
        steps.push(format!("Rewrote the question as: '{}'", state.active_question));
    }
    steps.push(format!(
        "Graded {} retrieved record(s) in the final round; {} were judged relevant.",
        state.retrieved.len(),
        state.relevant().len()
    ));
    let drafts = state
        .trace
        .iter()
        .filter(|e| e.node == crate::state::Node::Generate)
        .count();
    if drafts > 0 {
        let verdict = |v: Option<Verdict>| {
            v.map_or(
                "was not reached",
                |v| if v == Verdict::Pass { "passed" } else { "failed" },
            )
        };
        steps.push(format!(
            "Drafted {drafts} answer(s); the last hallucination check {} and the answer check {}.",
            verdict(state.hallucination_verdict),
            verdict(state.answer_verdict)
        ));
    }
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {s}\n", i + 1))
        .collect()
}

fn main_findings(state: &AgentState, relevant: &[&Document]) -> String {
    let mut s = String::new();
    if state.failure.is_none() {
        if let Some(g) = &state.generation {
            let _ = writeln!(s, "{}\n", g.trim_end());
        }
    }
    if relevant.is_empty() {
        s.push_str("No relevant records were found in the vector store.\n");
        return s;
    }
    if state.worker == Worker::Nmr {
        s.push_str("The identified analogues are:\n\n");
        for (i, doc) in relevant.iter().enumerate() {
            let compounds = quoted_payloads(state.worker, doc).join(", ");
            let peaks = meta_text(doc, "peaks").unwrap_or_else(|| "not recorded".into());
            let _ = writeln!(s, "{}. **{compounds}** - Peaks (ppm): {peaks}", i + 1);
        }
    } else {
        s.push_str("The identified analogues are:\n\n");
        for doc in relevant {
            for p in quoted_payloads(state.worker, doc) {
                let _ = writeln!(s, "- ${p}$");
            }
        }
    }
    s
}

fn conclusion(state: &AgentState, client: &dyn ModelClient) -> String {
    let c = state.counters;
    match &state.failure {
        None => client.summarize(state).unwrap_or_else(|_| {
            format!(
                "The {} worker found {} relevant record(s) and its answer passed both checks.",
                state.worker,
                state.relevant().len()
            )
        }),
        Some(Failure::NoRelevantDocuments) => format!(
            "The relevance check could not be satisfied: no retrieved record was judged relevant after {} search(es).",
            c.retrievals
        ),
        Some(Failure::Hallucination) => format!(
            "The hallucination check could not be satisfied: every draft was judged unsupported by the retrieved \
             records after {} regeneration(s).",
            c.regenerations
        ),
        Some(Failure::Answer) => format!(
            "The answer check could not be satisfied: no draft was judged to answer the question after {} \
             rewrite(s).",
            c.rewrites
        ),
        Some(Failure::StoreUnavailable(detail)) => {
            format!("The vector store was unavailable, so no records could be retrieved: {detail}")
        }
    }
}

fn sources(state: &AgentState, relevant: &[&Document]) -> String {
    let mut s = format!("- {} tool\n", state.worker.tool());
    for doc in relevant {
        let _ = writeln!(
            s,
            "- {}/{} (L2 distance {:.4})",
            doc.collection, doc.id, doc.l2_distance
        );
    }
    s
}

fn context(state: &AgentState, relevant: &[&Document]) -> String {
    let label = match state.worker {
        Worker::Reaction => "Reaction(s):",
        _ => "Compound(s):",
    };
    let mut s = String::new();
    if state.worker == Worker::Nmr {
        s.push_str("Spectra:\n");
        if relevant.is_empty() {
            s.push_str("(none)\n");
        }
        for doc in relevant {
            let _ = writeln!(s, "- {}", doc.payload);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "{label}");
    let payloads: Vec<String> = relevant.iter().flat_map(|d| quoted_payloads(state.worker, d)).collect();
    if payloads.is_empty() {
        s.push_str("(none)\n");
    }
    for p in payloads {
        let _ = writeln!(s, "- ${p}$");
    }
    s
}

/// Builds the report from a finished run. Client failures degrade to
/// template text; this never fails.
pub fn generate_report(state: &AgentState, client: &dyn ModelClient) -> Report {
    let relevant = state.relevant();
    let figure = match (state.worker, relevant.first()) {
        (Worker::Nmr, Some(doc)) => Some(FigureRef {
            path: doc.payload.clone(),
            caption: meta_text(doc, "caption"),
        }),
        _ => None,
    };
    Report {
        introduction: introduction(state),
        research_steps: research_steps(state),
        main_findings: main_findings(state, &relevant),
        conclusion: conclusion(state, client),
        sources: sources(state, &relevant),
        context: context(state, &relevant),
        figure,
    }
}

/// Splits Markdown produced by [`Report::to_markdown`] into (title, body)
/// pairs in order of appearance, with surrounding blank lines trimmed.
pub fn parse_sections(markdown: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for line in markdown.lines() {
        if let Some(title) = line.strip_prefix("## ") {
            out.push((title.to_owned(), String::new()));
        } else if let Some((_, body)) = out.last_mut() {
            body.push_str(line);
            body.push('\n');
        }
    }
    for (_, body) in &mut out {
        *body = body.trim_matches('\n').to_owned();
    }
    out
}
