//! Question answering over the chemical vector store: a supervisor routes a
//! question to one of four workers, each running a bounded
//! retrieve, grade, generate and check loop that ends in a Markdown report.

pub mod caption;
pub mod client;
pub mod extract;
pub mod graph;
pub mod report;
pub mod retrieve;
pub mod spectrum;
pub mod state;
pub mod worker;

pub use caption::{generate_caption, CaptionError};
pub use client::{ClientError, ModelClient, RuleBasedClient, ScriptedClient, TimeoutClient};
pub use graph::{ask, ask_worker, run_worker, AgentConfig, AgentError, RunResult};
pub use report::{generate_report, Report, SECTION_TITLES};
pub use retrieve::{Document, QueryPayload, Retrieval, RetrieveError, Retriever, StoreRetriever, WorkerCollections};
pub use state::{validate_trace, AgentState, Bounds, Counters, Failure, Node, TraceEvent, Verdict};
pub use worker::{route, route_by_rules, RouteDecision, RouteSource, Worker};
