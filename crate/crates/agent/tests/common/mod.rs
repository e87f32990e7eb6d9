//! Shared fixtures for the scripted-client scenarios. Also compiled into the
//! gateway acceptance suite, so everything here must stay self-contained.

#![allow(dead_code)]

use std::path::PathBuf;

use chemvecrag_agent::retrieve::structure_vector;
use chemvecrag_agent::{ask, AgentConfig, AgentState, Report, ScriptedClient, StoreRetriever, WorkerCollections};
use chemvecrag_core::embedding::{MockProvider, Modality};
use chemvecrag_core::store::{CollectionRecord, CollectionSchema, IndexKind, PayloadKind, Store};

pub const DIM: usize = 64;

pub const POLYMER_QUESTION: &str = "Which aromatic polysulfones resemble $[*:1]Oc1ccc(cc1)S(=O)(=O)c1ccc([*:2])cc1$? \
Please list close analogues and comment on how they could be synthesized.";

pub const POLYMERS: [(&str, &str); 8] = [
    ("p-psu", "[*:1]Oc1ccc(cc1)S(=O)(=O)c1ccc(O[*:2])cc1"),
    ("p-pes", "[*:1]c1ccc(cc1)S(=O)(=O)c1ccc([*:2])cc1"),
    ("p-peek", "[*:1]Oc1ccc(cc1)C(=O)c1ccc(O[*:2])cc1"),
    ("p-ppo", "[*:1]Oc1c(C)cc([*:2])cc1C"),
    ("p-pe", "[*:1]CC[*:2]"),
    ("p-pp", "[*:1]CC(C)[*:2]"),
    ("p-peo", "[*:1]OCCO[*:2]"),
    ("p-pmma", "[*:1]CC(C)(C(=O)OC)[*:2]"),
];

pub fn provider() -> MockProvider {
    MockProvider::new(Modality::Text, DIM)
}

pub fn collections() -> WorkerCollections {
    WorkerCollections {
        polymer: "polymers".into(),
        ..WorkerCollections::default()
    }
}

pub fn polymer_store(provider: &MockProvider) -> Store {
    let store = Store::new();
    store
        .create_collection(CollectionSchema::new(
            "polymers",
            DIM,
            IndexKind::Flat,
            PayloadKind::Smiles,
        ))
        .unwrap();
    let records = POLYMERS
        .iter()
        .map(|(id, smiles)| CollectionRecord {
            id: id.to_string(),
            vector: structure_vector(provider, smiles).unwrap(),
            payload: smiles.to_string(),
            metadata: Default::default(),
            links: vec![],
        })
        .collect();
    store.insert("polymers", records).unwrap();
    store
}

pub fn config() -> AgentConfig {
    AgentConfig {
        k: 2,
        ..AgentConfig::default()
    }
}

pub struct Scenario {
    pub name: &'static str,
    pub transcript: &'static str,
    pub labels: &'static [&'static str],
    pub golden: &'static str,
}

const HAPPY: &str = r#"{
  "grade": ["relevant"],
  "generate": ["Two close analogues keep the diaryl sulfone linkage of the query."],
  "judge_hallucination": ["pass"],
  "judge_answer": ["pass"],
  "rewrite": ["List polysulfone repeat units close to [*:1]Oc1ccc(cc1)S(=O)(=O)c1ccc([*:2])cc1"],
  "summarize": ["Both analogues are accessible by nucleophilic aromatic substitution of a dihalo diaryl sulfone with a bisphenol."]
}"#;

pub fn scenarios() -> Vec<Scenario> {
    let with = |overrides: &[(&str, &str)]| -> &'static str {
        let mut v: serde_json::Value = serde_json::from_str(HAPPY).unwrap();
        for (k, list) in overrides {
            v[*k] = serde_json::from_str(list).unwrap();
        }
        Box::leak(v.to_string().into_boxed_str())
    };
    vec![
        Scenario {
            name: "happy",
            transcript: HAPPY,
            labels: &[
                "retrieve",
                "grade",
                "generate",
                "hallucination_check:pass",
                "answer_check:pass",
                "report",
            ],
            golden: include_str!("../golden/happy.jsonl"),
        },
        Scenario {
            name: "re_retrieval",
            transcript: with(&[("grade", r#"["irrelevant", "irrelevant", "relevant"]"#)]),
            labels: &[
                "retrieve",
                "grade:all_irrelevant",
                "retrieve",
                "grade",
                "generate",
                "hallucination_check:pass",
                "answer_check:pass",
                "report",
            ],
            golden: include_str!("../golden/re_retrieval.jsonl"),
        },
        Scenario {
            name: "regeneration",
            transcript: with(&[("judge_hallucination", r#"["fail", "pass"]"#)]),
            labels: &[
                "retrieve",
                "grade",
                "generate",
                "hallucination_check:fail",
                "generate",
                "hallucination_check:pass",
                "answer_check:pass",
                "report",
            ],
            golden: include_str!("../golden/regeneration.jsonl"),
        },
        Scenario {
            name: "rewrite",
            transcript: with(&[("judge_answer", r#"["fail", "pass"]"#)]),
            labels: &[
                "retrieve",
                "grade",
                "generate",
                "hallucination_check:pass",
                "answer_check:fail",
                "rewrite",
                "retrieve",
                "grade",
                "generate",
                "hallucination_check:pass",
                "answer_check:pass",
                "report",
            ],
            golden: include_str!("../golden/rewrite.jsonl"),
        },
        Scenario {
            name: "combined",
            transcript: with(&[
                ("grade", r#"["irrelevant", "irrelevant", "relevant"]"#),
                ("judge_hallucination", r#"["fail", "pass"]"#),
                ("judge_answer", r#"["fail", "pass"]"#),
            ]),
            labels: &[
                "retrieve",
                "grade:all_irrelevant",
                "retrieve",
                "grade",
                "generate",
                "hallucination_check:fail",
                "generate",
                "hallucination_check:pass",
                "answer_check:fail",
                "rewrite",
                "retrieve",
                "grade",
                "generate",
                "hallucination_check:pass",
                "answer_check:pass",
                "report",
            ],
            golden: include_str!("../golden/combined.jsonl"),
        },
        Scenario {
            name: "exhaustion",
            transcript: with(&[("judge_answer", r#"["fail"]"#)]),
            labels: &[
                "retrieve",
                "grade",
                "generate",
                "hallucination_check:pass",
                "answer_check:fail",
                "rewrite",
                "retrieve",
                "grade",
                "generate",
                "hallucination_check:pass",
                "answer_check:fail",
                "rewrite",
                "retrieve",
                "grade",
                "generate",
                "hallucination_check:pass",
                "answer_check:fail",
                "report:bounds_exhausted",
            ],
            golden: include_str!("../golden/exhaustion.jsonl"),
        },
    ]
}

pub fn run_transcript(question: &str, transcript: &str) -> (AgentState, Report) {
    let provider = provider();
    let store = polymer_store(&provider);
    let retriever = StoreRetriever::new(&store, &provider, collections());
    let client = ScriptedClient::from_json(transcript).unwrap();
    let run = ask(question, &client, &retriever, &config()).unwrap();
    (run.state, run.report)
}

pub fn golden_report() -> &'static str {
    include_str!("../golden/polymer_report.md")
}

/// Where goldens live on disk, for regeneration from the agent crate.
pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}
