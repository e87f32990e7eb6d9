mod common;

use chemvecrag_agent::report::{parse_sections, QUERY_PHRASE};
use chemvecrag_agent::spectrum::{compound_schema, spectrum_records, spectrum_schema, SpectrumEntry};
use chemvecrag_agent::{
    ask, generate_caption, AgentConfig, CaptionError, RuleBasedClient, StoreRetriever, Worker, WorkerCollections,
    SECTION_TITLES,
};
use chemvecrag_core::embedding::{MockProvider, Modality};
use chemvecrag_core::store::{IndexKind, Store};
use common::{golden_report, run_transcript, scenarios, POLYMER_QUESTION};

fn section<'a>(sections: &'a [(String, String)], title: &str) -> &'a str {
    &sections.iter().find(|(t, _)| t == title).unwrap().1
}

fn dollar_quoted(text: &str) -> Vec<&str> {
    text.split('$').skip(1).step_by(2).collect()
}

#[test]
fn polymer_report_matches_its_golden() {
    let (_, report) = run_transcript(POLYMER_QUESTION, scenarios()[0].transcript);
    let md = report.to_markdown();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(common::golden_dir().join("polymer_report.md"), &md).unwrap();
        return;
    }
    assert_eq!(md, golden_report());
}

#[test]
fn polymer_report_layout() {
    let (state, report) = run_transcript(POLYMER_QUESTION, scenarios()[0].transcript);
    let md = report.to_markdown();
    let sections = parse_sections(&md);
    let titles: Vec<&str> = sections.iter().map(|(t, _)| t.as_str()).collect();
    assert_eq!(titles, SECTION_TITLES);

    let intro = section(&sections, "INTRODUCTION");
    assert!(intro.contains(&format!("{QUERY_PHRASE} '{POLYMER_QUESTION}'")));
    assert!(intro.contains("Input Compound: $[*:1]Oc1ccc(cc1)S(=O)(=O)c1ccc([*:2])cc1$"));

    let findings = section(&sections, "MAIN FINDINGS");
    let quoted = dollar_quoted(findings);
    assert_eq!(quoted.len(), 2);
    for (q, doc) in quoted.iter().zip(state.relevant()) {
        assert_eq!(*q, doc.payload);
        assert!(q.contains("[*:1]") && q.contains("[*:2]"), "{q}");
    }
    let context = section(&sections, "Summary of Vector Store Context");
    assert_eq!(dollar_quoted(context), quoted);
    assert!(section(&sections, "SOURCES").starts_with("- polymer_rag_search tool"));
    assert!(section(&sections, "CONCLUSION").contains("nucleophilic aromatic substitution"));
}

#[test]
fn failed_runs_say_which_check_gave_out() {
    let (_, report) = run_transcript(POLYMER_QUESTION, r#"{"grade": "irrelevant", "rewrite": "again"}"#);
    let sections = parse_sections(&report.to_markdown());
    assert!(section(&sections, "CONCLUSION").contains("relevance check could not be satisfied"));
    assert!(section(&sections, "MAIN FINDINGS").contains("No relevant records"));
    assert!(section(&sections, "Summary of Vector Store Context").contains("(none)"));
    assert!(dollar_quoted(section(&sections, "Summary of Vector Store Context")).is_empty());

    let exhaustion = scenarios().into_iter().find(|s| s.name == "exhaustion").unwrap();
    let (_, report) = run_transcript(POLYMER_QUESTION, exhaustion.transcript);
    assert!(report.conclusion.starts_with("The answer check could not be satisfied"));
    assert!(report.conclusion.contains("2 rewrite(s)"));
}

#[test]
fn findings_never_quote_outside_the_context() {
    for s in scenarios() {
        let (_, report) = run_transcript(POLYMER_QUESTION, s.transcript);
        let context = dollar_quoted(&report.context);
        for q in dollar_quoted(&report.main_findings) {
            assert!(context.contains(&q), "{}: {q} missing from context", s.name);
        }
    }
}

#[test]
fn caption_matches_the_fixture_byte_for_byte() {
    let meta: serde_json::Value = serde_json::from_str(include_str!("fixtures/spectrum_meta.json")).unwrap();
    let caption = generate_caption(meta.as_object().unwrap()).unwrap();
    assert_eq!(caption, include_str!("fixtures/spectrum_caption.txt"));

    let mut partial = meta.as_object().unwrap().clone();
    partial.remove("solvent");
    assert_eq!(
        generate_caption(&partial),
        Err(CaptionError::MissingField("solvent".into()))
    );
}

#[test]
fn nmr_reports_end_with_the_top_spectrum_and_its_caption() {
    let dir = tempfile::tempdir().unwrap();
    let images = MockProvider::new(Modality::Image, 32);
    let text = MockProvider::new(Modality::Text, 48);
    let store = Store::new();
    store
        .create_collection(spectrum_schema("spectra", 32, IndexKind::IvfFlat))
        .unwrap();
    store
        .create_collection(compound_schema("spectrum_compounds", 48, IndexKind::Flat))
        .unwrap();

    let base: serde_json::Value = serde_json::from_str(include_str!("fixtures/spectrum_meta.json")).unwrap();
    let samples = [
        vec!["Cc1ccc(CO)cc1", "CO"],
        vec!["c1ccccc1C(=O)O"],
        vec!["CCOC(C)=O", "CCO"],
        vec!["CC(C)O"],
        vec!["c1ccc2ccccc2c1"],
    ];
    let (mut spectra, mut compounds) = (Vec::new(), Vec::new());
    for (i, smiles) in samples.iter().enumerate() {
        let path = format!("nmr/s{i}.png");
        let bytes: Vec<u8> = (0..256u32).map(|b| ((b * (i as u32 + 3)) % 251) as u8).collect();
        std::fs::create_dir_all(dir.path().join("nmr")).unwrap();
        std::fs::write(dir.path().join(&path), &bytes).unwrap();
        let mut meta = base.as_object().unwrap().clone();
        meta.insert("scans".into(), serde_json::json!(16 * (i + 1)));
        let entry = SpectrumEntry {
            id: format!("s{i}"),
            image_path: path,
            smiles_list: smiles.iter().map(|s| s.to_string()).collect(),
            meta,
        };
        let (s, c) = spectrum_records(&entry, &bytes, &images, &text, "spectrum_compounds").unwrap();
        spectra.push(s);
        compounds.push(c);
    }
    store.insert("spectrum_compounds", compounds).unwrap();
    store.insert("spectra", spectra).unwrap();
    store.train("spectra").unwrap();

    let mut retriever = StoreRetriever::new(
        &store,
        &text,
        WorkerCollections {
            nmr: "spectra".into(),
            ..WorkerCollections::default()
        },
    );
    retriever.image = Some(&images);
    retriever.image_root = dir.path().to_path_buf();

    let question = "Find NMR spectra similar to the one in 'nmr/s2.png'.";
    let run = ask(
        question,
        &RuleBasedClient::default(),
        &retriever,
        &AgentConfig::default(),
    )
    .unwrap();
    assert_eq!(run.route.worker, Worker::Nmr);
    let top = run.state.relevant()[0].clone();
    assert_eq!(top.payload, "nmr/s2.png");
    assert_eq!(top.linked[0].payload, "CCOC(C)=O;CCO");

    let md = run.report.to_markdown();
    assert!(md.contains("Input Image: nmr/s2.png"));
    assert!(md.contains("1. **CCOC(C)=O;CCO** - Peaks (ppm): 138.6, 138.0"));
    let tail: Vec<&str> = md.trim_end().lines().rev().take(3).collect();
    assert_eq!(
        tail[2],
        "The NMR Spectra of the most relevant compound is shown below (nmr/s2.png):"
    );
    assert!(tail[0]
        .starts_with("Figure Caption: A 100.62 MHz ¹³C NMR in CDCl₃ collected on 2021-02-02T14:25:28 with 48 scans"));
}
