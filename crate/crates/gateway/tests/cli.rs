mod support;

use serde_json::Value;

use chemvecrag_agent::retrieve::structure_vector;
use chemvecrag_agent::state::trace_from_jsonl;
use chemvecrag_agent::{validate_trace, SECTION_TITLES};
use chemvecrag_core::embedding::{MockProvider, Modality};
use chemvecrag_core::store::MetaValue;

use support::{agent, Fixture, MOLECULES, REACTIONS, TEXT_DIM};

fn json(out: &str) -> Value {
    serde_json::from_str(out).unwrap_or_else(|e| panic!("{e}: {out}"))
}

fn hit_ids(v: &Value) -> Vec<String> {
    v["hits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| h["id"].as_str().unwrap().to_owned())
        .collect()
}

#[test]
fn ingest_prints_the_count() {
    let f = Fixture::new();
    let input = f.write("three.tsv", "CCO\ta\nCCN\tb\n\nc1ccccc1\tc\n");
    let (code, out, _) = f.cli(&[
        "ingest",
        "--collection",
        "small_molecules",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert_eq!((code, out.as_str()), (0, "inserted 3\n"));
    // The snapshot survives the process.
    let store = f.service();
    assert_eq!(store.store().len("small_molecules").unwrap(), 3);
}

#[test]
fn malformed_lines_fail_with_their_line_number() {
    let f = Fixture::new();
    let cases = [
        ("CCO\ta\nCCN\n", "line 2"),
        ("CCO\ta\n# comment\nC1CC\tb\n", "line 3"),
        ("CCO\ta\t{not json}\n", "line 1"),
        ("CCO>>CC\tr\n", "line 1"),
    ];
    for (text, needle) in cases {
        let input = f.write("bad.tsv", text);
        let (code, out, err) = f.cli(&[
            "ingest",
            "--collection",
            "small_molecules",
            "--input",
            input.to_str().unwrap(),
        ]);
        assert_eq!(code, 3, "{text:?}: {err}");
        assert!(err.contains(needle), "{text:?}: {err}");
        assert!(out.is_empty());
    }
    assert_eq!(
        f.service().store().len("small_molecules").unwrap(),
        0,
        "failed ingests insert nothing"
    );
}

#[test]
fn duplicate_ids_are_listed() {
    let f = Fixture::populated();
    let input = f.write("dup.tsv", "CCO\tethanol\nCCCC\tbutane\nc1ccccc1\tbenzene\n");
    let (code, _, err) = f.cli(&[
        "ingest",
        "--collection",
        "small_molecules",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    assert!(
        err.contains("ethanol") && err.contains("benzene") && !err.contains("butane"),
        "{err}"
    );
}

#[test]
fn every_record_finds_itself_first() {
    let f = Fixture::populated();
    for (name, smiles) in MOLECULES {
        let (code, out, err) = f.cli(&[
            "query",
            "--collection",
            "small_molecules",
            "--smiles",
            smiles,
            "--k",
            "3",
        ]);
        assert_eq!(code, 0, "{err}");
        let v = json(&out);
        assert_eq!(hit_ids(&v)[0], name);
        assert!(v["hits"][0]["l2_distance"].as_f64().unwrap() < 1e-6);
    }
    for (name, rxn) in REACTIONS {
        let (_, out, _) = f.cli(&["query", "--collection", "reactions", "--smiles", rxn, "--k", "1"]);
        assert_eq!(hit_ids(&json(&out)), [name]);
    }
    for (name, p) in agent::POLYMERS {
        let (_, out, _) = f.cli(&["query", "--collection", "polymers", "--smiles", p, "--k", "1"]);
        assert_eq!(hit_ids(&json(&out)), [name]);
    }
}

#[test]
fn weight_filter_excludes_out_of_range_records() {
    let f = Fixture::populated();
    let service = f.service();
    let in_range: Vec<String> = MOLECULES
        .iter()
        .filter(|(id, _)| {
            let rec = service.store().get("small_molecules", id).unwrap().unwrap();
            let mw = rec.metadata["mw"].as_f64().unwrap();
            (200.0..=300.0).contains(&mw)
        })
        .map(|(id, _)| id.to_string())
        .collect();
    assert!(in_range.len() >= 3 && in_range.len() < MOLECULES.len());

    let (code, out, err) = f.cli(&[
        "query",
        "--collection",
        "small_molecules",
        "--smiles",
        "CCO",
        "--k",
        "20",
        "--filter",
        "mw:[200,300]",
    ]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    let mut got = hit_ids(&v);
    for h in v["hits"].as_array().unwrap() {
        let mw = h["metadata"]["mw"].as_f64().unwrap();
        assert!((200.0..=300.0).contains(&mw), "{mw}");
    }
    got.sort();
    let mut want = in_range;
    want.sort();
    assert_eq!(got, want);
}

#[test]
fn stored_weights_match_hand_computed_values() {
    let f = Fixture::populated();
    let service = f.service();
    // Average atomic weights: C 12.011, H 1.008, O 15.999.
    let ethanol = 2.0 * 12.011 + 6.0 * 1.008 + 15.999;
    let rec = service.store().get("small_molecules", "ethanol").unwrap().unwrap();
    assert!((rec.metadata["mw"].as_f64().unwrap() - ethanol).abs() < 0.01);
    let weighted = service.store().get("weighted", "ethanol").unwrap().unwrap();
    let norm = weighted.vector.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    assert!((norm - ethanol).abs() < 1e-3, "{norm}");
    assert!(matches!(weighted.metadata["mw"], MetaValue::Float(_)));
}

#[test]
fn average_expression_matches_a_hand_rolled_mean() {
    let f = Fixture::populated();
    let (code, out, err) = f.cli(&[
        "query",
        "--collection",
        "small_molecules",
        "--expr",
        r#"{"avg":["CCO","c1ccccc1","CC(=O)Nc1ccc(O)cc1"]}"#,
        "--k",
        "12",
    ]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);

    let p = MockProvider::new(Modality::Text, TEXT_DIM);
    let a = structure_vector(&p, "CCO").unwrap();
    let b = structure_vector(&p, "c1ccccc1").unwrap();
    let c = structure_vector(&p, "CC(=O)Nc1ccc(O)cc1").unwrap();
    // Two operands would put both at the same distance from their mean.
    let mean: Vec<f64> = (0..TEXT_DIM)
        .map(|i| (a[i] as f64 + b[i] as f64 + c[i] as f64) / 3.0)
        .collect();
    let service = f.service();
    let mut want: Vec<(f64, &str)> = MOLECULES
        .iter()
        .map(|(id, _)| {
            let rec = service.store().get("small_molecules", id).unwrap().unwrap();
            let d = rec
                .vector
                .iter()
                .zip(&mean)
                .map(|(&x, m)| (x as f64 - m).powi(2))
                .sum::<f64>()
                .sqrt();
            (d, *id)
        })
        .collect();
    want.sort_by(|x, y| x.0.total_cmp(&y.0));
    let hits = v["hits"].as_array().unwrap();
    assert_eq!(hits.len(), want.len());
    for (h, (d, id)) in hits.iter().zip(&want) {
        assert_eq!(h["id"], *id);
        assert!((h["l2_distance"].as_f64().unwrap() - d).abs() < 1e-5);
    }
}

#[test]
fn target_weight_prefers_the_matching_mass() {
    let f = Fixture::populated();
    let service = f.service();
    for id in ["aspirin", "ibuprofen", "cholesterol"] {
        let smiles = MOLECULES.iter().find(|(n, _)| *n == id).unwrap().1;
        let mw = service.store().get("small_molecules", id).unwrap().unwrap().metadata["mw"]
            .as_f64()
            .unwrap();
        let (_, out, _) = f.cli(&[
            "query",
            "--collection",
            "weighted",
            "--smiles",
            smiles,
            "--target-mw",
            &mw.to_string(),
            "--k",
            "1",
        ]);
        assert_eq!(hit_ids(&json(&out)), [id]);
    }
}

#[test]
fn panel_csv_has_one_row_per_hit() {
    let f = Fixture::populated();
    let csv = f.path("panel.csv");
    let (code, out, err) = f.cli(&[
        "query",
        "--collection",
        "small_molecules",
        "--smiles",
        "CC(=O)Oc1ccccc1C(=O)O",
        "--k",
        "4",
        "--panel",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert_eq!(v["panel"]["rows"].as_array().unwrap().len(), 4);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5, "{text}");
    assert!(lines[0].contains("rdkit_path"), "{}", lines[0]);
    assert!(lines[1].contains("aspirin"));
}

#[test]
fn spectrum_query_returns_linked_compounds_and_captions() {
    let f = Fixture::populated();
    let (code, out, err) = f.cli(&["query", "--collection", "spectra", "--image", "nmr/s2.png", "--k", "2"]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert_eq!(hit_ids(&v)[0], "s2");
    let linked: Vec<&str> = v["linked"][0]["linked"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert_eq!(linked, ["s2/caption", "s2/compounds"]);

    let (_, out, _) = f.cli(&[
        "query",
        "--collection",
        "spectrum_compounds",
        "--smiles",
        "CCOC(C)=O;CCO",
        "--k",
        "1",
    ]);
    assert_eq!(hit_ids(&json(&out)), ["s2/compounds"]);
}

#[test]
fn usage_data_and_backend_failures_have_distinct_exit_codes() {
    let f = Fixture::populated();
    let usage: [&[&str]; 6] = [
        &["query", "--collection", "small_molecules"],
        &[
            "query",
            "--collection",
            "small_molecules",
            "--smiles",
            "CCO",
            "--expr",
            "{}",
        ],
        &["query", "--collection", "small_molecules", "--expr", "{not json"],
        &[
            "query",
            "--collection",
            "small_molecules",
            "--smiles",
            "CCO",
            "--filter",
            "mw:[1,",
        ],
        &["ask", "--question", "   "],
        &["frobnicate"],
    ];
    for args in usage {
        assert_eq!(f.cli(args).0, 2, "{args:?}");
    }
    assert_eq!(f.cli(&["query", "--collection", "nope", "--smiles", "CCO"]).0, 3);
    assert_eq!(
        f.cli(&["query", "--collection", "small_molecules", "--smiles", "C1CC"])
            .0,
        3
    );
    assert_eq!(f.cli(&["--help"]).0, 0);

    std::fs::write(f.path("data/store.cvrs"), b"CVRS1 but not really").unwrap();
    let (code, _, err) = f.cli(&["query", "--collection", "small_molecules", "--smiles", "CCO"]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn ask_writes_a_report_and_a_valid_trace() {
    let f = Fixture::populated();
    let trace = f.path("trace.jsonl");
    let (code, out, err) = f.cli(&[
        "ask",
        "--question",
        agent::POLYMER_QUESTION,
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let mut at = 0;
    for title in SECTION_TITLES {
        let pos = out[at..]
            .find(&format!("## {title}"))
            .unwrap_or_else(|| panic!("{title} missing"));
        at += pos;
    }
    assert!(out.contains(&format!("The user's exact query was: '{}'", agent::POLYMER_QUESTION)));
    let events = trace_from_jsonl(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    validate_trace(&events).unwrap();
}

#[test]
fn scripted_ask_reproduces_the_agent_golden_report() {
    let f = Fixture::populated();
    let happy = &agent::scenarios()[0];
    f.write("happy.json", happy.transcript);
    let mut config = std::fs::read_to_string(f.config_path()).unwrap();
    config.push_str("\n[agent]\nk = 2\n\n[client]\nkind = \"scripted\"\ntranscript = \"happy.json\"\n");
    f.write("chemvecrag.toml", &config);
    let (code, out, err) = f.cli(&["ask", "--question", agent::POLYMER_QUESTION]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.trim_end(), agent::golden_report().trim_end());
}
