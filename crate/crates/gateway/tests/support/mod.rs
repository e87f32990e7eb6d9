//! A complete on-disk deployment in a temp directory: config, structure
//! corpora, spectrum images and a spectrum manifest.

#![allow(dead_code)]

use std::path::PathBuf;

use serde_json::json;

use chemvecrag_gateway::{Config, Service};

#[path = "../../../agent/tests/common/mod.rs"]
pub mod agent;

pub const TEXT_DIM: usize = 64;
pub const IMAGE_DIM: usize = 32;

pub const MOLECULES: [(&str, &str); 12] = [
    ("ethanol", "CCO"),
    ("benzene", "c1ccccc1"),
    ("paracetamol", "CC(=O)Nc1ccc(O)cc1"),
    ("aspirin", "CC(=O)Oc1ccccc1C(=O)O"),
    ("caffeine", "Cn1cnc2c1c(=O)n(C)c(=O)n2C"),
    ("ibuprofen", "CC(C)Cc1ccc(cc1)C(C)C(=O)O"),
    ("naproxen", "COc1ccc2cc(ccc2c1)C(C)C(=O)O"),
    ("diazepam", "CN1C(=O)CN=C(c2ccccc2)c2cc(Cl)ccc21"),
    ("lidocaine", "CCN(CC)CC(=O)Nc1c(C)cccc1C"),
    ("nicotine", "CN1CCCC1c1cccnc1"),
    ("cholesterol", "CC(C)CCCC(C)C1CCC2C1(CCC3C2CC=C4C3(CCC(C4)O)C)C"),
    ("sucrose", "OCC1OC(OC2(CO)OC(CO)C(O)C2O)C(O)C(O)C1O"),
];

pub const REACTIONS: [(&str, &str); 3] = [
    ("esterification", "CC(=O)O.OCC>>CC(=O)OCC.O"),
    ("amide", "CC(=O)Cl.NC>>CC(=O)NC.Cl"),
    ("hydrogenation", "C=CC.[H][H]>>CCC"),
];

const CONFIG: &str = r#"
data_dir = "data"
port = 18080

[providers.text]
kind = "mock"
modality = "text"
dim = 64

[providers.image]
kind = "mock"
modality = "image"
dim = 32

[[collections]]
name = "small_molecules"
kind = "smiles"
dim = 64
index = "flat"
provider = "text"
metadata = { mw = "float", name = "string" }

[[collections]]
name = "weighted"
kind = "smiles"
dim = 64
index = "flat"
provider = "text"
weight_scaled = true
metadata = { name = "string" }

[[collections]]
name = "polymers"
kind = "smiles"
dim = 64
index = "hnsw"
provider = "text"

[[collections]]
name = "reactions"
kind = "reaction"
dim = 64
index = "flat"
provider = "text"

[[collections]]
name = "spectra"
kind = "spectrum"
dim = 32
index = "ivf_flat"
provider = "image"
compounds = "spectrum_compounds"
captions = "spectrum_captions"
text_provider = "text"

[[collections]]
name = "spectrum_compounds"
kind = "compounds"
dim = 64
index = "flat"
provider = "text"

[[collections]]
name = "spectrum_captions"
kind = "captions"
dim = 64
index = "flat"
provider = "text"

[workers]
nmr = "spectra"
nmr_captions = "spectrum_captions"
"#;

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

pub fn smiles_corpus() -> String {
    let mut text = String::from("# name\tid\tmetadata\n");
    for (name, smiles) in MOLECULES {
        text.push_str(&format!("{smiles}\t{name}\t{{\"name\":\"{name}\"}}\n"));
    }
    text
}

pub fn spectrum_samples() -> Vec<Vec<&'static str>> {
    vec![
        vec!["Cc1ccc(CO)cc1", "CO"],
        vec!["c1ccccc1C(=O)O"],
        vec!["CCOC(C)=O", "CCO"],
        vec!["CC(C)O"],
        vec!["c1ccc2ccccc2c1"],
        vec!["CC(=O)Nc1ccc(O)cc1"],
    ]
}

pub fn image_bytes(i: usize) -> Vec<u8> {
    (0..256u32)
        .map(|b| ((b * (i as u32 + 3) + b / 7) % 251) as u8)
        .collect()
}

impl Fixture {
    pub fn new() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("chemvecrag.toml"), CONFIG).unwrap();
        std::fs::write(dir.path().join("molecules.tsv"), smiles_corpus()).unwrap();
        let reactions: String = REACTIONS.iter().map(|(id, r)| format!("{r}\t{id}\n")).collect();
        std::fs::write(dir.path().join("reactions.tsv"), reactions).unwrap();
        let polymers: String = agent::POLYMERS.iter().map(|(id, p)| format!("{p}\t{id}\n")).collect();
        std::fs::write(dir.path().join("polymers.tsv"), polymers).unwrap();

        std::fs::create_dir_all(dir.path().join("nmr")).unwrap();
        let mut manifest = String::new();
        for (i, smiles) in spectrum_samples().into_iter().enumerate() {
            let path = format!("nmr/s{i}.png");
            std::fs::write(dir.path().join(&path), image_bytes(i)).unwrap();
            let entry = json!({
                "id": format!("s{i}"),
                "image_path": path,
                "smiles_list": smiles,
                "meta": {
                    "frequency_mhz": 100.62,
                    "nucleus": "¹³C",
                    "solvent": "CDCl₃",
                    "timestamp": "2021-02-02T14:25:28",
                    "scans": 16 * (i + 1),
                    "scan_delay_s": 4,
                    "ppm_low": 0,
                    "ppm_high": 12,
                    "peaks": [138.6, 129.0, 77.0 + i as f64, 21.3]
                }
            });
            manifest.push_str(&entry.to_string());
            manifest.push('\n');
        }
        std::fs::write(dir.path().join("spectra.jsonl"), manifest).unwrap();
        Fixture { dir }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn config_path(&self) -> PathBuf {
        self.path("chemvecrag.toml")
    }

    pub fn write(&self, rel: &str, text: &str) -> PathBuf {
        let p = self.path(rel);
        std::fs::write(&p, text).unwrap();
        p
    }

    pub fn config(&self) -> Config {
        Config::load(&self.config_path()).unwrap()
    }

    pub fn service(&self) -> Service {
        Service::open(self.config()).unwrap()
    }

    /// Runs the CLI in-process with `--config` prepended.
    pub fn cli(&self, args: &[&str]) -> (i32, String, String) {
        let config = self.config_path();
        let mut argv: Vec<String> = vec!["chemvecrag".into(), "--config".into(), config.display().to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = chemvecrag_gateway::cli::run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    /// Ingests every corpus through the CLI.
    pub fn populated() -> Fixture {
        let f = Fixture::new();
        for (collection, input) in [
            ("small_molecules", "molecules.tsv"),
            ("weighted", "molecules.tsv"),
            ("reactions", "reactions.tsv"),
            ("polymers", "polymers.tsv"),
            ("spectra", "spectra.jsonl"),
        ] {
            let input = f.path(input);
            let (code, out, err) = f.cli(&["ingest", "--collection", collection, "--input", input.to_str().unwrap()]);
            assert_eq!(code, 0, "{collection}: {err}");
            assert!(out.starts_with("inserted "), "{out}");
        }
        f
    }
}
