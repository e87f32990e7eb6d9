use std::collections::BTreeMap;
use std::sync::Arc;

use chemvecrag_core::store::{
    squared_l2, CollectionRecord, CollectionSchema, FieldType, HnswParams, IndexKind, Link, MetaValue, MetadataFilter,
    PayloadKind, SearchOptions, Store, StoreError, SNAPSHOT_MAGIC,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let n = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.iter().map(|x| (*x as f64 / n) as f32).collect();
        }
    }
}

fn record(id: &str, vector: Vec<f32>, mw: f64) -> CollectionRecord {
    CollectionRecord {
        id: id.to_owned(),
        vector,
        payload: format!("payload-{id}"),
        metadata: BTreeMap::from([("mw".to_owned(), MetaValue::Float(mw))]),
        links: Vec::new(),
    }
}

fn schema(name: &str, dim: usize, index: IndexKind) -> CollectionSchema {
    CollectionSchema::new(name, dim, index, PayloadKind::Smiles).with_field("mw", FieldType::Float)
}

fn populated(index: IndexKind, n: usize, dim: usize, seed: u64) -> (Store, Vec<CollectionRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records: Vec<CollectionRecord> = (0..n)
        .map(|i| record(&format!("r{i:05}"), random_unit(&mut rng, dim), (i % 500) as f64))
        .collect();
    let store = Store::new();
    store.create_collection(schema("c", dim, index)).unwrap();
    store.insert("c", records.clone()).unwrap();
    store.train("c").unwrap();
    (store, records)
}

fn full_probe() -> SearchOptions {
    SearchOptions {
        nprobe: Some(usize::MAX),
        ..Default::default()
    }
}

#[test]
fn every_index_finds_each_record_first() {
    for kind in [IndexKind::Flat, IndexKind::Hnsw, IndexKind::IvfFlat] {
        let (store, records) = populated(kind, 400, 16, 7);
        for r in &records {
            let hits = store.search("c", &r.vector, 1, &full_probe()).unwrap();
            assert_eq!(hits[0].id, r.id, "{kind}");
            assert_eq!(hits[0].l2_distance, 0.0);
            assert_eq!(hits[0].payload, r.payload);
        }
    }
}

#[test]
fn hnsw_recall_on_unit_vectors() {
    let (dim, n) = (32, 3000);
    let (store, _) = populated(IndexKind::Hnsw, n, dim, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut found = 0;
    for _ in 0..50 {
        let q = random_unit(&mut rng, dim);
        let truth: Vec<String> = store
            .flat_search("c", &q, 10, None)
            .unwrap()
            .into_iter()
            .map(|h| h.id)
            .collect();
        let got = store.search("c", &q, 10, &SearchOptions::default()).unwrap();
        found += got.iter().filter(|h| truth.contains(&h.id)).count();
    }
    let recall = found as f64 / 500.0;
    assert!(recall >= 0.95, "recall {recall}");

    let exhaustive = SearchOptions {
        ef_search: Some(n),
        ..Default::default()
    };
    for _ in 0..10 {
        let q = random_unit(&mut rng, dim);
        assert_eq!(
            store.search("c", &q, 10, &exhaustive).unwrap(),
            store.flat_search("c", &q, 10, None).unwrap()
        );
    }
}

#[test]
fn full_probe_ivf_equals_flat() {
    let (store, _) = populated(IndexKind::IvfFlat, 1000, 8, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let q = random_unit(&mut rng, 8);
        let flat = store.flat_search("c", &q, 10, None).unwrap();
        let ivf = store.search("c", &q, 10, &full_probe()).unwrap();
        assert_eq!(flat, ivf);
    }
}

#[test]
fn untrained_ivf_refuses_to_search() {
    let store = Store::new();
    store.create_collection(schema("c", 2, IndexKind::IvfFlat)).unwrap();
    store.insert("c", vec![record("a", vec![1.0, 0.0], 1.0)]).unwrap();
    assert!(matches!(
        store.search("c", &[1.0, 0.0], 1, &SearchOptions::default()),
        Err(StoreError::NotTrained(_))
    ));
    store.train("c").unwrap();
    store.insert("c", vec![record("b", vec![0.0, 1.0], 1.0)]).unwrap();
    let hits = store.search("c", &[0.0, 1.0], 1, &SearchOptions::default()).unwrap();
    assert_eq!(hits[0].id, "b");
}

#[test]
fn insert_errors_leave_the_collection_untouched() {
    let store = Store::new();
    store.create_collection(schema("c", 2, IndexKind::Flat)).unwrap();
    store.insert("c", vec![record("a", vec![1.0, 0.0], 1.0)]).unwrap();

    let err = store
        .insert(
            "c",
            vec![
                record("b", vec![0.0, 1.0], 1.0),
                record("a", vec![0.0, 1.0], 1.0),
                record("b", vec![1.0, 1.0], 1.0),
            ],
        )
        .unwrap_err();
    match err {
        StoreError::DuplicateId(ids) => assert_eq!(ids, vec!["a".to_string(), "b".to_string()]),
        other => panic!("{other}"),
    }
    assert!(matches!(
        store.insert("c", vec![record("z", vec![1.0], 1.0)]),
        Err(StoreError::DimMismatch { expected: 2, found: 1 })
    ));
    let mut bad_meta = record("y", vec![0.0, 0.0], 1.0);
    bad_meta.metadata.insert("colour".into(), MetaValue::Str("red".into()));
    assert!(matches!(
        store.insert("c", vec![bad_meta]),
        Err(StoreError::InvalidRecord { .. })
    ));
    assert!(matches!(
        store.insert("nope", vec![]),
        Err(StoreError::UnknownCollection(_))
    ));
    assert!(matches!(
        store.create_collection(schema("c", 2, IndexKind::Flat)),
        Err(StoreError::DuplicateCollection(_))
    ));
    assert_eq!(store.len("c").unwrap(), 1);
}

#[test]
fn queries_are_validated() {
    let (store, _) = populated(IndexKind::Flat, 10, 4, 1);
    assert!(matches!(
        store.search("c", &[0.0; 3], 1, &SearchOptions::default()),
        Err(StoreError::DimMismatch { .. })
    ));
    assert!(matches!(
        store.search("c", &[0.0; 4], 0, &SearchOptions::default()),
        Err(StoreError::InvalidK)
    ));
    let opts = SearchOptions {
        filter: Some(MetadataFilter::parse("logp:[0,1]").unwrap()),
        ..Default::default()
    };
    assert!(matches!(
        store.search("c", &[0.0; 4], 1, &opts),
        Err(StoreError::Filter(_))
    ));
}

#[test]
fn deleted_records_disappear_from_every_index() {
    for kind in [IndexKind::Flat, IndexKind::Hnsw, IndexKind::IvfFlat] {
        let (store, records) = populated(kind, 300, 8, 21);
        let doomed: Vec<&str> = records.iter().step_by(2).map(|r| r.id.as_str()).collect();
        assert_eq!(store.delete("c", &doomed).unwrap(), 150);
        assert_eq!(store.delete("c", &doomed).unwrap(), 0);
        assert_eq!(store.len("c").unwrap(), 150);
        for r in records.iter().take(20) {
            let hits = store.search("c", &r.vector, 10, &full_probe()).unwrap();
            assert_eq!(hits.len(), 10, "{kind}");
            assert!(hits.iter().all(|h| !doomed.contains(&h.id.as_str())));
        }
        assert!(store.get("c", doomed[0]).unwrap().is_none());
        store.insert("c", vec![record(doomed[0], vec![0.5; 8], 1.0)]).unwrap();
        store.train("c").unwrap();
        let hits = store.search("c", &[0.5; 8], 1, &full_probe()).unwrap();
        assert_eq!(hits[0].id, doomed[0]);
    }
}

#[test]
fn filtered_ann_returns_only_matching_records() {
    let (store, _) = populated(IndexKind::Hnsw, 2000, 16, 5);
    let filter = MetadataFilter::range("mw", 10.0, 14.0);
    let matching = store.flat_search("c", &[0.0; 16], 1000, Some(&filter)).unwrap().len();
    assert_eq!(matching, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let q = random_unit(&mut rng, 16);
    let opts = SearchOptions {
        filter: Some(filter.clone()),
        ..Default::default()
    };
    let hits = store.search("c", &q, 10, &opts).unwrap();
    assert_eq!(hits.len(), 10);
    assert!(hits.iter().all(|h| filter.accepts(&h.metadata)));
    let all = store.search("c", &q, 50, &opts).unwrap();
    assert_eq!(all.len(), 20);
}

#[test]
fn links_resolve_in_both_directions() {
    let store = Store::new();
    store
        .create_collection(CollectionSchema::new("mols", 2, IndexKind::Flat, PayloadKind::Smiles))
        .unwrap();
    store
        .create_collection(CollectionSchema::new(
            "spectra",
            2,
            IndexKind::IvfFlat,
            PayloadKind::ImageRef,
        ))
        .unwrap();
    let mol = |id: &str, smiles: &str| CollectionRecord {
        id: id.into(),
        vector: vec![1.0, 0.0],
        payload: smiles.into(),
        metadata: Default::default(),
        links: vec![],
    };
    store.insert("mols", vec![mol("m1", "CCO"), mol("m2", "CCN")]).unwrap();
    let spectrum = |id: &str, targets: &[&str]| CollectionRecord {
        id: id.into(),
        vector: vec![0.0, 1.0],
        payload: format!("{id}.png"),
        metadata: Default::default(),
        links: targets.iter().map(|t| Link::new("mols", t)).collect(),
    };
    store
        .insert("spectra", vec![spectrum("s1", &["m1"]), spectrum("s2", &["m1", "m2"])])
        .unwrap();
    assert!(matches!(
        store.insert("spectra", vec![spectrum("s3", &["m9"])]),
        Err(StoreError::BrokenLink { .. })
    ));

    let groups = store.cross_lookup("spectra", &["s2"]).unwrap();
    let ids: Vec<&str> = groups[0].linked.iter().map(|l| l.id.as_str()).collect();
    assert_eq!(ids, ["m1", "m2"]);
    assert_eq!(groups[0].linked[0].payload, "CCO");

    let back = store.cross_lookup("mols", &["m1", "m2"]).unwrap();
    let ids: Vec<Vec<&str>> = back
        .iter()
        .map(|g| g.linked.iter().map(|l| l.id.as_str()).collect())
        .collect();
    assert_eq!(ids, vec![vec!["s1", "s2"], vec!["s2"]]);

    assert!(matches!(
        store.cross_lookup("mols", &["m7"]),
        Err(StoreError::UnknownId { .. })
    ));
    store.delete("spectra", &["s2"]).unwrap();
    let back = store.cross_lookup("mols", &["m2"]).unwrap();
    assert!(back[0].linked.is_empty());
}

#[test]
fn snapshot_reproduces_searches_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (name, kind) in [
        ("flat", IndexKind::Flat),
        ("hnsw", IndexKind::Hnsw),
        ("ivf", IndexKind::IvfFlat),
    ] {
        store.create_collection(schema(name, 12, kind)).unwrap();
        let records: Vec<_> = (0..500)
            .map(|i| record(&format!("{name}{i}"), random_unit(&mut rng, 12), i as f64))
            .collect();
        store.insert(name, records).unwrap();
        store.train(name).unwrap();
        store.delete(name, &[format!("{name}3")]).unwrap();
    }
    let path = dir.path().join("store.cvrs");
    store.save(&path).unwrap();
    let loaded = Store::load(&path).unwrap();
    let queries: Vec<Vec<f32>> = (0..100).map(|_| random_unit(&mut rng, 12)).collect();
    for name in ["flat", "hnsw", "ivf"] {
        assert_eq!(store.schema(name).unwrap(), loaded.schema(name).unwrap());
        for q in &queries {
            let a = store.search(name, q, 10, &SearchOptions::default()).unwrap();
            let b = loaded.search(name, q, 10, &SearchOptions::default()).unwrap();
            let bits = |h: &Vec<_>| {
                h.iter()
                    .map(|x: &chemvecrag_core::store::SearchHit| (x.id.clone(), x.l2_distance.to_bits()))
                    .collect::<Vec<_>>()
            };
            assert_eq!(bits(&a), bits(&b));
            assert_eq!(a, b);
        }
    }
    // The level generator resumes where it stopped, so later inserts agree too.
    let extra: Vec<_> = (0..50)
        .map(|i| record(&format!("x{i}"), random_unit(&mut rng, 12), 1.0))
        .collect();
    store.insert("hnsw", extra.clone()).unwrap();
    loaded.insert("hnsw", extra).unwrap();
    assert_eq!(store.snapshot_bytes(), loaded.snapshot_bytes());
}

#[test]
fn damaged_snapshots_are_rejected() {
    let (store, _) = populated(IndexKind::Hnsw, 50, 4, 9);
    let bytes = store.snapshot_bytes();
    assert_eq!(&bytes[..6], SNAPSHOT_MAGIC);
    assert!(Store::from_snapshot_bytes(&bytes).is_ok());

    for pos in [10, bytes.len() / 2, bytes.len() - 1] {
        let mut flipped = bytes.clone();
        flipped[pos] ^= 0x01;
        assert!(
            matches!(
                Store::from_snapshot_bytes(&flipped),
                Err(StoreError::CorruptSnapshot(_))
            ),
            "{pos}"
        );
    }
    assert!(matches!(
        Store::from_snapshot_bytes(&bytes[..bytes.len() - 9]),
        Err(StoreError::CorruptSnapshot(_))
    ));
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(matches!(
        Store::from_snapshot_bytes(&bad_magic),
        Err(StoreError::CorruptSnapshot(_))
    ));
    let mut future = bytes.clone();
    future[6] = 2;
    assert!(matches!(
        Store::from_snapshot_bytes(&future),
        Err(StoreError::VersionMismatch { found: 2, expected: 1 })
    ));
}

#[test]
fn readers_and_writers_share_a_store() {
    let store = Arc::new(Store::new());
    store.create_collection(schema("c", 4, IndexKind::Hnsw)).unwrap();
    store.insert("c", vec![record("seed", vec![0.0; 4], 0.0)]).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|t| {
            let store = Arc::clone(&store);
            std::thread::spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(t);
                for i in 0..100 {
                    let v = random_unit(&mut rng, 4);
                    store
                        .insert("c", vec![record(&format!("t{t}-{i}"), v.clone(), 0.0)])
                        .unwrap();
                    let hits = store.search("c", &v, 1, &SearchOptions::default()).unwrap();
                    assert_eq!(hits[0].l2_distance, 0.0);
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(store.len("c").unwrap(), 401);
}

#[test]
fn fixed_seed_builds_are_reproducible() {
    let a = populated(IndexKind::Hnsw, 300, 8, 2).0.snapshot_bytes();
    let b = populated(IndexKind::Hnsw, 300, 8, 2).0.snapshot_bytes();
    assert_eq!(a, b);
    let store = Store::new();
    let mut s = schema("c", 8, IndexKind::Hnsw);
    s.hnsw = HnswParams {
        seed: 1234,
        ..HnswParams::default()
    };
    store.create_collection(s).unwrap();
    let (_, records) = populated(IndexKind::Flat, 300, 8, 2);
    store.insert("c", records).unwrap();
    assert_ne!(a, store.snapshot_bytes());
}

fn small_store() -> impl Strategy<Value = (Vec<Vec<f32>>, Vec<f32>)> {
    (
        proptest::collection::vec(proptest::collection::vec(-10.0f32..10.0, 6), 1..60),
        proptest::collection::vec(-10.0f32..10.0, 6),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn results_grow_by_prefix((vectors, q) in small_store(), kind in prop_oneof![Just(IndexKind::Flat), Just(IndexKind::IvfFlat)]) {
        let store = Store::new();
        store.create_collection(schema("c", 6, kind)).unwrap();
        let records: Vec<_> = vectors.iter().enumerate().map(|(i, v)| record(&format!("{i}"), v.clone(), i as f64)).collect();
        store.insert("c", records).unwrap();
        store.train("c").unwrap();
        let opts = SearchOptions { nprobe: Some(usize::MAX), ..Default::default() };
        let mut prev = Vec::new();
        for k in 1..=vectors.len() {
            let hits = store.search("c", &q, k, &opts).unwrap();
            prop_assert_eq!(hits.len(), k);
            prop_assert_eq!(&hits[..k - 1], &prev[..]);
            prev = hits;
        }
    }

    #[test]
    fn reported_distances_are_true_distances((vectors, q) in small_store()) {
        let store = Store::new();
        store.create_collection(schema("c", 6, IndexKind::Hnsw)).unwrap();
        let records: Vec<_> = vectors.iter().enumerate().map(|(i, v)| record(&format!("{i}"), v.clone(), i as f64)).collect();
        store.insert("c", records).unwrap();
        let hits = store.search("c", &q, vectors.len(), &SearchOptions::default()).unwrap();
        for w in hits.windows(2) {
            prop_assert!(w[0].l2_distance <= w[1].l2_distance);
        }
        for h in &hits {
            let v = &vectors[h.id.parse::<usize>().unwrap()];
            let exact = v.iter().zip(&q).map(|(a, b)| ((*a as f64) - (*b as f64)).powi(2)).sum::<f64>().sqrt();
            prop_assert!((h.l2_distance as f64 - exact).abs() <= 1e-6 * exact.max(1.0) + 1e-6, "{} vs {}", h.l2_distance, exact);
            prop_assert_eq!(h.l2_distance, squared_l2(v, &q).sqrt());
        }
    }

    #[test]
    fn filters_never_leak((vectors, q) in small_store(), lo in 0.0f64..60.0, width in 0.0f64..30.0) {
        let store = Store::new();
        store.create_collection(schema("c", 6, IndexKind::Hnsw)).unwrap();
        let records: Vec<_> = vectors.iter().enumerate().map(|(i, v)| record(&format!("{i}"), v.clone(), i as f64)).collect();
        store.insert("c", records).unwrap();
        let filter = MetadataFilter::range("mw", lo, lo + width);
        let expected = (0..vectors.len()).filter(|&i| (i as f64) >= lo && (i as f64) <= lo + width).count();
        let opts = SearchOptions { filter: Some(filter.clone()), ..Default::default() };
        let hits = store.search("c", &q, 5, &opts).unwrap();
        prop_assert_eq!(hits.len(), expected.min(5));
        for h in &hits {
            prop_assert!(filter.accepts(&h.metadata));
        }
    }
}

#[test]
fn ivf_default_probe_recall_on_clustered_data() {
    let (dim, clusters, per) = (32, 100, 100);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let centres: Vec<Vec<f32>> = (0..clusters).map(|_| random_unit(&mut rng, dim)).collect();
    let jitter = |rng: &mut ChaCha8Rng, c: &[f32]| -> Vec<f32> {
        c.iter().map(|x| x + rng.random_range(-0.08f32..0.08)).collect()
    };
    let mut records = Vec::new();
    for (ci, c) in centres.iter().enumerate() {
        for j in 0..per {
            records.push(record(&format!("c{ci}-{j}"), jitter(&mut rng, c), 1.0));
        }
    }
    let store = Store::new();
    store.create_collection(schema("c", dim, IndexKind::IvfFlat)).unwrap();
    store.insert("c", records).unwrap();
    store.train("c").unwrap();
    let mut found = 0;
    for i in 0..100 {
        let q = jitter(&mut rng, &centres[i % clusters]);
        let truth: Vec<String> = store
            .flat_search("c", &q, 10, None)
            .unwrap()
            .into_iter()
            .map(|h| h.id)
            .collect();
        let got = store.search("c", &q, 10, &SearchOptions::default()).unwrap();
        found += got.iter().filter(|h| truth.contains(&h.id)).count();
    }
    let recall = found as f64 / 1000.0;
    assert!(recall >= 0.9, "recall {recall}");
}
